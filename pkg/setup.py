from setuptools import setup, find_packages

setup(
    name='medalcast',
    version='1.0',
    description='Olympic medal table forecasting with a hybrid ARIMA-LSTM',
    author='Your Name',
    author_email='your@email.com',
    packages=find_packages(include=['app', 'app.*']),
    package_data={'app': ['data/*.csv', 'data/fixture/*.csv', 'data/fixture/*.json']},
    install_requires=[
        'numpy',
        'pandas',
        'scipy',
        'sortedcontainers',
    ],
    entry_points={
        'console_scripts': [
            'medalcast = app.main:main',
        ],

    },
    python_requires='>=3.8',
)
