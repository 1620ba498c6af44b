import numpy as np

from app.analytics.gender import gender_trend
from app.tests.helper import athlete


def test_gender_trend_counts_medalists():
    records = [
        athlete("A", "USA", 2000, medal="Gold", sex="M"),
        athlete("B", "USA", 2000, medal="Silver", sex="M"),
        athlete("C", "USA", 2000, medal="Bronze", sex="F"),
        athlete("D", "USA", 2000, medal="NoMedal", sex="F"),
        athlete("E", "CHN", 2004, medal="Gold", sex="M"),
        athlete("F", "CHN", 2008, medal="NoMedal", sex="F"),
        athlete("G", "CHN", 2008, medal="Gold", sex=None),
    ]
    trend = gender_trend(records)
    table = trend.table
    assert table["year"].tolist() == [2000, 2004, 2008]
    assert table["male"].tolist() == [2, 1, 0]
    assert table["female"].tolist() == [1, 0, 0]
    assert table["ratio"].iloc[0] == 2.0
    assert table["ratio"].iloc[1] == np.inf
    assert np.isnan(table["ratio"].iloc[2])
    assert table["ratio_defined"].tolist() == [True, False, False]
    assert trend.totals == {"male": 3, "female": 1}
