"""Covariance, a cyclic Jacobi eigensolver and the top-k projection of athlete vectors."""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.utils.constants import PCA_COMPONENTS
from app.utils.exceptions import DegenerateError, InsufficientDataError, IterationLimitError, RangeError, ShapeError

JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOLERANCE = 1e-10


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


@dataclass
class ProjectionMatrix:
    matrix: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    def project(self, v) -> np.ndarray:
        return project(v, self)

    def to_json(self) -> dict:
        return {"matrix": self.matrix.tolist(), "mean": self.mean.tolist(), "eigenvalues": self.eigenvalues.tolist()}

    @classmethod
    def from_json(cls, document: dict) -> "ProjectionMatrix":
        return cls(
            matrix=np.array(document["matrix"], dtype=float),
            mean=np.array(document["mean"], dtype=float),
            eigenvalues=np.array(document["eigenvalues"], dtype=float),
        )


def covariance(vectors: Sequence) -> np.ndarray:
    data = np.asarray(vectors, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise InsufficientDataError(f"covariance needs at least 2 vectors, got {0 if data.ndim < 2 else data.shape[0]}")
    centered = data - data.mean(axis=0)
    return centered.T @ centered / data.shape[0]


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a ** 2) - np.sum(np.diag(a) ** 2)))


def eigen_sym(c) -> EigenDecomposition:
    a = np.array(c, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"eigen_sym needs a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOLERANCE * scale:
        raise ShapeError("eigen_sym needs a symmetric matrix")
    a = (a + a.T) / 2
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    # absolute cutoff on the Frobenius norm of the off-diagonal part
    while _off_diagonal_norm(a) >= JACOBI_TOLERANCE:
        if sweeps == JACOBI_MAX_SWEEPS:
            raise IterationLimitError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                cos = 1.0 / np.sqrt(t * t + 1.0)
                sin = t * cos

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = cos * col_p - sin * col_q
                a[:, q] = sin * col_p + cos * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = cos * row_p - sin * row_q
                a[q, :] = sin * row_p + cos * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = cos * vec_p - sin * vec_q
                v[:, q] = sin * vec_p + cos * vec_q

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    v = v[:, order]
    for i in range(n):
        pivot = np.argmax(np.abs(v[:, i]))
        if v[pivot, i] < 0:
            v[:, i] = -v[:, i]
    return EigenDecomposition(eigenvalues=eigenvalues, eigenvectors=v, sweeps=sweeps)


def projection(decomp: EigenDecomposition, k: int = PCA_COMPONENTS, mean: Optional[np.ndarray] = None) -> ProjectionMatrix:
    n = decomp.eigenvectors.shape[0]
    if not 1 <= k <= n:
        raise RangeError(f"k must be in 1..{n}, got {k}")
    return ProjectionMatrix(
        matrix=decomp.eigenvectors[:, :k].copy(),
        mean=np.zeros(n) if mean is None else np.asarray(mean, dtype=float),
        eigenvalues=decomp.eigenvalues.copy(),
    )


def project(v, p: ProjectionMatrix) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != p.matrix.shape[0]:
        raise ShapeError(f"expected vectors of length {p.matrix.shape[0]}, got {v.shape[-1]}")
    return (v - p.mean) @ p.matrix


def explained_variance(decomp: EigenDecomposition, k: int) -> float:
    spectrum = np.clip(decomp.eigenvalues, 0.0, None)
    total = spectrum.sum()
    if total == 0.0:
        raise DegenerateError("explained variance is undefined for an all-zero spectrum")
    return float(spectrum[:k].sum() / total)


def fit_projection(vectors: Sequence, k: int = PCA_COMPONENTS) -> ProjectionMatrix:
    data = np.asarray(vectors, dtype=float)
    decomp = eigen_sym(covariance(data))
    return projection(decomp, k, mean=data.mean(axis=0))
