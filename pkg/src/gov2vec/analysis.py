"""Validation analytics: 2-D PCA of source vectors, Spearman rank
correlation, and ensemble-mean source-pair similarities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantSeries, DegenerateData
from .query import cosine

PCA_TOL = 1e-10
PCA_MAX_ITER = 10000


@dataclass
class ProjectedPoint:
    label: str
    x: float
    y: float


def _power_iteration(cov: np.ndarray, rng) -> tuple[np.ndarray, float]:
    n = cov.shape[0]
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(PCA_MAX_ITER):
        av = cov @ v
        norm = np.linalg.norm(av)
        if norm < PCA_TOL:
            # deflated matrix is (numerically) zero: any unit vector is fine
            return v, 0.0
        v_new = av / norm
        if np.linalg.norm(v_new - v) < PCA_TOL or np.linalg.norm(v_new + v) < PCA_TOL:
            v = v_new
            break
        v = v_new
    return v, float(v @ cov @ v)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def pca_2d(labeled_vectors: list[tuple[str, np.ndarray]]) -> list[ProjectedPoint]:
    """Project labeled vectors onto their top-2 principal components.

    Power iteration with deflation; each component's sign is fixed so its
    largest-magnitude loading is positive.
    """
    labels = [l for l, _ in labeled_vectors]
    X = np.array([np.asarray(v, dtype=np.float64) for _, v in labeled_vectors])
    if X.shape[0] < 3 or X.shape[1] < 2:
        raise ValueError("need at least 3 vectors of dimension >= 2")
    X = X - X.mean(axis=0)
    cov = X.T @ X / (X.shape[0] - 1)
    if np.linalg.norm(cov) < PCA_TOL:
        raise DegenerateData("input has zero variance")

    rng = np.random.default_rng(0)  # fixed start for determinism
    v1, lam1 = _power_iteration(cov, rng)
    v1 = _fix_sign(v1)
    deflated = cov - lam1 * np.outer(v1, v1)
    v2, _ = _power_iteration(deflated, rng)
    v2 -= (v2 @ v1) * v1  # re-orthogonalize against roundoff
    v2 /= np.linalg.norm(v2)
    v2 = _fix_sign(v2)

    xs, ys = X @ v1, X @ v2
    return [ProjectedPoint(l, float(x), float(y)) for l, x, y in zip(labels, xs, ys)]


def _average_ranks(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1  # 1-based average rank
        i = j + 1
    return ranks


def spearman(a, b) -> float:
    """Spearman's rho with average ranks for ties."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if len(a) != len(b):
        raise ValueError("series must have equal length")
    if len(a) < 3:
        raise ValueError("need at least 3 observations")
    ra, rb = _average_ranks(a), _average_ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = np.sqrt((ra @ ra) * (rb @ rb))
    if denom == 0.0:
        raise ConstantSeries("a series has zero rank variance")
    return float(ra @ rb / denom)


def similarity_series(models, pairs: list[tuple[str, str]]) -> list[float]:
    """For each (sourceA, sourceB) pair, the mean cosine over all models."""
    models = list(models)
    out = []
    for a, b in pairs:
        sims = [cosine(m.source_vector(a), m.source_vector(b)) for m in models]
        out.append(float(np.mean(sims)))
    return out
