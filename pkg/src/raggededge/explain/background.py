"""Representative background rows via per-country k-means.

Centroids are computed separately for each country and pooled, so a panel
with eight countries and five points per country yields the 40-row
background set used for the attribution solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import FeatureMatrix


class BackgroundError(ValueError):
    pass


@dataclass
class BackgroundSet:
    rows: np.ndarray  # (k, d)
    countries: list[str]  # country of each centroid
    per_country: int


def _kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:  # all points identical to chosen centers
            centers[c] = X[rng.integers(n)]
            continue
        probs = d2 / total
        centers[c] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def kmeans(
    X: np.ndarray,
    k: int,
    seed: int = 0,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> np.ndarray:
    """Lloyd iterations with k-means++ seeding; deterministic per seed."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < k:
        raise BackgroundError(f"need at least k={k} rows, got {X.shape[0]}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_plusplus(X, k, rng)
    for _ in range(max_iter):
        dists = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = dists.argmin(axis=1)
        new_centers = centers.copy()
        for c in range(k):
            members = X[labels == c]
            if len(members) == 0:
                # re-seed an empty cluster at the point farthest from its center
                far = np.argmax(dists.min(axis=1))
                new_centers[c] = X[far]
            else:
                new_centers[c] = members.mean(axis=0)
        shift = np.max(np.abs(new_centers - centers))
        centers = new_centers
        if shift < tol:
            break
    return centers


def kmeans_background(
    matrix: FeatureMatrix, per_country: int, seed: int = 0
) -> BackgroundSet:
    """Pool per-country centroids into one background set."""
    countries = sorted(set(matrix.row_countries))
    rows = []
    labels = []
    row_countries = np.array(matrix.row_countries)
    for i, country in enumerate(countries):
        sub = matrix.X[row_countries == country]
        if sub.shape[0] == 0:
            raise BackgroundError(f"no rows for country {country}")
        if sub.shape[0] < per_country:
            raise BackgroundError(
                f"country {country} has {sub.shape[0]} rows < per_country={per_country}"
            )
        centers = kmeans(sub, per_country, seed=seed + i)
        rows.append(centers)
        labels += [country] * per_country
    return BackgroundSet(np.vstack(rows), labels, per_country)
