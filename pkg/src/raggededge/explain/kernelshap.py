"""Model-agnostic Shapley attributions via the weighted least-squares kernel.

Features absent from a coalition are replaced by background rows and the
model output is averaged over the background.  The kernel-weighted
regression is solved with the additivity constraint eliminated, so the
attributions plus base value reproduce the model prediction exactly up to
solver tolerance.  Designs with up to 12 features are enumerated exactly;
larger ones combine fully enumerated coalition sizes with kernel-weighted
sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .background import BackgroundSet

EXACT_MAX_FEATURES = 12
_PREDICT_CHUNK = 65536


class ExplainError(RuntimeError):
    pass


@dataclass
class ShapResult:
    base_value: float
    phi: np.ndarray
    prediction: float
    n_coalitions: int
    exact: bool


@dataclass
class ShapSummary:
    phi: np.ndarray  # (n_rows, d)
    mean_abs: np.ndarray  # (d,)
    ranking: np.ndarray  # feature indices, most important first


def _predict_fn(model):
    return model.predict if hasattr(model, "predict") else model


def _background_rows(background) -> np.ndarray:
    if isinstance(background, BackgroundSet):
        return background.rows
    return np.atleast_2d(np.asarray(background, dtype=float))


def shapley_kernel_weight(d: int, s: int) -> float:
    return (d - 1) / (comb(d, s) * s * (d - s))


def _enumerate_coalitions(d: int) -> tuple[np.ndarray, np.ndarray]:
    masks, weights = [], []
    for s in range(1, d):
        w = shapley_kernel_weight(d, s)
        for subset in combinations(range(d), s):
            mask = np.zeros(d, dtype=bool)
            mask[list(subset)] = True
            masks.append(mask)
            weights.append(w)
    return np.array(masks), np.array(weights)


def _sample_coalitions(
    d: int, budget: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate whole coalition sizes while the budget allows, then sample."""
    sizes = np.arange(1, d)
    mass = np.array([shapley_kernel_weight(d, s) * comb(d, s) for s in sizes])
    masks, weights = [], []
    remaining = budget
    enumerated = np.zeros(len(sizes), dtype=bool)
    # pair sizes from the extremes inward: (1, d-1), (2, d-2), ...
    for s in range(1, d // 2 + 1):
        pair = [s] if s == d - s else [s, d - s]
        need = sum(comb(d, p) for p in pair)
        if need > remaining:
            break
        for p in pair:
            w_each = shapley_kernel_weight(d, p)
            for subset in combinations(range(d), p):
                mask = np.zeros(d, dtype=bool)
                mask[list(subset)] = True
                masks.append(mask)
                weights.append(w_each)
            enumerated[p - 1] = True
        remaining -= need
    leftover = ~enumerated
    if leftover.any() and remaining > 0:
        probs = mass[leftover] / mass[leftover].sum()
        drawn_sizes = rng.choice(sizes[leftover], size=remaining, p=probs)
        w0 = mass[leftover].sum() / remaining
        for s in drawn_sizes:
            mask = np.zeros(d, dtype=bool)
            mask[rng.choice(d, size=s, replace=False)] = True
            masks.append(mask)
            weights.append(w0)
    return np.array(masks), np.array(weights)


def _coalition_values(
    predict, row: np.ndarray, bg: np.ndarray, masks: np.ndarray
) -> np.ndarray:
    """v(z) = E_background f(x masked by z), evaluated in one batched sweep."""
    n_bg, d = bg.shape
    values = np.empty(len(masks))
    per_chunk = max(1, _PREDICT_CHUNK // n_bg)
    for start in range(0, len(masks), per_chunk):
        chunk = masks[start : start + per_chunk]
        stacked = np.where(chunk[:, None, :], row[None, None, :], bg[None, :, :])
        preds = predict(stacked.reshape(-1, d))
        values[start : start + len(chunk)] = np.asarray(preds).reshape(
            len(chunk), n_bg
        ).mean(axis=1)
    return values


def kernel_shap(
    model,
    row: np.ndarray,
    background,
    n_coalitions: int | None = None,
    seed: int = 0,
) -> ShapResult:
    """Attribution of one prediction over its features.

    ``model`` is any batch predictor (object with .predict or a callable).
    """
    predict = _predict_fn(model)
    row = np.asarray(row, dtype=float).ravel()
    bg = _background_rows(background)
    d = len(row)
    if bg.shape[1] != d:
        raise ExplainError("background width does not match the explained row")
    if n_coalitions is None:
        n_coalitions = 2 * d + 2048
    if d < 2:
        raise ExplainError("need at least two features to attribute")

    exact = d <= EXACT_MAX_FEATURES or n_coalitions >= 2**d - 2
    if not exact and n_coalitions < d + 2:
        raise ExplainError("n_coalitions must be at least d + 2")
    rng = np.random.default_rng(seed)
    if exact:
        masks, weights = _enumerate_coalitions(d)
    else:
        masks, weights = _sample_coalitions(d, n_coalitions, rng)

    base = float(np.mean(predict(bg)))
    fx = float(np.asarray(predict(row[None, :])).ravel()[0])
    values = _coalition_values(predict, row, bg, masks)

    # eliminate the additivity constraint through the last feature
    delta = fx - base
    z = masks.astype(float)
    target = values - base - z[:, -1] * delta
    A = z[:, :-1] - z[:, -1:]
    AW = A * weights[:, None]
    lhs = AW.T @ A
    rhs = AW.T @ target
    try:
        phi_head = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise ExplainError(
            "singular attribution system; increase n_coalitions"
        ) from exc
    if not np.all(np.isfinite(phi_head)):
        raise ExplainError("non-finite attribution solve; increase n_coalitions")
    phi = np.append(phi_head, delta - phi_head.sum())
    return ShapResult(base, phi, fx, len(masks), exact)


def shap_summary(
    model,
    rows: np.ndarray,
    background,
    n_coalitions: int | None = None,
    seed: int = 0,
) -> ShapSummary:
    """Per-row attributions plus the mean-|phi| global importance ranking."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    phis = np.empty_like(rows)
    for r, row in enumerate(rows):
        phis[r] = kernel_shap(model, row, background, n_coalitions, seed + r).phi
    mean_abs = np.abs(phis).mean(axis=0)
    ranking = np.argsort(-mean_abs, kind="stable")
    return ShapSummary(phis, mean_abs, ranking)


def topic_importance(mean_abs: np.ndarray, columns) -> list[tuple[str, float]]:
    """Total search-volume importance per topic, most important first.

    Sums the mean |phi| of every lag column belonging to a topic; used to
    pick the indicator set for the low-dimensional disaggregation.
    """
    totals: dict[str, float] = {}
    for value, meta in zip(mean_abs, columns):
        if meta.symbol in ("SVI_annual_lag", "SVI_ytd"):
            totals[meta.topic_or_variable] = totals.get(meta.topic_or_variable, 0.0) + float(value)
    return sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
