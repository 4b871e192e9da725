"""Training loop: shuffled mini-batches, AdamW, early stopping on validation.

The validation split is time-ordered when row years are available (the most
recent years are held out), so early stopping never peeks ahead of the
training period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import Architecture, Params, backward, forward, init_params, mse_loss
from .optim import AdamW


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainSettings:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 2000
    patience: int = 50
    validation_fraction: float = 0.15
    bn_momentum: float = 0.1
    restore_best: bool = True  # hand back best-validation params, not final ones

    def __post_init__(self):
        if self.patience < 1:
            raise TrainingError("patience must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise TrainingError("validation_fraction must lie in (0, 1)")


class EarlyStopper:
    """Stops once the loss has failed to improve for more than `patience`
    consecutive updates; equal losses count as non-improving."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.stale = 0

    def update(self, loss: float) -> bool:
        if loss < self.best:
            self.best = loss
            self.stale = 0
            return False
        self.stale += 1
        return self.stale > self.patience


def time_ordered_split(
    years: np.ndarray | None, n_rows: int, fraction: float
) -> tuple[np.ndarray, np.ndarray]:
    """Indices of (train, validation) rows; validation takes the latest years.

    Without year labels the trailing fraction of rows is held out instead.
    """
    if years is not None:
        unique = np.unique(years)
        if len(unique) >= 2:
            n_val = max(1, int(math.ceil(fraction * len(unique))))
            n_val = min(n_val, len(unique) - 1)
            cutoff = unique[-n_val]
            val = np.flatnonzero(years >= cutoff)
            train = np.flatnonzero(years < cutoff)
            return train, val
    n_val = min(max(1, int(math.ceil(fraction * n_rows))), n_rows - 1)
    idx = np.arange(n_rows)
    return idx[: n_rows - n_val], idx[n_rows - n_val :]


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0


def fit_network(
    X: np.ndarray,
    ids: np.ndarray,
    y: np.ndarray,
    arch: Architecture,
    settings: TrainSettings,
    seed: int,
    train_idx: np.ndarray,
    val_idx: np.ndarray,
) -> tuple[Params, History]:
    """Train one network; returns the best-validation-epoch parameters.

    Targets are expected already transformed (loss is plain MSE on y).
    Deterministic for a fixed seed: initialization and per-epoch shuffles
    come from the same generator.
    """
    if len(train_idx) < 2:
        raise TrainingError("need at least two training rows")
    rng = np.random.default_rng(seed)
    params = init_params(arch, rng)
    opt = AdamW(settings.learning_rate, settings.weight_decay)
    stopper = EarlyStopper(settings.patience)
    history = History()
    best = params.copy()
    best_val = math.inf
    momentum = settings.bn_momentum

    for epoch in range(1, settings.max_epochs + 1):
        perm = rng.permutation(train_idx)
        batch_losses = []
        for start in range(0, len(perm), settings.batch_size):
            batch = perm[start : start + settings.batch_size]
            if len(batch) < 2:
                continue  # batch norm cannot normalize a single row
            pred, cache = forward(params, arch, X[batch], ids[batch], train=True, want_cache=True)
            loss, dpred = mse_loss(pred, y[batch])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            for l, layer in enumerate(cache["layers"], start=1):
                params.running[f"rm{l}"] *= 1.0 - momentum
                params.running[f"rm{l}"] += momentum * layer["mean"]
                params.running[f"rv{l}"] *= 1.0 - momentum
                params.running[f"rv{l}"] += momentum * layer["var"]
            grads = backward(params, arch, cache, dpred)
            opt.step(params.tensors, grads)
            batch_losses.append(loss)

        train_loss = float(np.mean(batch_losses)) if batch_losses else math.nan
        history.train_loss.append(train_loss)

        if len(val_idx) > 0:
            val_pred, _ = forward(params, arch, X[val_idx], ids[val_idx], train=False)
            val_loss = float(np.mean((val_pred - y[val_idx]) ** 2))
        else:
            val_loss = train_loss
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history.val_loss.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best = params.copy()
            history.best_epoch = epoch
        if stopper.update(val_loss):
            history.stopped_epoch = epoch
            break
    else:
        history.stopped_epoch = settings.max_epochs
    return (best if settings.restore_best else params), history
