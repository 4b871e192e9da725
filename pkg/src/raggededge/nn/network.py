"""Plain-numpy MLP with a country embedding and post-ReLU batch norm.

The network maps a feature row (continuous columns plus month one-hots) and
an integer country id to a single output.  Three fully connected hidden
layers are each followed by ReLU and batch normalization; the country id is
replaced by a learned low-dimensional embedding before the first layer.

``forward`` is pure: in train mode it normalizes with the batch statistics
and returns them in the cache, leaving the running statistics untouched so
the training loop (and finite-difference checks) control all side effects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Architecture:
    n_features: int  # width of a row excluding the country-id column
    country_count: int
    hidden_sizes: tuple[int, ...] = (200, 20, 20)
    embedding_dim: int = 2
    bn_eps: float = 1e-5

    def __post_init__(self):
        if len(self.hidden_sizes) != 3:
            raise NetworkError("architecture uses exactly three hidden layers")
        if self.n_features < 1 or self.country_count < 1:
            raise NetworkError("need at least one feature and one country")

    @property
    def input_dim(self) -> int:
        return self.n_features + self.embedding_dim

    @property
    def n_hidden(self) -> int:
        return len(self.hidden_sizes)


@dataclass
class Params:
    """Trainable tensors plus batch-norm running statistics."""

    tensors: dict[str, np.ndarray]
    running: dict[str, np.ndarray]

    def copy(self) -> "Params":
        return Params(
            {k: v.copy() for k, v in self.tensors.items()},
            {k: v.copy() for k, v in self.running.items()},
        )


WEIGHT_KEYS = ("W1", "W2", "W3", "W4")


def init_params(arch: Architecture, rng: np.random.Generator) -> Params:
    """Uniform fan-in scaling for weights, unit batch-norm, small embeddings."""
    sizes = [arch.input_dim, *arch.hidden_sizes, 1]
    tensors: dict[str, np.ndarray] = {}
    running: dict[str, np.ndarray] = {}
    for l in range(4):
        fan_in = sizes[l]
        bound = 1.0 / np.sqrt(fan_in)
        tensors[f"W{l + 1}"] = rng.uniform(-bound, bound, (sizes[l], sizes[l + 1]))
        tensors[f"b{l + 1}"] = np.zeros(sizes[l + 1])
    for l, width in enumerate(arch.hidden_sizes, start=1):
        tensors[f"g{l}"] = np.ones(width)
        tensors[f"be{l}"] = np.zeros(width)
        running[f"rm{l}"] = np.zeros(width)
        running[f"rv{l}"] = np.ones(width)
    tensors["emb"] = rng.normal(0.0, 0.1, (arch.country_count, arch.embedding_dim))
    return Params(tensors, running)


def forward(
    params: Params,
    arch: Architecture,
    X: np.ndarray,
    ids: np.ndarray,
    train: bool,
    want_cache: bool = False,
):
    """Run the network; returns (predictions, cache or None).

    In eval mode batch norm uses the stored running statistics, making the
    output deterministic per row.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ids = np.asarray(ids)
    if X.shape[1] != arch.n_features:
        raise NetworkError(
            f"row width {X.shape[1]} does not match architecture ({arch.n_features})"
        )
    if ids.min(initial=0) < 0 or ids.max(initial=0) >= arch.country_count:
        raise NetworkError("unknown country id")
    if train and X.shape[0] < 2:
        raise NetworkError("batch norm needs a batch of size >= 2 in train mode")

    t = params.tensors
    h = np.concatenate([X, t["emb"][ids]], axis=1)
    layers = []
    cache = {"ids": ids, "x0": h} if want_cache else None
    for l in range(1, arch.n_hidden + 1):
        a = h @ t[f"W{l}"] + t[f"b{l}"]
        r = np.maximum(a, 0.0)
        if train:
            mean = r.mean(axis=0)
            var = r.var(axis=0)
        else:
            mean = params.running[f"rm{l}"]
            var = params.running[f"rv{l}"]
        inv = 1.0 / np.sqrt(var + arch.bn_eps)
        xhat = (r - mean) * inv
        h = t[f"g{l}"] * xhat + t[f"be{l}"]
        if want_cache:
            layers.append(
                {"h_in": None, "a": a, "inv": inv, "xhat": xhat, "mean": mean, "var": var}
            )
    pred = (h @ t["W4"] + t["b4"]).ravel()
    if want_cache:
        cache["layers"] = layers
        cache["h_last"] = h
        return pred, cache
    return pred, None


def backward(
    params: Params, arch: Architecture, cache: dict, dpred: np.ndarray
) -> dict[str, np.ndarray]:
    """Exact gradients for a train-mode forward pass.

    ``dpred`` is the loss gradient with respect to the predictions; the
    returned dict matches ``params.tensors``.
    """
    t = params.tensors
    grads: dict[str, np.ndarray] = {}
    dpred = np.asarray(dpred, dtype=float).reshape(-1, 1)
    n = dpred.shape[0]

    grads["W4"] = cache["h_last"].T @ dpred
    grads["b4"] = dpred.sum(axis=0)
    dh = dpred @ t["W4"].T

    # recompute layer inputs from the cache chain (x0 -> bn outputs)
    inputs = [cache["x0"]]
    for l in range(arch.n_hidden - 1):
        layer = cache["layers"][l]
        inputs.append(t[f"g{l + 1}"] * layer["xhat"] + t[f"be{l + 1}"])

    for l in range(arch.n_hidden, 0, -1):
        layer = cache["layers"][l - 1]
        xhat, inv = layer["xhat"], layer["inv"]
        grads[f"g{l}"] = (dh * xhat).sum(axis=0)
        grads[f"be{l}"] = dh.sum(axis=0)
        dxhat = dh * t[f"g{l}"]
        # batch-norm backward with batch statistics (biased variance)
        dr = inv * (
            dxhat
            - dxhat.mean(axis=0)
            - xhat * (dxhat * xhat).mean(axis=0)
        )
        da = dr * (layer["a"] > 0.0)
        h_in = inputs[l - 1]
        grads[f"W{l}"] = h_in.T @ da
        grads[f"b{l}"] = da.sum(axis=0)
        dh = da @ t[f"W{l}"].T

    demb = np.zeros_like(t["emb"])
    np.add.at(demb, cache["ids"], dh[:, arch.n_features :])
    grads["emb"] = demb
    return grads


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. the predictions."""
    diff = pred - target
    n = len(pred)
    return float(np.mean(diff**2)), 2.0 * diff / n
