"""Versioned on-disk container for trained ensembles.

A model file is a numpy .npz archive holding every parameter tensor at full
double precision plus a JSON metadata record (format version, constructor
parameters, preprocessing statistics, column metadata, training history).
Round trips are bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from ..features import FeatureColumnMeta
from .estimators import MlpEnsembleRegressor, Preprocess
from .network import Architecture, Params
from .train import History

FORMAT_VERSION = 1


class ModelFormatError(RuntimeError):
    pass


def save_model(model: MlpEnsembleRegressor, path: str) -> None:
    if not hasattr(model, "members_"):
        raise ModelFormatError("model is not fitted")
    arrays: dict[str, np.ndarray] = {}
    for m, params in enumerate(model.members_):
        for key, value in params.tensors.items():
            arrays[f"m{m}/t/{key}"] = value
        for key, value in params.running.items():
            arrays[f"m{m}/r/{key}"] = value
    pre = model.preprocess_
    arrays["pre/mean"] = pre.mean
    arrays["pre/scale"] = pre.scale
    arrays["pre/feature_cols"] = pre.feature_cols

    meta = {
        "format_version": FORMAT_VERSION,
        "estimator_params": _jsonable(model.get_params()),
        "arch": {
            "n_features": model.arch_.n_features,
            "country_count": model.arch_.country_count,
            "hidden_sizes": list(model.arch_.hidden_sizes),
            "embedding_dim": model.arch_.embedding_dim,
            "bn_eps": model.arch_.bn_eps,
        },
        "preprocess": {
            "country_col": pre.country_col,
            "log_target": pre.log_target,
            "country_count": pre.country_count,
        },
        "columns": None
        if model.columns_ is None
        else [meta.serialize() for meta in model.columns_],
        "config": None if model.config_ is None else str(model.config_),
        "histories": [
            {
                "train_loss": h.train_loss,
                "val_loss": h.val_loss,
                "best_epoch": h.best_epoch,
                "stopped_epoch": h.stopped_epoch,
            }
            for h in model.histories_
        ],
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path: str) -> MlpEnsembleRegressor:
    try:
        archive = np.load(path, allow_pickle=False)
    except Exception as exc:
        raise ModelFormatError(f"not a readable model file: {path} ({exc})") from exc
    if "meta" not in archive.files:
        raise ModelFormatError(f"not a model file (no metadata): {path}")
    meta = json.loads(bytes(archive["meta"]).decode())
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version} (expected {FORMAT_VERSION})"
        )

    params = dict(meta["estimator_params"])
    params["hidden_sizes"] = tuple(params["hidden_sizes"])
    model = MlpEnsembleRegressor(**params)
    model.arch_ = Architecture(
        n_features=meta["arch"]["n_features"],
        country_count=meta["arch"]["country_count"],
        hidden_sizes=tuple(meta["arch"]["hidden_sizes"]),
        embedding_dim=meta["arch"]["embedding_dim"],
        bn_eps=meta["arch"]["bn_eps"],
    )
    model.preprocess_ = Preprocess(
        country_col=meta["preprocess"]["country_col"],
        feature_cols=archive["pre/feature_cols"],
        mean=archive["pre/mean"],
        scale=archive["pre/scale"],
        log_target=meta["preprocess"]["log_target"],
        country_count=meta["preprocess"]["country_count"],
    )
    model.columns_ = (
        None
        if meta["columns"] is None
        else [FeatureColumnMeta.deserialize(text) for text in meta["columns"]]
    )
    model.config_ = meta["config"]

    members: list[Params] = []
    n_members = len(meta["histories"])
    for m in range(n_members):
        tensors = {
            key.split("/", 2)[2]: archive[key]
            for key in archive.files
            if key.startswith(f"m{m}/t/")
        }
        running = {
            key.split("/", 2)[2]: archive[key]
            for key in archive.files
            if key.startswith(f"m{m}/r/")
        }
        if not tensors:
            raise ModelFormatError(f"model file truncated: member {m} missing")
        members.append(Params(tensors, running))
    model.members_ = members
    model.histories_ = [
        History(h["train_loss"], h["val_loss"], h["best_epoch"], h["stopped_epoch"])
        for h in meta["histories"]
    ]
    return model


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
