"""Command-line pipeline: ingest, train, evaluate, explain, disagg, validate.

Every command reads one JSON run configuration, works inside its output
directory, and emits tidy CSVs with a provenance header.  Reruns with the
same configuration and seed produce byte-identical outputs.  Figure
rendering is left to external tooling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import pandas as pd

from . import reportio
from .baselines import OlsRegressor
from .dataio import DataError, Panel, load_panel, write_panel
from .disagg import (
    DisaggregationError,
    chow_lin,
    corrupted_input_series,
    cumulative_sum_matrix,
    nn_elasticity_disagg,
    sparse_td,
)
from .evalkit import (
    EvaluationError,
    SplitSpec,
    compare_methods,
    evaluate_configs,
    growth_rates,
    lagged_correlation,
    summarize_errors,
)
from .explain import (
    ExplainError,
    elasticity_table,
    kmeans_background,
    shap_summary,
    topic_importance,
)
from .features import Config, FeatureError, assemble
from .nn import MlpEnsembleRegressor, ModelFormatError, load_model, save_model
from .synthetic import SyntheticSpec, generate_synthetic_panel

THREADS_ENV = "RAGGEDEDGE_THREADS"

_TRAIN_KEYS = {
    "hidden_sizes",
    "embedding_dim",
    "learning_rate",
    "weight_decay",
    "batch_size",
    "max_epochs",
    "patience",
    "validation_fraction",
    "standardize",
    "log_target",
    "n_members",
}


class CliError(RuntimeError):
    def __init__(self, message: str, requires: str | None = None):
        super().__init__(message)
        self.requires = requires


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


class RunConfig:
    def __init__(self, doc: dict, path: str):
        self.doc = doc
        self.path = path
        self.seed = int(doc.get("seed", 0))
        self.tau = int(doc.get("tau", 3))
        self.out = doc.get("out", "runout")
        self.configs = [Config(c) for c in doc.get("configs", [c.value for c in Config])]
        self.methods = doc.get("methods", ["chow_lin", "sp_td", "nn_elasticity"])
        self.hash = reportio.config_hash(doc)

    @classmethod
    def load(cls, path: str, overrides: dict) -> "RunConfig":
        if not os.path.exists(path):
            raise CliError(f"run configuration not found: {path}")
        with open(path) as fh:
            doc = json.load(fh)
        for key, value in overrides.items():
            if value is not None:
                doc[key] = value
        return cls(doc, path)

    def train_kwargs(self) -> dict:
        kwargs = dict(self.doc.get("train", {}))
        unknown = set(kwargs) - _TRAIN_KEYS
        if unknown:
            raise CliError(f"unknown train option(s): {sorted(unknown)}")
        if "hidden_sizes" in kwargs:
            kwargs["hidden_sizes"] = tuple(kwargs["hidden_sizes"])
        return kwargs

    def mlp_prototype(self) -> MlpEnsembleRegressor:
        return MlpEnsembleRegressor(
            random_state=self.seed, n_jobs=worker_count(), **self.train_kwargs()
        )

    def split(self) -> SplitSpec:
        return SplitSpec(test_years=int(self.doc.get("split", {}).get("test_years", 3)))

    def explain_options(self) -> dict:
        opts = dict(self.doc.get("explain", {}))
        opts.setdefault("config", "AllVar")
        opts.setdefault("per_country", 5)
        opts.setdefault("n_coalitions", None)
        opts.setdefault("max_rows", 40)
        return opts

    def disagg_options(self) -> dict:
        opts = dict(self.doc.get("disagg", {}))
        opts.setdefault("n_indicators", 6)
        opts.setdefault("rho_grid_size", 199)
        return opts

    # paths -----------------------------------------------------------------
    def path_panel_dir(self) -> str:
        return os.path.join(self.out, "panel")

    def path_model(self, name: str) -> str:
        return os.path.join(self.out, "models", f"{name}.model.npz")

    def write_csv(self, name: str, rows, fieldnames=None) -> str:
        path = os.path.join(self.out, name)
        reportio.write_csv(path, rows, fieldnames, seed=self.seed, cfg_hash=self.hash)
        return path


def _build_panel(cfg: RunConfig) -> Panel:
    doc = cfg.doc
    if "synthetic" in doc:
        spec = SyntheticSpec.from_json(doc["synthetic"])
        panel, _ = generate_synthetic_panel(spec, seed=cfg.seed)
        return panel
    if "data" in doc:
        data = doc["data"]
        return load_panel(data["gerd"], data["svi_dir"], data["macro"])
    raise CliError("run configuration needs either a 'synthetic' spec or 'data' paths")


def _load_panel_artifact(cfg: RunConfig) -> Panel:
    base = cfg.path_panel_dir()
    gerd = os.path.join(base, "gerd.csv")
    if not os.path.exists(gerd):
        raise CliError(f"panel artifact missing at {gerd}", requires="ingest")
    return load_panel(gerd, os.path.join(base, "svi"), os.path.join(base, "macro.csv"))


def _load_model_artifact(cfg: RunConfig, name: str) -> MlpEnsembleRegressor:
    path = cfg.path_model(name)
    if not os.path.exists(path):
        raise CliError(f"model artifact missing at {path}", requires="train")
    return load_model(path)


# commands -------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> None:
    panel = _build_panel(cfg)
    base = cfg.path_panel_dir()
    os.makedirs(os.path.join(base, "svi"), exist_ok=True)
    write_panel(
        panel,
        os.path.join(base, "gerd.csv"),
        os.path.join(base, "svi"),
        os.path.join(base, "macro.csv"),
    )
    summary = {
        "countries": panel.countries,
        "years": [panel.start_year, panel.end_year],
        "n_topics": len(panel.topics),
        "interpolated_targets": {
            country: sorted(
                y for y in panel.years if panel.target(country, y).is_interpolated
            )
            for country in panel.countries
        },
        "imputed_macro_years": {
            f"{country}/{var}": sorted(series.imputed_years)
            for (country, var), series in sorted(panel.macros.items())
            if series.imputed_years
        },
        "seed": cfg.seed,
        "config_hash": cfg.hash,
    }
    with open(os.path.join(cfg.out, "panel_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(f"ingested panel: {len(panel.countries)} countries, "
          f"{len(panel.years)} years, {len(panel.topics)} topics")


def cmd_train(cfg: RunConfig) -> None:
    panel = _load_panel_artifact(cfg)
    os.makedirs(os.path.join(cfg.out, "models"), exist_ok=True)
    for config in cfg.configs:
        matrix = assemble(panel, config, cfg.tau)
        model = cfg.mlp_prototype().fit_matrix(matrix)
        save_model(model, cfg.path_model(config.value))

        ols = OlsRegressor(fallback_ridge=1e-8).fit_matrix(matrix)
        rows = [{"column": "intercept", "coefficient": float(ols.intercept_)}]
        rows += [
            {"column": meta.serialize(), "coefficient": float(coef)}
            for meta, coef in zip(matrix.columns, ols.coef_)
        ]
        cfg.write_csv(os.path.join("models", f"{config.value}_ols_coefficients.csv"), rows)

        history = [
            {
                "train_loss": h.train_loss,
                "val_loss": h.val_loss,
                "best_epoch": h.best_epoch,
                "stopped_epoch": h.stopped_epoch,
            }
            for h in model.histories_
        ]
        with open(os.path.join(cfg.out, "models", f"{config.value}_history.json"), "w") as fh:
            json.dump(history, fh, sort_keys=True)
        print(f"trained {config.value}: ensemble of {model.n_members} + baseline")

    if "corrupted_input" in cfg.methods:
        matrix = cumulative_sum_matrix(panel, cfg.tau)
        model = cfg.mlp_prototype().fit(
            matrix.X, matrix.y, columns=matrix.columns, years=matrix.row_years
        )
        save_model(model, cfg.path_model("cumulative"))
        print("trained cumulative-input companion model")


def cmd_evaluate(cfg: RunConfig) -> None:
    panel = _load_panel_artifact(cfg)
    frame = evaluate_configs(
        panel,
        configs=cfg.configs,
        split=cfg.split(),
        mlp=cfg.mlp_prototype(),
        ols=OlsRegressor(fallback_ridge=1e-8),
        tau=cfg.tau,
    )
    cfg.write_csv("errors_by_config.csv", frame)
    cfg.write_csv("errors_summary.csv", summarize_errors(frame))
    print(f"evaluated {len(cfg.configs)} configuration(s) x 2 families")


def _explain_rows(matrix, max_rows: int) -> np.ndarray:
    if max_rows is None or matrix.n_rows <= max_rows:
        return np.arange(matrix.n_rows)
    return np.linspace(0, matrix.n_rows - 1, max_rows).astype(int)


def cmd_explain(cfg: RunConfig) -> None:
    panel = _load_panel_artifact(cfg)
    opts = cfg.explain_options()
    config = Config(opts["config"])
    model = _load_model_artifact(cfg, config.value)
    matrix = assemble(panel, config, cfg.tau)
    background = kmeans_background(matrix, opts["per_country"], seed=cfg.seed)
    picked = _explain_rows(matrix, opts["max_rows"])
    summary = shap_summary(
        model, matrix.X[picked], background.rows, opts["n_coalitions"], seed=cfg.seed
    )

    rows = [
        {
            "feature": matrix.columns[i].serialize(),
            "mean_abs_phi": float(summary.mean_abs[i]),
            "rank": int(np.where(summary.ranking == i)[0][0]) + 1,
        }
        for i in range(len(matrix.columns))
    ]
    cfg.write_csv("shap_summary.csv", rows)

    value_rows = []
    for r, idx in enumerate(picked):
        country, year, month_j = matrix.rows[idx]
        for i, meta in enumerate(matrix.columns):
            value_rows.append(
                {
                    "country": country,
                    "year": year,
                    "month_j": month_j,
                    "feature": meta.serialize(),
                    "phi": float(summary.phi[r, i]),
                }
            )
    cfg.write_csv("shap_values.csv", value_rows)

    agt_model = _load_model_artifact(cfg, Config.AGT.value)
    agt_matrix = assemble(panel, Config.AGT, cfg.tau)
    table = elasticity_table(agt_model, agt_matrix, seed=cfg.seed)
    elast_rows = [
        {
            "country": country,
            "topic": topic,
            "eta": float(value),
            "n_draws": table.n_draws,
            "excluded": table.excluded[(country, topic)],
        }
        for (country, topic), value in sorted(table.entries.items())
    ]
    cfg.write_csv("elasticities.csv", elast_rows)
    print(f"explained {len(picked)} rows of {config.value}; "
          f"elasticities for {len(elast_rows)} pairs")


def _monthly_indicators(
    panel: Panel, country: str, topics: list[str], center: bool = False
) -> np.ndarray:
    """Monthly topic series as indicator columns.

    The low-dimensional GLS design carries an intercept; the sparse design
    is centered instead (levels are collinear with a constant and would
    stall the coordinate solver), leaving the level to residual smoothing.
    """
    cols = np.column_stack(
        [
            np.concatenate([panel.svi_year(country, t, y) for y in panel.years])
            for t in topics
        ]
    )
    if center:
        return cols - cols.mean(axis=0)
    intercept = np.ones(12 * len(panel.years))
    return np.column_stack([intercept, cols])


def cmd_disagg(cfg: RunConfig) -> None:
    panel = _load_panel_artifact(cfg)
    opts = cfg.disagg_options()
    agt_model = _load_model_artifact(cfg, Config.AGT.value)
    agt_matrix = assemble(panel, Config.AGT, cfg.tau)
    rho_grid = np.linspace(-0.999, 0.999, opts["rho_grid_size"])

    top_topics: list[str] | None = None
    if "chow_lin" in cfg.methods:
        background = kmeans_background(
            agt_matrix, min(5, max(1, agt_matrix.n_rows // len(panel.countries))), seed=cfg.seed
        )
        picked = _explain_rows(agt_matrix, 40)
        summary = shap_summary(agt_model, agt_matrix.X[picked], background.rows, seed=cfg.seed)
        ranked = topic_importance(summary.mean_abs, agt_matrix.columns)
        top_topics = [topic for topic, _ in ranked[: opts["n_indicators"]]]

    elasticities = None
    if "nn_elasticity" in cfg.methods:
        elasticities = elasticity_table(agt_model, agt_matrix, seed=cfg.seed)

    cumulative_model = None
    if "corrupted_input" in cfg.methods:
        cumulative_model = _load_model_artifact(cfg, "cumulative")

    per_method_rows: dict[str, list[dict]] = {m: [] for m in cfg.methods}
    correlation_frames = []
    for country in panel.countries:
        annual = np.array([panel.target(country, y).value for y in panel.years])
        produced = []
        if "chow_lin" in cfg.methods:
            X6 = _monthly_indicators(panel, country, top_topics)
            result = chow_lin(
                annual, X6, rho_grid, country=country, start_year=panel.start_year
            )
            produced.append(result.series)
            per_method_rows["chow_lin"] += result.series.to_rows()
        if "sp_td" in cfg.methods:
            Xall = _monthly_indicators(panel, country, panel.topics, center=True)
            result = sparse_td(
                annual, Xall, rho_grid=rho_grid, country=country, start_year=panel.start_year
            )
            produced.append(result.series)
            per_method_rows["sp_td"] += result.series.to_rows()
        if "nn_elasticity" in cfg.methods:
            series, _report = nn_elasticity_disagg(
                panel, country, elasticities, model=agt_model, tau=cfg.tau
            )
            produced.append(series)
            per_method_rows["nn_elasticity"] += series.to_rows()
        if "corrupted_input" in cfg.methods:
            raw = corrupted_input_series(cumulative_model, panel, country, cfg.tau)
            scaled = corrupted_input_series(
                cumulative_model, panel, country, cfg.tau, renormalize=True
            )
            produced.append(scaled)
            per_method_rows["corrupted_input"] += raw.to_rows() + scaled.to_rows()

        if len(produced) >= 2:
            frame = compare_methods(produced)
            frame.insert(0, "country", country)
            correlation_frames.append(frame)

    for method, rows in per_method_rows.items():
        cfg.write_csv(f"monthly_{method}.csv", rows)
    if correlation_frames:
        cfg.write_csv("method_correlations.csv", pd.concat(correlation_frames, ignore_index=True))
    print(f"disaggregated {len(panel.countries)} countries "
          f"with method(s): {', '.join(cfg.methods)}")


def _read_monthly_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def cmd_validate(cfg: RunConfig) -> None:
    doc = cfg.doc.get("validate", {})
    external_path = doc.get("external")
    if not external_path:
        raise CliError("run configuration needs validate.external (monthly CSV)")
    if not os.path.exists(external_path):
        raise CliError(f"external series not found: {external_path}")
    max_lag = int(doc.get("max_lag", 6))

    external = pd.read_csv(external_path, comment="#")
    for col in ("year", "month", "value"):
        if col not in external.columns:
            raise CliError(f"external series needs columns year,month,value")

    rows = []
    for method in cfg.methods:
        path = os.path.join(cfg.out, f"monthly_{method}.csv")
        if not os.path.exists(path):
            raise CliError(f"monthly estimates missing at {path}", requires="disagg")
        monthly = _read_monthly_csv(path)
        monthly = monthly[monthly["normalized"] == 1]
        for country in sorted(monthly["country"].unique()):
            sub = monthly[monthly["country"] == country].sort_values(["year", "month"])
            if "country" in external.columns:
                ext = external[external["country"] == country]
            else:
                ext = external
            merged = sub.merge(ext, on=["year", "month"], suffixes=("", "_ext"))
            if len(merged) < max_lag + 4:
                continue
            try:  # skip series whose growth rates are undefined (zero months)
                g_est = growth_rates(merged["value"].to_numpy())
                g_ext = growth_rates(merged["value_ext"].to_numpy())
                correlations = lagged_correlation(g_est, g_ext, max_lag)
            except EvaluationError:
                continue
            for corr in correlations:
                rows.append(
                    {
                        "series_a": f"{method}:{country}",
                        "series_b": os.path.basename(external_path),
                        "lag": corr.lag,
                        "r": corr.r,
                        "p": corr.p_value,
                        "n": corr.n_effective,
                        "significant": int(corr.significant),
                    }
                )
    if not rows:
        raise CliError("no overlapping months between estimates and the external series")
    cfg.write_csv("lag_correlations.csv", rows)
    print(f"validated against {os.path.basename(external_path)}: {len(rows)} correlations")


COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "disagg": cmd_disagg,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="raggededge",
        description="Nowcast annual expenditure panels and disaggregate them monthly.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--tau", type=int, default=None)
        p.add_argument("--models", default=None, help="comma-separated config names")
        p.add_argument("--methods", default=None, help="comma-separated method names")
    args = parser.parse_args(argv)

    overrides = {
        "seed": args.seed,
        "out": args.out,
        "tau": args.tau,
        "configs": args.models.split(",") if args.models else None,
        "methods": args.methods.split(",") if args.methods else None,
    }
    try:
        cfg = RunConfig.load(args.config, overrides)
        os.makedirs(cfg.out, exist_ok=True)
        COMMANDS[args.command](cfg)
        return 0
    except CliError as exc:
        payload = {"error": str(exc)}
        if exc.requires:
            payload["requires"] = exc.requires
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 1
    except (
        DataError,
        DisaggregationError,
        EvaluationError,
        ExplainError,
        FeatureError,
        ModelFormatError,
        ValueError,
    ) as exc:
        print(json.dumps({"error": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
