import json
import os

import numpy as np
import pandas as pd
import pytest

from raggededge.cli import main, worker_count

TINY_CONFIG = {
    "seed": 11,
    "tau": 2,
    "synthetic": {
        "countries": 2,
        "start_year": 2006,
        "end_year": 2015,
        "k_s": 2,
        "dgp": {
            "type": "linear",
            "coefficients": [0.1, 0.05],
            "intercept": 3.0,
            "ar_rho": 0.3,
            "noise_sigma": 0.2,
        },
        "seed": 11,
    },
    "configs": ["LagRD", "AGT"],
    "train": {"n_members": 2, "max_epochs": 25, "patience": 8, "hidden_sizes": [12, 6, 6]},
    "split": {"test_years": 2},
    "methods": ["chow_lin", "sp_td", "nn_elasticity", "corrupted_input"],
    "explain": {"config": "AGT", "per_country": 2, "max_rows": 8},
    "disagg": {"n_indicators": 2, "rho_grid_size": 21},
}


@pytest.fixture
def workdir(tmp_path):
    cfg = dict(TINY_CONFIG)
    cfg["out"] = str(tmp_path / "out")
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return str(path), cfg["out"]


def _run(*argv):
    return main(list(argv))


class TestPipeline:
    def test_ingest_train_evaluate_smoke(self, workdir):
        config, out = workdir
        assert _run("ingest", "--config", config) == 0
        assert os.path.exists(os.path.join(out, "panel_summary.json"))
        assert _run("train", "--config", config) == 0
        assert os.path.exists(os.path.join(out, "models", "AGT.model.npz"))
        assert _run("evaluate", "--config", config) == 0
        assert os.path.exists(os.path.join(out, "errors_by_config.csv"))

    def test_full_chain_through_validate(self, workdir):
        config, out = workdir
        for cmd in ("ingest", "train", "evaluate", "explain", "disagg"):
            assert _run(cmd, "--config", config) == 0, cmd
        for name in (
            "shap_summary.csv",
            "shap_values.csv",
            "elasticities.csv",
            "monthly_chow_lin.csv",
            "monthly_sp_td.csv",
            "monthly_nn_elasticity.csv",
            "monthly_corrupted_input.csv",
            "method_correlations.csv",
        ):
            assert os.path.exists(os.path.join(out, name)), name

        # external reference: the elasticity estimates plus noise
        monthly = pd.read_csv(os.path.join(out, "monthly_nn_elasticity.csv"), comment="#")
        sub = monthly[monthly["country"] == monthly["country"].iloc[0]]
        rng = np.random.default_rng(0)
        external = sub[["year", "month"]].copy()
        external["value"] = sub["value"].to_numpy() * rng.uniform(0.9, 1.1, len(sub))
        ext_path = os.path.join(out, "external.csv")
        external.to_csv(ext_path, index=False)

        doc = json.loads(open(config).read())
        doc["validate"] = {"external": ext_path, "max_lag": 3}
        open(config, "w").write(json.dumps(doc))
        assert _run("validate", "--config", config) == 0
        frame = pd.read_csv(os.path.join(out, "lag_correlations.csv"), comment="#")
        assert {"series_a", "lag", "r", "p"} <= set(frame.columns)

    def test_missing_prerequisite_names_command(self, workdir, capsys):
        config, _ = workdir
        assert _run("disagg", "--config", config) == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["requires"] == "ingest"

        assert _run("ingest", "--config", config) == 0
        assert _run("disagg", "--config", config) == 1
        err = json.loads(capsys.readouterr().err.splitlines()[-1])
        assert err["requires"] == "train"

    def test_rerun_is_byte_identical(self, workdir):
        config, out = workdir
        assert _run("ingest", "--config", config) == 0
        assert _run("train", "--config", config) == 0
        assert _run("evaluate", "--config", config) == 0
        first = open(os.path.join(out, "errors_by_config.csv"), "rb").read()
        assert _run("evaluate", "--config", config) == 0
        second = open(os.path.join(out, "errors_by_config.csv"), "rb").read()
        assert first == second

    def test_provenance_header_line(self, workdir):
        config, out = workdir
        _run("ingest", "--config", config)
        _run("train", "--config", config)
        _run("evaluate", "--config", config)
        head = open(os.path.join(out, "errors_by_config.csv")).readline()
        assert head.startswith("# raggededge=")
        assert "seed=11" in head and "config=" in head

    def test_seed_override_changes_hash(self, workdir):
        config, out = workdir
        _run("ingest", "--config", config)
        _run("train", "--config", config)
        _run("evaluate", "--config", config)
        line_a = open(os.path.join(out, "errors_by_config.csv")).readline()
        _run("evaluate", "--config", config, "--seed", "12")
        line_b = open(os.path.join(out, "errors_by_config.csv")).readline()
        assert "seed=12" in line_b
        assert line_a != line_b

    def test_unknown_train_option_rejected(self, workdir, capsys):
        config, _ = workdir
        doc = json.loads(open(config).read())
        doc["train"]["learning_rte"] = 0.1
        open(config, "w").write(json.dumps(doc))
        assert _run("ingest", "--config", config) == 0
        assert _run("train", "--config", config) == 1
        err = json.loads(capsys.readouterr().err.splitlines()[-1])
        assert "learning_rte" in err["error"]


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("RAGGEDEDGE_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("RAGGEDEDGE_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("RAGGEDEDGE_THREADS", "junk")
    assert worker_count() == 1
