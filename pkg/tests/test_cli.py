import json

import numpy as np
import pandas as pd
import pytest

from simplexfit import cli
from simplexfit.cli import main
from simplexfit.tools.data import write_dataset

from .conftest import FCC_DISPERSION, FCC_MEAN, FCC_TRUTH


@pytest.fixture
def workspace(tmp_path, linear_data):
    write_dataset(linear_data, tmp_path / "linear.csv")
    return tmp_path


def _run(workspace, command, document, *extra):
    path = workspace / f"{command}.json"
    path.write_text(json.dumps(document))
    return main([command, "--config", str(path), "--out-dir", str(workspace / "out"), "--quiet", *extra])


def _linear_document(**extra):
    return {
        "data": {"path": "linear.csv", "response": "y"},
        "mean": {"formula": "b1 + b2*x2"},
        "dispersion": {"formula": "g1 + g2*z2"},
        **extra,
    }


class TestFit:
    def test_writes_reports(self, workspace, linear_fit):
        assert _run(workspace, "fit", _linear_document()) == 0
        report = json.loads((workspace / "out" / "fit.json").read_text())
        assert report["converged"] is True
        assert [p["name"] for p in report["parameters"]] == ["b1", "b2", "g1", "g2"]
        assert report["parameters"][0]["estimate"] == pytest.approx(linear_fit.beta_hat[0], rel=1e-9)
        residuals = pd.read_csv(workspace / "out" / "residuals.csv")
        assert len(residuals) == linear_fit.data.n
        assert residuals["index"].iloc[0] == 1

    def test_not_converged(self, workspace):
        document = _linear_document(fit={"max_iterations": 1, "algorithm": "fisher_scoring"})
        assert _run(workspace, "fit", document) == 4
        report = json.loads((workspace / "out" / "fit.json").read_text())
        assert report["converged"] is False
        assert not (workspace / "out" / "residuals.csv").exists()

    def test_unknown_key(self, workspace):
        assert _run(workspace, "fit", _linear_document(colour="blue")) == 2

    def test_bad_formula(self, workspace):
        document = _linear_document()
        document["mean"]["formula"] = "b1 + + x2"
        assert _run(workspace, "fit", document) == 2

    def test_missing_data(self, workspace):
        document = _linear_document()
        document["data"]["path"] = "absent.csv"
        assert _run(workspace, "fit", document) == 3

    def test_missing_document(self, workspace):
        assert main(["fit", "--config", str(workspace / "absent.json"), "--quiet"]) == 2

    @pytest.mark.parametrize(
        "failure", [np.linalg.LinAlgError("Singular matrix"), OSError("Read-only file system"), ValueError("bad")]
    )
    def test_other_failures_exit_5(self, workspace, monkeypatch, capsys, failure):
        def broken(runner):
            raise failure

        monkeypatch.setitem(cli.COMMANDS, "fit", broken)
        assert _run(workspace, "fit", _linear_document()) == 5
        assert str(failure) in capsys.readouterr().err


class TestDiagnostics:
    def test_envelope(self, workspace):
        document = _linear_document(envelope={"replicates": 19, "refit": False})
        assert _run(workspace, "envelope", document, "--seed", "5") == 0
        out = workspace / "out"
        envelope = pd.read_csv(out / "envelope.csv")
        assert list(envelope.columns) == ["order", "observed", "lower", "median", "upper"]
        report = json.loads((out / "envelope.json").read_text())
        assert report["seed"] == 5
        assert report["n_replicates"] == 19
        assert report["config"]["seed"] == 5
        assert "outside" in pd.read_csv(out / "residual_plot.csv").columns

    def test_influence(self, workspace):
        document = _linear_document(
            influence={
                "schemes": ["case_weights", "response", "covariate"],
                "covariate": {"mean": "x2", "dispersion": "z2"},
                "deletion_sets": [[1], [1, 2]],
            }
        )
        assert _run(workspace, "influence", document, "--workers", "2") == 0
        out = workspace / "out"
        for scheme in ("case_weights", "response", "covariate"):
            frame = pd.read_csv(out / f"influence_{scheme}.csv")
            assert set(frame["subset"]) == {"theta", "beta", "gamma"}
        deletions = pd.read_csv(out / "deletions.csv")
        assert deletions["cases"].astype(str).unique().tolist() == ["1", "1 2"]
        report = json.loads((out / "influence.json").read_text())
        assert report["schemes"]["case_weights"]["theta"]["c_max"] > 0.0
        assert report["deletions"][1]["cases"] == [1, 2]

    def test_deletion_out_of_range(self, workspace, linear_data):
        document = _linear_document(influence={"schemes": ["case_weights"], "deletion_sets": [[linear_data.n + 1]]})
        assert _run(workspace, "influence", document) == 3


class TestSimulate:
    def test_writes_dataset(self, workspace):
        document = {
            "simulate": {
                "mean": {"formula": FCC_MEAN},
                "dispersion": {"formula": FCC_DISPERSION},
                "parameters": FCC_TRUTH,
                "n": 60,
                "covariates": {
                    "steam": {"distribution": "uniform", "low": 30.0, "high": 80.0},
                    "temp": {"distribution": "choice", "values": [0.0, 1.0]},
                    "vanadium": {"distribution": "uniform", "low": 0.0, "high": 1.0},
                },
                "response": "crystallinity",
                "output": "fcc.csv",
            }
        }
        assert _run(workspace, "simulate", document, "--seed", "11") == 0
        out = workspace / "out"
        frame = pd.read_csv(out / "fcc.csv")
        assert len(frame) == 60
        assert json.loads((out / "simulate.json").read_text())["seed"] == 11

    def test_simulate_needs_section(self, workspace):
        assert _run(workspace, "simulate", {}) == 2


def test_mc_study(workspace):
    document = {
        "mc_study": {
            "scenarios": [
                {"name": "tiny", "beta": [-1.7, -1.8, 1.2, -1.3], "gamma": [-1.3, -1.6], "replications": 20}
            ]
        }
    }
    assert _run(workspace, "mc-study", document) == 0
    out = workspace / "out"
    frame = pd.read_csv(out / "mc_tiny.csv")
    assert list(frame.columns) == ["rank", "expected_normal", "mean_order_statistic"]
    report = json.loads((out / "mc_study.json").read_text())
    assert report["scenarios"][0]["name"] == "tiny"
