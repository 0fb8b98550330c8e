import json

import numpy as np
import pytest
from click.testing import CliRunner

from eidlab.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _gradient_ff_system(tmp_path):
    return _write(tmp_path, "sys.json", {
        "schema": 1, "family": "gradient_ff",
        "params": {"mu": 2.0, "g": 1.0, "j": 0.9, "n": 1},
    })


def _report(result):
    return json.loads(result.output)


# ---------------------------------------------------------------------------
# certification commands


def test_certify_pass_and_report(runner, tmp_path):
    sys_path = _gradient_ff_system(tmp_path)
    # interior feedforward/output-strict pair (nu, rho) = (0.2, 0.3)
    cfg = _write(tmp_path, "cfg.json", {
        "supply": {"Q": [[-0.3]], "S": [[0.5]], "R": [[-0.2]]},
        "pairs": 100,
    })
    result = runner.invoke(main, ["certify", "--system", sys_path,
                                  "--config", cfg, "--seed", "1",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rep = _report(result)
    assert rep["verdict"] == "pass"
    assert rep["command"] == "certify"
    assert (tmp_path / "certify_report.json").exists()
    on_disk = json.loads((tmp_path / "certify_report.json").read_text())
    assert on_disk["config_hash"] == rep["config_hash"]


def test_certify_fail_exits_2(runner, tmp_path):
    sys_path = _gradient_ff_system(tmp_path)
    # rho = 1 lies outside the feasible output-strictness cap (about 0.71)
    # while keeping the certificate setup well posed
    cfg = _write(tmp_path, "cfg.json", {
        "supply": {"type": "output_strict", "a": 1.0}, "pairs": 100,
    })
    result = runner.invoke(main, ["certify", "--system", sys_path,
                                  "--config", cfg, "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert _report(result)["verdict"] == "fail"


def test_certify_malformed_config_exits_1(runner, tmp_path):
    sys_path = _gradient_ff_system(tmp_path)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = runner.invoke(main, ["certify", "--system", sys_path,
                                  "--config", str(bad), "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_certify_dt_uses_catalog_storage(runner, tmp_path):
    sys_path = _write(tmp_path, "dtsys.json", {
        "schema": 1, "family": "dt_integrator", "params": {"alpha": 0.5},
    })
    cfg = _write(tmp_path, "cfg.json", {
        "supply": {"Q": [[0.0]], "S": [[0.5]], "R": [[0.25]]},
        "pairs": 60,
    })
    result = runner.invoke(main, ["certify-dt", "--system", sys_path,
                                  "--config", cfg, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert _report(result)["verdict"] == "pass"


def test_kyp_pass_and_fail(runner, tmp_path):
    base = {"F": [[-1.0]], "G": [[1.0]], "H": [[1.0]], "P": [[0.5]]}
    cfg_ok = _write(tmp_path, "ok.json", {**base,
                    "supply": {"type": "passivity", "m": 1}})
    result = runner.invoke(main, ["kyp", "--config", cfg_ok,
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    cfg_bad = _write(tmp_path, "bad.json", {**base, "P": [[1.0]],
                     "supply": {"type": "l2_gain", "gamma": 0.9}})
    result = runner.invoke(main, ["kyp", "--config", cfg_bad,
                                  "--out", str(tmp_path)])
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# sweeps


def test_region_sweep_csv_and_metrics(runner, tmp_path):
    cfg = _write(tmp_path, "cfg.json", {"mu": 2.0, "g": 1.0, "j": 0.9,
                                        "points": 11})
    result = runner.invoke(main, ["region", "--config", cfg,
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rep = _report(result)
    assert rep["metrics"]["nu_intercept"] == pytest.approx(0.9)
    assert rep["metrics"]["rho_intercept_eq16"] == pytest.approx(1.0 / 0.9)
    assert rep["metrics"]["rho_intercept_eq18"] == pytest.approx(2.0 / 2.8)
    lines = (tmp_path / "region.csv").read_text().splitlines()
    assert lines[0] == "nu,rho_max_eq16,rho_max_eq18,member"
    assert len(lines) == 12


def test_gain_sweep_includes_asymptote_row(runner, tmp_path):
    cfg = _write(tmp_path, "cfg.json", {"formula": "dt_gradient", "mu": 1.0,
                                        "grid": [0.5, 1.0, 1.9]})
    result = runner.invoke(main, ["gain", "--config", cfg,
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "gain_sweep.csv").read_text().splitlines()
    assert lines[0] == "alpha,gamma"
    first_alpha, first_gamma = map(float, lines[1].split(","))
    assert first_alpha == 1e-6
    assert first_gamma == pytest.approx(1.0, abs=1e-3)
    assert len(lines) == 5


# ---------------------------------------------------------------------------
# interconnection commands


def test_compose_fixed_kappa_and_search(runner, tmp_path):
    cfg = _write(tmp_path, "fixed.json", {
        "w1": {"type": "output_strict", "a": 1.0},
        "w2": {"type": "output_strict", "a": 1.0},
        "kappa": 1.0,
    })
    result = runner.invoke(main, ["compose", "--config", cfg,
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    cfg = _write(tmp_path, "search.json", {
        "w1": {"type": "passivity"}, "w2": {"type": "passivity"},
    })
    result = runner.invoke(main, ["compose", "--config", cfg,
                                  "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "kappa" in _report(result)["metrics"]


def test_circle_certifies_smib_sector(runner, tmp_path):
    sys_path = _write(tmp_path, "smib.json", {
        "schema": 1, "family": "smib",
        "params": {"M": 1.0, "D": 1.0, "b": 1.0, "V": 1.0, "P_m": 0.2},
    })
    cfg = _write(tmp_path, "cfg.json", {
        "sector": {"alpha": 0.0, "beta": 1.0},
        "region": {"lo": [-1.2, -0.5], "hi": [1.2, 0.5]},
        "pairs": 200,
    })
    result = runner.invoke(main, ["circle", "--system", sys_path,
                                  "--config", cfg, "--seed", "3",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert _report(result)["metrics"]["certified_eps"] >= 0.3


# ---------------------------------------------------------------------------
# trajectory commands


def test_simulate_writes_trajectory(runner, tmp_path):
    sys_path = _write(tmp_path, "sys.json", {
        "schema": 1, "family": "second_order", "params": {"mu": 1.0},
    })
    cfg = _write(tmp_path, "cfg.json", {"x0": [0.1, 0.0], "T": 0.1, "dt": 1e-3})
    result = runner.invoke(main, ["simulate", "--system", sys_path,
                                  "--config", cfg, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,x_1")
    assert len(lines) == 102


def test_audit_pass(runner, tmp_path):
    sys_path = _write(tmp_path, "sys.json", {
        "schema": 1, "family": "second_order", "params": {"mu": 1.0},
    })
    cfg = _write(tmp_path, "cfg.json", {
        "xbar": [0.5, 0.0], "x0": [0.6, 0.1], "T": 2.0, "dt": 1e-3,
        "supply": {"type": "passivity", "m": 1},
    })
    result = runner.invoke(main, ["audit", "--system", sys_path,
                                  "--config", cfg, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "audit.csv").exists()
    rep = _report(result)
    assert rep["metrics"]["max_violation"] <= rep["metrics"]["tol"]


def test_stability_fail_for_expansive_step(runner, tmp_path):
    sys_path = _write(tmp_path, "sys.json", {
        "schema": 1, "family": "dt_gradient", "params": {"mu": 1.0, "alpha": 3.0},
    })
    cfg = _write(tmp_path, "cfg.json", {"xbar": [0.0], "radius": 0.2,
                                        "probes": 4, "steps": 200})
    result = runner.invoke(main, ["stability", "--system", sys_path,
                                  "--config", cfg, "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert _report(result)["metrics"]["converged_fraction"] == 0.0


def test_io_relation_monotone(runner, tmp_path):
    sys_path = _gradient_ff_system(tmp_path)
    cfg = _write(tmp_path, "cfg.json", {"count": 20})
    result = runner.invoke(main, ["io-relation", "--system", sys_path,
                                  "--config", cfg, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rep = _report(result)
    assert rep["metrics"]["min_pair_value"] >= -1e-9
    lines = (tmp_path / "io_relation.csv").read_text().splitlines()
    assert lines[0] == "x_1,u_1,y_1"


# ---------------------------------------------------------------------------
# reproducibility plumbing


def test_seed_env_fallback(runner, tmp_path, monkeypatch):
    sys_path = _gradient_ff_system(tmp_path)
    monkeypatch.setenv("EIDLAB_SEED", "77")
    result = runner.invoke(main, ["certify", "--system", sys_path,
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert _report(result)["seed"] == 77


def test_config_hash_deterministic(runner, tmp_path):
    cfg = _write(tmp_path, "cfg.json", {"mu": 2.0, "g": 1.0, "j": 0.9})
    hashes = set()
    for _ in range(2):
        result = runner.invoke(main, ["region", "--config", cfg,
                                      "--out", str(tmp_path)])
        hashes.add(_report(result)["config_hash"])
    assert len(hashes) == 1


def test_missing_system_is_an_error(runner, tmp_path):
    result = runner.invoke(main, ["certify", "--out", str(tmp_path)])
    assert result.exit_code != 0
