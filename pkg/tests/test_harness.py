import json

import numpy as np
import pytest

from nsmlimit import __version__
from nsmlimit.config import ConfigError, RunSpec, parse_config
from nsmlimit.harness import run_single, run_sweep
from nsmlimit.snapshot import read_snapshot

SMALL = RunSpec(n=16, T=0.05, dt=0.01, k0=(1,), energy=0.01)


def test_provenance_and_artifacts(tmp_path):
    spec = SMALL.with_(save_every=2)
    res = run_single(spec, tmp_path)
    assert res.status == "pass" and res.exit_code == 0
    echo = (tmp_path / "config.resolved.yaml").read_text()
    assert echo.startswith(f"# nsmlimit {__version__}")
    assert parse_config(echo) == spec
    assert (tmp_path / "VERSION").read_text().strip() == __version__
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "pass"
    for name in manifest["files"]:
        assert (tmp_path / name).exists()
    snaps = sorted((tmp_path / "snapshots").iterdir())
    header, state = read_snapshot(snaps[-1])
    assert header["time"] == pytest.approx(spec.T)
    np.testing.assert_array_equal(state.u.coeffs, res.trajectory.final.u.coeffs)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "pass" and "empirical" in summary["label"]


def test_byte_identical_csv(tmp_path):
    run_single(SMALL, tmp_path / "a")
    run_single(SMALL, tmp_path / "b")
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()
    run_single(SMALL.with_(seed=1), tmp_path / "c")
    assert (tmp_path / "a" / "report.csv").read_bytes() != (tmp_path / "c" / "report.csv").read_bytes()


def test_zero_data_passes(tmp_path):
    res = run_single(SMALL.with_(recipe="zero"), tmp_path)
    assert res.passed
    assert np.all(res.report["E_cal"] == 0) and np.all(res.report["E_l2"] == 0)


@pytest.mark.parametrize("system", ["nsmo", "species"])
def test_other_systems_run(tmp_path, system):
    res = run_single(SMALL.with_(system=system, j_init="ohm"), tmp_path)
    assert res.status == "pass"
    header, _ = read_snapshot(sorted((tmp_path / "snapshots").iterdir())[0])
    assert header["system"] == system


def test_large_data_is_flagged(tmp_path):
    res = run_single(RunSpec(n=16, T=0.2, amplitude=10.0, energy=0.01), tmp_path)
    assert res.exit_code != 0
    assert res.status in ("fail", "blow-up", "non-finite")
    if res.status == "fail":
        assert not res.checks["small_data_regime"]["passed"]
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == res.status


def test_sweep_validation():
    with pytest.raises(ConfigError, match="at least 3"):
        run_sweep(SMALL, ladder=[0.1, 0.05], write=False)
    with pytest.raises(ConfigError, match="non-increasing"):
        run_sweep(SMALL, ladder=[0.1, 0.2, 0.05], write=False)
    with pytest.raises(ConfigError, match="bulk"):
        run_sweep(SMALL.with_(system="nsmo"), ladder=[0.1, 0.05, 0.02], write=False)


def test_repeated_eps_gives_zero_matrix():
    rep = run_sweep(SMALL, ladder=[0.05, 0.05, 0.05], write=False, with_nsmo=False)
    assert rep.status == "ok"
    assert np.all(rep.sup_E == 0) and np.all(rep.int_D == 0)


def test_sweep_matrix_structure(tmp_path):
    rep = run_sweep(SMALL.with_(eps_ladder=(0.2, 0.1, 0.05)), tmp_path)
    assert rep.status == "ok"
    for M in (rep.sup_E, rep.int_D):
        np.testing.assert_allclose(M, M.T, rtol=1e-12, atol=0)
        assert np.all(np.diag(M) == 0)
        assert np.all(M[~np.eye(3, dtype=bool)] > 0)
    assert rep.verdict["matrix_symmetric"] and rep.verdict["diagonal_zero"]
    assert len(rep.nsmo_gap_sup_E) == 3
    saved = json.loads((tmp_path / "sweep.json").read_text())
    assert saved["consecutive_sup_E"] == rep.consecutive_sup_E
    header = (tmp_path / "pair_energy.csv").read_text().splitlines()[0].split(",")
    assert header == ["t", "E_0_1", "E_0_2", "E_0_3", "E_1_2", "E_1_3", "E_2_3"]


@pytest.mark.parametrize("suite", ["spectral", "besov", "systems", "integrator"])
def test_property_suites_pass_and_repeat(suite):
    from nsmlimit.suites import run_property_suite

    a = run_property_suite(suite, 3)
    assert a["passed"], [c for c in a["checks"] if not c["passed"]]
    assert json.dumps(a, sort_keys=True) == json.dumps(run_property_suite(suite, 3), sort_keys=True)
