import json

import numpy as np
import pytest

import multigauge.sweep as sw
from multigauge.metrics import MetricsReport
from multigauge.sweep import (
    Fixed,
    Range,
    SweepError,
    SweepPlan,
    SweepResult,
    find_optimal,
    prepare_sweep,
    run_sweep,
    write_csv,
    write_matrix,
    write_outputs,
)


@pytest.fixture(scope="module")
def setup(single_mode):
    return prepare_sweep(single_mode, single_mode.potential.default_grid(), (8,), tol=1e-6)


@pytest.fixture(scope="module")
def two_setup(two_mode):
    return prepare_sweep(two_mode, two_mode.potential.default_grid(), (6, 4), tol=1e-4)


def fake_result(values, axes):
    plan = SweepPlan(axes, metrics=("sigma",))
    pts = plan.points()
    reports = [MetricsReport(gauge=p, sigma=v) for p, v in zip(pts, values)]
    return SweepResult(plan, pts, reports, None)


def test_plan_validation():
    with pytest.raises(ValueError):
        SweepPlan((Fixed(1.0),))
    with pytest.raises(ValueError):
        Range(0, 1, 1)
    with pytest.raises(ValueError):
        Range(1, 0, 5)
    with pytest.raises(ValueError):
        SweepPlan((Range(0, 1, 101), Range(0, 1, 101)), max_points=1000)
    with pytest.raises(ValueError):
        SweepPlan((Range(0, 1, 3),), metrics=("purity",))


def test_plan_points():
    plan = SweepPlan((1.0, (0.0, 1.0, 3), Range.step(0.0, 0.5, 0.25)))
    assert plan.shape == (3, 3)
    assert plan.n_points == 9
    pts = plan.points()
    assert pts[0] == (1.0, 0.0, 0.0) and pts[1] == (1.0, 0.0, 0.25) and pts[-1] == (1.0, 1.0, 0.5)
    assert plan.fixed_axes() == ["eta_1 = 1"]
    assert SweepPlan.uniform(2).n_points == 441
    assert Range.step(0, 1, 0.05).values()[7] == 0.35
    assert not SweepPlan((Range(0, 1, 3),), metrics=("sigma",)).needs_full_state


def test_constant_surface_tie_break():
    res = fake_result(np.full(9, 0.3), (Range(0, 1, 3), Range(0, 1, 3)))
    assert find_optimal(res, "sigma") == (0.0, 0.0)
    vals = np.full(9, 0.3)
    vals[[5, 7]] = 0.1
    vals[7] += 5e-11
    res = fake_result(vals, (Range(0, 1, 3), Range(0, 1, 3)))
    assert find_optimal(res, "sigma") == (0.5, 1.0)


def test_flagged_points_skipped():
    res = fake_result([0.1, 0.5, 0.2], (Range(0, 1, 3),))
    res.reports[0] = MetricsReport(gauge=(0.0,), converged=False, error="boom")
    assert find_optimal(res, "sigma") == (1.0,)
    res.reports = [MetricsReport(gauge=p, converged=False, error="x") for p in res.points]
    with pytest.raises(SweepError):
        find_optimal(res, "sigma")
    with pytest.raises(ValueError):
        find_optimal(res, "purity")


def test_setup_verified(setup, single_mode):
    assert setup.verified and setup.report.converged
    assert setup.exact_excitations.size >= 7
    assert np.all(np.diff(setup.exact_excitations) >= -1e-12)


def test_sigma_only_sweep(setup):
    plan = SweepPlan((Range(0, 1, 5),), metrics=("sigma",))
    res = run_sweep(plan, setup)
    assert set(res.argmins) == {"sigma"}
    assert np.all(np.isnan(res.values("fidelity")))
    assert np.all(res.values("sigma") >= 0)
    assert res.argmins["sigma"] == (1.0,)


def test_parallel_matches_serial(two_setup):
    plan = SweepPlan((Range(0, 1, 3), Range(0, 1, 3)))
    a = run_sweep(plan, two_setup, jobs=1)
    b = run_sweep(plan, two_setup, jobs=2)
    for m in ("sigma", "fidelity", "s_full", "s_trunc"):
        assert np.array_equal(a.values(m), b.values(m))
    assert a.argmins == b.argmins
    for r in a.reports:
        assert -1e-12 <= r.s_full and -1e-12 <= r.s_trunc
        assert 0 <= r.fidelity <= 1 + 1e-10


def test_point_failure_is_flagged(setup, monkeypatch):
    real = sw.truncated_for_system

    def flaky(system, kind, M, gauge, grid, bare_basis=None):
        if abs(gauge[0] - 0.5) < 1e-12:
            raise RuntimeError("synthetic failure")
        return real(system, kind, M, gauge, grid, bare_basis=bare_basis)

    monkeypatch.setattr(sw, "truncated_for_system", flaky)
    res = run_sweep(SweepPlan((Range(0, 1, 3),), metrics=("sigma",)), setup)
    assert res.flags == [False, True, False]
    assert "synthetic failure" in res.reports[1].error
    assert res.argmins["sigma"] == (1.0,)


def test_outputs(tmp_path, two_setup):
    plan = SweepPlan((Range(0, 1, 3), Range(0, 1, 2)), metrics=("sigma",))
    res = run_sweep(plan, two_setup, config_hash="abc123")
    paths = write_outputs(res, tmp_path, stem="s")
    names = sorted(p.rsplit("/", 1)[-1] for p in map(str, paths))
    assert names == ["s.csv", "s.json", "s_sigma.dat"]
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "# config_hash: abc123"
    assert lines[1].startswith("# convergence: converged=")
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == "eta_1,eta_2,sigma,fidelity,S_full,S_trunc,converged,error"
    assert len([ln for ln in lines if not ln.startswith("#")]) == 7
    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["argmins"]["sigma"] == list(res.argmins["sigma"])
    assert summary["config_hash"] == "abc123"
    mat = [ln for ln in (tmp_path / "s_sigma.dat").read_text().splitlines() if not ln.startswith("#")]
    first = mat[0].split()
    assert first[0] == "2" and len(mat) == 4
    z = np.array([[float(v) for v in ln.split()[1:]] for ln in mat[1:]])
    assert np.allclose(z, res.surface("sigma"))


def test_matrix_needs_two_axes(tmp_path, setup):
    res = run_sweep(SweepPlan((Range(0, 1, 2),), metrics=("sigma",)), setup)
    with pytest.raises(SweepError):
        write_matrix(res, "sigma", tmp_path / "m.dat")
    write_csv(res, tmp_path / "x.csv")
