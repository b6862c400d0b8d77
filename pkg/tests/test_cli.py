import json
import logging

import numpy as np
import pytest

from multigauge import cache as cache_mod
from multigauge.cache import Cache
from multigauge.cli import main
from multigauge.config import ConfigError, RunConfig
from multigauge.reproduce import reproduce
from multigauge.runs import cached_exact, cached_sweep

WELL = {"kind": "double_well", "gamma": 64}


def write_cfg(tmp_path, **raw):
    raw.setdefault("potential", WELL)
    raw.setdefault("modes", {"omegas": [1.0], "g": 0.4})
    raw.setdefault("output", str(tmp_path / "out"))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def atom_table(path):
    lines = open(path).read().split("\n\n")[0].splitlines()
    return [ln for ln in lines if not ln.startswith("#")]


def test_schema_errors_name_fields():
    with pytest.raises(ConfigError, match="modes.g"):
        RunConfig({"potential": WELL, "modes": {"omegas": [1.0], "g": -1}})
    with pytest.raises(ConfigError, match="numerics.grid.n_points"):
        RunConfig({"potential": WELL, "modes": {"omegas": [1.0], "g": 1},
                   "numerics": {"grid": {"n_points": 4}}})
    with pytest.raises(ConfigError, match="modes.omegas.0"):
        RunConfig({"potential": WELL, "modes": {"omegas": [0.0], "g": 1}})
    with pytest.raises(ConfigError, match="gauge.eta"):
        RunConfig({"potential": WELL, "modes": {"omegas": [1.0, 2.0], "g": 1}, "gauge": {"eta": [1]}})
    with pytest.raises(ConfigError, match="gamma"):
        RunConfig({"potential": {"kind": "double_well"}, "modes": {"omegas": [1.0], "g": 1}})
    with pytest.raises(ConfigError, match="<root>"):
        RunConfig({"potential": WELL, "modes": {"omegas": [1.0], "g": 1}, "colour": "red"})


def test_hash_depends_on_physics_only():
    a = RunConfig({"potential": WELL, "modes": {"omegas": [1.0], "g": 0.4}, "output": "a"})
    b = RunConfig({"potential": WELL, "modes": {"omegas": [1.0], "g": 0.4}, "output": "b"})
    c = RunConfig({"potential": WELL, "modes": {"omegas": [1.0], "g": 0.5}})
    assert a.hash("exact") == b.hash("exact")
    assert a.hash("exact") != c.hash("exact")
    assert a.hash("exact", [0.0]) != a.hash("exact", [1.0])
    assert len(a.hash()) == 64


def test_cli_atom(tmp_path, capsys):
    assert main(["atom", "--config", write_cfg(tmp_path)]) == 0
    out = capsys.readouterr().out
    line = [ln for ln in out.splitlines() if ln.startswith("anharmonicity")][0]
    ratio = float(line.split("=")[-1])
    assert ratio == pytest.approx(26.85, abs=0.01)
    assert (tmp_path / "out" / "atom.csv").exists()


def test_cli_atom_harmonic(tmp_path, capsys):
    cfg = write_cfg(tmp_path, potential={"kind": "harmonic", "omega0": 1.0},
                    numerics={"grid": {"half_width": 8.0}})
    assert main(["atom", "--config", cfg]) == 0
    line = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("anharmonicity")][0]
    assert float(line.split("=")[-1]) == pytest.approx(2.0, abs=1e-8)


def test_cli_atom_translation(tmp_path):
    main(["atom", "--config", write_cfg(tmp_path), "--out", str(tmp_path / "a")])
    shifted = dict(WELL, shift=0.5)
    main(["atom", "--config", write_cfg(tmp_path, potential=shifted), "--out", str(tmp_path / "b")])
    ta = atom_table(tmp_path / "a" / "atom.csv")
    tb = atom_table(tmp_path / "b" / "atom.csv")
    ea = np.array([[float(v) for v in ln.split(",")[1:]] for ln in ta[1:]])
    eb = np.array([[float(v) for v in ln.split(",")[1:]] for ln in tb[1:]])
    assert np.allclose(ea, eb, atol=1e-8)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, modes={"omegas": [1.0], "g": "strong"})
    assert main(["atom", "--config", cfg]) == 2
    assert "modes.g" in capsys.readouterr().err
    assert main(["atom"]) == 2


def test_exact_gauges_agree_and_cache(tmp_path, caplog):
    cfg = RunConfig.load(write_cfg(tmp_path))
    store = Cache(tmp_path / "c")
    r0, s0, _ = cached_exact(cfg, (0.0,), store)
    r1, s1, k1 = cached_exact(cfg, (1.0,), store)
    assert np.abs(s0.energies - s1.energies).max() / s1.delta < 3 * cfg.tol
    with caplog.at_level(logging.INFO, logger="multigauge"):
        r2, s2, k2 = cached_exact(cfg, (1.0,), store)
    assert "cache hit" in caplog.text and k1 == k2
    # a cached result equals a fresh recomputation bitwise
    _, fresh, _ = cached_exact(cfg, (1.0,), Cache(enabled=False))
    assert np.array_equal(s2.energies, fresh.energies)
    assert np.array_equal(s2.ground_state, fresh.ground_state)
    assert r2.to_dict() == r1.to_dict()


def test_cache_version_mismatch(tmp_path, monkeypatch):
    store = Cache(tmp_path / "c")
    store.put("k" * 64, {"a": np.arange(3.0)}, "test")
    assert store.get("k" * 64) is not None
    monkeypatch.setattr(cache_mod, "__version__", "0.0.0-other")
    assert store.get("k" * 64) is None
    assert Cache(tmp_path / "c", enabled=False).get("k" * 64) is None


def test_cache_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("MULTIGAUGE_CACHE_DIR", str(tmp_path / "envcache"))
    assert Cache().root == tmp_path / "envcache"


def test_decoupled_exact_is_analytic(tmp_path):
    cfg = RunConfig.load(write_cfg(tmp_path, modes={"omegas": [2.0], "g": 0.0}))
    _, spec, _ = cached_exact(cfg, (0.5,), None, k=4)
    # levels eps_0, eps_1 = eps_0 + Delta, eps_0 + 2 Delta, eps_1 + 2 Delta (omega = 2 Delta)
    assert np.allclose(spec.excitations, [1.0, 2.0, 3.0], atol=1e-9)


def test_cli_exact_sweep_and_cache(tmp_path, capsys):
    cfg = write_cfg(tmp_path, gauge={"axes": [{"lo": 0, "hi": 1, "n_steps": 3}], "metrics": ["sigma"]})
    assert main(["exact", "--config", cfg, "--eta", "0"]) == 0
    assert "E_1 - E_0" in capsys.readouterr().out
    exact_csv = (tmp_path / "out" / "exact.csv").read_text().splitlines()
    assert exact_csv[0].startswith("# config_hash: ") and exact_csv[1].startswith("# convergence: ")
    assert main(["sweep", "--config", cfg]) == 0
    assert "argmin sigma: [1.0]" in capsys.readouterr().out
    assert main(["cache", "list"]) == 0
    listing = capsys.readouterr().out
    assert "exact" in listing and "sweep" in listing
    assert main(["cache", "clear"]) == 0
    assert "removed" in capsys.readouterr().out
    assert Cache().entries() == []


def test_cached_sweep_roundtrip(tmp_path):
    cfg = RunConfig.load(write_cfg(tmp_path, gauge={"axes": [{"lo": 0, "hi": 1, "n_steps": 3}]}))
    store = Cache(tmp_path / "c")
    a = cached_sweep(cfg, store)
    b = cached_sweep(cfg, store)
    for m in ("sigma", "fidelity", "s_full", "s_trunc"):
        assert np.array_equal(a.values(m), b.values(m))
    assert a.argmins == b.argmins and a.config_hash == b.config_hash


def test_reproduce_unknown_figure(tmp_path):
    with pytest.raises(ValueError):
        reproduce("fig9", tmp_path)
    with pytest.raises(SystemExit):
        main(["reproduce", "fig9"])
