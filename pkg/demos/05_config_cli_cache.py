"""Config files, the result cache and the command line.

Everything the CLI does is available from Python. This writes a config,
runs a cached sweep twice (the second run is a cache hit) and writes the
CSV, JSON and gnuplot outputs. The equivalent shell session is

    multigauge sweep --config sweep.json --jobs 2
    multigauge cache list
"""
import json
import logging
import tempfile
from pathlib import Path

from multigauge.cache import Cache
from multigauge.config import RunConfig
from multigauge.runs import cached_sweep
from multigauge.sweep import write_outputs

logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")

work = Path(tempfile.mkdtemp())
raw = {
    "potential": {"kind": "double_well", "gamma": 64},
    "modes": {"omegas": [1.0, 0.5], "g": 0.6},
    "gauge": {"axes": [{"lo": 0, "hi": 1, "n_steps": 6}, {"lo": 0, "hi": 1, "n_steps": 6}],
              "metrics": ["sigma"]},
    "output": str(work / "out"),
}
(work / "sweep.json").write_text(json.dumps(raw, indent=2))

cfg = RunConfig.load(work / "sweep.json")
store = Cache(work / "cache")
res = cached_sweep(cfg, store, jobs=2)
res = cached_sweep(cfg, store, jobs=2)  # served from the cache
print("argmin sigma:", res.argmins["sigma"])
for path in write_outputs(res, cfg.output, stem="sweep"):
    print("wrote", path)
print("cache entries:", [e["kind"] for e in store.entries()])
