"""Content-addressed result cache.

Each entry is a directory named by a sha256 key holding ``meta.json`` (tool
version, kind, creation time, free-form metadata) and ``data.npz``. Entries
written by another tool version are ignored.
"""
from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger(__name__)

CACHE_ENV = "MULTIGAUGE_CACHE_DIR"


def default_cache_dir():
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "multigauge"


class Cache:
    def __init__(self, root=None, enabled=True):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.enabled = enabled

    def _dir(self, key):
        return self.root / key

    def get(self, key):
        """Return (arrays, meta) or None on a miss or version mismatch."""
        if not self.enabled:
            return None
        d = self._dir(key)
        try:
            meta = json.loads((d / "meta.json").read_text())
        except (OSError, ValueError):
            return None
        if meta.get("version") != __version__:
            log.info("cache entry %s from version %s ignored", key[:12], meta.get("version"))
            return None
        with np.load(d / "data.npz", allow_pickle=False) as z:
            arrays = {k: z[k] for k in z.files}
        log.info("cache hit %s (%s)", key[:12], meta.get("kind"))
        return arrays, meta

    def put(self, key, arrays, kind, **meta):
        if not self.enabled:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(dir=self.root, prefix=".tmp-"))
        try:
            np.savez(tmp / "data.npz", **arrays)
            info = {"version": __version__, "kind": kind, "created": time.time(), **meta}
            (tmp / "meta.json").write_text(json.dumps(info, indent=2, default=float))
            dest = self._dir(key)
            if dest.exists():
                shutil.rmtree(dest)
            tmp.rename(dest)
        finally:
            if tmp.exists():
                shutil.rmtree(tmp)
        log.info("cached %s (%s)", key[:12], kind)

    def entries(self):
        out = []
        if not self.root.is_dir():
            return out
        for d in sorted(self.root.iterdir()):
            if d.name.startswith(".") or not d.is_dir():
                continue
            try:
                meta = json.loads((d / "meta.json").read_text())
            except (OSError, ValueError):
                meta = {}
            size = sum(f.stat().st_size for f in d.iterdir() if f.is_file())
            out.append({"key": d.name, "kind": meta.get("kind", "?"),
                        "version": meta.get("version", "?"), "bytes": size})
        return out

    def clear(self):
        n = 0
        for e in self.entries():
            shutil.rmtree(self._dir(e["key"]))
            n += 1
        return n
