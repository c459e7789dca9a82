"""Trajectory records: snapshots + observable series + reproducibility info.

On-disk layout (one directory per record):
    config.json         canonical key order, includes kind and code version
    snapshots/NNNN.bin  particles: raw little-endian float64, 2n per snap;
                        densities: GridField binary ("T2F1")
    observables.csv     time series; first line embeds the config hash
"""

import csv
import hashlib
import json
import os

import numpy as np

from . import __version__
from .torus import GridField


def canonical_json(obj):
    """Byte-stable canonical serialization (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def config_hash(config):
    return hashlib.sha256(canonical_json(config)).hexdigest()


class TrajectoryRecord:
    """Time-stamped snapshots with observable series.

    kind is "particles" (snapshots are (n, 2) position arrays) or
    "density" (snapshots are GridFields).
    """

    def __init__(self, kind, config, times=None, snapshots=None,
                 observables=None, events=None):
        if kind not in ("particles", "density"):
            raise ValueError(f"unknown record kind {kind!r}")
        self.kind = kind
        self.config = dict(config)
        self.times = [] if times is None else list(times)
        self.snapshots = [] if snapshots is None else list(snapshots)
        self.observables = {} if observables is None else dict(observables)
        self.events = [] if events is None else list(events)

    @property
    def config_hash(self):
        return config_hash(self.config)

    def append(self, t, snapshot, obs):
        if self.times and t <= self.times[-1]:
            raise ValueError("snapshot times must be strictly increasing")
        self.times.append(float(t))
        self.snapshots.append(snapshot)
        for key, val in obs.items():
            self.observables.setdefault(key, []).append(float(val))

    def column(self, name):
        return np.asarray(self.observables[name], float)

    @property
    def times_array(self):
        return np.asarray(self.times, float)

    def validate(self):
        t = self.times_array
        if len(t) != len(self.snapshots):
            raise ValueError("times/snapshots length mismatch")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("snapshot times must be strictly increasing")

    # -- disk ------------------------------------------------------------

    def save(self, outdir):
        self.validate()
        os.makedirs(os.path.join(outdir, "snapshots"), exist_ok=True)
        cfg = dict(self.config)
        cfg["kind"] = self.kind
        cfg["code_version"] = __version__
        with open(os.path.join(outdir, "config.json"), "wb") as fh:
            fh.write(canonical_json(cfg))
        for i, snap in enumerate(self.snapshots):
            path = os.path.join(outdir, "snapshots", f"{i:04d}.bin")
            if self.kind == "particles":
                np.asarray(snap, float).astype("<f8").tofile(path)
            else:
                snap.save(path)
        cols = sorted(self.observables)
        with open(os.path.join(outdir, "observables.csv"), "w", newline="") as fh:
            fh.write(f"# config_hash={config_hash(cfg)} version={__version__}\n")
            writer = csv.writer(fh)
            writer.writerow(["t"] + cols)
            for i, t in enumerate(self.times):
                writer.writerow([repr(t)] + [repr(self.observables[c][i]) for c in cols])
        if self.events:
            with open(os.path.join(outdir, "events.json"), "wb") as fh:
                fh.write(canonical_json(self.events))

    @classmethod
    def load(cls, outdir):
        with open(os.path.join(outdir, "config.json")) as fh:
            cfg = json.load(fh)
        kind = cfg.pop("kind")
        cfg.pop("code_version", None)
        times = []
        observables = {}
        with open(os.path.join(outdir, "observables.csv")) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader)
        cols = header[1:]
        for row in reader:
            times.append(float(row[0]))
            for c, v in zip(cols, row[1:]):
                observables.setdefault(c, []).append(float(v))
        snapdir = os.path.join(outdir, "snapshots")
        snapshots = []
        for name in sorted(os.listdir(snapdir)):
            path = os.path.join(snapdir, name)
            if kind == "particles":
                flat = np.fromfile(path, dtype="<f8")
                snapshots.append(flat.reshape(-1, 2))
            else:
                snapshots.append(GridField.load(path))
        events = []
        evpath = os.path.join(outdir, "events.json")
        if os.path.exists(evpath):
            with open(evpath) as fh:
                events = json.load(fh)
        rec = cls(kind, cfg, times, snapshots, observables, events)
        rec.validate()
        return rec
