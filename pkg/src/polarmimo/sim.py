"""Monte-Carlo FER sweeps over SNR with deterministic per-trial seeding."""

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import modulate, sample_channel, snr_db_to_n0, transmit
from .construction import (
    GlobalCodeSpec,
    ReliabilityProfile,
    construct_crc_code,
    construct_subcode,
    estimate_reliability,
)
from .crc import Crc
from .joint import MetricConfig, joint_decode

__all__ = [
    "SimConfig",
    "SimPoint",
    "SimResult",
    "CSV_COLUMNS",
    "wilson_interval",
    "trial_rng",
    "build_code",
    "simulate_frame",
    "run_sweep",
    "paper_preset",
    "PRESETS",
]

CSV_COLUMNS = (
    "snr_db", "frames", "frame_errors", "bit_errors",
    "fer", "fer_ci95_lo", "fer_ci95_hi", "seconds",
)

_RELIABILITY_STREAM = 1
_CONSTRAINT_STREAM = 2
_FRAME_STREAM = 0


@dataclass
class SimConfig:
    """One experiment: link parameters, receiver, construction and stopping rule.

    ``dimension_distribution`` lists per-antenna dimensions for antennas
    ``1 .. n_tx``; when ``None`` the construction picks them from the
    reliability ranking.  ``reliability_snr_db`` pins the construction SNR;
    by default the code is rebuilt at every operating point.
    """

    n_tx: int = 4
    n_rx: int = 4
    m: int = 2
    n_slots: int = 32
    k: int = 128
    dimension_distribution: tuple = None
    detector: str = "vblast"
    metric: str = "exact"
    list_size: int = 32
    construction: str = "dfs"
    n_dfs_a: int = 8
    n_dfs_b: int = 24
    crc_poly: int = 0x1021
    crc_len: int = 16
    snr_points: tuple = (6.0,)
    max_frames: int = 1_000_000
    min_frame_errors: int = 100
    master_seed: int = 0
    reliability_trials: int = 10_000
    reliability_snr_db: float = None

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "m", "n_slots", "k", "n_dfs_a", "n_dfs_b",
                     "crc_poly", "crc_len", "max_frames", "min_frame_errors",
                     "master_seed", "reliability_trials", "list_size"):
            setattr(self, name, int(getattr(self, name)))
        self.snr_points = tuple(float(s) for s in np.atleast_1d(self.snr_points))
        if self.dimension_distribution is not None:
            self.dimension_distribution = tuple(int(v) for v in self.dimension_distribution)
        if self.reliability_snr_db is not None:
            self.reliability_snr_db = float(self.reliability_snr_db)
        if self.n_tx < 1 or self.n_rx < self.n_tx:
            raise ValueError("need n_rx >= n_tx >= 1")
        if self.m not in (1, 2):
            raise ValueError("m must be 1 (BPSK) or 2 (QPSK)")
        length = self.m * self.n_slots
        if length < 2 or length & (length - 1):
            raise ValueError("m * n_slots must be a power of two >= 2")
        if not self.snr_points:
            raise ValueError("snr_points must be nonempty")
        if self.max_frames < 1 or self.min_frame_errors < 1:
            raise ValueError("max_frames and min_frame_errors must be >= 1")
        if self.reliability_trials < 1:
            raise ValueError("reliability_trials must be >= 1")
        if self.construction not in ("dfs", "crc"):
            raise ValueError(f"unknown construction {self.construction!r}")
        MetricConfig(self.detector, self.variant, self.list_size)
        if not 0 < self.k <= self.n_tx * length:
            raise ValueError("k out of range")
        if self.construction == "crc" and self.k <= self.crc_len:
            raise ValueError("k must exceed crc_len")
        if self.dimension_distribution is not None:
            d = self.dimension_distribution
            if len(d) != self.n_tx or sum(d) != self.k or min(d) < 0 or max(d) > length:
                raise ValueError("dimension_distribution must give n_tx values summing to k")

    @property
    def variant(self):
        return {"approximate": "approx"}.get(self.metric, self.metric)

    @property
    def length(self):
        return self.m * self.n_slots

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                v = "none"
            elif isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        """Parse flat ``key=value`` lines; ``#`` starts a comment."""
        names = {f.name for f in dataclasses.fields(cls)}
        kw = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            kw[key] = _parse_value(key, value)
        return cls(**kw)

    @classmethod
    def from_file(cls, path):
        return cls.from_text(Path(path).read_text())

    def code_key(self, snr_db):
        """Hash of everything that determines the code built at ``snr_db``."""
        keys = ("n_tx", "n_rx", "m", "n_slots", "k", "dimension_distribution",
                "detector", "construction", "n_dfs_a", "n_dfs_b", "crc_len",
                "master_seed", "reliability_trials")
        blob = {k: getattr(self, k) for k in keys}
        blob["snr_db"] = repr(float(snr_db))
        text = json.dumps(blob, sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _parse_value(key, value):
    if value.lower() == "none":
        return None
    if key in ("snr_points", "dimension_distribution"):
        return tuple(float(v) if key == "snr_points" else int(v)
                     for v in value.replace(" ", ",").split(",") if v)
    if key in ("detector", "metric", "construction"):
        return value
    if key in ("reliability_snr_db",):
        return float(value)
    return int(value, 0)


@dataclass
class SimPoint:
    snr_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    fer: float
    fer_ci95_lo: float
    fer_ci95_hi: float
    seconds: float

    def row(self):
        return [repr(float(self.snr_db)), str(self.frames), str(self.frame_errors),
                str(self.bit_errors), repr(float(self.fer)), repr(float(self.fer_ci95_lo)),
                repr(float(self.fer_ci95_hi)), repr(float(self.seconds))]


@dataclass
class SimResult:
    points: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in self.points:
            w.writerow(p.row())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source):
        """Read a CSV written by :meth:`to_csv` (path or text)."""
        text = source
        if not (isinstance(source, str) and "\n" in source):
            text = Path(source).read_text()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise ValueError("unexpected CSV header")
        conv = (float, int, int, int, float, float, float, float)
        return cls([SimPoint(*(c(v) for c, v in zip(conv, r))) for r in rows[1:]])


def wilson_interval(errors, trials, z=1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    z2 = z * z
    den = 1.0 + z2 / trials
    mid = (p + z2 / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / den
    lo = 0.0 if errors == 0 else max(0.0, mid - half)
    hi = 1.0 if errors == trials else min(1.0, mid + half)
    return lo, hi


def trial_rng(master_seed, snr_index, trial, stream=_FRAME_STREAM):
    """Counter-based generator for one trial; independent of scheduling."""
    ss = np.random.SeedSequence([int(master_seed), int(stream), int(snr_index), int(trial)])
    return np.random.Generator(np.random.Philox(ss))


def _profile_for(cfg, snr_db, snr_index, cache_dir):
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"profile-{cfg.code_key(snr_db)}.npz"
        if path.exists():
            with np.load(path) as z:
                return ReliabilityProfile(z["error_prob"], int(z["trials"]), cfg.n_tx)
    build_snr = snr_db if cfg.reliability_snr_db is None else cfg.reliability_snr_db
    rng = trial_rng(cfg.master_seed, snr_index, 0, _RELIABILITY_STREAM)
    prof = estimate_reliability(cfg, cfg.reliability_trials, rng, snr_db=build_snr)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp.npz")
        np.savez(tmp, error_prob=prof.error_prob, trials=prof.trials)
        os.replace(tmp, path)
    return prof


def build_code(cfg, snr_db, snr_index=0, cache_dir=None):
    """Construct the code used at one SNR point (cached on disk if asked)."""
    if cfg.reliability_snr_db is not None:
        snr_index = 0
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"code-{cfg.code_key(snr_db)}.txt"
        if path.exists():
            return GlobalCodeSpec.from_text(path.read_text())
    prof = _profile_for(cfg, snr_db, snr_index, cache_dir)
    if cfg.construction == "dfs":
        rng = trial_rng(cfg.master_seed, snr_index, 0, _CONSTRAINT_STREAM)
        spec = construct_subcode(prof, cfg.k, cfg.n_dfs_a, cfg.n_dfs_b, rng,
                                 cfg.dimension_distribution)
    else:
        spec = construct_crc_code(prof, cfg.k, cfg.dimension_distribution)
    if path is not None:
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(spec.to_text())
        os.replace(tmp, path)
    return spec


def _metric_config(cfg):
    if cfg.construction == "crc":
        return MetricConfig(cfg.detector, cfg.variant, cfg.list_size, "crc",
                            Crc(cfg.crc_poly, cfg.crc_len))
    return MetricConfig(cfg.detector, cfg.variant, cfg.list_size)


def simulate_frame(cfg, spec, snr_db, rng, mcfg=None):
    """Send one random frame; return ``(frame_error, bit_errors)``.

    Errors are counted on the payload, i.e. excluding CRC bits.
    """
    mcfg = mcfg or _metric_config(cfg)
    n0 = float(snr_db_to_n0(snr_db))
    if cfg.construction == "crc":
        payload = rng.integers(0, 2, cfg.k - cfg.crc_len, dtype=np.uint8)
        info = mcfg.crc.attach(payload)
    else:
        payload = info = rng.integers(0, 2, cfg.k, dtype=np.uint8)
    coded = spec.encode(info)
    chan = sample_channel(rng, cfg.n_slots, cfg.n_rx, cfg.n_tx, n0)
    y = transmit(modulate(coded, cfg.m), chan, rng)
    res = joint_decode(y, chan, spec, mcfg)
    errs = int(np.count_nonzero(res.info[: payload.size] != payload))
    return errs > 0, errs


_WORKER = {}


def _run_chunk(args):
    cfg_text, spec_text, snr_db, snr_index, start, stop = args
    key = (cfg_text, spec_text)
    if key not in _WORKER:
        _WORKER.clear()
        cfg = SimConfig.from_text(cfg_text)
        _WORKER[key] = (cfg, GlobalCodeSpec.from_text(spec_text), _metric_config(cfg))
    cfg, spec, mcfg = _WORKER[key]
    return [simulate_frame(cfg, spec, snr_db, trial_rng(cfg.master_seed, snr_index, r), mcfg)
            for r in range(start, stop)]


def _chunks(cfg, spec, snr_db, snr_index, chunk):
    cfg_text, spec_text = cfg.to_text(), spec.to_text()
    start = 0
    while start < cfg.max_frames:
        stop = min(start + chunk, cfg.max_frames)
        yield cfg_text, spec_text, snr_db, snr_index, start, stop
        start = stop


def run_sweep(cfg, workers=1, cache_dir=None, chunk=32, timing=True, progress=None):
    """Simulate every SNR point of ``cfg``.

    Trials are consumed in index order and the point stops at the trial
    that produces the ``min_frame_errors``-th error, so results do not
    depend on ``workers``.  With ``timing=False`` the ``seconds`` column is
    written as 0 to make whole CSV files reproducible.
    """
    result = SimResult()
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for idx, snr in enumerate(cfg.snr_points):
            t0 = time.perf_counter()
            spec = build_code(cfg, snr, idx, cache_dir)
            frames = ferr = berr = 0
            jobs = _chunks(cfg, spec, snr, idx, chunk)
            outs = pool.map(_run_chunk, jobs) if pool else map(_run_chunk, jobs)
            done = False
            for out in outs:
                for fe, be in out:
                    frames += 1
                    ferr += int(fe)
                    berr += be
                    if ferr >= cfg.min_frame_errors:
                        done = True
                        break
                if progress is not None:
                    progress(snr, frames, ferr)
                if done:
                    break
            lo, hi = wilson_interval(ferr, frames)
            secs = time.perf_counter() - t0 if timing else 0.0
            result.points.append(SimPoint(snr, frames, ferr, berr, ferr / frames, lo, hi, secs))
    finally:
        if pool is not None:
            pool.shutdown(wait=True, cancel_futures=True)
    return result


# SNR ranges put the FER between roughly 1e-1 and 1e-3 under the SNR = 1/N0
# per-stream convention
_DESK_SNR = {"vblast": (-1.5, -1.0, -0.5, 0.0, 0.5), "mmse": (-3.0, -2.5, -2.0, -1.5, -1.0)}
_LONG_SNR = {"vblast": (-2.0, -1.5, -1.0, -0.5), "mmse": (-3.5, -3.0, -2.5, -2.0)}


def _desk(detector):
    return SimConfig(
        n_tx=4, n_rx=4, m=2, n_slots=32, k=128, detector=detector,
        list_size=32, construction="dfs", snr_points=_DESK_SNR[detector],
    )


PRESETS = {
    "vblast-256": lambda: SimConfig(
        n_tx=4, n_rx=4, m=2, n_slots=128, k=512,
        dimension_distribution=(180, 154, 115, 63), detector="vblast",
        list_size=32, snr_points=_LONG_SNR["vblast"],
    ),
    "mmse-256": lambda: SimConfig(
        n_tx=4, n_rx=4, m=2, n_slots=128, k=512,
        dimension_distribution=(159, 138, 118, 97), detector="mmse",
        list_size=32, snr_points=_LONG_SNR["mmse"],
    ),
    "vblast-desk": lambda: _desk("vblast"),
    "mmse-desk": lambda: _desk("mmse"),
}


def paper_preset(name):
    """Named experiment configuration (see ``PRESETS``)."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
