"""Monte Carlo harness: seeded trials (bits -> block -> channel -> detection
-> error counting), SNR sweeps with an error-count stopping rule, target-SNR
interpolation, and CSV/JSON persistence."""

import dataclasses
import hashlib
import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__
from .admm import DetectorConfig, detect
from .baselines import mld_oracle, mmse_detect
from .channel import (add_cyclic_prefix, apply_channel, draw_realization,
                      noise_variance_for_snr, sampled_profile, to_frequency)
from .mapping import SystemConfig, build_codebook, demap_bits, map_bits
from .transforms import block_fft

DETECTOR_NAMES = ("admm", "mmse", "mld")

_MASK64 = (1 << 64) - 1
_DETECTOR_SALT = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """splitmix64 finalizer: a 64-bit avalanche mix."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def child_seed(master: int, snr_index: int, trial_index: int) -> int:
    """Derive an independent 64-bit trial seed from (master, point, trial)."""
    z = _mix64(master & _MASK64)
    z = _mix64(z ^ _mix64(snr_index & _MASK64))
    z = _mix64(z ^ _mix64(trial_index & _MASK64))
    return z


@dataclass(frozen=True)
class SweepSpec:
    """Everything one BER sweep needs, including the master seed."""

    system: SystemConfig
    snr_db: tuple
    profile: str = "etu"
    sample_period: float = 67e-6 / 128
    detectors: tuple = ("admm",)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    min_errors: int = 100
    max_blocks: int = 1000
    seed: int = 0
    oracle_guard: int = 1_000_000

    def __post_init__(self):
        snr = tuple(float(v) for v in np.atleast_1d(np.asarray(self.snr_db)))
        object.__setattr__(self, "snr_db", snr)
        if len(snr) == 0:
            raise ValueError("snr_db must be nonempty")
        if len(snr) > 1 and np.any(np.diff(snr) <= 0):
            raise ValueError("snr_db must be strictly increasing")
        dets = tuple(self.detectors)
        object.__setattr__(self, "detectors", dets)
        if not dets:
            raise ValueError("detectors must be nonempty")
        if len(set(dets)) != len(dets):
            raise ValueError("detectors must be unique")
        for d in dets:
            if d not in DETECTOR_NAMES:
                raise ValueError(f"unknown detector {d!r}; "
                                 f"choose from {DETECTOR_NAMES}")
        if self.min_errors < 1:
            raise ValueError("min_errors must be >= 1")
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@lru_cache(maxsize=32)
def _codebook_for(cfg: SystemConfig):
    return build_codebook(cfg)


@lru_cache(maxsize=32)
def _profile_for(profile: str, sample_period: float):
    return sampled_profile(profile, sample_period)


def simulate_block(spec: SweepSpec, snr_index: int, trial_index: int):
    """Generate one fully seeded trial instance.

    Returns (bits, transmitted block, y_freq, h_freq, noise_variance,
    detector rng).  The detector rng is derived from the trial seed so the
    observation stream is identical whichever detectors run on it.
    """
    cfg = spec.system
    codebook = _codebook_for(cfg)
    profile = _profile_for(spec.profile, spec.sample_period)
    seed = child_seed(spec.seed, snr_index, trial_index)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, cfg.bits_per_block, dtype=np.uint8)
    realization = draw_realization(cfg, profile, rng)
    noise_var = noise_variance_for_snr(cfg, spec.snr_db[snr_index])
    block = map_bits(bits, codebook, cfg)
    tx = add_cyclic_prefix(block.symbols, cfg.n_cp)
    y = apply_channel(realization, tx, cfg.n_cp, noise_var, rng)
    y_freq = block_fft(y, axis=0)
    h_freq = to_frequency(realization, cfg.n)
    det_rng = np.random.default_rng(_mix64(seed ^ _DETECTOR_SALT))
    return bits, block, y_freq, h_freq, noise_var, det_rng


@dataclass
class TrialResult:
    bits_sent: int
    errors: dict  # detector name -> bit errors


def run_trial(spec: SweepSpec, snr_index: int, trial_index: int) -> TrialResult:
    """One Monte Carlo block: fresh bits and channel, every selected
    detector applied to the same observation, bit errors counted."""
    cfg = spec.system
    codebook = _codebook_for(cfg)
    bits, _, y_freq, h_freq, noise_var, det_rng = simulate_block(
        spec, snr_index, trial_index)
    errors = {}
    for det in spec.detectors:
        if det == "admm":
            hat = detect(y_freq, h_freq, codebook, cfg, spec.detector,
                         rng=det_rng).symbols
        elif det == "mmse":
            hat = mmse_detect(y_freq, h_freq, codebook, cfg, noise_var)
        else:
            hat, _ = mld_oracle(y_freq, h_freq, codebook, cfg,
                                guard=spec.oracle_guard)
        bits_hat = demap_bits(hat, codebook, cfg)
        errors[det] = int(np.count_nonzero(bits_hat != bits))
    return TrialResult(bits_sent=cfg.bits_per_block, errors=errors)


@dataclass
class SweepPoint:
    snr_db: float
    blocks: int
    bits: int
    errors: int
    ber: float
    ci95: float


@dataclass
class SweepResult:
    detector: str
    points: list
    metadata: dict


def _ci95(errors: int, bits: int) -> float:
    p = errors / bits
    return 1.96 * np.sqrt(p * (1.0 - p) / bits)


def _trial_task(args):
    spec, snr_index, trial_index = args
    return run_trial(spec, snr_index, trial_index)


def run_sweep(spec: SweepSpec, workers: int = 1) -> dict:
    """Run the sweep and return one SweepResult per detector.

    Per SNR point, trials run in index order until every detector has
    accumulated ``min_errors`` bit errors or ``max_blocks`` blocks were
    simulated.  The stopping decision scans trial results in index order,
    so the output is bit-identical for any worker count.
    """
    t0 = time.perf_counter()
    per_det = {d: [] for d in spec.detectors}
    chunk = max(4, 2 * workers)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for si, snr in enumerate(spec.snr_db):
            errs = {d: 0 for d in spec.detectors}
            blocks = bits = 0
            stop = False
            next_trial = 0
            while not stop and next_trial < spec.max_blocks:
                hi = min(next_trial + chunk, spec.max_blocks)
                tasks = [(spec, si, j) for j in range(next_trial, hi)]
                if pool is None:
                    results = [_trial_task(t) for t in tasks]
                else:
                    results = list(pool.map(_trial_task, tasks))
                for res in results:
                    blocks += 1
                    bits += res.bits_sent
                    for d in spec.detectors:
                        errs[d] += res.errors[d]
                    if all(errs[d] >= spec.min_errors for d in spec.detectors):
                        stop = True
                        break
                next_trial = hi
            for d in spec.detectors:
                per_det[d].append(SweepPoint(
                    snr_db=snr, blocks=blocks, bits=bits, errors=errs[d],
                    ber=errs[d] / bits, ci95=_ci95(errs[d], bits)))
    finally:
        if pool is not None:
            pool.shutdown()
    wall = time.perf_counter() - t0
    meta_base = {
        "spec": spec_to_dict(spec),
        "seed": spec.seed,
        "wall_time_s": wall,
        "version": __version__,
        "workers": workers,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    return {d: SweepResult(detector=d, points=per_det[d],
                           metadata={**meta_base, "detector": d})
            for d in spec.detectors}


def snr_at_target(result: SweepResult, target_ber: float):
    """SNR in dB at which the BER curve crosses ``target_ber``.

    Log-linear interpolation of log10(BER) between the bracketing grid
    points; zero-BER points are clamped to half an error for the log.
    Returns None when the curve never reaches the target ("unreachable").
    """
    pts = result.points
    for i, pt in enumerate(pts):
        if pt.ber > target_ber:
            continue
        if i == 0:
            return pt.snr_db
        lo, hi = pts[i - 1], pt
        b_hi = max(hi.ber, 0.5 / hi.bits)
        if b_hi >= target_ber:        # clamp overshoot: grid point is the answer
            return hi.snr_db
        t = (np.log10(target_ber) - np.log10(lo.ber)) \
            / (np.log10(b_hi) - np.log10(lo.ber))
        return float(lo.snr_db + t * (hi.snr_db - lo.snr_db))
    return None


# ------------------------------------------------------------- persistence


def spec_to_dict(spec: SweepSpec) -> dict:
    d = dataclasses.asdict(spec)
    d["snr_db"] = list(spec.snr_db)
    d["detectors"] = list(spec.detectors)
    det = d["detector"]
    for key in ("rho_x", "rho_z"):
        if isinstance(det[key], tuple):
            det[key] = list(det[key])
    return d


def config_hash(spec: SweepSpec) -> str:
    payload = json.dumps(spec_to_dict(spec), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:10]


def write_sweep_csv(result: SweepResult, fh) -> None:
    fh.write("snr_db,blocks,bits,errors,ber,ci95\n")
    for p in result.points:
        fh.write(f"{p.snr_db:.10g},{p.blocks},{p.bits},{p.errors},"
                 f"{p.ber:.12g},{p.ci95:.12g}\n")


def sweep_csv_body(result: SweepResult) -> str:
    import io

    buf = io.StringIO()
    write_sweep_csv(result, buf)
    return buf.getvalue()


def save_results(spec: SweepSpec, results: dict, out_dir, stamp: str) -> list:
    """Write one CSV plus one JSON sidecar per detector; returns the paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    tag = config_hash(spec)
    paths = []
    for det, result in results.items():
        base = os.path.join(out_dir, f"sweep_{det}_{tag}_{stamp}")
        with open(base + ".csv", "w") as fh:
            write_sweep_csv(result, fh)
        with open(base + ".json", "w") as fh:
            json.dump(result.metadata, fh, indent=2, sort_keys=True)
        paths.extend([base + ".csv", base + ".json"])
    return paths
