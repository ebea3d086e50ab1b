"""Reference detectors: a per-frequency MMSE equalizer with GSM-aware
decisions, and an exhaustive maximum-likelihood oracle for tiny instances."""

from itertools import product

import numpy as np

from . import _kernels
from .channel import FrequencyDomainChannel
from .mapping import GsmCodebook, SystemConfig
from .transforms import block_fft, block_ifft

_REG_FLOOR = 1e-12


def mmse_detect(y_freq: np.ndarray, h_freq: FrequencyDomainChannel,
                codebook: GsmCodebook, cfg: SystemConfig,
                noise_variance: float) -> np.ndarray:
    """Per-frequency MMSE equalization followed by GSM hard decisions.

    S_k = (H_k^H H_k + 2s^2 I)^-1 H_k^H Y_k, inverse transform, then per
    (use, user) slice: keep the best-energy antenna combination and round
    the kept entries to the nearest constellation point.  Always returns a
    valid GSM block.
    """
    h = h_freq.h
    n, _, n_streams = h.shape
    gram = np.einsum("kri,krj->kij", h.conj(), h)
    diag = np.arange(n_streams)
    a = gram.copy()
    a[:, diag, diag] += max(noise_variance, _REG_FLOOR)
    hh_y = np.einsum("kri,kr->ki", h.conj(), y_freq)
    s_freq = np.linalg.solve(a, hh_y[:, :, None])[:, :, 0]
    s_time = block_ifft(s_freq, axis=0)
    flat = np.ascontiguousarray(s_time.reshape(-1, cfg.n_tx))
    _, tac_idx = _kernels.support_project(flat, codebook.tacs)
    hard = _kernels.harden(flat, tac_idx, codebook.tacs, codebook.constellation)
    return hard.reshape(cfg.n, cfg.n_users, cfg.n_tx)


def block_objective(y_freq: np.ndarray, h_freq: FrequencyDomainChannel,
                    symbols: np.ndarray) -> float:
    """Squared residual of a candidate block, computed with per-frequency
    matrix products (kept separate from the iterative detector's residual
    evaluation so the two can be cross-checked)."""
    s_freq = block_fft(symbols.reshape(y_freq.shape[0], -1), axis=0)
    hs = (h_freq.h @ s_freq[:, :, None])[:, :, 0]
    diff = y_freq - hs
    return float(np.vdot(diff, diff).real)


class OracleGuardError(RuntimeError):
    """Exhaustive search refused: candidate count exceeds the guard bound."""

    def __init__(self, candidate_count: int, guard: int):
        self.candidate_count = candidate_count
        self.guard = guard
        super().__init__(
            f"exhaustive search over {candidate_count} candidate blocks "
            f"exceeds the guard bound {guard}")


def slice_candidates(codebook: GsmCodebook, cfg: SystemConfig) -> np.ndarray:
    """All valid per-user symbol vectors, ordered by antenna-combination
    index first, then constellation indices (first active antenna most
    significant)."""
    m = codebook.constellation.shape[0]
    rows = []
    for tac in codebook.tacs:
        for combo in product(range(m), repeat=cfg.n_active):
            v = np.zeros(cfg.n_tx, dtype=np.complex128)
            v[np.asarray(tac)] = codebook.constellation[list(combo)]
            rows.append(v)
    return np.array(rows)


def oracle_candidate_count(cfg: SystemConfig) -> int:
    """Number of valid blocks the exhaustive oracle would enumerate."""
    per_slice = cfg.n_comb * cfg.mod_order ** cfg.n_active
    return per_slice ** (cfg.n * cfg.n_users)


def mld_oracle(y_freq: np.ndarray, h_freq: FrequencyDomainChannel,
               codebook: GsmCodebook, cfg: SystemConfig,
               guard: int = 1_000_000, chunk: int = 4096):
    """Exhaustive minimization of the block residual over every valid GSM
    block.  Ties resolve to the first block in enumeration order
    (combination index major, then constellation indices, slices
    time-major).

    Returns (block, minimal squared residual).  Raises
    :class:`OracleGuardError` when the candidate count exceeds ``guard``.
    """
    total = oracle_candidate_count(cfg)
    if total > min(guard, 2 ** 62):  # int64 indexing cap
        raise OracleGuardError(total, guard)
    cands = slice_candidates(codebook, cfg)
    per_slice = cands.shape[0]
    n_slices = cfg.n * cfg.n_users
    weights = per_slice ** np.arange(n_slices - 1, -1, -1, dtype=np.int64)
    h = h_freq.h
    best_f = np.inf
    best_block = None
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % per_slice
        blocks = cands[digits].reshape(idx.size, cfg.n, cfg.n_streams)
        s_freq = block_fft(blocks, axis=1)
        resid = y_freq[None] - np.einsum("kij,bkj->bki", h, s_freq)
        f = np.sum(resid.real ** 2 + resid.imag ** 2, axis=(1, 2))
        j = int(np.argmin(f))
        if f[j] < best_f:
            best_f = float(f[j])
            best_block = blocks[j].copy()
    return best_block.reshape(cfg.n, cfg.n_users, cfg.n_tx), best_f
