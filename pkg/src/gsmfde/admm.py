"""Iterative frequency-domain GSM detector.

The detector alternates a per-frequency regularized equalization step with
two time-domain projections (valid antenna support, constellation-plus-zero
rounding), scaled dual updates, and per-iteration hardening of the
continuous iterate into a valid GSM block whose residual is tracked as the
incumbent.  Random restarts improve the chance of reaching the global
minimizer of the nonconvex problem.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import FrequencyDomainChannel
from .mapping import GsmCodebook, SystemConfig
from .transforms import block_fft, block_ifft


class ConfigurationError(ValueError):
    """Detector configuration makes the per-frequency systems unsolvable."""


def _as_penalty(value):
    if np.ndim(value) == 0:
        return float(value)
    return tuple(float(v) for v in np.asarray(value).ravel())


@dataclass(frozen=True)
class DetectorConfig:
    """Tuning knobs of the iterative detector.

    rho_x / rho_z are the penalty weights of the support and constellation
    splits; scalars apply to every coordinate, tuples may give one weight
    per stream or per (frequency, stream) coordinate.
    """

    iterations: int = 30
    restarts: int = 5
    rho_x: float | tuple = 60.0
    rho_z: float | tuple = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        object.__setattr__(self, "rho_x", _as_penalty(self.rho_x))
        object.__setattr__(self, "rho_z", _as_penalty(self.rho_z))
        rx = np.asarray(self.rho_x)
        rz = np.asarray(self.rho_z)
        if np.any(rx < 0) or np.any(rz < 0):
            raise ValueError("penalties must be nonnegative")
        try:
            both = rx + rz
        except ValueError:
            both = None  # different per-coordinate layouts; checked later
        if both is not None and np.any(both == 0):
            raise ValueError("rho_x and rho_z must not both be zero for any "
                             "coordinate")


def _penalty_grid(value, n_freq: int, n_streams: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(arr < 0):
        raise ValueError("penalties must be nonnegative")
    if arr.ndim == 0:
        return np.full((n_freq, n_streams), float(arr))
    flat = arr.ravel()
    if flat.size == n_streams:
        return np.tile(flat, (n_freq, 1))
    if flat.size == n_freq * n_streams:
        return flat.reshape(n_freq, n_streams)
    raise ValueError(f"penalty vector of size {flat.size} does not match "
                     f"{n_streams} streams or {n_freq * n_streams} coordinates")


@dataclass
class FrequencySolver:
    """Precomputed per-frequency solves of the regularized normal equations.

    Holds the inverses of (H_k^H H_k + diag(rho_x + rho_z)) so every
    iteration and restart reuses one factorization per frequency.
    """

    a_inv: np.ndarray   # (n, n_streams, n_streams)
    rho_x: np.ndarray   # (n, n_streams)
    rho_z: np.ndarray   # (n, n_streams)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the precomputed inverses to stacked right-hand sides of
        shape (..., n, n_streams)."""
        return np.einsum("kij,...kj->...ki", self.a_inv, rhs)


def precompute_solvers(h_freq: FrequencyDomainChannel, rho_x,
                       rho_z) -> FrequencySolver:
    """Factorize (H_k^H H_k + P_x + P_z) once per frequency."""
    h = h_freq.h
    n, _, n_streams = h.shape
    rx = _penalty_grid(rho_x, n, n_streams)
    rz = _penalty_grid(rho_z, n, n_streams)
    gram = np.einsum("kri,krj->kij", h.conj(), h)
    diag = np.arange(n_streams)
    a = gram.copy()
    a[:, diag, diag] += rx + rz
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ConfigurationError(
            "singular per-frequency system: some coordinate has "
            "rho_x + rho_z = 0 on a rank-deficient channel") from None
    return FrequencySolver(a_inv=np.linalg.inv(a), rho_x=rx, rho_z=rz)


@dataclass
class DetectorState:
    """Iterates of one detector run, batched over restarts.

    s_freq, u, w, x_freq, z_freq live in the frequency domain; x and z are
    their time-domain counterparts and always satisfy the support and
    constellation constraints respectively.  ``best`` holds the incumbent
    hard candidates (time domain) and ``f_best`` their residuals.
    """

    s_freq: np.ndarray
    x: np.ndarray
    z: np.ndarray
    x_freq: np.ndarray
    z_freq: np.ndarray
    u: np.ndarray
    w: np.ndarray
    f_best: np.ndarray
    best: np.ndarray
    f_candidate: np.ndarray = field(default=None)


def init_state(codebook: GsmCodebook, cfg: SystemConfig, restarts: int,
               rng: np.random.Generator) -> DetectorState:
    """Random initialization: a uniform draw inside the constellation
    bounding box, projected onto the support set and onto the
    constellation-plus-zero set; duals start at zero."""
    shape = (restarts, cfg.n, cfg.n_streams)
    c = codebook.max_coord
    s0 = rng.uniform(-c, c, shape) + 1j * rng.uniform(-c, c, shape)
    x_flat, _ = _kernels.support_project(
        np.ascontiguousarray(s0.reshape(-1, cfg.n_tx)), codebook.tacs)
    x = x_flat.reshape(shape)
    z = _kernels.lattice_project(
        np.ascontiguousarray(s0.ravel()),
        codebook.constellation_with_zero).reshape(shape)
    zeros = np.zeros(shape, dtype=np.complex128)
    return DetectorState(
        s_freq=zeros.copy(),
        x=x,
        z=z,
        x_freq=block_fft(x, axis=1),
        z_freq=block_fft(z, axis=1),
        u=zeros.copy(),
        w=zeros.copy(),
        f_best=np.full(restarts, np.inf),
        best=zeros.copy(),
    )


def admm_step(state: DetectorState, solver: FrequencySolver, y_freq: np.ndarray,
              h_freq: FrequencyDomainChannel, codebook: GsmCodebook,
              cfg: SystemConfig) -> DetectorState:
    """One detector iteration over all restarts.

    Order: per-frequency solve, support projection, constellation
    projection, candidate hardening with incumbent update, dual updates.
    """
    h = h_freq.h
    hh_y = np.einsum("kri,kr->ki", h.conj(), y_freq)
    rhs = hh_y + solver.rho_x * (state.x_freq - state.u) \
        + solver.rho_z * (state.z_freq - state.w)
    s_freq = solver.solve(rhs)

    shape = state.x.shape
    r_time = block_ifft(s_freq + state.u, axis=1)
    x_flat, tac_idx = _kernels.support_project(
        np.ascontiguousarray(r_time.reshape(-1, cfg.n_tx)), codebook.tacs)
    x = x_flat.reshape(shape)
    z = _kernels.lattice_project(
        np.ascontiguousarray(block_ifft(s_freq + state.w, axis=1).ravel()),
        codebook.constellation_with_zero).reshape(shape)

    # Harden the equalized iterate on the detected support and keep the
    # best-residual candidate seen so far.
    s_time = block_ifft(s_freq, axis=1)
    candidate = _kernels.harden(
        np.ascontiguousarray(s_time.reshape(-1, cfg.n_tx)), tac_idx,
        codebook.tacs, codebook.constellation).reshape(shape)
    cand_freq = block_fft(candidate, axis=1)
    resid = y_freq[None] - np.einsum("kij,rkj->rki", h, cand_freq)
    f_candidate = np.sum(resid.real ** 2 + resid.imag ** 2, axis=(1, 2))
    improved = f_candidate < state.f_best
    state.f_best[improved] = f_candidate[improved]
    state.best[improved] = candidate[improved]

    state.s_freq = s_freq
    state.x = x
    state.z = z
    state.x_freq = block_fft(x, axis=1)
    state.z_freq = block_fft(z, axis=1)
    state.u = state.u + s_freq - state.x_freq
    state.w = state.w + s_freq - state.z_freq
    state.f_candidate = f_candidate
    return state


def objective(y_freq: np.ndarray, h_freq: FrequencyDomainChannel,
              symbols: np.ndarray) -> float:
    """Squared residual ||Y - H * DFT(s)||^2 of a time-domain block."""
    s_freq = block_fft(symbols.reshape(y_freq.shape[0], -1), axis=0)
    resid = y_freq - np.einsum("kij,kj->ki", h_freq.h, s_freq)
    return float(np.sum(resid.real ** 2 + resid.imag ** 2))


@dataclass
class DetectionResult:
    """Best hard GSM block found and its squared residual."""

    symbols: np.ndarray
    objective: float


def detect(y_freq: np.ndarray, h_freq: FrequencyDomainChannel,
           codebook: GsmCodebook, cfg: SystemConfig,
           det_cfg: DetectorConfig, rng=None,
           trace: list | None = None) -> DetectionResult:
    """Run the full detector: ``restarts`` independent runs of
    ``iterations`` steps each, merged by best residual.

    rng may be a Generator, an integer seed, or None (uses det_cfg.seed).
    If ``trace`` is a list, rows of (restart, iteration, f_candidate,
    f_best) are appended for convergence diagnostics.
    """
    if rng is None:
        rng = np.random.default_rng(det_cfg.seed)
    elif not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    solver = precompute_solvers(h_freq, det_cfg.rho_x, det_cfg.rho_z)
    state = init_state(codebook, cfg, det_cfg.restarts, rng)
    for q in range(det_cfg.iterations):
        admm_step(state, solver, y_freq, h_freq, codebook, cfg)
        if trace is not None:
            trace.extend((r, q, float(state.f_candidate[r]),
                          float(state.f_best[r]))
                         for r in range(det_cfg.restarts))
    winner = int(np.argmin(state.f_best))
    symbols = state.best[winner].reshape(cfg.n, cfg.n_users, cfg.n_tx)
    return DetectionResult(symbols=symbols,
                           objective=float(state.f_best[winner]))


def write_trace_csv(rows, path) -> None:
    """Persist detect() trace rows as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["restart", "iteration", "f_candidate", "f_best"])
        writer.writerows(rows)
