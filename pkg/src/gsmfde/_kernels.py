"""Hot inner-loop kernels with numba-jitted and pure-numpy implementations.

The active backend is picked at import time from the ``GSMFDE_BACKEND``
environment variable ("numba" or "numpy"; default is numba when it can be
imported) and can be switched at runtime with :func:`set_backend`.  Both
implementations compute per-element distances as ``re*re + im*im`` with the
same tie-breaking (first index wins), so they make identical decisions.

``benchmarks/bench_kernels.py`` compares the two backends.
"""

import os
import warnings

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False


# --------------------------------------------------------------- numpy path


def _support_project_np(r, tacs):
    energy = r.real * r.real + r.imag * r.imag
    per_tac = energy[:, tacs].sum(axis=2)        # (n_slices, n_comb)
    idx = per_tac.argmax(axis=1)                 # ties: lowest TAC index
    active = tacs[idx]                           # (n_slices, n_a)
    rows = np.arange(r.shape[0])[:, None]
    out = np.zeros_like(r)
    out[rows, active] = r[rows, active]
    return out, idx


def _lattice_project_np(v, points):
    dr = v.real[:, None] - points.real[None, :]
    di = v.imag[:, None] - points.imag[None, :]
    idx = (dr * dr + di * di).argmin(axis=1)     # ties: lowest point index
    return points[idx]


def _harden_np(s_time, tac_idx, tacs, points):
    rows = np.arange(s_time.shape[0])[:, None]
    active = tacs[tac_idx]
    vals = s_time[rows, active]
    proj = _lattice_project_np(vals.ravel(), points).reshape(vals.shape)
    out = np.zeros_like(s_time)
    out[rows, active] = proj
    return out


# --------------------------------------------------------------- numba path

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _support_project_nb(r, tacs):
        n_slices = r.shape[0]
        n_comb, n_a = tacs.shape
        out = np.zeros_like(r)
        idx = np.empty(n_slices, np.int64)
        for s in range(n_slices):
            best = -1.0
            best_c = 0
            for c in range(n_comb):
                e = 0.0
                for j in range(n_a):
                    v = r[s, tacs[c, j]]
                    e += v.real * v.real + v.imag * v.imag
                if e > best:
                    best = e
                    best_c = c
            idx[s] = best_c
            for j in range(n_a):
                a = tacs[best_c, j]
                out[s, a] = r[s, a]
        return out, idx

    @njit(cache=True)
    def _lattice_project_nb(v, points):
        out = np.empty_like(v)
        n_points = points.shape[0]
        for i in range(v.shape[0]):
            x = v[i]
            best = np.inf
            best_p = 0
            for p in range(n_points):
                dr = x.real - points[p].real
                di = x.imag - points[p].imag
                d = dr * dr + di * di
                if d < best:
                    best = d
                    best_p = p
            out[i] = points[best_p]
        return out

    @njit(cache=True)
    def _harden_nb(s_time, tac_idx, tacs, points):
        n_slices = s_time.shape[0]
        n_a = tacs.shape[1]
        n_points = points.shape[0]
        out = np.zeros_like(s_time)
        for s in range(n_slices):
            c = tac_idx[s]
            for j in range(n_a):
                a = tacs[c, j]
                x = s_time[s, a]
                best = np.inf
                best_p = 0
                for p in range(n_points):
                    dr = x.real - points[p].real
                    di = x.imag - points[p].imag
                    d = dr * dr + di * di
                    if d < best:
                        best = d
                        best_p = p
                out[s, a] = points[best_p]
        return out


# ----------------------------------------------------------------- dispatch

_IMPLS = {"numpy": (_support_project_np, _lattice_project_np, _harden_np)}
if NUMBA_AVAILABLE:
    _IMPLS["numba"] = (_support_project_nb, _lattice_project_nb, _harden_nb)

_backend = None
_support_impl = _lattice_impl = _harden_impl = None


def available_backends():
    """Names of the usable kernel backends."""
    return tuple(_IMPLS)


def set_backend(name):
    """Select the kernel backend ("numba" or "numpy")."""
    global _backend, _support_impl, _lattice_impl, _harden_impl
    if name not in _IMPLS:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        )
    _support_impl, _lattice_impl, _harden_impl = _IMPLS[name]
    _backend = name


def get_backend():
    """Name of the currently active kernel backend."""
    return _backend


def _default_backend():
    requested = os.environ.get("GSMFDE_BACKEND", "").strip().lower()
    if requested:
        if requested in _IMPLS:
            return requested
        if requested == "numba" and not NUMBA_AVAILABLE:
            warnings.warn("GSMFDE_BACKEND=numba but numba is unavailable; "
                          "falling back to numpy kernels")
            return "numpy"
        raise ValueError(f"GSMFDE_BACKEND={requested!r} is not one of "
                         f"{('numba', 'numpy')}")
    return "numba" if NUMBA_AVAILABLE else "numpy"


set_backend(_default_backend())


# --------------------------------------------------------------- public API


def support_project(r, tacs):
    """Project each row of ``r`` onto the best valid antenna subset.

    r: (n_slices, n_tx) complex128, C-contiguous.
    tacs: (n_comb, n_a) int64 antenna-index table.
    Returns (projected rows, chosen subset index per row).
    """
    return _support_impl(r, tacs)


def lattice_project(v, points):
    """Round each element of the 1-D array ``v`` to the nearest of ``points``."""
    return _lattice_impl(v, points)


def harden(s_time, tac_idx, tacs, points):
    """Hard decisions: zeros off the chosen subsets, nearest constellation
    point of ``points`` on them."""
    return _harden_impl(s_time, tac_idx, tacs, points)
