"""GSM signal mapping: antenna-combination codebooks, Gray-coded QAM,
bit (de)mapping and the projection operators used by the detectors."""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _kernels


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions of one GSM single-carrier link.

    n: block length in channel uses.
    n_cp: cyclic-prefix length in samples.
    n_users: number of simultaneously served users.
    n_tx: transmit antennas per user.
    n_active: active antennas per user per channel use.
    n_rx: receive antennas.
    mod_order: QAM order M (square QAM: 4, 16, 64, ...).
    """

    n: int
    n_cp: int
    n_users: int
    n_tx: int
    n_active: int
    n_rx: int
    mod_order: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.n_cp < 0:
            raise ValueError("n_cp must be >= 0")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.n_rx < 1:
            raise ValueError("n_rx must be >= 1")
        if self.n_tx < 1:
            raise ValueError("n_tx must be >= 1")
        if not 1 <= self.n_active <= self.n_tx:
            raise ValueError("n_active must satisfy 1 <= n_active <= n_tx")
        if not _is_pow2(self.mod_order) or self.mod_order < 2:
            raise ValueError("mod_order must be a power of 2 and >= 2")

    @property
    def n_streams(self) -> int:
        """Total transmit antennas across users."""
        return self.n_users * self.n_tx

    @property
    def tac_bits(self) -> int:
        """Bits carried by the antenna-combination index."""
        return int(math.floor(math.log2(math.comb(self.n_tx, self.n_active))))

    @property
    def n_comb(self) -> int:
        """Number of usable transmit-antenna combinations per user."""
        return 1 << self.tac_bits

    @property
    def symbol_bits(self) -> int:
        """Bits per QAM symbol."""
        return int(math.log2(self.mod_order))

    @property
    def bits_per_symbol(self) -> int:
        """Information bits carried by one GSM symbol (one user, one use)."""
        return self.tac_bits + self.n_active * self.symbol_bits

    @property
    def bits_per_block(self) -> int:
        return self.n * self.n_users * self.bits_per_symbol


def _gray_decode(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def qam_constellation(mod_order: int) -> np.ndarray:
    """Square Gray-coded M-QAM, unit average energy, indexed by bit pattern.

    The index is the big-endian bit pattern; the first half of the bits
    Gray-codes the in-phase level, the second half the quadrature level.
    Index 0 maps to the top-right point (all-positive amplitudes).
    """
    if not _is_pow2(mod_order):
        raise ValueError("mod_order must be a power of 2")
    bits = int(math.log2(mod_order))
    if bits % 2:
        raise ValueError("mod_order must be a power of 4 (square QAM)")
    half = bits // 2
    side = 1 << half
    amp = np.array([side - 1 - 2 * _gray_decode(v) for v in range(side)], float)
    i_bits = np.arange(mod_order) >> half
    q_bits = np.arange(mod_order) & (side - 1)
    points = amp[i_bits] + 1j * amp[q_bits]
    return points / math.sqrt(2.0 * (mod_order - 1) / 3.0)


@dataclass
class GsmCodebook:
    """Immutable GSM codebook: antenna combinations plus QAM constellation."""

    tacs: np.ndarray                    # (n_comb, n_active) int64
    constellation: np.ndarray           # (M,) complex128
    constellation_with_zero: np.ndarray  # (M + 1,) complex128, zero last
    tac_bits: int
    symbol_bits: int
    support_index: dict = field(repr=False)  # sorted antenna tuple -> TAC index

    @property
    def n_comb(self) -> int:
        return self.tacs.shape[0]

    @property
    def n_active(self) -> int:
        return self.tacs.shape[1]

    @property
    def max_coord(self) -> float:
        """Largest per-axis coordinate magnitude in the constellation."""
        return float(max(np.abs(self.constellation.real).max(),
                         np.abs(self.constellation.imag).max()))


def build_codebook(cfg: SystemConfig, mod_order: int | None = None) -> GsmCodebook:
    """Build the codebook for ``cfg``: the first ``n_comb`` antenna
    combinations in lexicographic order and a Gray-coded QAM constellation.
    """
    m = cfg.mod_order if mod_order is None else mod_order
    if math.comb(cfg.n_tx, cfg.n_active) < 1:
        raise ValueError("no valid antenna combination: need n_active <= n_tx")
    n_comb = 1 << int(math.floor(math.log2(math.comb(cfg.n_tx, cfg.n_active))))
    tacs = np.array(list(combinations(range(cfg.n_tx), cfg.n_active))[:n_comb],
                    dtype=np.int64).reshape(n_comb, cfg.n_active)
    constellation = qam_constellation(m)
    with_zero = np.concatenate([constellation, [0.0 + 0.0j]])
    for arr in (tacs, constellation, with_zero):
        arr.setflags(write=False)
    return GsmCodebook(
        tacs=tacs,
        constellation=constellation,
        constellation_with_zero=with_zero,
        tac_bits=int(math.log2(n_comb)),
        symbol_bits=int(math.log2(m)),
        support_index={tuple(row): i for i, row in enumerate(tacs.tolist())},
    )


@dataclass
class GsmBlock:
    """One transmit block: the information bits and the mapped symbol array
    of shape (n, n_users, n_tx)."""

    bits: np.ndarray
    symbols: np.ndarray


def _bits_to_index(bits: np.ndarray) -> np.ndarray:
    width = bits.shape[-1]
    if width == 0:
        return np.zeros(bits.shape[:-1], dtype=np.int64)
    weights = (1 << np.arange(width - 1, -1, -1)).astype(np.int64)
    return (bits.astype(np.int64) * weights).sum(axis=-1)


def _index_to_bits(idx: np.ndarray, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros(idx.shape + (0,), dtype=np.uint8)
    shifts = np.arange(width - 1, -1, -1)
    return ((idx[..., None] >> shifts) & 1).astype(np.uint8)


def map_bits(bits, codebook: GsmCodebook, cfg: SystemConfig) -> GsmBlock:
    """Map a bit sequence to one GSM block.

    Per (channel use, user): the first ``tac_bits`` bits pick the antenna
    combination (big-endian), then each group of ``symbol_bits`` bits
    Gray-maps to one constellation point, assigned to the active antennas
    in increasing antenna order.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size != cfg.bits_per_block:
        raise ValueError(f"expected {cfg.bits_per_block} bits, got {bits.size}")
    if bits.size and bits.max() > 1:
        raise ValueError("bits must be 0/1 valued")
    grouped = bits.reshape(cfg.n, cfg.n_users, cfg.bits_per_symbol)
    tac_idx = _bits_to_index(grouped[..., :codebook.tac_bits])
    sym_bits = grouped[..., codebook.tac_bits:].reshape(
        cfg.n, cfg.n_users, cfg.n_active, codebook.symbol_bits)
    sym_idx = _bits_to_index(sym_bits)
    symbols = np.zeros((cfg.n, cfg.n_users, cfg.n_tx), dtype=np.complex128)
    active = codebook.tacs[tac_idx]                    # (n, n_users, n_active)
    np.put_along_axis(symbols, active, codebook.constellation[sym_idx], axis=2)
    return GsmBlock(bits=bits, symbols=symbols)


def demap_bits(block, codebook: GsmCodebook, cfg: SystemConfig) -> np.ndarray:
    """Exact inverse of :func:`map_bits` for hard symbol decisions.

    Raises ValueError if any per-user slice has an invalid support or a
    value off the constellation.
    """
    symbols = block.symbols if isinstance(block, GsmBlock) else np.asarray(block)
    if symbols.shape != (cfg.n, cfg.n_users, cfg.n_tx):
        raise ValueError(f"expected symbols of shape "
                         f"{(cfg.n, cfg.n_users, cfg.n_tx)}, got {symbols.shape}")
    nz = symbols != 0
    if not (nz.sum(axis=2) == cfg.n_active).all():
        raise ValueError("invalid support: wrong number of active antennas")
    tac_idx = np.empty((cfg.n, cfg.n_users), dtype=np.int64)
    flat_nz = nz.reshape(-1, cfg.n_tx)
    flat_idx = tac_idx.reshape(-1)
    for i, row in enumerate(flat_nz):
        key = tuple(np.flatnonzero(row).tolist())
        try:
            flat_idx[i] = codebook.support_index[key]
        except KeyError:
            raise ValueError(f"invalid support {key}: not a valid antenna "
                             "combination") from None
    active = codebook.tacs[tac_idx]
    values = np.take_along_axis(symbols, active, axis=2)   # (n, n_users, n_a)
    dist = np.abs(values[..., None] - codebook.constellation)
    sym_idx = dist.argmin(axis=-1)
    if dist.min(axis=-1).max() > 1e-9:
        raise ValueError("off-constellation value in hard-decision block")
    tac_bits = _index_to_bits(tac_idx, codebook.tac_bits)
    sym_bits = _index_to_bits(sym_idx, codebook.symbol_bits)
    out = np.concatenate(
        [tac_bits, sym_bits.reshape(cfg.n, cfg.n_users, -1)], axis=2)
    return out.reshape(-1)


def project_support(r, codebook: GsmCodebook) -> np.ndarray:
    """Euclidean projection of per-user vectors onto the valid-support set.

    Accepts any (..., n_tx) array; keeps, for each leading slice, the
    antenna combination with the largest captured energy (ties: lowest
    combination index) and zeroes the rest.
    """
    r = np.asarray(r, dtype=np.complex128)
    flat = np.ascontiguousarray(r.reshape(-1, r.shape[-1]))
    out, _ = _kernels.support_project(flat, codebook.tacs)
    return out.reshape(r.shape)


def project_lattice(v, points) -> np.ndarray:
    """Componentwise rounding to the nearest element of ``points``
    (ties: lowest point index)."""
    v = np.asarray(v, dtype=np.complex128)
    points = np.ascontiguousarray(points, dtype=np.complex128)
    out = _kernels.lattice_project(np.ascontiguousarray(v.ravel()), points)
    return out.reshape(v.shape)
