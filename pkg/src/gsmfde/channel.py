"""Frequency-selective MIMO channel: delay profiles, tapped-delay-line
realizations, time-domain application with cyclic prefix, and the
per-frequency matrix representation."""

import csv
import re
from dataclasses import dataclass

import numpy as np

from .mapping import SystemConfig


@dataclass(frozen=True)
class DelayProfile:
    """Power-delay profile: tap delays in seconds and mean powers in dB."""

    name: str
    delays_s: tuple
    powers_db: tuple

    def __post_init__(self):
        if len(self.delays_s) == 0:
            raise ValueError("profile needs at least one tap")
        if len(self.delays_s) != len(self.powers_db):
            raise ValueError("delays and powers must have equal length")
        d = np.asarray(self.delays_s, float)
        if d[0] < 0 or (len(d) > 1 and np.any(np.diff(d) <= 0)):
            raise ValueError("delays must be nonnegative and strictly increasing")


# Extended Typical Urban tapped-delay-line profile (3GPP TS 36.104).
ETU = DelayProfile(
    name="etu",
    delays_s=(0e-9, 50e-9, 120e-9, 200e-9, 230e-9, 500e-9,
              1600e-9, 2300e-9, 5000e-9),
    powers_db=(-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0),
)

FLAT = DelayProfile(name="flat", delays_s=(0.0,), powers_db=(0.0,))


def load_profile_csv(path) -> DelayProfile:
    """Load a custom profile from CSV rows of (delay_seconds, power_db)."""
    delays, powers = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                d, p = float(row[0]), float(row[1])
            except ValueError:
                continue  # header row
            delays.append(d)
            powers.append(p)
    if not delays:
        raise ValueError(f"no (delay_seconds, power_db) rows found in {path}")
    return DelayProfile(name=str(path), delays_s=tuple(delays),
                        powers_db=tuple(powers))


def get_profile(spec: str) -> DelayProfile:
    """Resolve a profile name ("etu", "flat") or a CSV file path."""
    key = spec.strip().lower()
    if key == "etu":
        return ETU
    if key == "flat":
        return FLAT
    return load_profile_csv(spec)


@dataclass(frozen=True)
class SampledProfile:
    """Profile discretized to sample-spaced taps with unit total power."""

    name: str
    sample_delays: tuple   # strictly increasing nonnegative ints
    powers: tuple          # linear, sums to 1

    @property
    def n_taps(self) -> int:
        """Channel length L including zero-power gaps."""
        return self.sample_delays[-1] + 1

    def dense_powers(self) -> np.ndarray:
        out = np.zeros(self.n_taps)
        out[list(self.sample_delays)] = self.powers
        return out


def sample_profile(profile: DelayProfile, sample_period: float) -> SampledProfile:
    """Discretize ``profile`` to the sampling grid.

    Delays round to the nearest sample; taps landing on the same sample have
    their linear powers summed; powers are renormalized to unit total.
    """
    if sample_period <= 0:
        raise ValueError("sample_period must be positive")
    merged: dict[int, float] = {}
    for d, p_db in zip(profile.delays_s, profile.powers_db):
        k = int(round(d / sample_period))
        merged[k] = merged.get(k, 0.0) + 10.0 ** (p_db / 10.0)
    delays = tuple(sorted(merged))
    total = sum(merged.values())
    powers = tuple(merged[k] / total for k in delays)
    return SampledProfile(name=profile.name, sample_delays=delays, powers=powers)


_UNIFORM_RE = re.compile(r"^uniform-(\d+)$")


def sampled_profile(spec: str, sample_period: float) -> SampledProfile:
    """Resolve and discretize a profile spec.

    "uniform-<L>" yields L equal-power sample-spaced taps independently of
    the sample period; every other spec goes through :func:`get_profile`
    and :func:`sample_profile`.
    """
    m = _UNIFORM_RE.match(spec.strip().lower())
    if m:
        n_taps = int(m.group(1))
        if n_taps < 1:
            raise ValueError("uniform profile needs at least one tap")
        return SampledProfile(name=spec, sample_delays=tuple(range(n_taps)),
                              powers=(1.0 / n_taps,) * n_taps)
    return sample_profile(get_profile(spec), sample_period)


@dataclass
class ChannelRealization:
    """One block-fading draw: per-tap gains of shape
    (L, n_rx, n_users, n_tx), zero at unoccupied delays."""

    gains: np.ndarray
    sample_delays: tuple

    @property
    def n_taps(self) -> int:
        return self.gains.shape[0]

    @property
    def n_rx(self) -> int:
        return self.gains.shape[1]

    @property
    def n_streams(self) -> int:
        return self.gains.shape[2] * self.gains.shape[3]

    def tap_matrices(self) -> np.ndarray:
        """Per-tap channel matrices of shape (L, n_rx, n_streams)."""
        return self.gains.reshape(self.n_taps, self.n_rx, self.n_streams)


def draw_realization(cfg: SystemConfig, profile: SampledProfile,
                     rng: np.random.Generator) -> ChannelRealization:
    """Draw i.i.d. circularly symmetric Gaussian tap gains with per-tap
    variance equal to the profile power.  Requires L <= n_cp + 1."""
    n_taps = profile.n_taps
    if n_taps > cfg.n_cp + 1:
        raise ValueError(f"channel length {n_taps} exceeds n_cp + 1 = "
                         f"{cfg.n_cp + 1}")
    gains = np.zeros((n_taps, cfg.n_rx, cfg.n_users, cfg.n_tx),
                     dtype=np.complex128)
    shape = (cfg.n_rx, cfg.n_users, cfg.n_tx)
    for delay, power in zip(profile.sample_delays, profile.powers):
        scale = np.sqrt(power / 2.0)
        gains[delay] = scale * (rng.standard_normal(shape)
                                + 1j * rng.standard_normal(shape))
    return ChannelRealization(gains=gains, sample_delays=profile.sample_delays)


@dataclass
class FrequencyDomainChannel:
    """Per-frequency channel matrices H_k stacked as (n, n_rx, n_streams)."""

    h: np.ndarray

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @property
    def n_rx(self) -> int:
        return self.h.shape[1]

    @property
    def n_streams(self) -> int:
        return self.h.shape[2]


def to_frequency(real: ChannelRealization, n: int) -> FrequencyDomainChannel:
    """DFT of the tap matrices: H_k = sum_i Omega_i exp(-2j*pi*k*i/n)."""
    if real.n_taps > n:
        raise ValueError("channel longer than the block")
    return FrequencyDomainChannel(h=np.fft.fft(real.tap_matrices(), n=n, axis=0))


def complex_awgn(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly symmetric Gaussian noise with per-component variance
    E|n|^2 = variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def add_cyclic_prefix(symbols: np.ndarray, n_cp: int) -> np.ndarray:
    """Prepend a copy of the last ``n_cp`` block entries along axis 0."""
    if n_cp == 0:
        return symbols.copy()
    if n_cp > symbols.shape[0]:
        raise ValueError("cyclic prefix longer than the block")
    return np.concatenate([symbols[-n_cp:], symbols], axis=0)


def apply_channel(real: ChannelRealization, s_with_cp: np.ndarray, n_cp: int,
                  noise_variance: float,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Linear tapped-delay-line convolution over the prefixed block,
    prefix stripped, AWGN of per-component variance ``noise_variance`` added.

    Returns the received block of shape (n, n_rx).
    """
    total = s_with_cp.shape[0]
    n = total - n_cp
    if n < 1:
        raise ValueError("block shorter than the cyclic prefix")
    s = s_with_cp.reshape(total, -1)
    if s.shape[1] != real.n_streams:
        raise ValueError(f"expected {real.n_streams} transmit streams, "
                         f"got {s.shape[1]}")
    taps = real.tap_matrices()
    y = np.zeros((total, real.n_rx), dtype=np.complex128)
    for i in real.sample_delays:
        if i >= total:
            continue
        y[i:] += s[:total - i] @ taps[i].T
    y = y[n_cp:]
    if noise_variance > 0:
        if rng is None:
            raise ValueError("rng required when noise_variance > 0")
        y = y + complex_awgn(rng, y.shape, noise_variance)
    return y


def noise_variance_for_snr(cfg: SystemConfig, snr_db: float) -> float:
    """Per-component noise variance for an SNR per receive antenna defined as
    total mean received signal power per antenna over noise power.

    With unit-energy symbols and unit-power profiles the mean received
    signal power per antenna is n_users * n_active.
    """
    return cfg.n_users * cfg.n_active / 10.0 ** (snr_db / 10.0)
