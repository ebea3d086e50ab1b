"""Link-level simulation toolkit for single- and multiuser GSM
single-carrier transmission over frequency-selective channels."""

__version__ = "0.1.0"

from .mapping import (GsmBlock, GsmCodebook, SystemConfig, build_codebook,
                      demap_bits, map_bits, project_lattice, project_support,
                      qam_constellation)
from .channel import (ETU, FLAT, ChannelRealization, DelayProfile,
                      FrequencyDomainChannel, SampledProfile,
                      add_cyclic_prefix, apply_channel, complex_awgn,
                      draw_realization, get_profile, load_profile_csv,
                      noise_variance_for_snr, sample_profile, sampled_profile,
                      to_frequency)
from .transforms import block_fft, block_ifft
from .admm import (ConfigurationError, DetectionResult, DetectorConfig,
                   DetectorState, admm_step, detect, init_state, objective,
                   precompute_solvers, write_trace_csv)
from .baselines import (OracleGuardError, block_objective, mld_oracle,
                        mmse_detect, oracle_candidate_count)
from .sim import (SweepPoint, SweepResult, SweepSpec, TrialResult, child_seed,
                  config_hash, run_sweep, run_trial, simulate_block,
                  snr_at_target)

__all__ = [
    "GsmBlock", "GsmCodebook", "SystemConfig", "build_codebook", "demap_bits",
    "map_bits", "project_lattice", "project_support", "qam_constellation",
    "ETU", "FLAT", "ChannelRealization", "DelayProfile",
    "FrequencyDomainChannel", "SampledProfile", "add_cyclic_prefix",
    "apply_channel", "complex_awgn", "draw_realization", "get_profile",
    "load_profile_csv", "noise_variance_for_snr", "sample_profile",
    "sampled_profile", "to_frequency", "block_fft", "block_ifft",
    "ConfigurationError", "DetectionResult", "DetectorConfig", "DetectorState",
    "admm_step", "detect", "init_state", "objective", "precompute_solvers",
    "write_trace_csv", "OracleGuardError", "block_objective", "mld_oracle",
    "mmse_detect", "oracle_candidate_count", "SweepPoint", "SweepResult",
    "SweepSpec", "TrialResult", "child_seed", "config_hash", "run_sweep",
    "run_trial", "simulate_block", "snr_at_target",
]
