"""Command-line front end: validated config files in, CSV/JSON results out.

Subcommands: sweep, oracle-compare, fig2, profile-dump.  Exit codes: 0 on
success, 2 on configuration errors, 3 when the exhaustive-oracle guard
refuses a run.
"""

import argparse
import copy
import csv
import os
import sys
from datetime import datetime, timezone

import numpy as np
import yaml

from .admm import DetectorConfig, detect
from .baselines import (OracleGuardError, block_objective, mld_oracle,
                        oracle_candidate_count)
from .channel import sampled_profile
from .mapping import SystemConfig, build_codebook, demap_bits
from .sim import (SweepSpec, child_seed, config_hash, run_sweep, save_results,
                  simulate_block, snr_at_target, spec_to_dict)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3


class SpecError(Exception):
    """Invalid configuration; carries one message per offending key."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ------------------------------------------------------------- config files

_SYSTEM_KEYS = ("n", "n_cp", "n_users", "n_tx", "n_active", "n_rx", "mod_order")
_DETECTOR_KEYS = ("iterations", "restarts", "rho_x", "rho_z", "seed")
_SWEEP_KEYS = ("system", "profile", "sample_period", "detectors", "detector",
               "snr_db", "min_errors", "max_blocks", "seed", "oracle_guard")


def load_config(path) -> dict:
    if not os.path.isfile(path):
        raise SpecError([f"config file not found: {path}"])
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise SpecError([f"config is not valid YAML: {exc}"]) from None
    if not isinstance(data, dict):
        raise SpecError(["config must be a mapping of keys to values"])
    return data


def apply_overrides(config: dict, overrides) -> dict:
    """Apply repeatable ``key.path=value`` overrides; values parse as YAML."""
    out = copy.deepcopy(config)
    for item in overrides or ():
        if "=" not in item:
            raise SpecError([f"override {item!r} is not of the form key=value"])
        path, raw = item.split("=", 1)
        node = out
        keys = path.strip().split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise SpecError([f"override path {path!r} crosses a non-mapping"])
        node[keys[-1]] = yaml.safe_load(raw)
    return out


def _build_system(raw, errors) -> SystemConfig | None:
    if not isinstance(raw, dict):
        errors.append("system: must be a mapping")
        return None
    for key in raw:
        if key not in _SYSTEM_KEYS:
            errors.append(f"system.{key}: unknown key")
    missing = [k for k in _SYSTEM_KEYS if k not in raw]
    if missing:
        errors.append(f"system: missing keys {missing}")
        return None
    try:
        return SystemConfig(**{k: int(raw[k]) for k in _SYSTEM_KEYS})
    except (TypeError, ValueError) as exc:
        errors.append(f"system: {exc}")
        return None


def _build_detector(raw, errors) -> DetectorConfig:
    if raw is None:
        return DetectorConfig()
    if not isinstance(raw, dict):
        errors.append("detector: must be a mapping")
        return DetectorConfig()
    raw = dict(raw)
    if "q" in raw:  # shorthand for the iteration count
        raw["iterations"] = raw.pop("q")
    for key in raw:
        if key not in _DETECTOR_KEYS:
            errors.append(f"detector.{key}: unknown key")
    kwargs = {k: raw[k] for k in _DETECTOR_KEYS if k in raw}
    for k in ("rho_x", "rho_z"):
        if isinstance(kwargs.get(k), list):
            kwargs[k] = tuple(kwargs[k])
    try:
        return DetectorConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"detector: {exc}")
        return DetectorConfig()


def build_sweep_spec(config: dict) -> SweepSpec:
    """Validate a sweep config dict; raises SpecError listing every
    offending key."""
    errors = []
    for key in config:
        if key not in _SWEEP_KEYS:
            errors.append(f"{key}: unknown key")
    if "system" not in config:
        errors.append("system: missing")
    system = _build_system(config.get("system"), errors) \
        if "system" in config else None
    detector = _build_detector(config.get("detector"), errors)
    if "snr_db" not in config:
        errors.append("snr_db: missing")
    kwargs = {}
    detectors = config.get("detectors", ["admm"])
    if isinstance(detectors, str):
        detectors = [detectors]
    kwargs["detectors"] = tuple(detectors)
    for key, cast in (("profile", str), ("sample_period", float),
                      ("min_errors", int), ("max_blocks", int),
                      ("seed", int), ("oracle_guard", int)):
        if key in config:
            try:
                kwargs[key] = cast(config[key])
            except (TypeError, ValueError):
                errors.append(f"{key}: expected {cast.__name__}")
    if errors or system is None:
        raise SpecError(errors)
    try:
        return SweepSpec(system=system, snr_db=config["snr_db"],
                         detector=detector, **kwargs)
    except (TypeError, ValueError) as exc:
        raise SpecError([str(exc)]) from None


def _deep_merge(base: dict, patch: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in patch.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _stamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")


# -------------------------------------------------------------- subcommands


def cmd_sweep(args) -> int:
    config = apply_overrides(load_config(args.config), args.override)
    if args.seed is not None:
        config["seed"] = args.seed
    spec = build_sweep_spec(config)
    results = run_sweep(spec, workers=args.workers)
    paths = save_results(spec, results, args.out, _stamp())
    for det, result in results.items():
        print(f"# detector={det} config={config_hash(spec)}")
        for p in result.points:
            print(f"  snr={p.snr_db:6.2f} dB  blocks={p.blocks:5d}  "
                  f"ber={p.ber:.3e} (+/-{p.ci95:.1e})")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    config = apply_overrides(load_config(args.config), args.override)
    if args.seed is not None:
        config["seed"] = args.seed
    instances = config.pop("instances", 100)
    try:
        instances = int(instances)
        if instances < 1:
            raise ValueError
    except (TypeError, ValueError):
        raise SpecError(["instances: expected a positive integer"]) from None
    config.setdefault("detectors", ["admm"])
    config.setdefault("min_errors", 1)
    config.setdefault("max_blocks", 1)
    spec = build_sweep_spec(config)
    if len(spec.snr_db) != 1:
        raise SpecError(["snr_db: oracle-compare needs a single SNR point"])
    count = oracle_candidate_count(spec.system)
    if count > spec.oracle_guard:
        print(f"refusing: exhaustive search needs {count} candidate blocks "
              f"(> guard {spec.oracle_guard})", file=sys.stderr)
        return EXIT_GUARD
    codebook = build_codebook(spec.system)
    rows = []
    matches = violations = 0
    ratios = []
    for i in range(instances):
        bits, _, y_freq, h_freq, _, det_rng = simulate_block(spec, 0, i)
        res = detect(y_freq, h_freq, codebook, spec.system, spec.detector,
                     rng=det_rng)
        ml_block, _ = mld_oracle(y_freq, h_freq, codebook, spec.system,
                                 guard=spec.oracle_guard)
        # evaluate both blocks with the same function so ties compare exactly
        f_admm = block_objective(y_freq, h_freq, res.symbols)
        f_ml = block_objective(y_freq, h_freq, ml_block)
        admm_bits = demap_bits(res.symbols, codebook, spec.system)
        ml_bits = demap_bits(ml_block, codebook, spec.system)
        match = bool(np.array_equal(admm_bits, ml_bits))
        violation = f_admm < f_ml
        matches += match
        violations += violation
        if f_ml > 1e-12:
            ratios.append(f_admm / f_ml)
        rows.append((i, child_seed(spec.seed, 0, i), f_admm, f_ml, match))
    mean_ratio = float(np.mean(ratios)) if ratios else 1.0
    print(f"instances={instances} match_rate={matches / instances:.3f} "
          f"mean_objective_ratio={mean_ratio:.6f} "
          f"objective_violations={violations}")
    for i, seed, f_admm, f_ml, match in rows:
        print(f"  instance={i:4d} seed={seed:020d} f_admm={f_admm:.6e} "
              f"f_ml={f_ml:.6e} match={int(match)}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out,
                            f"oracle_compare_{config_hash(spec)}_{_stamp()}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance", "seed", "f_admm", "f_ml", "match"])
            writer.writerows(rows)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_fig2(args) -> int:
    config = apply_overrides(load_config(args.config), args.override)
    errors = []
    try:
        target = float(config.get("target_ber"))
    except (TypeError, ValueError):
        errors.append("target_ber: expected a float")
        target = None
    base = config.get("base", {})
    members = config.get("members")
    if not isinstance(members, list) or not members:
        errors.append("members: expected a nonempty list")
        raise SpecError(errors)
    labels = [m.get("label") for m in members]
    if any(lbl is None for lbl in labels):
        errors.append("members: every member needs a label")
    if len(set(labels)) != len(labels):
        errors.append("members: duplicate labels")
    specs = []
    for member in members:
        patch = {k: v for k, v in member.items() if k != "label"}
        merged = _deep_merge(base, patch)
        if args.seed is not None:
            merged["seed"] = args.seed
        try:
            specs.append(build_sweep_spec(merged))
        except SpecError as exc:
            errors.extend(f"members[{member.get('label')}].{e}"
                          for e in exc.errors)
    if errors:
        raise SpecError(errors)
    rows = []
    for label, spec in zip(labels, specs):
        results = run_sweep(spec, workers=args.workers)
        det = spec.detectors[0]
        req = snr_at_target(results[det], target)
        cfg = spec.system
        rows.append((label, cfg.n_users / cfg.n_rx,
                     cfg.n_users * cfg.n_tx / cfg.n_rx,
                     "unreachable" if req is None else f"{req:.4f}"))
        print(f"  {label}: load_users={rows[-1][1]:.3f} "
              f"load_streams={rows[-1][2]:.3f} required_snr={rows[-1][3]}")
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"fig2_{_stamp()}.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "load_users", "load_streams",
                         "required_snr_db"])
        writer.writerows(rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_profile_dump(args) -> int:
    name = args.profile
    period = args.sample_period
    if args.config:
        config = apply_overrides(load_config(args.config), args.override)
        name = name or config.get("profile")
        period = period or config.get("sample_period")
    if not name:
        raise SpecError(["profile: missing (use --profile or --config)"])
    period = float(period) if period else 67e-6 / 128
    try:
        prof = sampled_profile(str(name), period)
    except (ValueError, OSError) as exc:
        raise SpecError([f"profile: {exc}"]) from None
    print(f"# profile={prof.name} sample_period={period:.6g} "
          f"n_taps={prof.n_taps}")
    print("sample_delay,power")
    for delay, power in zip(prof.sample_delays, prof.powers):
        print(f"{delay},{power:.12g}")
    return EXIT_OK


# -------------------------------------------------------------------- main


def _add_common(parser, config_required=True):
    parser.add_argument("--config", required=config_required,
                        help="path to a YAML/JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="override a config entry (repeatable), e.g. "
                             "--override detector.iterations=10")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="worker processes for Monte Carlo trials")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsmfde",
        description="GSM single-carrier link simulator with frequency-domain "
                    "detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a BER-vs-SNR sweep")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-compare",
                       help="compare the iterative detector against the "
                            "exhaustive oracle on seeded instances")
    _add_common(p)
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("fig2", help="required-SNR-versus-load family sweep")
    _add_common(p)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("profile-dump", help="print a sampled delay profile")
    _add_common(p, config_required=False)
    p.add_argument("--profile", default=None,
                   help="profile name (etu, flat, uniform-<L>) or CSV path")
    p.add_argument("--sample-period", type=float, default=None,
                   help="sampling period in seconds")
    p.set_defaults(func=cmd_profile_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleGuardError as exc:
        print(f"refusing: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
