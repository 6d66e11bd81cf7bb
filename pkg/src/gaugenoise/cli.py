"""Command-line harness: configured runs, sweeps, validation, oracle checks.

A run is described by one JSON document (schema_version 1). Protection
sequences appear either as a named preset or as exact integer
numerator/denominator pairs; they are never stored as floats, so configs
round-trip exactly. Trajectories land in a CSV with the fixed column order
t, epsilon, condensate, trace_error, min_eig (blank fields where a column
does not apply), floats rendered with 17 significant digits so identical
configs give byte-identical files. All files are written to a temp name in
the target directory and renamed into place.

Subcommands: run (one trajectory), sweep (vary V, gamma, or beta and fit
the violation at the reference time against the axis), validate (compliance
and golden-rule report, no time evolution), oracle-compare (banded tensor
against the jump-operator form on a small lattice).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    T_FIX,
    finite_difference_slope,
    first_order_slope,
    fit_power_law,
)
from .dynamics import (
    IntegratorConfig,
    default_time_grid,
    eigenbasis_observables,
    evolve_redfield,
)
from .models import (
    ModelSystem,
    ProtectionSpec,
    build_u1_qlm,
    build_z2_lgt,
    check_sequence_compliance,
    condensate_operator,
    generator_site_values,
    initial_state,
    sequence_preset,
    violation_operator,
)
from .noise import ZERO_FREQ_MODES, NoiseSpec, build_couplings
from .operators import CapacityError
from .redfield import (
    CONVENTION,
    DEGENERACY_FLOOR,
    ValidityReport,
    build_lindblad_dissipator,
    build_redfield_tensor,
    floor_frequencies,
    golden_rule_rates,
    min_sampled_gap,
)

SCHEMA_VERSION = 1
WORKERS_ENV = "GAUGENOISE_WORKERS"
SEQUENCE_PRESETS = ("paper-u1-compliant", "staggered", "paper-z2")
GENERATOR_CHOICES = ("auto", "banded", "jumps")
BIN_EXACT_CUTOFF = 1e-12
CSV_HEADER = "t,epsilon,condensate,trace_error,min_eig"
WEAK_COUPLING_THRESHOLD = 0.1


class ConfigError(ValueError):
    """Invalid run configuration; the message lists field-level problems."""


@dataclass(frozen=True)
class RunConfig:
    model_kind: str
    sites: int
    coupling: float
    model_extra: tuple  # (("mu", x),) or (("h", x), ("n_max", n))
    initial_state: str
    protection_strength: float
    sequence_name: str | None
    sequence: tuple[Fraction, ...]
    generator_kind: str
    gamma: float
    beta: float
    zero_freq_mode: str
    omega_min: float
    couplings: str
    secular_cutoff: float
    degeneracy_floor: float
    generator: str
    integrator: IntegratorConfig
    t_max: float
    samples_per_decade: int
    track_positivity: bool | str
    out_dir: str
    prefix: str


def _get(doc, path, key, expect, errors, default=None, required=False):
    if key not in doc:
        if required:
            errors.append(f"{path}.{key}: missing")
        return default
    val = doc[key]
    if expect is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            errors.append(f"{path}.{key}: expected a number, got {val!r}")
            return default
        return float(val)
    if expect is int:
        if isinstance(val, bool) or not isinstance(val, int):
            errors.append(f"{path}.{key}: expected an integer, got {val!r}")
            return default
        return val
    if not isinstance(val, expect):
        errors.append(f"{path}.{key}: expected {expect.__name__}, got {val!r}")
        return default
    return val


def _parse_sequence(raw, sites, errors):
    """Sequence as preset name or exact [numerator, denominator] pairs."""
    if isinstance(raw, str):
        if raw not in SEQUENCE_PRESETS:
            errors.append(
                f"protection.sequence: unknown preset {raw!r}; "
                f"choices are {', '.join(SEQUENCE_PRESETS)}"
            )
            return raw, ()
        try:
            return raw, sequence_preset(raw, sites)
        except ValueError as exc:
            errors.append(f"protection.sequence: {exc}")
            return raw, ()
    if not isinstance(raw, list):
        errors.append(
            "protection.sequence: expected a preset name or a list of "
            "[numerator, denominator] pairs"
        )
        return None, ()
    seq = []
    for k, pair in enumerate(raw):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(p, int) and not isinstance(p, bool) for p in pair)
        ):
            errors.append(
                f"protection.sequence[{k}]: expected [numerator, denominator] "
                "with integer entries"
            )
            return None, ()
        if pair[1] == 0:
            errors.append(f"protection.sequence[{k}]: zero denominator")
            return None, ()
        seq.append(Fraction(pair[0], pair[1]))
    if len(seq) != sites:
        errors.append(
            f"protection.sequence: got {len(seq)} weights for {sites} sites"
        )
    return None, tuple(seq)


def parse_config(doc: dict) -> RunConfig:
    """Validate a config document; raises ConfigError listing every problem."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.append(
            f"schema_version: expected {SCHEMA_VERSION}, got {version!r}"
        )

    model = _get(doc, "config", "model", dict, errors, default={}, required=True)
    kind = _get(model, "model", "kind", str, errors, default="u1_qlm")
    if kind not in ("u1_qlm", "z2_lgt"):
        errors.append(f"model.kind: expected u1_qlm or z2_lgt, got {kind!r}")
        kind = "u1_qlm"
    sites = _get(model, "model", "L", int, errors, default=2, required=True)
    if sites < 2 or sites % 2:
        errors.append(f"model.L: expected an even count >= 2, got {sites}")
        sites = 2
    coupling = _get(model, "model", "J", float, errors, default=1.0)
    if coupling is not None and coupling <= 0:
        errors.append(f"model.J: expected a positive energy, got {coupling}")
    if kind == "u1_qlm":
        extra = (("mu", _get(model, "model", "mu", float, errors, default=0.5)),)
    else:
        n_max = _get(model, "model", "n_max", int, errors, default=1)
        if n_max is not None and n_max < 1:
            errors.append(f"model.n_max: expected >= 1, got {n_max}")
        extra = (
            ("h", _get(model, "model", "h", float, errors, default=0.54)),
            ("n_max", n_max),
        )

    state = _get(doc, "config", "initial_state", str, errors, required=True)
    if state is not None and not state:
        errors.append("initial_state: must be a nonempty name")

    prot = _get(doc, "config", "protection", dict, errors, default={}, required=True)
    strength = _get(prot, "protection", "V", float, errors, default=0.0, required=True)
    if strength is not None and strength < 0:
        errors.append(f"protection.V: expected >= 0, got {strength}")
    gen_kind = _get(prot, "protection", "generator_kind", str, errors, default="full")
    if gen_kind not in ("full", "pseudo"):
        errors.append(
            f"protection.generator_kind: expected full or pseudo, got {gen_kind!r}"
        )
    elif gen_kind == "pseudo" and kind == "u1_qlm":
        errors.append(
            "protection.generator_kind: pseudo protection is defined for "
            "z2_lgt only"
        )
    if "sequence" not in prot:
        errors.append("protection.sequence: missing")
        seq_name, sequence = None, ()
    else:
        seq_name, sequence = _parse_sequence(prot["sequence"], sites, errors)

    noise = _get(doc, "config", "noise", dict, errors, default={}, required=True)
    gamma = _get(noise, "noise", "gamma", float, errors, default=0.0, required=True)
    if gamma is not None and gamma < 0:
        errors.append(f"noise.gamma: expected >= 0, got {gamma}")
    beta = _get(noise, "noise", "beta", float, errors, default=1.0, required=True)
    if beta is not None and not 0 < beta < 2:
        errors.append(f"noise.beta: expected 0 < beta < 2, got {beta}")
        beta = 1.0
    zero_mode = _get(noise, "noise", "zero_freq_mode", str, errors, default="zero")
    if zero_mode not in ZERO_FREQ_MODES:
        errors.append(
            f"noise.zero_freq_mode: expected one of {ZERO_FREQ_MODES}, "
            f"got {zero_mode!r}"
        )
        zero_mode = "zero"
    omega_min = _get(noise, "noise", "omega_min", float, errors, default=0.01)
    if omega_min is not None and omega_min <= 0:
        errors.append(f"noise.omega_min: expected > 0, got {omega_min}")
        omega_min = 0.01

    couplings = _get(doc, "config", "couplings", str, errors, default="default")
    if couplings != "default":
        errors.append(f"couplings: the only preset is 'default', got {couplings!r}")

    cutoff = _get(doc, "config", "secular_cutoff", float, errors, default=0.1)
    if cutoff is not None and cutoff <= 0:
        errors.append(f"secular_cutoff: expected > 0, got {cutoff}")
    floor = _get(doc, "config", "degeneracy_floor", float, errors, default=DEGENERACY_FLOOR)
    if floor is not None and floor < 0:
        errors.append(f"degeneracy_floor: expected >= 0, got {floor}")
    generator = _get(doc, "config", "generator", str, errors, default="auto")
    if generator not in GENERATOR_CHOICES:
        errors.append(
            f"generator: expected one of {GENERATOR_CHOICES}, got {generator!r}"
        )
        generator = "auto"

    integ = _get(doc, "config", "integrator", dict, errors, default={})
    method = _get(integ, "integrator", "method", str, errors, default="adaptive")
    rtol = _get(integ, "integrator", "rtol", float, errors, default=1e-8)
    atol = _get(integ, "integrator", "atol", float, errors, default=1e-10)
    max_step = integ.get("max_step")
    if max_step is not None and (
        isinstance(max_step, bool) or not isinstance(max_step, (int, float))
    ):
        errors.append(f"integrator.max_step: expected a number or null, got {max_step!r}")
        max_step = None
    try:
        integrator = IntegratorConfig(
            method=method,
            rtol=rtol,
            atol=atol,
            max_step=np.inf if max_step is None else float(max_step),
        )
    except ValueError as exc:
        errors.append(f"integrator: {exc}")
        integrator = IntegratorConfig()

    grid = _get(doc, "config", "time_grid", dict, errors, default={}, required=True)
    t_max = _get(grid, "time_grid", "t_max", float, errors, default=2.0, required=True)
    if t_max is not None and t_max <= 1e-2:
        errors.append(
            f"time_grid.t_max: the grid starts at 1e-2, so t_max must exceed "
            f"it; got {t_max}"
        )
        t_max = 2.0
    per_decade = _get(grid, "time_grid", "samples_per_decade", int, errors, default=200)
    if per_decade is not None and per_decade < 1:
        errors.append(f"time_grid.samples_per_decade: expected >= 1, got {per_decade}")
        per_decade = 200

    track = doc.get("track_positivity", "auto")
    if track not in ("auto", True, False):
        errors.append(
            f"track_positivity: expected auto, true, or false, got {track!r}"
        )
        track = "auto"

    outputs = _get(doc, "config", "outputs", dict, errors, default={})
    out_dir = _get(outputs, "outputs", "out_dir", str, errors, default="runs")
    prefix = _get(outputs, "outputs", "prefix", str, errors, default="run")
    if prefix is not None and (not prefix or "/" in prefix or os.sep in prefix):
        errors.append(f"outputs.prefix: must be a bare file-name stem, got {prefix!r}")
        prefix = "run"

    if errors:
        raise ConfigError("\n".join(errors))
    return RunConfig(
        model_kind=kind,
        sites=sites,
        coupling=coupling,
        model_extra=extra,
        initial_state=state,
        protection_strength=strength,
        sequence_name=seq_name,
        sequence=sequence,
        generator_kind=gen_kind,
        gamma=gamma,
        beta=beta,
        zero_freq_mode=zero_mode,
        omega_min=omega_min,
        couplings=couplings,
        secular_cutoff=cutoff,
        degeneracy_floor=floor,
        generator=generator,
        integrator=integrator,
        t_max=t_max,
        samples_per_decade=per_decade,
        track_positivity=track,
        out_dir=out_dir,
        prefix=prefix,
    )


def serialize_config(cfg: RunConfig) -> dict:
    """Canonical JSON document; parse_config(serialize_config(c)) == c."""
    model = {"kind": cfg.model_kind, "L": cfg.sites, "J": cfg.coupling}
    model.update(dict(cfg.model_extra))
    if cfg.sequence_name is not None:
        seq = cfg.sequence_name
    else:
        seq = [[f.numerator, f.denominator] for f in cfg.sequence]
    return {
        "schema_version": SCHEMA_VERSION,
        "model": model,
        "initial_state": cfg.initial_state,
        "protection": {
            "V": cfg.protection_strength,
            "sequence": seq,
            "generator_kind": cfg.generator_kind,
        },
        "noise": {
            "gamma": cfg.gamma,
            "beta": cfg.beta,
            "zero_freq_mode": cfg.zero_freq_mode,
            "omega_min": cfg.omega_min,
        },
        "couplings": cfg.couplings,
        "secular_cutoff": cfg.secular_cutoff,
        "degeneracy_floor": cfg.degeneracy_floor,
        "generator": cfg.generator,
        "integrator": {
            "method": cfg.integrator.method,
            "rtol": cfg.integrator.rtol,
            "atol": cfg.integrator.atol,
            "max_step": None
            if np.isinf(cfg.integrator.max_step)
            else cfg.integrator.max_step,
        },
        "time_grid": {
            "t_max": cfg.t_max,
            "samples_per_decade": cfg.samples_per_decade,
        },
        "track_positivity": cfg.track_positivity
        if cfg.track_positivity == "auto"
        else bool(cfg.track_positivity),
        "outputs": {"out_dir": cfg.out_dir, "prefix": cfg.prefix},
    }


def config_json_text(cfg: RunConfig) -> str:
    return json.dumps(serialize_config(cfg), indent=2, sort_keys=True) + "\n"


def build_model_from_config(cfg: RunConfig) -> ModelSystem:
    protection = ProtectionSpec(
        strength=cfg.protection_strength,
        sequence=cfg.sequence,
        generator_kind=cfg.generator_kind,
    )
    extra = dict(cfg.model_extra)
    if cfg.model_kind == "u1_qlm":
        return build_u1_qlm(
            sites=cfg.sites,
            coupling=cfg.coupling,
            mass=extra["mu"],
            protection=protection,
        )
    return build_z2_lgt(
        sites=cfg.sites,
        coupling=cfg.coupling,
        field_h=extra["h"],
        n_max=extra["n_max"],
        protection=protection,
    )


def noise_from_config(cfg: RunConfig) -> NoiseSpec:
    return NoiseSpec(
        strength=cfg.gamma,
        exponent=cfg.beta,
        zero_freq_mode=cfg.zero_freq_mode,
        floor_frequency=cfg.omega_min,
    )


def resolve_generator_choice(cfg: RunConfig) -> str:
    """Unprotected spectra are too degenerate for the banded tensor at the
    default cutoff; they run through the jump-operator form instead."""
    if cfg.generator != "auto":
        return cfg.generator
    return "jumps" if cfg.protection_strength == 0 else "banded"


def build_generator(cfg: RunConfig, model, couplings, noise):
    choice = resolve_generator_choice(cfg)
    if choice == "jumps":
        return choice, build_lindblad_dissipator(
            model, couplings, noise, degeneracy_floor=cfg.degeneracy_floor
        )
    return choice, build_redfield_tensor(
        model,
        couplings,
        noise,
        secular_cutoff=cfg.secular_cutoff,
        degeneracy_floor=cfg.degeneracy_floor,
    )


def validity_report(model, couplings, noise, generator, choice: str) -> ValidityReport:
    if choice == "banded":
        return generator.validity
    rates = golden_rule_rates(
        model, couplings, noise, degeneracy_floor=generator.degeneracy_floor
    )
    escape = rates.sum(axis=0) - np.diag(rates)
    return ValidityReport(
        max_escape_rate=float(escape.max()) if escape.size else 0.0,
        min_nonzero_gap=min_sampled_gap(generator.sampled_frequencies),
        secular_cutoff=0.0,
        convention=CONVENTION,
    )


def validity_payload(report: ValidityReport, choice: str) -> dict:
    ok = report.weak_coupling_ok(WEAK_COUPLING_THRESHOLD)
    payload = {
        "generator": choice,
        "max_escape_rate": report.max_escape_rate,
        "min_nonzero_gap": report.min_nonzero_gap,
        "rate_to_gap_ratio": report.rate_to_gap_ratio,
        "weak_coupling_ok": bool(ok),
        "threshold": WEAK_COUPLING_THRESHOLD,
        "secular_cutoff": report.secular_cutoff,
        "convention": report.convention,
    }
    if not ok:
        payload["warning"] = (
            "golden-rule escape rate is not small against the level spacing; "
            "the weak-coupling expansion is marginal for this parameter set"
        )
    return payload


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def trajectory_csv_text(traj) -> str:
    lines = [CSV_HEADER]
    cond = traj.condensate
    mine = traj.min_eigenvalue
    for k, t in enumerate(traj.times):
        lines.append(
            ",".join(
                (
                    _fmt(t),
                    _fmt(traj.violation[k]),
                    _fmt(cond[k]) if cond is not None else "",
                    _fmt(traj.trace_error[k]),
                    _fmt(mine[k]) if mine is not None else "",
                )
            )
        )
    return "\n".join(lines) + "\n"


def read_trajectory_csv(path) -> dict[str, np.ndarray | None]:
    """Columns back as arrays; all-blank columns come back as None."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r} in {path}")
        cols: list[list[str]] = [[], [], [], [], []]
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 5:
                raise ValueError(f"malformed CSV row {line!r} in {path}")
            for c, p in zip(cols, parts):
                c.append(p)
    names = CSV_HEADER.split(",")
    out: dict[str, np.ndarray | None] = {}
    for name, col in zip(names, cols):
        if all(p == "" for p in col):
            out[name] = None
        else:
            out[name] = np.array([float(p) for p in col])
    return out


def metadata_payload(cfg: RunConfig, traj, choice: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "config": serialize_config(cfg),
        "sequence_rationals": [
            [f.numerator, f.denominator] for f in cfg.sequence
        ],
        "generator": choice,
        "dim": traj.metadata.get("dim"),
        "n_steps": traj.metadata.get("n_steps"),
        "n_rhs": traj.metadata.get("n_rhs"),
        "max_hermiticity_correction": traj.metadata.get(
            "max_hermiticity_correction"
        ),
        "max_trace_error": float(np.max(traj.trace_error)),
    }


def run_single(cfg: RunConfig) -> dict:
    """One configured trajectory; writes CSV + metadata + validity files."""
    model = build_model_from_config(cfg)
    couplings = build_couplings(model)
    noise = noise_from_config(cfg)
    choice, generator = build_generator(cfg, model, couplings, noise)

    report = validity_report(model, couplings, noise, generator, choice)
    validity = validity_payload(report, choice)
    if "warning" in validity:
        print(f"warning: {validity['warning']}", file=sys.stderr)

    observables = {"violation": violation_operator(model)}
    if cfg.model_kind == "u1_qlm":
        observables["condensate"] = condensate_operator(model)
    observables = eigenbasis_observables(generator, observables)
    rho0 = initial_state(model, cfg.initial_state)
    times = default_time_grid(cfg.t_max, per_decade=cfg.samples_per_decade)
    track = (
        choice == "jumps"
        if cfg.track_positivity == "auto"
        else bool(cfg.track_positivity)
    )
    traj = evolve_redfield(
        rho0,
        generator,
        times,
        observables,
        cfg.integrator,
        track_positivity=track,
    )

    out = Path(cfg.out_dir)
    paths = {
        "csv": out / f"{cfg.prefix}.csv",
        "metadata": out / f"{cfg.prefix}.metadata.json",
        "validity": out / f"{cfg.prefix}.validity.json",
    }
    atomic_write_text(paths["csv"], trajectory_csv_text(traj))
    atomic_write_text(
        paths["metadata"],
        json.dumps(metadata_payload(cfg, traj, choice), indent=2, sort_keys=True)
        + "\n",
    )
    atomic_write_text(
        paths["validity"], json.dumps(validity, indent=2, sort_keys=True) + "\n"
    )
    eps_at_tfix = (
        float(np.interp(T_FIX, traj.times, traj.violation))
        if cfg.t_max >= T_FIX
        else None
    )
    return {
        "paths": {k: str(v) for k, v in paths.items()},
        "eps_final": float(traj.violation[-1]),
        "eps_at_tfix": eps_at_tfix,
        "weak_coupling_ok": validity["weak_coupling_ok"],
        "generator": choice,
    }


def _load_config_file(path: str, out_dir: str | None) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config: invalid JSON at {path}:{exc.lineno}:{exc.colno}: {exc.msg}"
        ) from exc
    if out_dir is not None:
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be a JSON object")
        doc.setdefault("outputs", {})["out_dir"] = out_dir
    return parse_config(doc)


def cmd_run(args) -> int:
    cfg = _load_config_file(args.config, args.out_dir)
    result = run_single(cfg)
    print(
        f"run complete: eps(t_final) = {result['eps_final']:.6g}, "
        f"files in {cfg.out_dir}"
    )
    return 0


def _axis_config(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    tag = f"{cfg.prefix}_{axis}{value:g}"
    if axis == "V":
        return replace(cfg, protection_strength=value, prefix=tag)
    if axis == "gamma":
        return replace(cfg, gamma=value, prefix=tag)
    return replace(cfg, beta=value, prefix=tag)


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV}: expected an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV}: expected >= 1, got {n}")
    return n


def _sweep_worker(doc: dict) -> dict:
    return run_single(parse_config(doc))


def cmd_sweep(args) -> int:
    cfg = _load_config_file(args.config, args.out_dir)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        print(f"sweep: bad --values {args.values!r}", file=sys.stderr)
        return 2
    if not values:
        print("sweep: --values is empty", file=sys.stderr)
        return 2
    point_cfgs = [_axis_config(cfg, args.axis, v) for v in values]
    workers = min(_worker_count(), len(point_cfgs))
    if workers > 1:
        docs = [serialize_config(c) for c in point_cfgs]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, docs))
    else:
        results = [run_single(c) for c in point_cfgs]

    record = {
        "axis": args.axis,
        "values": values,
        "t_fix": T_FIX,
        "eps_at_tfix": [r["eps_at_tfix"] for r in results],
        "runs": [r["paths"] for r in results],
    }
    if len(values) >= 3:
        if any(e is None for e in record["eps_at_tfix"]):
            raise ConfigError(
                f"sweep: time_grid.t_max must reach t_fix = {T_FIX} for the fit"
            )
        fit = fit_power_law(values, record["eps_at_tfix"])
        record["fit"] = {
            "exponent": fit.exponent,
            "amplitude": fit.amplitude,
            "r_squared": fit.r_squared,
            "window": list(fit.window),
            "n_points": fit.n_points,
        }
        print(
            f"sweep complete: eps(t_fix) ~ {args.axis}^{fit.exponent:.3f} "
            f"(r^2 = {fit.r_squared:.4f})"
        )
    else:
        print(
            "warning: fewer than 3 sweep values, writing trajectories only",
            file=sys.stderr,
        )
        print("sweep complete: no fit")
    fit_path = Path(cfg.out_dir) / f"{cfg.prefix}.fit.json"
    atomic_write_text(fit_path, json.dumps(record, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_validate(args) -> int:
    cfg = _load_config_file(args.config, args.out_dir)
    model = build_model_from_config(cfg)
    couplings = build_couplings(model)
    noise = noise_from_config(cfg)
    compliance = check_sequence_compliance(
        cfg.sequence,
        generator_site_values(model, kind=cfg.generator_kind),
        model.target,
    )
    rates = golden_rule_rates(
        model, couplings, noise, degeneracy_floor=cfg.degeneracy_floor
    )
    escape = rates.sum(axis=0) - np.diag(rates)
    energies = np.linalg.eigvalsh(model.system_hamiltonian())
    report = ValidityReport(
        max_escape_rate=float(escape.max()),
        min_nonzero_gap=min_sampled_gap(
            floor_frequencies(
                energies[:, None] - energies[None, :], cfg.degeneracy_floor
            )
        ),
        secular_cutoff=cfg.secular_cutoff,
        convention=CONVENTION,
    )
    payload = {
        "compliance": {
            "compliant": compliance.compliant,
            "witness": list(compliance.witness) if compliance.witness else None,
            "tuples_checked": compliance.tuples_checked,
        },
        "golden_rule": validity_payload(report, resolve_generator_choice(cfg)),
    }
    atomic_write_text(
        Path(cfg.out_dir) / f"{cfg.prefix}.validate.json",
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )
    verdict = "compliant" if compliance.compliant else "noncompliant"
    print(f"sequence: {verdict} ({compliance.tuples_checked} tuples checked)")
    if compliance.witness:
        print(f"witness charge tuple: {list(compliance.witness)}")
    print(
        f"golden rule: max escape rate {report.max_escape_rate:.6g}, "
        f"min sampled gap {report.min_nonzero_gap:.6g}, "
        f"ratio {report.rate_to_gap_ratio:.6g}"
    )
    return 0


def cmd_oracle_compare(args) -> int:
    cfg = _load_config_file(args.config, args.out_dir)
    model = build_model_from_config(cfg)
    couplings = build_couplings(model)
    noise = noise_from_config(cfg)

    banded = build_redfield_tensor(
        model,
        couplings,
        noise,
        secular_cutoff=BIN_EXACT_CUTOFF,
        degeneracy_floor=cfg.degeneracy_floor,
    )
    jumps = build_lindblad_dissipator(
        model, couplings, noise, degeneracy_floor=cfg.degeneracy_floor
    )

    payload: dict = {"bin_exact_cutoff": BIN_EXACT_CUTOFF}
    if cfg.sites == 2:
        diff = banded.dissipator_matrix() - jumps.superoperator()
        payload["superoperator_max_abs_diff"] = float(np.max(np.abs(diff)))
        payload["superoperator_frobenius_diff"] = float(np.linalg.norm(diff))
    else:
        payload["superoperator_max_abs_diff"] = None
        payload["note"] = (
            "full superoperator comparison is restricted to L = 2; "
            "trajectory comparison only"
        )

    observables = {"violation": violation_operator(model)}
    rho0 = initial_state(model, cfg.initial_state)
    times = default_time_grid(cfg.t_max, per_decade=cfg.samples_per_decade)
    t_band = evolve_redfield(
        rho0,
        banded,
        times,
        eigenbasis_observables(banded, observables),
        cfg.integrator,
    )
    t_jump = evolve_redfield(
        rho0,
        jumps,
        times,
        eigenbasis_observables(jumps, observables),
        cfg.integrator,
    )
    payload["max_violation_diff"] = float(
        np.max(np.abs(t_band.violation - t_jump.violation))
    )

    slope = first_order_slope(
        model, couplings, noise, rho0, degeneracy_floor=cfg.degeneracy_floor
    )
    dt = 1e-3 / cfg.coupling
    fd_traj = evolve_redfield(
        rho0,
        jumps,
        np.array([0.0, dt / 2, dt]),
        eigenbasis_observables(jumps, observables),
        cfg.integrator,
    )
    fd = finite_difference_slope(fd_traj.times, fd_traj.violation, dt)
    payload["first_order_slope"] = slope
    payload["finite_difference_slope"] = fd
    payload["slope_relative_diff"] = (
        abs(fd - slope) / abs(slope) if slope != 0 else abs(fd)
    )

    atomic_write_text(
        Path(cfg.out_dir) / f"{cfg.prefix}.oracle.json",
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )
    if payload["superoperator_max_abs_diff"] is not None:
        print(
            f"superoperator max |diff|: {payload['superoperator_max_abs_diff']:.3e}"
        )
    print(f"max |Delta eps(t)|: {payload['max_violation_diff']:.3e}")
    print(
        f"slope check: generator {slope:.6g} vs finite difference {fd:.6g} "
        f"(rel {payload['slope_relative_diff']:.3e})"
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaugenoise",
        description="Gauge-violation dynamics under 1/f^beta noise",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to a run-config JSON")
        p.add_argument("--out-dir", default=None, help="override outputs.out_dir")

    p_run = sub.add_parser("run", help="integrate one configured trajectory")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="repeat a run along one axis and fit")
    add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=("V", "gamma", "beta"))
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated axis values"
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser(
        "validate", help="compliance and golden-rule report, no evolution"
    )
    add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_oc = sub.add_parser(
        "oracle-compare", help="banded tensor against the jump-operator form"
    )
    add_common(p_oc)
    p_oc.set_defaults(func=cmd_oracle_compare)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in str(exc).splitlines():
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except (CapacityError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
