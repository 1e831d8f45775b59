"""Command-line runner: parse a config, execute the flow, write reports.

Config files are flat INI sections (see the grammar in the README); every
key is validated and unknown keys are rejected.  A run directory receives
a copy of the config, monitors.csv, field snapshots, summary.json and the
report figures; exit status 0 means clean termination, 1 means bound
violations were found, 2 means the solver failed.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

from . import report
from .diagnostics import check_bounds, detect_translator, initial_bounds, \
    write_monitors
from .domain import AnglePrescription, DomainSpec, build_domain
from .errors import MinkflowError, ParseError, ShootingFailed, ValidationError
from .flow import SolverConfig, bump_field, fourier_field, plane_field, run, \
    zero_field
from .grid import build_grid, write_field
from .oracle import translator_shoot, write_profile

DEFAULT_DOMAIN_SAMPLES = 1024


@dataclass
class RunConfig:
    """Validated run description assembled from a config file."""

    domain_spec: DomainSpec
    alpha: AnglePrescription
    initial_kind: str
    n_r: int
    n_theta: int
    solver: SolverConfig
    out_dir: str
    initial_a: tuple = (0.0, 0.0)
    initial_beta: float = 0.0
    initial_seed: int = 0
    initial_max_slope: float = 0.5
    checks_enabled: bool = True
    check_tol: float = 0.05


_SECTIONS = {
    "domain": {"kind", "radius", "a", "b", "cos", "sin", "center"},
    "alpha": {"constant", "cos", "sin"},
    "initial": {"kind", "a", "beta", "seed", "max_slope"},
    "grid": {"n_r", "n_theta"},
    "solver": {"t_end", "sigma", "eps_space", "trans_tol", "trans_window",
               "snapshot_every", "monitor_every"},
    "output": {"dir"},
    "checks": {"enabled", "tolerance"},
}

_BOOLS = {"true": True, "yes": True, "1": True, "on": True,
          "false": False, "no": False, "0": False, "off": False}


def _number(sections, sec, key, cast, default=None):
    raw = sections.get(sec, {}).get(key)
    if raw is None:
        if default is None:
            raise ValidationError(f"{sec}.{key}", f"missing required key "
                                                  f"{sec}.{key}")
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ParseError(f"could not parse {sec}.{key} = {raw!r}") from None


def _floats(raw):
    return tuple(float(v) for v in raw.replace(",", " ").split())


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration document.

    Raises ParseError for syntax problems and unknown keys (with the
    offending name), ValidationError (carrying the field name) for values
    outside their allowed ranges.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None

    sections: dict[str, dict[str, str]] = {}
    for sec in parser.sections():
        if sec not in _SECTIONS:
            raise ParseError(f"unknown section [{sec}]")
        sections[sec] = {}
        for key, value in parser.items(sec):
            if key not in _SECTIONS[sec]:
                raise ParseError(f"unknown key: {sec}.{key}")
            sections[sec][key] = value.strip()

    for required in ("domain", "grid", "solver", "output"):
        if required not in sections:
            raise ValidationError(required, f"missing section [{required}]")

    # domain
    dom = sections["domain"]
    kind = dom.get("kind")
    center = _number(sections, "domain", "center", _floats, (0.0, 0.0))
    if len(center) != 2:
        raise ValidationError("domain.center", "center needs two numbers")
    if kind == "disk":
        radius = _number(sections, "domain", "radius", float)
        if radius <= 0:
            raise ValidationError("domain.radius")
        spec = DomainSpec.disk(radius, center)
    elif kind == "ellipse":
        a = _number(sections, "domain", "a", float)
        b = _number(sections, "domain", "b", float)
        if a <= 0 or b <= 0:
            raise ValidationError("domain.a" if a <= 0 else "domain.b")
        spec = DomainSpec.ellipse(a, b, center)
    elif kind == "radial-fourier":
        cos = _number(sections, "domain", "cos", _floats)
        sin = _number(sections, "domain", "sin", _floats, ())
        try:
            spec = DomainSpec.radial_fourier(cos, sin, center)
        except ValueError as exc:
            raise ValidationError("domain.cos", str(exc)) from None
    else:
        raise ValidationError("domain.kind", f"unknown domain kind {kind!r}")

    # alpha (defaults to zero)
    al = sections.get("alpha", {})
    if "constant" in al:
        if "cos" in al or "sin" in al:
            raise ValidationError("alpha.constant",
                                  "give either constant or cos/sin, not both")
        alpha = AnglePrescription.constant(_number(sections, "alpha",
                                                   "constant", float))
    elif "cos" in al or "sin" in al:
        alpha = AnglePrescription.fourier(
            _number(sections, "alpha", "cos", _floats, (0.0,)),
            _number(sections, "alpha", "sin", _floats, ()))
    else:
        alpha = AnglePrescription.constant(0.0)

    # grid
    n_r = _number(sections, "grid", "n_r", int)
    n_theta = _number(sections, "grid", "n_theta", int)
    if n_r < 8:
        raise ValidationError("grid.n_r")
    if n_theta < 16 or n_theta % 2:
        raise ValidationError("grid.n_theta")

    # initial data
    ini = sections.get("initial", {"kind": "zero"})
    ikind = ini.get("kind", "zero")
    cfg_kwargs = {}
    if ikind == "plane":
        a_vec = _number(sections, "initial", "a", _floats)
        if len(a_vec) != 2 or a_vec[0] ** 2 + a_vec[1] ** 2 >= 1.0:
            raise ValidationError("initial.a", "plane slope needs |a| < 1")
        cfg_kwargs["initial_a"] = a_vec
    elif ikind == "bump":
        beta = _number(sections, "initial", "beta", float)
        if not 0.0 < beta <= 0.3:
            raise ValidationError("initial.beta", "bump height in (0, 0.3]")
        cfg_kwargs["initial_beta"] = beta
    elif ikind == "fourier":
        cfg_kwargs["initial_seed"] = _number(sections, "initial", "seed", int, 0)
        slope = _number(sections, "initial", "max_slope", float, 0.5)
        if not 0.0 < slope <= 0.8:
            raise ValidationError("initial.max_slope",
                                  "max slope in (0, 0.8]")
        cfg_kwargs["initial_max_slope"] = slope
    elif ikind != "zero":
        raise ValidationError("initial.kind", f"unknown initial kind {ikind!r}")

    # solver
    try:
        solver = SolverConfig(
            t_end=_number(sections, "solver", "t_end", float),
            sigma=_number(sections, "solver", "sigma", float, 0.5),
            eps_space=_number(sections, "solver", "eps_space", float, 1e-10),
            trans_tol=_number(sections, "solver", "trans_tol", float, 1e-4),
            trans_window=_number(sections, "solver", "trans_window", float, 1.0),
            snapshot_every=_number(sections, "solver", "snapshot_every",
                                   float, 1.0),
            monitor_every=_number(sections, "solver", "monitor_every",
                                  float, 0.01))
    except ValueError as exc:
        raise ValidationError("solver", str(exc)) from None

    checks = sections.get("checks", {})
    enabled_raw = checks.get("enabled", "true").lower()
    if enabled_raw not in _BOOLS:
        raise ParseError(f"could not parse checks.enabled = {enabled_raw!r}")
    tol = _number(sections, "checks", "tolerance", float, 0.05)
    if tol < 0:
        raise ValidationError("checks.tolerance")

    return RunConfig(domain_spec=spec, alpha=alpha, initial_kind=ikind,
                     n_r=n_r, n_theta=n_theta, solver=solver,
                     out_dir=sections["output"]["dir"],
                     checks_enabled=_BOOLS[enabled_raw], check_tol=tol,
                     **cfg_kwargs)


def _initial_field(config: RunConfig, grid):
    if config.initial_kind == "zero":
        return zero_field(grid)
    if config.initial_kind == "plane":
        return plane_field(grid, config.initial_a)
    if config.initial_kind == "bump":
        return bump_field(grid, config.initial_beta)
    return fourier_field(grid, config.initial_seed, config.initial_max_slope)


def run_command(config: RunConfig, config_text: str | None = None) -> int:
    """Execute a configured run and write its report.

    Returns 0 on clean termination, 1 when bound checks found violations,
    2 when the solver aborted (partial outputs and a FAILED.txt marker are
    left in the run directory).
    """
    outdir = Path(config.out_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        if config_text is not None:
            (outdir / "config.ini").write_text(config_text)
    except OSError as exc:
        print(f"cannot prepare output directory {outdir}: {exc}",
              file=sys.stderr)
        return 2

    try:
        domain = build_domain(config.domain_spec, config.alpha,
                              DEFAULT_DOMAIN_SAMPLES)
        grid = build_grid(domain, config.n_r, config.n_theta)
        u0 = _initial_field(config, grid)
    except MinkflowError as exc:
        print(f"setup failed: {exc}", file=sys.stderr)
        (outdir / "FAILED.txt").write_text(f"setup failed: {exc!r}\n")
        return 2

    def snapshot_writer(state):
        write_field(outdir / f"snapshot-t{state.t:012.6f}.dat", state.u, state.t)

    started = time.perf_counter()
    try:
        final, records, reason = run(u0, domain, grid, config.solver,
                                     on_snapshot=snapshot_writer)
    except MinkflowError as exc:
        records = getattr(exc, "partial_records", [])
        if records:
            write_monitors(outdir / "monitors.csv", records)
        state = getattr(exc, "partial_state", None)
        if state is not None:
            write_field(outdir / "abort-state.dat", state.u, state.t)
        (outdir / "FAILED.txt").write_text(
            f"{type(exc).__name__}: {exc}\n"
            f"records written: {len(records)}\n")
        print(f"solver failed: {exc}", file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - started

    write_monitors(outdir / "monitors.csv", records)
    bounds = initial_bounds(domain, records[0])
    u0_sup = records[0].sup_abs_u

    violations = []
    if config.checks_enabled:
        for rec in records:
            violations.extend(check_bounds(rec, bounds, u0_sup,
                                           config.check_tol))

    detection = detect_translator(records, config.solver)
    summary = {
        "termination_reason": reason,
        "final_t": final.t,
        "steps": final.step_count,
        "lambda": None if detection is None else detection[0],
        "translator_since": None if detection is None else detection[1],
        "bounds": {
            "c_h": bounds.c_h,
            "alpha_bar": bounds.alpha_bar,
            "kappa_min": bounds.kappa_min,
            "c_alpha": bounds.c_alpha,
            "c_grad": bounds.c_grad,
            "sup_v0": bounds.sup_v0,
        },
        "max_sup_v": max(r.sup_v for r in records),
        "min_spacelike_margin": min(r.spacelike_margin for r in records),
        "sup_u0": u0_sup,
        "checks_enabled": config.checks_enabled,
        "check_tolerance": config.check_tol,
        "violations": len(violations),
        "runtime_seconds": elapsed,
        "grid": {"n_r": config.n_r, "n_theta": config.n_theta},
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    report.render_run_figures(outdir, records, grid, final, bounds,
                              config.solver)

    print(f"terminated: {reason} at t = {final.t:.6g} "
          f"({final.step_count} steps, {elapsed:.1f} s)")
    if detection is not None:
        print(f"translating state: speed = {detection[0]:.8g} "
              f"(steady since t = {detection[1]:.4g})")
    print(f"max sup v = {summary['max_sup_v']:.6g} "
          f"(bound {1.05 * bounds.c_grad:.6g})")
    if config.checks_enabled:
        print(f"bound violations: {len(violations)}")
        for v in violations[:10]:
            print(f"  {v}")
    return 1 if violations else 0


def oracle_command(alpha: float, radius: float, out_dir=".",
                   n_pts: int = 2048) -> int:
    """Shoot the radial translator, print its speed, write profile CSV."""
    try:
        profile = translator_shoot(alpha, radius, n_pts)
    except (ShootingFailed, ValueError) as exc:
        print(f"shooting failed: {exc}", file=sys.stderr)
        return 2
    print(f"lambda = {profile.lam:.12g}")
    outdir = Path(out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_profile(outdir / "translator-profile.csv", profile)
    report.render_profile_figure(outdir / "translator-profile.png", profile)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="minkflow",
        description="spacelike mean curvature flow with prescribed "
                    "boundary angles")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured flow run")
    p_run.add_argument("config", type=Path, help="path to the config file")
    p_run.add_argument("--out", type=Path, default=None,
                       help="override the output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the seed of random initial data")
    p_run.add_argument("--no-checks", action="store_true",
                       help="skip the runtime bound checks")

    p_or = sub.add_parser("oracle", help="radial translator by shooting")
    p_or.add_argument("--alpha", type=float, required=True)
    p_or.add_argument("--radius", type=float, required=True)
    p_or.add_argument("--out", type=Path, default=Path("."))
    p_or.add_argument("--n-pts", type=int, default=2048)

    args = parser.parse_args(argv)
    if args.command == "oracle":
        return oracle_command(args.alpha, args.radius, args.out, args.n_pts)

    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
    except (ParseError, ValidationError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    if args.out is not None:
        config = replace(config, out_dir=str(args.out))
    if args.seed is not None:
        config = replace(config, initial_seed=args.seed)
    if args.no_checks:
        config = replace(config, checks_enabled=False)
    return run_command(config, text)


if __name__ == "__main__":
    sys.exit(main())
