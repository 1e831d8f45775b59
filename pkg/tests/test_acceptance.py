"""Acceptance gate: quantitative checks of the solver's guarantees.

Every test prints one PASS/FAIL line (run with -s to see them on success).
The scenarios are desk-scale: the flagship disk run with constant angle
0.5 from zero data, a small matrix of angle/initial-data combinations, the
exact-plane stationarity pair and the radial-oracle comparison.
"""

import time
import warnings

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from conftest import quiet_run
from minkflow import (AnglePrescription, DomainSpec, SolverConfig,
                      boundary_normal_slope, build_domain, build_grid,
                      detect_translator, extract_translator_profile,
                      radial_flow, theoretical_c, translator_shoot)
from minkflow.diagnostics import initial_bounds
from minkflow.flow import bump_field, zero_field
from minkflow.oracle import RadialProfile, compatible_plane

GRID = (48, 96)


def _report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def _disk(alpha):
    return build_domain(DomainSpec.disk(1.0), AnglePrescription.constant(alpha),
                        1024)


@pytest.fixture(scope="module")
def flagship():
    """Unit disk, alpha = 0.5, zero data, 48x96, run through t_end = 20
    (detection disabled so the records cover the whole interval)."""
    dom = _disk(0.5)
    grid = build_grid(dom, *GRID)
    cfg = SolverConfig(t_end=20.0, sigma=0.5, trans_tol=0.0,
                       snapshot_every=100.0, monitor_every=0.01)
    started = time.perf_counter()
    final, records, reason = quiet_run(zero_field(grid), dom, grid, cfg)
    elapsed = time.perf_counter() - started
    bounds = initial_bounds(dom, records[0])
    return dict(domain=dom, grid=grid, final=final, records=records,
                reason=reason, bounds=bounds, wall=elapsed)


@pytest.fixture(scope="module")
def scenario_matrix():
    """alpha in {0.3, 0.5} x data in {zero, bump 0.2} at 48x96 with the
    default translator detection active."""
    out = []
    for alpha in (0.3, 0.5):
        for kind in ("zero", "bump"):
            dom = _disk(alpha)
            grid = build_grid(dom, *GRID)
            u0 = zero_field(grid) if kind == "zero" else bump_field(grid, 0.2)
            cfg = SolverConfig(t_end=20.0, sigma=0.5, snapshot_every=100.0,
                               monitor_every=0.01)
            final, records, reason = quiet_run(u0, dom, grid, cfg)
            out.append(dict(alpha=alpha, kind=kind, records=records,
                            reason=reason, final=final,
                            bounds=initial_bounds(dom, records[0])))
    return out


@pytest.fixture(scope="module")
def plane_runs():
    """Compatible plane a = (0.6, 0) on the unit disk over t in [0, 1]."""
    base = _disk(0.0)
    gen, alpha = compatible_plane((0.6, 0.0), base)
    dom = build_domain(base.spec, alpha, 1024)
    drifts = {}
    for n_r, n_t in [(48, 96), (96, 192)]:
        grid = build_grid(dom, n_r, n_t)
        u0 = gen(grid)
        cfg = SolverConfig(t_end=1.0, sigma=0.5, snapshot_every=10.0,
                           monitor_every=0.25)
        final, records, _ = quiet_run(u0, dom, grid, cfg)
        drifts[n_r] = dict(
            drift=float(np.max(np.abs(final.u.values - u0.values))),
            records=records, bounds=initial_bounds(dom, records[0]))
    return drifts


@pytest.fixture(scope="module")
def radial_comparison():
    """2-D radial scenario (disk, alpha = 0.3, bump 0.2) against the 1-D
    solver at n_pts = 1024, L_inf at t = 1 on three doubling grids."""
    alpha, beta = 0.3, 0.2
    r = np.linspace(0.0, 1.0, 2049)
    ref = radial_flow(RadialProfile(radii=r, values=beta * (1 - r * r) ** 2),
                      alpha, 1.0, 1.0, 1024)
    spline = CubicSpline(ref.radii, ref.values)
    dom = _disk(alpha)
    errors = []
    runs = []
    for n_r, n_t in [(32, 64), (64, 128), (128, 256)]:
        grid = build_grid(dom, n_r, n_t)
        cfg = SolverConfig(t_end=1.0, sigma=0.9, snapshot_every=10.0,
                           monitor_every=0.1)
        final, records, _ = quiet_run(bump_field(grid, beta), dom, grid, cfg)
        errors.append(float(np.max(np.abs(final.u.values[:, 0]
                                          - spline(grid.r)))))
        runs.append(dict(records=records,
                         bounds=initial_bounds(dom, records[0])))
    return dict(errors=errors, runs=runs)


@pytest.fixture(scope="module")
def shooting():
    return translator_shoot(0.5, 1.0, 4096)


def test_criterion_1_gradient_estimate(flagship):
    sup_v = max(r.sup_v for r in flagship["records"])
    bound = theoretical_c(flagship["domain"], flagship["bounds"].c_h,
                          flagship["bounds"].sup_v0)
    ok = sup_v <= 1.05 * bound and flagship["wall"] < 120.0
    _report(1, ok, f"sup v over run {sup_v:.6g} <= 1.05 x {bound:.6g}; "
                   f"runtime {flagship['wall']:.1f} s (target < 120 s)")


def test_criterion_2_h_over_v_maximum_principle(flagship, scenario_matrix):
    worst = -np.inf
    worst_name = ""
    for case in [dict(alpha=0.5, kind="zero(flagship)",
                      records=flagship["records"])] + scenario_matrix:
        records = case["records"]
        hv0 = records[0].sup_H_over_v
        for rec in records:
            excess = rec.sup_H_over_v - (hv0 + 0.02 * (hv0 + 0.01) * rec.t)
            if excess > worst:
                worst = excess
                worst_name = f"alpha={case['alpha']} {case['kind']}"
    _report(2, worst <= 0.0,
            f"largest drift excess of sup|H|/v = {worst:.3g} "
            f"({worst_name}); allowed 0")


def test_criterion_3_height_growth(flagship, scenario_matrix, plane_runs,
                                   radial_comparison):
    cases = [dict(records=flagship["records"], bounds=flagship["bounds"])]
    cases += scenario_matrix
    cases += list(plane_runs.values())
    cases += radial_comparison["runs"]
    worst = -np.inf
    for case in cases:
        records, bounds = case["records"], case["bounds"]
        u0_sup = records[0].sup_abs_u
        for rec in records:
            worst = max(worst, rec.sup_abs_u
                        - (u0_sup + bounds.c_h * rec.t + 0.05))
    _report(3, worst <= 0.0,
            f"largest height-bound excess {worst:.3g} across "
            f"{len(cases)} runs; allowed 0")


def test_criterion_4_translator_convergence(flagship, shooting):
    cfg = SolverConfig(t_end=20.0)  # default trans_tol / trans_window
    detection = detect_translator(flagship["records"], cfg)
    ok = detection is not None
    lam_err = since = np.nan
    prof_err = np.nan
    if ok:
        lam, since = detection
        lam_err = abs(lam - shooting.lam) / abs(shooting.lam)
        grid = flagship["grid"]
        prof2d = extract_translator_profile(grid, flagship["final"], lam)
        ref = CubicSpline(shooting.radii, shooting.values)(grid.r)
        ref = ref - np.sum(grid.area_w
                           * np.repeat(ref[:, None], grid.n_theta, axis=1))
        prof_err = float(np.max(np.abs(prof2d.values[:, 0] - ref)))
        prof_range = float(shooting.values.max() - shooting.values.min())
        ok = (since + cfg.trans_window < 20.0 and lam_err <= 0.02
              and prof_err <= max(0.02 * prof_range, 1e-3))
    _report(4, ok, f"sustained since t={since:.3g}; speed rel err "
                   f"{lam_err:.2e} (<= 2e-2); profile L_inf {prof_err:.2e}")


def test_criterion_5_plane_stationarity(plane_runs):
    d48 = plane_runs[48]["drift"]
    d96 = plane_runs[96]["drift"]
    floor = 1e-9
    if max(d48, d96) <= floor:
        ok = d48 <= 1e-3
        detail = (f"drift {d48:.2e} at 48x96, {d96:.2e} at 96x192; both at "
                  f"roundoff (below {floor:g}), order check vacuous")
    else:
        order = np.log2(d48 / d96)
        ok = d48 <= 1e-3 and order >= 1.5
        detail = f"drift {d48:.2e} <= 1e-3; observed order {order:.2f} >= 1.5"
    _report(5, ok, detail)


def test_criterion_6_oracle_equivalence(radial_comparison):
    errs = radial_comparison["errors"]
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    ok = min(orders) >= 1.5
    _report(6, ok, "L_inf errors " + ", ".join(f"{e:.3e}" for e in errs)
                   + "; orders " + ", ".join(f"{o:.2f}" for o in orders)
                   + " (>= 1.5)")


def test_criterion_7_spacelike_preservation(flagship, scenario_matrix,
                                            plane_runs, radial_comparison):
    cases = [flagship] + scenario_matrix + list(plane_runs.values()) \
            + radial_comparison["runs"]
    margin = min(min(r.spacelike_margin for r in case["records"])
                 for case in cases)
    _report(7, margin > 0.1,
            f"min spacelike margin over all runs {margin:.4g} > 0.1 "
            f"(no run raised SpacelikeLost)")


def test_criterion_8_boundary_closure_property():
    rng = np.random.default_rng(2024)
    n = 100_000
    q = rng.uniform(-0.95, 0.95, size=n)
    alpha = rng.uniform(-3.0, 3.0, size=n)
    p = boundary_normal_slope(q, alpha)
    resid = np.max(np.abs(p - alpha * np.sqrt(1.0 - p * p - q * q)))
    inside = bool(np.all(p * p + q * q < 1.0))
    _report(8, resid < 1e-12 and inside,
            f"max residual {resid:.2e} < 1e-12 over {n} samples; "
            f"p^2+q^2 < 1 everywhere: {inside}")
