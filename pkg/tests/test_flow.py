"""Interior operator, boundary closure and explicit stepping."""

import dataclasses

import numpy as np
import pytest

from conftest import observed_order, quiet_run
from minkflow import (AnglePrescription, DomainSpec, Field, SolverConfig,
                      boundary_normal_slope, build_domain, build_grid, cfl_dt,
                      close_ghost, interior_rhs, step, translator_shoot)
from minkflow.errors import NonFinite, SpacelikeLost, TangentTooSteep
from minkflow.flow import (FlowState, bump_field, compatibility_residual,
                           fourier_field, plane_field, pole_filter_cutoffs,
                           zero_field)
from minkflow.grid import gradient, node_field_derivatives
from minkflow.oracle import compatible_plane, radial_flow, RadialProfile


def divergence_form_rhs(grid, u):
    """Independent discretization of the flow operator in divergence form:
    sqrt(1-|Du|^2) * div( Du / sqrt(1-|Du|^2) )."""
    gx, gy = gradient(grid, u)
    w = np.sqrt(1.0 - gx * gx - gy * gy)
    fx = gx / w
    fy = gy / w
    dfx_x, _ = node_field_derivatives(grid, fx)
    _, dfy_y = node_field_derivatives(grid, fy)
    return w * (dfx_x + dfy_y)


# --- boundary_normal_slope ------------------------------------------------

def test_normal_slope_values():
    assert boundary_normal_slope(0.0, 0.0) == 0.0
    assert boundary_normal_slope(0.0, 1.0) == pytest.approx(1 / np.sqrt(2.0))
    p = boundary_normal_slope(0.6, 1.0)
    assert p == pytest.approx(np.sqrt(0.32))
    assert abs(p - 1.0 * np.sqrt(1.0 - p * p - 0.36)) < 1e-12


def test_normal_slope_rejects_steep():
    with pytest.raises(TangentTooSteep):
        boundary_normal_slope(1.0, 0.5)
    with pytest.raises(TangentTooSteep):
        boundary_normal_slope(-1.2, 0.5)


def test_normal_slope_stays_spacelike():
    rng = np.random.default_rng(5)
    q = rng.uniform(-0.999, 0.999, size=2000)
    alpha = rng.uniform(-5.0, 5.0, size=2000)
    p = boundary_normal_slope(q, alpha)
    assert np.all(p * p + q * q < 1.0)
    resid = p - alpha * np.sqrt(1.0 - p * p - q * q)
    assert np.max(np.abs(resid)) < 1e-12


# --- cfl ---------------------------------------------------------------

def test_cfl_dt_formula(disk_grid_32):
    cfg = SolverConfig(t_end=1.0, sigma=0.5)
    g = dataclasses.replace(disk_grid_32, h_min=0.1)
    assert cfl_dt(g, 1.0, cfg) == pytest.approx(0.00125)
    assert cfl_dt(g, 2.0, cfg) == pytest.approx(0.0005)
    g2 = dataclasses.replace(disk_grid_32, h_min=0.05)
    cfg2 = SolverConfig(t_end=1.0, sigma=1.0)
    assert cfl_dt(g2, 1.0, cfg2) == pytest.approx(0.000625)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, sigma=0.0)
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, eps_space=1e-3)
    with pytest.raises(ValueError):
        SolverConfig(t_end=-1.0)


# --- interior operator ----------------------------------------------------

def test_rhs_zero_field(unit_disk, disk_grid_32):
    u = Field(np.zeros(disk_grid_32.shape), np.zeros(64))
    rhs = interior_rhs(disk_grid_32, u)
    assert np.max(np.abs(rhs.values)) == 0.0


def test_rhs_plane_is_minimal(disk_grid_32):
    u = disk_grid_32.field_from_function(lambda x, y: 0.5 * x + 0.2 * y,
                                         with_ghost=True)
    rhs = interior_rhs(disk_grid_32, u)
    assert np.max(np.abs(rhs.values)) < 1e-9


def test_rhs_paraboloid_center(unit_disk):
    g = build_grid(unit_disk, 64, 128)
    u = g.field_from_function(lambda x, y: (x * x + y * y) / 8.0,
                              with_ghost=True)
    rhs = interior_rhs(g, u)
    node = np.unravel_index(np.argmin(g.x ** 2 + g.y ** 2), g.shape)
    assert rhs.values[node] == pytest.approx(0.5, abs=1e-3)
    div = divergence_form_rhs(g, u)
    assert div[node] == pytest.approx(0.5, abs=1e-3)


def test_rhs_matches_divergence_form(unit_disk):
    """Expanded coefficients against the independent divergence-form
    discretization, refinement order at least 1.5."""
    errs = []
    for n_r, n_t in [(16, 32), (32, 64), (64, 128)]:
        g = build_grid(unit_disk, n_r, n_t)
        u = g.field_from_function(
            lambda x, y: 0.3 * np.sin(x + 0.4) * np.cos(y - 0.2),
            with_ghost=True)
        expanded = interior_rhs(g, u).values
        div = divergence_form_rhs(g, u)
        errs.append(np.max(np.abs(expanded - div)))
    assert observed_order(errs) >= 1.5, errs


def test_rhs_spacelike_guard(disk_grid_32):
    u = disk_grid_32.field_from_function(lambda x, y: 0.9 * x,
                                         with_ghost=True)
    with pytest.raises(SpacelikeLost) as exc:
        interior_rhs(disk_grid_32, u, eps_space=0.5 * 1e-1 + 0.2)
    assert exc.value.node is not None


# --- ghost closure ----------------------------------------------------------

def test_close_ghost_zero(unit_disk, disk_grid_32):
    u = close_ghost(disk_grid_32, unit_disk, zero_field(disk_grid_32))
    assert np.max(np.abs(u.ghost)) == 0.0


def test_close_ghost_constant_alpha_disk():
    dom = build_domain(DomainSpec.disk(1.0), AnglePrescription.constant(1.0),
                       1024)
    g = build_grid(dom, 16, 32)
    u = close_ghost(g, dom, zero_field(g))
    recon = g.cr_mid * (u.ghost - u.values[-1]) / g.dr
    assert np.max(np.abs(recon - 1 / np.sqrt(2.0))) < 1e-10


def test_close_ghost_compatible_plane(unit_disk):
    gen, alpha = compatible_plane((0.6, 0.0), unit_disk)
    dom = build_domain(unit_disk.spec, alpha, 1024)
    g = build_grid(dom, 32, 64)
    u = close_ghost(g, dom, gen(g))
    exact_ghost = 0.6 * g.xg
    h2 = g.dr ** 2
    assert np.max(np.abs(u.ghost - exact_ghost)) < h2
    assert np.max(np.abs(u.ghost - exact_ghost)) < 1e-12  # exact in practice


def test_close_ghost_steep_tangent(unit_disk, disk_grid_32):
    u = Field(2.0 * disk_grid_32.y)
    with pytest.raises(TangentTooSteep):
        close_ghost(disk_grid_32, unit_disk, u)


def test_compatibility_residual(unit_disk):
    gen, alpha = compatible_plane((0.5, 0.1), unit_disk)
    dom = build_domain(unit_disk.spec, alpha, 1024)
    g = build_grid(dom, 32, 64)
    assert compatibility_residual(g, dom, gen(g)) < 1e-12
    # zero data against alpha = 0.5: |gamma.Du - sqrt(1-|Du|^2) alpha| = 0.5
    dom5 = build_domain(unit_disk.spec, AnglePrescription.constant(0.5), 1024)
    assert compatibility_residual(g, dom5, zero_field(g)) == pytest.approx(
        0.5, abs=1e-12)


# --- stepping ---------------------------------------------------------------

def test_step_zero_stationary(unit_disk, disk_grid_32):
    cfg = SolverConfig(t_end=1.0)
    s0 = FlowState(zero_field(disk_grid_32))
    s1 = step(s0, disk_grid_32, unit_disk, cfg)
    assert s1.t > 0.0
    assert s1.step_count == 1
    assert np.max(np.abs(s1.u.values)) == 0.0


def test_step_compatible_plane_stationary(unit_disk):
    gen, alpha = compatible_plane((0.6, 0.0), unit_disk)
    dom = build_domain(unit_disk.spec, alpha, 1024)
    g = build_grid(dom, 32, 64)
    cfg = SolverConfig(t_end=1.0)
    s0 = FlowState(gen(g))
    s1 = step(s0, g, dom, cfg)
    assert np.max(np.abs(s1.u.values - s0.u.values)) <= 1e-10 * s1.last_dt


def test_step_raises_boundary(unit_disk):
    """Positive angle data pulls the boundary-adjacent ring up; the sign
    agrees with the radial reference flow."""
    dom = build_domain(unit_disk.spec, AnglePrescription.constant(0.3), 1024)
    g = build_grid(dom, 32, 64)
    cfg = SolverConfig(t_end=1.0)
    s1 = step(FlowState(zero_field(g)), g, dom, cfg)
    assert np.all(s1.u.values[-1] > 0.0)

    r = np.linspace(0.0, 1.0, 512)
    prof = radial_flow(RadialProfile(radii=r, values=np.zeros_like(r)),
                       0.3, 1.0, 4.0 * s1.last_dt, 256)
    assert prof.values[-1] > 0.0


def test_plane_family_stationary(unit_disk):
    """Planes up to |a| = 0.8 with matching angle data hold still."""
    dom48 = None
    for a in [(0.8, 0.0), (0.4, -0.4), (0.0, 0.5)]:
        gen, alpha = compatible_plane(a, unit_disk)
        dom = build_domain(unit_disk.spec, alpha, 1024)
        g = build_grid(dom, 48, 96)
        cfg = SolverConfig(t_end=1.0, snapshot_every=10.0, monitor_every=0.5)
        final, recs, reason = quiet_run(gen(g), dom, g, cfg)
        assert np.max(np.abs(final.u.values - gen(g).values)) <= 1e-3


def test_run_zero_to_t_end(unit_disk, disk_grid_32):
    cfg = SolverConfig(t_end=1.0, snapshot_every=0.5, monitor_every=0.1)
    final, recs, reason = quiet_run(zero_field(disk_grid_32), unit_disk,
                                    disk_grid_32, cfg)
    assert reason == "t_end"
    assert final.t == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(final.u.values)) == 0.0
    assert recs[0].t == 0.0
    assert recs[-1].t == pytest.approx(1.0)
    assert all(r.spacelike_margin > cfg.eps_space for r in recs)


def test_run_bump_decays_with_radial_reference(unit_disk):
    from scipy.interpolate import CubicSpline

    g = build_grid(unit_disk, 32, 64)
    cfg = SolverConfig(t_end=2.0, snapshot_every=10.0, monitor_every=0.1,
                       trans_tol=0.0)
    final, recs, reason = quiet_run(bump_field(g, 0.1), unit_disk, g, cfg)
    assert recs[-1].sup_H_over_v < recs[0].sup_H_over_v
    assert recs[-1].sup_abs_u < recs[0].sup_abs_u

    r = np.linspace(0.0, 1.0, 1025)
    ref = radial_flow(RadialProfile(radii=r, values=0.1 * (1 - r * r) ** 2),
                      0.0, 1.0, 2.0, 512)
    spl = CubicSpline(ref.radii, ref.values)
    assert np.max(np.abs(final.u.values[:, 0] - spl(g.r))) < 2e-4


def test_run_detects_translator(unit_disk):
    dom = build_domain(unit_disk.spec, AnglePrescription.constant(0.5), 1024)
    g = build_grid(dom, 32, 64)
    cfg = SolverConfig(t_end=20.0, snapshot_every=100.0, monitor_every=0.01)
    final, recs, reason = quiet_run(zero_field(g), dom, g, cfg)
    assert reason == "translator"
    assert final.t < 20.0
    lam = recs[-1].lambda_est
    oracle = translator_shoot(0.5, 1.0, 2048)
    assert abs(lam - oracle.lam) / oracle.lam < 0.02


def test_run_attaches_partial_records(unit_disk):
    """A failing run still hands back what it measured."""
    g = build_grid(unit_disk, 16, 32)
    u0 = plane_field(g, (0.9985, 0.0))
    dom = build_domain(unit_disk.spec, AnglePrescription.constant(0.0), 1024)
    cfg = SolverConfig(t_end=5.0, snapshot_every=100.0, monitor_every=0.001)
    with pytest.raises((SpacelikeLost, TangentTooSteep, NonFinite)) as exc:
        quiet_run(u0, dom, g, cfg)
    assert hasattr(exc.value, "partial_records")


def test_pole_filter_cutoffs_keep_planes(unit_disk, disk_grid_32):
    cut, rows = pole_filter_cutoffs(disk_grid_32, 0.5)
    assert np.all(cut >= 1)
    assert np.all(np.diff(cut) >= 0)
    assert cut[-1] == disk_grid_32.n_theta // 2
    assert rows.size < disk_grid_32.n_r // 2


def test_fourier_initial_data(disk_grid_32):
    u1 = fourier_field(disk_grid_32, seed=42, max_slope=0.5)
    u2 = fourier_field(disk_grid_32, seed=42, max_slope=0.5)
    u3 = fourier_field(disk_grid_32, seed=43, max_slope=0.5)
    assert np.array_equal(u1.values, u2.values)
    assert not np.array_equal(u1.values, u3.values)
    gx, gy = np.gradient(u1.values)  # crude sanity: bounded variation
    assert np.max(np.abs(u1.values)) < 10.0


def test_fourier_field_respects_slope_bound(unit_disk):
    g = build_grid(unit_disk, 48, 96)
    u = fourier_field(g, seed=7, max_slope=0.4)
    f = close_ghost(g, unit_disk, u)
    gx, gy = gradient(g, f)
    assert np.max(gx * gx + gy * gy) < 0.4 ** 2 * 1.1 + 1e-6


def test_run_fourier_data_stable(unit_disk):
    g = build_grid(unit_disk, 16, 32)
    cfg = SolverConfig(t_end=0.3, snapshot_every=10.0, monitor_every=0.05)
    u0 = fourier_field(g, seed=3, max_slope=0.5)
    final, recs, reason = quiet_run(u0, unit_disk, g, cfg)
    assert np.all(np.isfinite(final.u.values))
    assert recs[-1].spacelike_margin > 0.1


def test_kernel_paths_agree(unit_disk):
    """numba kernels against the plain-numpy fallbacks."""
    from minkflow import _kernels as K

    g = build_grid(unit_disk, 16, 32)
    rng = np.random.default_rng(0)
    u = 0.1 * rng.standard_normal(g.shape)
    ghost = 0.1 * rng.standard_normal(g.n_theta)
    gx1 = np.empty(g.shape)
    gy1 = np.empty(g.shape)
    m1 = K.grad_eval(u, ghost, g.rx, g.tx, g.ry, g.ty, g.pole, g.dr,
                     g.dtheta, gx1, gy1)
    gx2 = np.empty(g.shape)
    gy2 = np.empty(g.shape)
    m2 = K._grad_numpy(u, ghost, g.rx, g.tx, g.ry, g.ty, g.pole, g.dr,
                       g.dtheta, gx2, gy2)
    assert m1 == pytest.approx(m2, rel=1e-13)
    assert np.allclose(gx1, gx2, atol=1e-12)
    out1 = np.empty(g.shape)
    out2 = np.empty(g.shape)
    args = (g.rx, g.tx, g.ry, g.ty, g.mid_rx, g.mid_tx, g.mid_ry, g.mid_ty,
            g.low_rx, g.low_tx, g.low_ry, g.low_ty, g.pole, g.dr, g.dtheta)
    K.rhs_eval(u, ghost, gx1, gy1, *args, out1)
    K._rhs_numpy(u, ghost, gx2, gy2, *args, out2)
    assert np.allclose(out1, out2, atol=1e-9)
