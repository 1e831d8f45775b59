"""Monitored quantities along the flow and the runtime bound checks.

The solver tracks the gradient function v = (1 - |Du|^2)^(-1/2), the mean
curvature H = v * u_t, the spatial mean of u_t (the speed estimate for a
translating end-state) and the oscillation of u_t.  Bound checks compare
them against the time-independent constants fixed by the initial data and
the domain geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import Domain, theoretical_c
from .errors import SpacelikeLost
from .grid import Field, Grid, gradient


@dataclass(frozen=True)
class TheoreticalBounds:
    """Constants the runtime checks compare against (fixed at t = 0)."""

    c_h: float          # sup of |H|/v over the initial surface
    alpha_bar: float    # sup |alpha|
    kappa_min: float    # inf boundary curvature
    c_alpha: float      # arc-length Lipschitz constant of alpha
    c_grad: float       # explicit gradient bound
    sup_v0: float       # sup v at t = 0


@dataclass(frozen=True)
class MonitorRecord:
    """Per-time diagnostics of the evolving graph."""

    t: float
    sup_v: float
    sup_H_over_v: float
    lambda_est: float
    osc_ut: float
    sup_abs_u: float
    spacelike_margin: float
    dt: float


@dataclass(frozen=True)
class BoundViolation:
    quantity: str
    bound: float
    observed: float
    t: float

    def __str__(self):
        return (f"{self.quantity} violated at t={self.t:.6g}: "
                f"{self.observed:.6g} > {self.bound:.6g}")


def initial_bounds(domain: Domain, first_record: MonitorRecord) -> TheoreticalBounds:
    """Freeze the theoretical constants from the t = 0 monitor record."""
    c_h = first_record.sup_H_over_v
    sup_v0 = first_record.sup_v
    return TheoreticalBounds(
        c_h=c_h, alpha_bar=domain.alpha_bar, kappa_min=domain.kappa_min,
        c_alpha=domain.c_alpha,
        c_grad=theoretical_c(domain, c_h, sup_v0), sup_v0=sup_v0)


def compute_v(grid: Grid, u: Field, eps_space: float = 1e-10) -> Field:
    """Gradient function v = (1 - |Du|^2)^(-1/2) per node."""
    gx, gy = gradient(grid, u)
    margin = 1.0 - gx * gx - gy * gy
    if np.min(margin) <= eps_space:
        j, k = np.unravel_index(int(np.argmin(margin)), margin.shape)
        raise SpacelikeLost(f"1 - |Du|^2 = {margin[j, k]:.3g} at node {(j, k)}",
                            node=(int(j), int(k)), margin=float(margin[j, k]))
    return Field(1.0 / np.sqrt(margin))


def compute_H(grid: Grid, u: Field, eps_space: float = 1e-10) -> Field:
    """Mean curvature of the graph, H = v * u_t."""
    from .flow import interior_rhs

    v = compute_v(grid, u, eps_space)
    ut = interior_rhs(grid, u, eps_space)
    return Field(v.values * ut.values)


H_NOISE_FLOOR = 1e-9


def check_bounds(record: MonitorRecord, bounds: TheoreticalBounds,
                 u0_sup: float, tol: float = 0.05):
    """Compare a record against the theoretical constants.

    Empty list when (a) sup|H|/v <= C_H*(1+tol), (b) sup v <= C*(1+tol) and
    (c) sup|u| <= sup|u0| + t*C_H + tol all hold; violations are data, not
    errors.  Check (a) carries an absolute floor of H_NOISE_FLOOR so that
    states with analytically vanishing curvature (exact planes, whose
    discrete H is metric-amplified roundoff) do not trip it.
    """
    out = []
    h_cap = bounds.c_h * (1.0 + tol) + H_NOISE_FLOOR
    if record.sup_H_over_v > h_cap:
        out.append(BoundViolation("sup_H_over_v", h_cap,
                                  record.sup_H_over_v, record.t))
    if record.sup_v > bounds.c_grad * (1.0 + tol):
        out.append(BoundViolation("sup_v", bounds.c_grad * (1.0 + tol),
                                  record.sup_v, record.t))
    height_cap = u0_sup + record.t * bounds.c_h + tol
    if record.sup_abs_u > height_cap:
        out.append(BoundViolation("sup_abs_u", height_cap,
                                  record.sup_abs_u, record.t))
    return out


def detect_translator(history, cfg):
    """Detect a translating end-state from the monitor series.

    Returns (lambda, since) where lambda is the latest speed estimate and
    since the earliest time from which osc_ut stayed below cfg.trans_tol
    continuously for at least cfg.trans_window; None otherwise.
    """
    if not history:
        return None
    last = history[-1]
    if last.osc_ut >= cfg.trans_tol:
        return None
    idx = len(history) - 1
    while idx > 0 and history[idx - 1].osc_ut < cfg.trans_tol:
        idx -= 1
    since = history[idx].t
    if last.t - since >= cfg.trans_window:
        return last.lambda_est, since
    return None


def extract_translator_profile(grid: Grid, state, lam: float) -> Field:
    """Mean-normalized profile of a translating state.

    Subtracts the Jacobian-weighted spatial mean; the speed lam is carried
    by the caller, the profile itself is time-independent.
    """
    u = state.u.values
    mean = float(np.sum(grid.area_w * u))
    return Field(u - mean)


MONITOR_HEADER = "t,sup_v,sup_H_over_v,lambda_est,osc_ut,sup_abs_u,spacelike_margin,dt"


def write_monitors(path, records) -> None:
    """Monitor series as CSV, one row per record, 17 significant digits."""
    lines = [MONITOR_HEADER]
    for r in records:
        lines.append(",".join(f"{v:.17g}" for v in (
            r.t, r.sup_v, r.sup_H_over_v, r.lambda_est, r.osc_ut,
            r.sup_abs_u, r.spacelike_margin, r.dt)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_monitors(path):
    lines = Path(path).read_text().splitlines()
    if lines[0] != MONITOR_HEADER:
        raise ValueError(f"unexpected monitor header in {path}")
    out = []
    for line in lines[1:]:
        vals = [float(v) for v in line.split(",")]
        out.append(MonitorRecord(*vals))
    return out
