"""Boundary-fitted polar mesh with staggered radial nodes and metric terms.

Reference coordinates are (r, theta) on [0,1] x [0,2pi); nodes sit at
r_j = (j+1/2)/n_r so no node lands on the pole, and one ghost ring at
r = 1 + 1/(2 n_r) carries the Neumann closure.  Radial stencils at the
innermost ring reach across the pole by pairing theta with theta+pi.

Cartesian derivatives are reconstructed through *discrete* inverse
Jacobians: the same difference stencils applied to the coordinate fields
define a per-node 2x2 map whose inverse converts (d_r, d_theta) into
(d_x, d_y).  This makes every linear function differentiate exactly, so
planes are exact discrete solutions of the flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .domain import Domain
from .errors import MinkflowError, MissingGhostRow, ResolutionTooLow


@dataclass
class Field:
    """Scalar grid function with an optional ghost ring."""

    values: np.ndarray                  # (n_r, n_theta)
    ghost: np.ndarray | None = None     # (n_theta,)

    def copy(self) -> "Field":
        return Field(self.values.copy(),
                     None if self.ghost is None else self.ghost.copy())

    def require_ghost(self) -> np.ndarray:
        if self.ghost is None:
            raise MissingGhostRow("field has no ghost row; apply the boundary "
                                  "closure first")
        return self.ghost


@dataclass(frozen=True)
class Grid:
    """Immutable mesh data: node positions, metric terms, closure weights."""

    n_r: int
    n_theta: int
    dr: float
    dtheta: float
    r: np.ndarray = dc_field(repr=False)        # (n_r,) reference radii
    theta: np.ndarray = dc_field(repr=False)    # (n_theta,)
    x: np.ndarray = dc_field(repr=False)        # (n_r, n_theta)
    y: np.ndarray = dc_field(repr=False)
    xg: np.ndarray = dc_field(repr=False)       # ghost ring positions
    yg: np.ndarray = dc_field(repr=False)
    pole: np.ndarray = dc_field(repr=False)     # theta index across the pole
    # primary metric (first-pass stencils, ghost-centered at boundary row)
    rx: np.ndarray = dc_field(repr=False)
    tx: np.ndarray = dc_field(repr=False)
    ry: np.ndarray = dc_field(repr=False)
    ty: np.ndarray = dc_field(repr=False)
    det: np.ndarray = dc_field(repr=False)
    # boundary-row metric for the ghost-free second pass (backward radial)
    bwd_rx: np.ndarray = dc_field(repr=False)
    bwd_tx: np.ndarray = dc_field(repr=False)
    bwd_ry: np.ndarray = dc_field(repr=False)
    bwd_ty: np.ndarray = dc_field(repr=False)
    # oblique-closure weights at the true boundary r = 1
    gamma_b: np.ndarray = dc_field(repr=False)  # (n_theta, 2) outward normals
    tau_b: np.ndarray = dc_field(repr=False)    # (n_theta, 2) unit tangents
    cr_mid: np.ndarray = dc_field(repr=False)   # gamma . Du = cr*Dru + cth*Dthu
    cth_mid: np.ndarray = dc_field(repr=False)
    # gradient reconstructions at r = 1 (ghost-aware) and r = 1 - dr, the
    # flux pair the boundary-row second derivatives are built from
    mid_rx: np.ndarray = dc_field(repr=False)
    mid_tx: np.ndarray = dc_field(repr=False)
    mid_ry: np.ndarray = dc_field(repr=False)
    mid_ty: np.ndarray = dc_field(repr=False)
    low_rx: np.ndarray = dc_field(repr=False)
    low_tx: np.ndarray = dc_field(repr=False)
    low_ry: np.ndarray = dc_field(repr=False)
    low_ty: np.ndarray = dc_field(repr=False)
    ext_rx: np.ndarray = dc_field(repr=False)   # ghost-free boundary gradient
    ext_tx: np.ndarray = dc_field(repr=False)
    ext_ry: np.ndarray = dc_field(repr=False)
    ext_ty: np.ndarray = dc_field(repr=False)
    area_w: np.ndarray = dc_field(repr=False)   # normalized Jacobian weights
    h_min: float = 0.0

    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    def zero_field(self, with_ghost: bool = False) -> Field:
        g = np.zeros(self.n_theta) if with_ghost else None
        return Field(np.zeros((self.n_r, self.n_theta)), g)

    def field_from_function(self, fn, with_ghost: bool = False) -> Field:
        """Sample fn(x, y) on the nodes (and optionally the ghost ring)."""
        vals = np.asarray(fn(self.x, self.y), dtype=float)
        ghost = np.asarray(fn(self.xg, self.yg), dtype=float) if with_ghost else None
        return Field(vals, ghost)


def _dtheta_centered(f: np.ndarray, dtheta: float) -> np.ndarray:
    return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2.0 * dtheta)


def _dr_first(f: np.ndarray, ghost: np.ndarray, pole: np.ndarray,
              dr: float) -> np.ndarray:
    """First-pass radial derivative: centered, across-pole at ring 0,
    ghost-centered at the boundary row."""
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dr)
    out[0] = (f[1] - f[0, pole]) / (2.0 * dr)
    out[-1] = (ghost - f[-2]) / (2.0 * dr)
    return out


def _dr_second(f: np.ndarray, pole: np.ndarray, dr: float) -> np.ndarray:
    """Ghost-free radial derivative for node fields: centered, across-pole
    at ring 0, one-sided backward at the boundary row."""
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dr)
    out[0] = (f[1] - f[0, pole]) / (2.0 * dr)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dr)
    return out


def _invert_2x2(drx, dry, dthx, dthy):
    det = drx * dthy - dry * dthx
    return dthy / det, -dry / det, -dthx / det, drx / det, det


def build_grid(domain: Domain, n_r: int, n_theta: int) -> Grid:
    """Build the staggered polar mesh with its metric terms.

    Requires n_r >= 8 and even n_theta >= 16 (across-pole stencils pair
    opposite angles).  Records h_min, the smallest physical node spacing
    relevant to the time-step limit: the radial spacing everywhere plus the
    angular spacing on the outermost ring.  Angular spacing on inner rings
    is excluded because the stepper caps angular resolution there to the
    radial scale (see flow.pole_filter_cutoffs).
    """
    if n_r < 8:
        raise ResolutionTooLow(f"n_r = {n_r} < 8")
    if n_theta < 16 or n_theta % 2 != 0:
        raise ResolutionTooLow(f"n_theta = {n_theta} must be even and >= 16")

    dr = 1.0 / n_r
    dtheta = 2.0 * np.pi / n_theta
    r = (np.arange(n_r) + 0.5) * dr
    theta = np.arange(n_theta) * dtheta
    pole = (np.arange(n_theta) + n_theta // 2) % n_theta

    R, _, _ = domain.radius_derivatives(theta)
    cx, cy = domain.center
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    x = cx + r[:, None] * R[None, :] * cos_t[None, :]
    y = cy + r[:, None] * R[None, :] * sin_t[None, :]
    rg = 1.0 + 0.5 * dr
    xg = cx + rg * R * cos_t
    yg = cy + rg * R * sin_t

    # discrete metric from the same stencils the gradient uses
    drx = _dr_first(x, xg, pole, dr)
    dry = _dr_first(y, yg, pole, dr)
    dthx = _dtheta_centered(x, dtheta)
    dthy = _dtheta_centered(y, dtheta)
    rx, tx, ry, ty, det = _invert_2x2(drx, dry, dthx, dthy)
    if np.min(det) <= 0.0:
        raise MinkflowError(f"degenerate metric: min det = {np.min(det):.3g}")

    # boundary-row metric for the ghost-free second pass
    drx_b = (3.0 * x[-1] - 4.0 * x[-2] + x[-3]) / (2.0 * dr)
    dry_b = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * dr)
    bwd_rx, bwd_tx, bwd_ry, bwd_ty, det_b = _invert_2x2(
        drx_b, dry_b, dthx[-1], dthy[-1])
    if np.min(det_b) <= 0.0:
        raise MinkflowError("degenerate backward boundary metric")

    # closure weights at the true boundary r = 1: midpoint radial stencil
    # (ghost - boundary row) plus theta-derivatives extrapolated to r = 1
    drx_m = (xg - x[-1]) / dr
    dry_m = (yg - y[-1]) / dr
    dthx_1 = 1.5 * dthx[-1] - 0.5 * dthx[-2]
    dthy_1 = 1.5 * dthy[-1] - 0.5 * dthy[-2]
    mid_rx, mid_tx, mid_ry, mid_ty, det_m = _invert_2x2(
        drx_m, dry_m, dthx_1, dthy_1)
    if np.min(det_m) <= 0.0:
        raise MinkflowError("degenerate midpoint boundary metric")

    gamma_b = domain.normal(theta)
    tau_b = domain.tangent(theta)
    cr_mid = gamma_b[:, 0] * mid_rx + gamma_b[:, 1] * mid_ry
    cth_mid = gamma_b[:, 0] * mid_tx + gamma_b[:, 1] * mid_ty

    # inner member of the boundary flux pair, at r = 1 - dr
    drx_l = (x[-1] - x[-2]) / dr
    dry_l = (y[-1] - y[-2]) / dr
    dthx_l = 0.5 * (dthx[-1] + dthx[-2])
    dthy_l = 0.5 * (dthy[-1] + dthy[-2])
    low_rx, low_tx, low_ry, low_ty, det_l = _invert_2x2(
        drx_l, dry_l, dthx_l, dthy_l)
    if np.min(det_l) <= 0.0:
        raise MinkflowError("degenerate inner boundary metric")

    # ghost-free gradient reconstruction at r = 1 (for q and diagnostics)
    drx_e = (2.0 * x[-1] - 3.0 * x[-2] + x[-3]) / dr
    dry_e = (2.0 * y[-1] - 3.0 * y[-2] + y[-3]) / dr
    ext_rx, ext_tx, ext_ry, ext_ty, det_e = _invert_2x2(
        drx_e, dry_e, dthx_1, dthy_1)
    if np.min(det_e) <= 0.0:
        raise MinkflowError("degenerate extrapolated boundary metric")

    w = r[:, None] * R[None, :] ** 2
    area_w = w / np.sum(w)

    radial_spacing = dr * np.min(R)
    outer_chord = np.min(np.hypot(np.diff(x[-1], append=x[-1, 0]),
                                  np.diff(y[-1], append=y[-1, 0])))
    h_min = float(min(radial_spacing, outer_chord))

    return Grid(n_r=n_r, n_theta=n_theta, dr=dr, dtheta=dtheta, r=r,
                theta=theta, x=x, y=y, xg=xg, yg=yg, pole=pole,
                rx=rx, tx=tx, ry=ry, ty=ty, det=det,
                bwd_rx=bwd_rx, bwd_tx=bwd_tx, bwd_ry=bwd_ry, bwd_ty=bwd_ty,
                gamma_b=gamma_b, tau_b=tau_b, cr_mid=cr_mid, cth_mid=cth_mid,
                mid_rx=mid_rx, mid_tx=mid_tx, mid_ry=mid_ry, mid_ty=mid_ty,
                low_rx=low_rx, low_tx=low_tx, low_ry=low_ry, low_ty=low_ty,
                ext_rx=ext_rx, ext_tx=ext_tx, ext_ry=ext_ry, ext_ty=ext_ty,
                area_w=area_w, h_min=h_min)


def gradient(grid: Grid, u: Field):
    """Cartesian gradient (ux, uy) of a ghost-closed field.

    Centered second-order stencils in r and theta, across-pole at the
    innermost ring, chain-ruled through the discrete inverse Jacobian.
    """
    ghost = u.require_ghost()
    f = u.values
    dru = _dr_first(f, ghost, grid.pole, grid.dr)
    dthu = _dtheta_centered(f, grid.dtheta)
    gx = grid.rx * dru + grid.tx * dthu
    gy = grid.ry * dru + grid.ty * dthu
    return gx, gy


def node_field_derivatives(grid: Grid, f: np.ndarray):
    """Cartesian derivatives of a plain node field (no ghost ring).

    The boundary row uses one-sided backward radial stencils with their
    matching metric.  The Hessian composes this pass away from the
    boundary row (where it switches to the flux pair instead).
    """
    drf = _dr_second(f, grid.pole, grid.dr)
    dthf = _dtheta_centered(f, grid.dtheta)
    fx = grid.rx * drf + grid.tx * dthf
    fy = grid.ry * drf + grid.ty * dthf
    fx[-1] = grid.bwd_rx * drf[-1] + grid.bwd_tx * dthf[-1]
    fy[-1] = grid.bwd_ry * drf[-1] + grid.bwd_ty * dthf[-1]
    return fx, fy


def boundary_flux_pair(grid: Grid, u: Field):
    """Cartesian gradients at r = 1 (ghost-aware) and r = 1 - dr.

    Their difference over dr is the radial derivative of Du centered on the
    boundary row; building the second pass this way keeps the stencil
    compact across the ghost ring, which matters when the boundary data is
    incompatible and the solution holds a kink there.
    """
    f = u.values
    ghost = u.require_ghost()
    dth_b = _dtheta_centered(f[-1], grid.dtheta)
    dth_bm1 = _dtheta_centered(f[-2], grid.dtheta)
    dru_hi = (ghost - f[-1]) / grid.dr
    dthu_hi = 1.5 * dth_b - 0.5 * dth_bm1
    gx_hi = grid.mid_rx * dru_hi + grid.mid_tx * dthu_hi
    gy_hi = grid.mid_ry * dru_hi + grid.mid_ty * dthu_hi
    dru_lo = (f[-1] - f[-2]) / grid.dr
    dthu_lo = 0.5 * (dth_b + dth_bm1)
    gx_lo = grid.low_rx * dru_lo + grid.low_tx * dthu_lo
    gy_lo = grid.low_ry * dru_lo + grid.low_ty * dthu_lo
    return gx_hi, gy_hi, gx_lo, gy_lo


def hessian(grid: Grid, u: Field):
    """Symmetric Cartesian second derivatives (uxx, uyy, uxy).

    Built by composing first-derivative stencils; the mixed derivative is
    the average of d_y(ux) and d_x(uy).  On the boundary row the radial
    part comes from the flux pair rather than one-sided node differences.
    """
    gx, gy = gradient(grid, u)
    gxx, gxy = node_field_derivatives(grid, gx)
    gyx, gyy = node_field_derivatives(grid, gy)

    gx_hi, gy_hi, gx_lo, gy_lo = boundary_flux_pair(grid, u)
    drgx = (gx_hi - gx_lo) / grid.dr
    drgy = (gy_hi - gy_lo) / grid.dr
    dthgx = _dtheta_centered(gx[-1], grid.dtheta)
    dthgy = _dtheta_centered(gy[-1], grid.dtheta)
    rxb, txb, ryb, tyb = grid.rx[-1], grid.tx[-1], grid.ry[-1], grid.ty[-1]
    gxx[-1] = rxb * drgx + txb * dthgx
    gxy[-1] = ryb * drgx + tyb * dthgx
    gyx[-1] = rxb * drgy + txb * dthgy
    gyy[-1] = ryb * drgy + tyb * dthgy
    return gxx, gyy, 0.5 * (gxy + gyx)


def boundary_tangential_derivative(grid: Grid, u: Field) -> np.ndarray:
    """Arc-length slope q = tau . Du along the boundary.

    Reconstructed at r = 1 from interior rows only (centered theta
    differences on the two outermost rows, one-sided in r), so it does not
    require a ghost ring.
    """
    f = u.values
    dth_b = _dtheta_centered(f[-1], grid.dtheta)
    dth_bm1 = _dtheta_centered(f[-2], grid.dtheta)
    dthu_1 = 1.5 * dth_b - 0.5 * dth_bm1
    dru_e = (2.0 * f[-1] - 3.0 * f[-2] + f[-3]) / grid.dr
    ux = grid.ext_rx * dru_e + grid.ext_tx * dthu_1
    uy = grid.ext_ry * dru_e + grid.ext_ty * dthu_1
    return grid.tau_b[:, 0] * ux + grid.tau_b[:, 1] * uy


def boundary_gradient_no_ghost(grid: Grid, u: Field):
    """Ghost-free Cartesian gradient at the boundary r = 1 (per theta node)."""
    f = u.values
    dth_b = _dtheta_centered(f[-1], grid.dtheta)
    dth_bm1 = _dtheta_centered(f[-2], grid.dtheta)
    dthu_1 = 1.5 * dth_b - 0.5 * dth_bm1
    dru_e = (2.0 * f[-1] - 3.0 * f[-2] + f[-3]) / grid.dr
    ux = grid.ext_rx * dru_e + grid.ext_tx * dthu_1
    uy = grid.ext_ry * dru_e + grid.ext_ty * dthu_1
    return ux, uy


FIELD_MAGIC = "minkflow-field v1"


def write_field(path, u: Field, t: float) -> None:
    """Write a field snapshot: header line then n_r rows of n_theta values."""
    n_r, n_theta = u.values.shape
    lines = [f"{FIELD_MAGIC} n_r={n_r} n_theta={n_theta} t={t:.17g}"]
    for row in u.values:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path):
    """Read a snapshot written by write_field; returns (Field, t)."""
    text = Path(path).read_text().splitlines()
    header = text[0]
    if not header.startswith(FIELD_MAGIC):
        raise MinkflowError(f"not a field snapshot: {path}")
    meta = dict(item.split("=") for item in header[len(FIELD_MAGIC):].split())
    n_r, n_theta = int(meta["n_r"]), int(meta["n_theta"])
    vals = np.loadtxt(text[1:1 + n_r], ndmin=2)
    if vals.shape != (n_r, n_theta):
        raise MinkflowError(f"snapshot shape {vals.shape} does not match header")
    return Field(vals), float(meta["t"])
