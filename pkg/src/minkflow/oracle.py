"""Independent reference computations for the disk.

Radial symmetry reduces the interior operator to
u_t = u''/(1 - u'^2) + u'/r, with the oblique condition collapsing to the
closed-form rim slope u'(R) = alpha/sqrt(1+alpha^2) and u'(0) = 0 at the
center.  A translating solution u = profile + lambda*t turns this into the
slope ODE phi' = (lambda - phi/r)(1 - phi^2), solved here by shooting on
lambda.  These paths share no 2-D machinery and serve as oracles for the
full solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from ._kernels import radial_loop, radial_rhs_eval
from .domain import AnglePrescription, Domain
from .errors import NonFinite, NotSpacelike, ShootingFailed, SpacelikeLost


@dataclass
class RadialProfile:
    """Radially symmetric graph samples; lam is the translator speed when
    the profile came from the shooting solver."""

    radii: np.ndarray
    values: np.ndarray
    lam: float | None = None
    slopes: np.ndarray | None = None


def radial_flow(u0: RadialProfile, alpha: float, R_disk: float, t_end: float,
                n_pts: int, sigma: float = 0.9,
                eps_space: float = 1e-10) -> RadialProfile:
    """Explicit 1-D flow of radial data on the disk of radius R_disk.

    Staggered nodes r_i = (i+1/2)h mirror the 2-D construction: even
    reflection at the center, ghost node from the rim slope
    alpha/sqrt(1+alpha^2), midpoint two-stage stepping at the same CFL rule
    as the 2-D solver (in one dimension).  Input samples are resampled onto
    the internal nodes with a cubic spline.
    """
    if n_pts < 256:
        raise ValueError("n_pts must be at least 256")
    h = R_disk / n_pts
    radii = (np.arange(n_pts) + 0.5) * h
    spline = CubicSpline(u0.radii, u0.values)
    u = spline(radii).astype(float)
    du = np.diff(u) / h
    if np.max(np.abs(du)) >= 1.0:
        raise SpacelikeLost("initial radial data reaches the light cone")

    slope_bc = alpha / np.sqrt(1.0 + alpha * alpha)
    rhs1 = np.empty(n_pts)
    rhs2 = np.empty(n_pts)
    uh = np.empty(n_pts)
    t, steps, min_margin, status = radial_loop(
        u, h, radii, slope_bc, sigma, eps_space, t_end, rhs1, rhs2, uh)
    if status == 1:
        raise SpacelikeLost(f"radial flow lost the spacelike bound at "
                            f"t = {t:.6g}", time=t, margin=min_margin)
    if status == 2:
        raise NonFinite(f"radial flow produced non-finite values at "
                        f"t = {t:.6g}", time=t)
    return RadialProfile(radii=radii, values=u)


def radial_time_derivative(profile: RadialProfile, alpha: float) -> np.ndarray:
    """u_t of a staggered radial profile under the same discretization."""
    n = profile.radii.size
    h = float(profile.radii[1] - profile.radii[0])
    out = np.empty(n)
    radial_rhs_eval(profile.values, h, profile.radii,
                    alpha / np.sqrt(1.0 + alpha * alpha), out)
    return out


def _shoot_once(lam: float, R_disk: float, n_pts: int):
    """Integrate the translator ODE for a trial speed lam.

    Coupled RK4 on (phi, u) with u' = phi; the series start
    phi = lam r/2 - lam^3 r^3/32 bridges the removable singularity at 0.
    Returns (phi, u) on the uniform grid.
    """
    h = R_disk / (n_pts - 1)
    r = np.linspace(0.0, R_disk, n_pts)
    phi = np.zeros(n_pts)
    u = np.zeros(n_pts)
    phi[1] = 0.5 * lam * h - lam ** 3 * h ** 3 / 32.0
    u[1] = 0.25 * lam * h * h - lam ** 3 * h ** 4 / 128.0
    cap = 1.0 - 1e-15

    def f(ri, ph):
        return (lam - ph / ri) * (1.0 - ph * ph)

    for i in range(1, n_pts - 1):
        ri = r[i]
        p0 = phi[i]
        k1 = f(ri, p0)
        p1 = p0 + 0.5 * h * k1
        k2 = f(ri + 0.5 * h, p1)
        p2 = p0 + 0.5 * h * k2
        k3 = f(ri + 0.5 * h, p2)
        p3 = p0 + h * k3
        k4 = f(ri + h, p3)
        phi[i + 1] = p0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        phi[i + 1] = min(max(phi[i + 1], -cap), cap)
        u[i + 1] = u[i] + (h / 6.0) * (p0 + 2.0 * p1 + 2.0 * p2 + p3)
    return phi, u


def translator_shoot(alpha: float, R_disk: float,
                     n_pts: int = 2048) -> RadialProfile:
    """Radial translator profile and speed by bisection shooting.

    Finds lam with phi(R_disk) = alpha/sqrt(1+alpha^2) to 1e-10; the
    bracket [-4(1+|alpha|)/R, 4(1+|alpha|)/R] is doubled up to 10 times
    before giving up.  Negative alpha is handled by odd reflection.
    """
    if R_disk <= 0.0:
        raise ValueError("R_disk must be positive")
    if n_pts < 32:
        raise ValueError("n_pts too small for the shooting integration")
    if alpha == 0.0:
        r = np.linspace(0.0, R_disk, n_pts)
        return RadialProfile(radii=r, values=np.zeros(n_pts), lam=0.0,
                             slopes=np.zeros(n_pts))
    if alpha < 0.0:
        mirror = translator_shoot(-alpha, R_disk, n_pts)
        return RadialProfile(radii=mirror.radii, values=-mirror.values,
                             lam=-mirror.lam, slopes=-mirror.slopes)

    alpha_hat = alpha / np.sqrt(1.0 + alpha * alpha)

    def miss(lam):
        phi, _ = _shoot_once(lam, R_disk, n_pts)
        return phi[-1] - alpha_hat

    half = 4.0 * (1.0 + abs(alpha)) / R_disk
    lo, hi = -half, half
    for _ in range(10):
        if miss(lo) < 0.0 < miss(hi):
            break
        lo *= 2.0
        hi *= 2.0
    else:
        raise ShootingFailed(f"no bracket for the translator speed at "
                             f"alpha = {alpha:.6g}")

    for _ in range(200):
        lam = 0.5 * (lo + hi)
        g = miss(lam)
        if abs(g) <= 1e-10:
            break
        if g < 0.0:
            lo = lam
        else:
            hi = lam
    else:
        raise ShootingFailed("bisection did not reach the rim-slope "
                             "tolerance 1e-10")

    phi, u = _shoot_once(lam, R_disk, n_pts)
    r = np.linspace(0.0, R_disk, n_pts)
    return RadialProfile(radii=r, values=u, lam=float(lam), slopes=phi)


def compatible_plane(a, domain: Domain):
    """Exact stationary pair: plane u = a.x with its matching angle data.

    Returns (field generator, AnglePrescription) where the prescription is
    alpha(theta) = gamma(theta).a / sqrt(1-|a|^2), represented as the
    trigonometric interpolant of the domain's boundary samples.
    """
    ax, ay = float(a[0]), float(a[1])
    norm2 = ax * ax + ay * ay
    if norm2 >= 1.0:
        raise NotSpacelike(f"|a| = {np.sqrt(norm2):.6g} >= 1")

    vals = (domain.gamma[:, 0] * ax + domain.gamma[:, 1] * ay) / np.sqrt(1.0 - norm2)
    n = vals.size
    spec = np.fft.rfft(vals) / n
    cos = [float(spec[0].real)]
    sin = []
    for m in range(1, spec.size):
        cos.append(2.0 * float(spec[m].real))
        sin.append(-2.0 * float(spec[m].imag))
    sig = 1e-13 * max(1.0, float(np.max(np.abs(vals))))
    top = 0
    for m in range(1, len(cos)):
        if abs(cos[m]) > sig or abs(sin[m - 1]) > sig:
            top = m
    alpha = AnglePrescription.fourier(cos[:top + 1], sin[:top])

    def field_gen(grid):
        from .grid import Field

        return Field(ax * grid.x + ay * grid.y)

    return field_gen, alpha


def write_profile(path, profile: RadialProfile) -> None:
    """Two-column CSV (r, u) with a '# lambda=' comment when known."""
    lines = []
    if profile.lam is not None:
        lines.append(f"# lambda={profile.lam:.17g}")
    lines.append("r,u")
    for r, u in zip(profile.radii, profile.values):
        lines.append(f"{r:.17g},{u:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile(path) -> RadialProfile:
    lines = Path(path).read_text().splitlines()
    lam = None
    start = 0
    if lines[0].startswith("# lambda="):
        lam = float(lines[0].split("=", 1)[1])
        start = 1
    if lines[start] != "r,u":
        raise ValueError(f"unexpected profile header in {path}")
    data = np.array([[float(v) for v in line.split(",")]
                     for line in lines[start + 1:]])
    return RadialProfile(radii=data[:, 0], values=data[:, 1], lam=lam)
