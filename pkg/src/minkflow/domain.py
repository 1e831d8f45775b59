"""Strictly convex planar domains described as radial graphs about a center.

The boundary curve is x(theta) = center + R(theta)*(cos theta, sin theta)
with R > 0 and curvature kappa > 0 everywhere.  A boundary-angle function
alpha(theta) rides along; together they carry the geometric constants that
the runtime bound checks need: sup|alpha|, inf kappa and the arc-length
Lipschitz constant of alpha.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveRadius, NotStrictlyConvex

FOURIER_ORDER_LIMIT = 16


@dataclass(frozen=True)
class AnglePrescription:
    """Boundary angle as a function of the boundary parameter theta.

    Either a constant or a real Fourier series
    a0 + sum_m (cos_coeffs[m] cos(m theta) + sin_coeffs[m-1] sin(m theta)).
    The prescription depends on boundary position only, never on height.
    """

    cos_coeffs: tuple = (0.0,)
    sin_coeffs: tuple = ()

    @staticmethod
    def constant(value: float) -> "AnglePrescription":
        return AnglePrescription(cos_coeffs=(float(value),))

    @staticmethod
    def fourier(cos_coeffs, sin_coeffs=()) -> "AnglePrescription":
        cos = tuple(float(c) for c in cos_coeffs) or (0.0,)
        return AnglePrescription(cos_coeffs=cos,
                                 sin_coeffs=tuple(float(s) for s in sin_coeffs))

    @property
    def max_mode(self) -> int:
        return max(len(self.cos_coeffs) - 1, len(self.sin_coeffs))

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full_like(theta, self.cos_coeffs[0])
        for m, c in enumerate(self.cos_coeffs[1:], start=1):
            out = out + c * np.cos(m * theta)
        for m, s in enumerate(self.sin_coeffs, start=1):
            out = out + s * np.sin(m * theta)
        return out

    def derivative(self, theta):
        """d(alpha)/d(theta), exact term-wise."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m, c in enumerate(self.cos_coeffs[1:], start=1):
            out = out - m * c * np.sin(m * theta)
        for m, s in enumerate(self.sin_coeffs, start=1):
            out = out + m * s * np.cos(m * theta)
        return out


@dataclass(frozen=True)
class DomainSpec:
    """Shape parameters for a radial-graph domain.

    kind is one of "disk", "ellipse", "radial-fourier".  The radial function
    must be C^3-representable; Fourier descriptions are truncated at order
    FOURIER_ORDER_LIMIT so curvature (which needs R'') stays resolvable.
    """

    kind: str
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    cos_coeffs: tuple = (1.0,)
    sin_coeffs: tuple = ()
    center: tuple = (0.0, 0.0)

    @staticmethod
    def disk(radius: float = 1.0, center=(0.0, 0.0)) -> "DomainSpec":
        return DomainSpec(kind="disk", radius=float(radius), center=tuple(center))

    @staticmethod
    def ellipse(a: float, b: float, center=(0.0, 0.0)) -> "DomainSpec":
        return DomainSpec(kind="ellipse", a=float(a), b=float(b), center=tuple(center))

    @staticmethod
    def radial_fourier(cos_coeffs, sin_coeffs=(), center=(0.0, 0.0)) -> "DomainSpec":
        cos = tuple(float(c) for c in cos_coeffs)
        sin = tuple(float(s) for s in sin_coeffs)
        order = max(len(cos) - 1, len(sin))
        if order > FOURIER_ORDER_LIMIT:
            raise ValueError(f"radial Fourier order {order} exceeds limit "
                             f"{FOURIER_ORDER_LIMIT}")
        return DomainSpec(kind="radial-fourier", cos_coeffs=cos, sin_coeffs=sin,
                          center=tuple(center))

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse", "radial-fourier"):
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @property
    def max_mode(self) -> int:
        if self.kind == "disk":
            return 0
        if self.kind == "ellipse":
            # R has geometrically decaying even modes; order 16 captures it
            # far below curvature-level accuracy for aspect ratios <= 4.
            return FOURIER_ORDER_LIMIT
        return max(len(self.cos_coeffs) - 1, len(self.sin_coeffs))

    def radial(self, theta):
        """R(theta), R'(theta), R''(theta) as arrays."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "disk":
            r = np.full_like(theta, self.radius)
            z = np.zeros_like(theta)
            return r, z, z
        if self.kind == "ellipse":
            a, b = self.a, self.b
            g = (b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2
            gp = (a * a - b * b) * np.sin(2.0 * theta)
            gpp = 2.0 * (a * a - b * b) * np.cos(2.0 * theta)
            ab = a * b
            r = ab * g ** -0.5
            rp = -0.5 * ab * g ** -1.5 * gp
            rpp = 0.75 * ab * g ** -2.5 * gp * gp - 0.5 * ab * g ** -1.5 * gpp
            return r, rp, rpp
        r = np.full_like(theta, self.cos_coeffs[0])
        rp = np.zeros_like(theta)
        rpp = np.zeros_like(theta)
        for m, c in enumerate(self.cos_coeffs[1:], start=1):
            r = r + c * np.cos(m * theta)
            rp = rp - m * c * np.sin(m * theta)
            rpp = rpp - m * m * c * np.cos(m * theta)
        for m, s in enumerate(self.sin_coeffs, start=1):
            r = r + s * np.sin(m * theta)
            rp = rp + m * s * np.cos(m * theta)
            rpp = rpp - m * m * s * np.sin(m * theta)
        return r, rp, rpp


@dataclass(frozen=True)
class Domain:
    """A validated strictly convex domain with its boundary geometry.

    Immutable after construction; safe to share across workers.  Sampled
    arrays (length n_samples) back the geometric constants; callables give
    exact values at arbitrary theta for grid construction.
    """

    spec: DomainSpec
    alpha: AnglePrescription
    thetas: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    Rp: np.ndarray = field(repr=False)
    Rpp: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)      # (n, 2) outward unit normals
    kappa: np.ndarray = field(repr=False)
    alpha_bar: float = 0.0
    kappa_min: float = 0.0
    c_alpha: float = 0.0

    @property
    def center(self):
        return self.spec.center

    def radius(self, theta):
        return self.spec.radial(theta)[0]

    def radius_derivatives(self, theta):
        return self.spec.radial(theta)

    def boundary_point(self, theta):
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        cx, cy = self.spec.center
        return np.stack([cx + r * np.cos(theta), cy + r * np.sin(theta)], axis=-1)

    def normal(self, theta):
        """Outward unit normal of the boundary at parameter theta."""
        theta = np.asarray(theta, dtype=float)
        r, rp, _ = self.spec.radial(theta)
        norm = np.sqrt(r * r + rp * rp)
        gx = (r * np.cos(theta) + rp * np.sin(theta)) / norm
        gy = (r * np.sin(theta) - rp * np.cos(theta)) / norm
        return np.stack([gx, gy], axis=-1)

    def tangent(self, theta):
        """Unit tangent in the direction of increasing theta."""
        theta = np.asarray(theta, dtype=float)
        r, rp, _ = self.spec.radial(theta)
        norm = np.sqrt(r * r + rp * rp)
        tx = (rp * np.cos(theta) - r * np.sin(theta)) / norm
        ty = (rp * np.sin(theta) + r * np.cos(theta)) / norm
        return np.stack([tx, ty], axis=-1)

    def curvature(self, theta):
        r, rp, rpp = self.spec.radial(theta)
        return (r * r + 2.0 * rp * rp - r * rpp) / (r * r + rp * rp) ** 1.5

    def arc_rate(self, theta):
        """ds/dtheta along the boundary."""
        r, rp, _ = self.spec.radial(theta)
        return np.sqrt(r * r + rp * rp)


def build_domain(spec: DomainSpec, alpha: AnglePrescription,
                 n_samples: int = 1024) -> Domain:
    """Construct and validate a Domain.

    Curvature comes from the radial-graph formula
    kappa = (R^2 + 2R'^2 - R R'') / (R^2 + R'^2)^(3/2); the arc-length
    Lipschitz constant of alpha is max |alpha'(theta)| / (ds/dtheta) over
    the samples.

    Raises NonPositiveRadius / NotStrictlyConvex on invalid shapes.
    """
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    # 16 samples per radial mode keep the curvature (which needs R'')
    # trustworthy; the angle data only feeds sup/Lipschitz constants, so
    # Nyquist-safe sampling suffices there.
    needed = max(16 * max(spec.max_mode, 1), 2 * alpha.max_mode + 2)
    if n_samples < needed:
        raise ValueError(f"n_samples={n_samples} too coarse for Fourier "
                         f"content; need >= {needed}")

    thetas = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    r, rp, rpp = spec.radial(thetas)
    if np.min(r) <= 0.0:
        raise NonPositiveRadius(f"min R = {np.min(r):.6g} <= 0")

    norm = np.sqrt(r * r + rp * rp)
    kappa = (r * r + 2.0 * rp * rp - r * rpp) / norm ** 3
    if np.min(kappa) <= 0.0:
        raise NotStrictlyConvex(f"min kappa = {np.min(kappa):.6g} <= 0")

    gamma = np.stack([(r * np.cos(thetas) + rp * np.sin(thetas)) / norm,
                      (r * np.sin(thetas) - rp * np.cos(thetas)) / norm], axis=-1)

    alpha_vals = alpha(thetas)
    alpha_bar = float(np.max(np.abs(alpha_vals)))
    c_alpha = float(np.max(np.abs(alpha.derivative(thetas)) / norm))

    return Domain(spec=spec, alpha=alpha, thetas=thetas, R=r, Rp=rp, Rpp=rpp,
                  gamma=gamma, kappa=kappa, alpha_bar=alpha_bar,
                  kappa_min=float(np.min(kappa)), c_alpha=c_alpha)


def boundary_normal(domain: Domain, theta: float) -> np.ndarray:
    """Outward unit normal of the boundary at parameter theta."""
    return domain.normal(theta)


def gradient_bound_constant(alpha_bar: float, kappa_min: float, c_alpha: float,
                            c_h: float, sup_v0: float) -> float:
    """Explicit time-independent bound on the gradient function v.

    max of: 2*sqrt(1+abar^2),
            (1+abar^2) * (abar*C_H/kmin + (2*abar^2+1)*C_alpha/kmin + 1),
            sup of v at t=0.
    """
    if kappa_min <= 0.0:
        raise ValueError("kappa_min must be positive")
    one_plus = 1.0 + alpha_bar * alpha_bar
    term_edge = 2.0 * np.sqrt(one_plus)
    term_flux = one_plus * (alpha_bar * c_h / kappa_min
                            + (2.0 * alpha_bar * alpha_bar + 1.0) * c_alpha / kappa_min
                            + 1.0)
    return float(max(term_edge, term_flux, sup_v0))


def theoretical_c(domain: Domain, c_h: float, sup_v0: float) -> float:
    """Gradient bound constant evaluated from the domain's geometry."""
    return gradient_bound_constant(domain.alpha_bar, domain.kappa_min,
                                   domain.c_alpha, c_h, sup_v0)
