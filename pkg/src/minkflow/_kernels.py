"""Fused numerical kernels for the stepping loop.

numba-jitted when available (set MINKFLOW_NO_NUMBA=1 to force the plain
numpy path; both paths implement the same arithmetic).  Kernels never
raise; they return status codes that the flow module turns into typed
errors.
"""

from __future__ import annotations

import os

import numpy as np

HAVE_NUMBA = False
if not os.environ.get("MINKFLOW_NO_NUMBA"):
    try:
        import numba

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba present in normal installs
        HAVE_NUMBA = False

if HAVE_NUMBA:
    njit = numba.njit
else:  # identity decorator so the same source serves both paths
    def njit(*args, **kwargs):
        def deco(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return deco


@njit(cache=True)
def _grad_min_margin(u, ghost, rx, tx, ry, ty, pole, dr, dtheta, gx, gy):
    """Cartesian gradient; returns the minimum of 1 - |Du|^2.

    Ring 0 reaches across the pole, the boundary row uses the ghost ring;
    interior rows run branch-free so the compiler can vectorize.
    """
    n_r, n_t = u.shape
    inv2dr = 0.5 / dr
    inv2dth = 0.5 / dtheta
    b = n_r - 1
    for k in range(n_t):
        kp1 = k + 1 if k + 1 < n_t else 0
        km1 = k - 1 if k > 0 else n_t - 1
        dru = (u[1, k] - u[0, pole[k]]) * inv2dr
        dthu = (u[0, kp1] - u[0, km1]) * inv2dth
        gx[0, k] = rx[0, k] * dru + tx[0, k] * dthu
        gy[0, k] = ry[0, k] * dru + ty[0, k] * dthu
        dru = (ghost[k] - u[b - 1, k]) * inv2dr
        dthu = (u[b, kp1] - u[b, km1]) * inv2dth
        gx[b, k] = rx[b, k] * dru + tx[b, k] * dthu
        gy[b, k] = ry[b, k] * dru + ty[b, k] * dthu
    for j in range(1, b):
        for k in range(1, n_t - 1):
            dru = (u[j + 1, k] - u[j - 1, k]) * inv2dr
            dthu = (u[j, k + 1] - u[j, k - 1]) * inv2dth
            gx[j, k] = rx[j, k] * dru + tx[j, k] * dthu
            gy[j, k] = ry[j, k] * dru + ty[j, k] * dthu
        dru = (u[j + 1, 0] - u[j - 1, 0]) * inv2dr
        dthu = (u[j, 1] - u[j, n_t - 1]) * inv2dth
        gx[j, 0] = rx[j, 0] * dru + tx[j, 0] * dthu
        gy[j, 0] = ry[j, 0] * dru + ty[j, 0] * dthu
        dru = (u[j + 1, n_t - 1] - u[j - 1, n_t - 1]) * inv2dr
        dthu = (u[j, 0] - u[j, n_t - 2]) * inv2dth
        gx[j, n_t - 1] = rx[j, n_t - 1] * dru + tx[j, n_t - 1] * dthu
        gy[j, n_t - 1] = ry[j, n_t - 1] * dru + ty[j, n_t - 1] * dthu
    min_margin = 1.0e300
    for j in range(n_r):
        for k in range(n_t):
            a = gx[j, k]
            c = gy[j, k]
            min_margin = min(min_margin, 1.0 - a * a - c * c)
    return min_margin


@njit(cache=True, inline="always")
def _assemble_node(drgx, drgy, dthgx, dthgy, mrx, mtx, mry, mty, p, q):
    uxx = mrx * drgx + mtx * dthgx
    uyy = mry * drgy + mty * dthgy
    uxy = 0.5 * ((mry * drgx + mty * dthgx) + (mrx * drgy + mtx * dthgy))
    w2 = 1.0 - p * p - q * q
    return uxx + uyy + (p * p * uxx + 2.0 * p * q * uxy + q * q * uyy) / w2


@njit(cache=True)
def _rhs_kernel(u, ghost, gx, gy, rx, tx, ry, ty,
                mid_rx, mid_tx, mid_ry, mid_ty,
                low_rx, low_tx, low_ry, low_ty,
                pole, dr, dtheta, out):
    """Expanded quasilinear operator a^{ij}(Du) u_ij from a gradient pair.

    Second derivatives come from differentiating (gx, gy): across-pole at
    ring 0, centered in the interior; on the boundary row the radial part
    is the difference of the gradient reconstructions at r = 1 (ghost
    aware) and r = 1 - dr, keeping the stencil compact across the ghost
    ring.  Caller guarantees 1 - |Du|^2 is above the spacelike floor.
    """
    n_r, n_t = gx.shape
    inv2dr = 0.5 / dr
    inv2dth = 0.5 / dtheta
    invdr = 1.0 / dr
    b = n_r - 1
    for k in range(n_t):
        kp1 = k + 1 if k + 1 < n_t else 0
        km1 = k - 1 if k > 0 else n_t - 1
        drgx = (gx[1, k] - gx[0, pole[k]]) * inv2dr
        drgy = (gy[1, k] - gy[0, pole[k]]) * inv2dr
        dthgx = (gx[0, kp1] - gx[0, km1]) * inv2dth
        dthgy = (gy[0, kp1] - gy[0, km1]) * inv2dth
        out[0, k] = _assemble_node(drgx, drgy, dthgx, dthgy,
                                   rx[0, k], tx[0, k], ry[0, k], ty[0, k],
                                   gx[0, k], gy[0, k])
        dth_b = (u[b, kp1] - u[b, km1]) * inv2dth
        dth_bm1 = (u[b - 1, kp1] - u[b - 1, km1]) * inv2dth
        dru_hi = (ghost[k] - u[b, k]) * invdr
        dthu_hi = 1.5 * dth_b - 0.5 * dth_bm1
        gxh = mid_rx[k] * dru_hi + mid_tx[k] * dthu_hi
        gyh = mid_ry[k] * dru_hi + mid_ty[k] * dthu_hi
        dru_lo = (u[b, k] - u[b - 1, k]) * invdr
        dthu_lo = 0.5 * (dth_b + dth_bm1)
        gxl = low_rx[k] * dru_lo + low_tx[k] * dthu_lo
        gyl = low_ry[k] * dru_lo + low_ty[k] * dthu_lo
        drgx = (gxh - gxl) * invdr
        drgy = (gyh - gyl) * invdr
        dthgx = (gx[b, kp1] - gx[b, km1]) * inv2dth
        dthgy = (gy[b, kp1] - gy[b, km1]) * inv2dth
        out[b, k] = _assemble_node(drgx, drgy, dthgx, dthgy,
                                   rx[b, k], tx[b, k], ry[b, k], ty[b, k],
                                   gx[b, k], gy[b, k])
    for j in range(1, b):
        for k in range(1, n_t - 1):
            drgx = (gx[j + 1, k] - gx[j - 1, k]) * inv2dr
            drgy = (gy[j + 1, k] - gy[j - 1, k]) * inv2dr
            dthgx = (gx[j, k + 1] - gx[j, k - 1]) * inv2dth
            dthgy = (gy[j, k + 1] - gy[j, k - 1]) * inv2dth
            out[j, k] = _assemble_node(drgx, drgy, dthgx, dthgy,
                                       rx[j, k], tx[j, k], ry[j, k], ty[j, k],
                                       gx[j, k], gy[j, k])
        for k in range(0, n_t, n_t - 1):
            kp1 = k + 1 if k + 1 < n_t else 0
            km1 = k - 1 if k > 0 else n_t - 1
            drgx = (gx[j + 1, k] - gx[j - 1, k]) * inv2dr
            drgy = (gy[j + 1, k] - gy[j - 1, k]) * inv2dr
            dthgx = (gx[j, kp1] - gx[j, km1]) * inv2dth
            dthgy = (gy[j, kp1] - gy[j, km1]) * inv2dth
            out[j, k] = _assemble_node(drgx, drgy, dthgx, dthgy,
                                       rx[j, k], tx[j, k], ry[j, k], ty[j, k],
                                       gx[j, k], gy[j, k])


@njit(cache=True)
def _close_kernel(u, alpha_b, cr_mid, cth_mid,
                  ext_rx, ext_tx, ext_ry, ext_ty,
                  taux, tauy, dr, dtheta, ghost_out):
    """Fill the ghost ring from the oblique boundary condition.

    Returns the first theta index where the tangential slope reaches the
    light cone (|q| >= 1), or -1 on success.
    """
    n_t = u.shape[1]
    b = u.shape[0] - 1
    inv2dth = 0.5 / dtheta
    for k in range(n_t):
        kp1 = k + 1 if k + 1 < n_t else 0
        km1 = k - 1 if k > 0 else n_t - 1
        dth_b = (u[b, kp1] - u[b, km1]) * inv2dth
        dth_bm1 = (u[b - 1, kp1] - u[b - 1, km1]) * inv2dth
        dth1 = 1.5 * dth_b - 0.5 * dth_bm1
        dre = (2.0 * u[b, k] - 3.0 * u[b - 1, k] + u[b - 2, k]) / dr
        ux = ext_rx[k] * dre + ext_tx[k] * dth1
        uy = ext_ry[k] * dre + ext_ty[k] * dth1
        q = taux[k] * ux + tauy[k] * uy
        if q * q >= 1.0:
            return k
        al = alpha_b[k]
        p = np.sqrt(al * al * (1.0 - q * q) / (1.0 + al * al))
        if al < 0.0:
            p = -p
        ghost_out[k] = u[b, k] + dr * (p - cth_mid[k] * dth1) / cr_mid[k]
    return -1


@njit(cache=True)
def _radial_rhs_kernel(u, h, radii, slope_bc, out):
    """1-D radial operator u''/(1-u'^2) + u'/r on a staggered line.

    Mirror closure at the pole, ghost u[b] + h*slope_bc at the rim.
    Returns the minimum of 1 - u'^2.
    """
    n = u.shape[0]
    b = n - 1
    inv2h = 0.5 / h
    invh2 = 1.0 / (h * h)
    min_margin = 1.0e300
    for i in range(n):
        if i == 0:
            um = u[0]
        else:
            um = u[i - 1]
        if i == b:
            up = u[b] + h * slope_bc
        else:
            up = u[i + 1]
        du = (up - um) * inv2h
        d2u = (up - 2.0 * u[i] + um) * invh2
        m = 1.0 - du * du
        if m < min_margin:
            min_margin = m
        out[i] = d2u / m + du / radii[i]
    return min_margin


@njit(cache=True)
def _radial_loop_kernel(u, h, radii, slope_bc, sigma, eps_space, t_end,
                        rhs1, rhs2, uh):
    """Explicit midpoint stepping of the radial flow up to t_end.

    Returns (t, steps, min_margin_overall, status) with status 0 = reached
    t_end, 1 = spacelike lost, 2 = non-finite values.
    """
    t = 0.0
    steps = 0
    overall = 1.0e300
    n = u.shape[0]
    while t < t_end - 1e-14 * max(1.0, t_end):
        m1 = _radial_rhs_kernel(u, h, radii, slope_bc, rhs1)
        if m1 < overall:
            overall = m1
        if m1 <= eps_space:
            return t, steps, overall, 1
        vmax2 = 1.0 / m1
        dt = sigma * h * h / (2.0 * (1.0 + vmax2))
        if t + dt > t_end:
            dt = t_end - t
        for i in range(n):
            uh[i] = u[i] + 0.5 * dt * rhs1[i]
        m2 = _radial_rhs_kernel(uh, h, radii, slope_bc, rhs2)
        if m2 <= eps_space:
            return t, steps, overall, 1
        ok = True
        for i in range(n):
            u[i] = u[i] + dt * rhs2[i]
            if not np.isfinite(u[i]):
                ok = False
        if not ok:
            return t, steps, overall, 2
        t += dt
        steps += 1
    return t, steps, overall, 0


# ---------------------------------------------------------------------------
# numpy fallbacks (identical arithmetic, vectorized)
# ---------------------------------------------------------------------------


def locate_min_margin(gx, gy):
    """Node of the smallest spacelike margin (for error reporting)."""
    margin = 1.0 - gx * gx - gy * gy
    flat = int(np.argmin(margin))
    jmin, kmin = divmod(flat, gx.shape[1])
    return float(margin[jmin, kmin]), jmin, kmin


def _grad_numpy(u, ghost, rx, tx, ry, ty, pole, dr, dtheta, gx, gy):
    dru = np.empty_like(u)
    dru[1:-1] = (u[2:] - u[:-2]) / (2.0 * dr)
    dru[0] = (u[1] - u[0, pole]) / (2.0 * dr)
    dru[-1] = (ghost - u[-2]) / (2.0 * dr)
    dthu = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2.0 * dtheta)
    np.multiply(rx, dru, out=gx)
    gx += tx * dthu
    np.multiply(ry, dru, out=gy)
    gy += ty * dthu
    return float(np.min(1.0 - gx * gx - gy * gy))


def _rhs_numpy(u, ghost, gx, gy, rx, tx, ry, ty,
               mid_rx, mid_tx, mid_ry, mid_ty,
               low_rx, low_tx, low_ry, low_ty,
               pole, dr, dtheta, out):
    def dth(f):
        return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2.0 * dtheta)

    def second_pass(f, dr_boundary):
        drf = np.empty_like(f)
        drf[1:-1] = (f[2:] - f[:-2]) / (2.0 * dr)
        drf[0] = (f[1] - f[0, pole]) / (2.0 * dr)
        drf[-1] = dr_boundary
        dthf = dth(f)
        return rx * drf + tx * dthf, ry * drf + ty * dthf

    dth_b = dth(u[-1])
    dth_bm1 = dth(u[-2])
    dru_hi = (ghost - u[-1]) / dr
    dthu_hi = 1.5 * dth_b - 0.5 * dth_bm1
    gxh = mid_rx * dru_hi + mid_tx * dthu_hi
    gyh = mid_ry * dru_hi + mid_ty * dthu_hi
    dru_lo = (u[-1] - u[-2]) / dr
    dthu_lo = 0.5 * (dth_b + dth_bm1)
    gxl = low_rx * dru_lo + low_tx * dthu_lo
    gyl = low_ry * dru_lo + low_ty * dthu_lo

    gxx, gxy_a = second_pass(gx, (gxh - gxl) / dr)
    gyx, gyy = second_pass(gy, (gyh - gyl) / dr)
    uxy = 0.5 * (gxy_a + gyx)
    w2 = 1.0 - gx * gx - gy * gy
    out[...] = (gxx + gyy
                + (gx * gx * gxx + 2.0 * gx * gy * uxy + gy * gy * gyy) / w2)


def _close_numpy(u, alpha_b, cr_mid, cth_mid, ext_rx, ext_tx, ext_ry, ext_ty,
                 taux, tauy, dr, dtheta, ghost_out):
    b = u.shape[0] - 1
    dth_b = (np.roll(u[b], -1) - np.roll(u[b], 1)) / (2.0 * dtheta)
    dth_bm1 = (np.roll(u[b - 1], -1) - np.roll(u[b - 1], 1)) / (2.0 * dtheta)
    dth1 = 1.5 * dth_b - 0.5 * dth_bm1
    dre = (2.0 * u[b] - 3.0 * u[b - 1] + u[b - 2]) / dr
    ux = ext_rx * dre + ext_tx * dth1
    uy = ext_ry * dre + ext_ty * dth1
    q = taux * ux + tauy * uy
    bad = np.nonzero(q * q >= 1.0)[0]
    if bad.size:
        return int(bad[0])
    p = np.sign(alpha_b) * np.sqrt(
        alpha_b * alpha_b * (1.0 - q * q) / (1.0 + alpha_b * alpha_b))
    ghost_out[...] = u[b] + dr * (p - cth_mid * dth1) / cr_mid
    return -1


def _radial_rhs_numpy(u, h, radii, slope_bc, out):
    up = np.empty_like(u)
    um = np.empty_like(u)
    up[:-1] = u[1:]
    up[-1] = u[-1] + h * slope_bc
    um[1:] = u[:-1]
    um[0] = u[0]
    du = (up - um) / (2.0 * h)
    margin = 1.0 - du * du
    out[...] = (up - 2.0 * u + um) / (h * h) / margin + du / radii
    return float(np.min(margin))


def _radial_loop_numpy(u, h, radii, slope_bc, sigma, eps_space, t_end,
                       rhs1, rhs2, uh):
    t = 0.0
    steps = 0
    overall = 1.0e300
    while t < t_end - 1e-14 * max(1.0, t_end):
        m1 = _radial_rhs_numpy(u, h, radii, slope_bc, rhs1)
        overall = min(overall, m1)
        if m1 <= eps_space:
            return t, steps, overall, 1
        dt = sigma * h * h / (2.0 * (1.0 + 1.0 / m1))
        dt = min(dt, t_end - t)
        np.multiply(rhs1, 0.5 * dt, out=uh)
        uh += u
        m2 = _radial_rhs_numpy(uh, h, radii, slope_bc, rhs2)
        if m2 <= eps_space:
            return t, steps, overall, 1
        u += dt * rhs2
        if steps % 1024 == 0 and not np.all(np.isfinite(u)):
            return t, steps, overall, 2
        t += dt
        steps += 1
    if not np.all(np.isfinite(u)):
        return t, steps, overall, 2
    return t, steps, overall, 0


if HAVE_NUMBA:
    grad_eval = _grad_min_margin
    rhs_eval = _rhs_kernel
    close_eval = _close_kernel
    radial_rhs_eval = _radial_rhs_kernel
    radial_loop = _radial_loop_kernel
else:
    grad_eval = _grad_numpy
    rhs_eval = _rhs_numpy
    close_eval = _close_numpy
    radial_rhs_eval = _radial_rhs_numpy
    radial_loop = _radial_loop_numpy
