"""Compiled (numba) backend for the numerical kernels.

Every public function here has a twin of identical signature and semantics in
``_kernels_numpy``; the dispatcher in ``kernels`` picks one at import time.
All functions take flat arrays unpacked from ``maps.PackedMap``:

* ``mat``  -- (2,2) float64 integer matrix ``A``
* ``minv`` -- (2,2) float64 exact inverse of ``A``
* ``tcoord/tk/tamp/tph`` -- perturbation terms (coordinate, mode, amplitude,
  phase) of the forcing ``amp*sin(2*pi*(k.x) + phase)``

Status codes shared by the flow kernels:
0 = ok, 1 = step underflow, 2 = max steps exceeded, 3 = transversality lost,
4 = lift inversion failed.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# Dormand-Prince 5(4) tableau.  The 5th-order weights B* are the last stage
# row (FSAL), E* are the weights of the embedded error estimate b - b_hat.
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@njit(cache=True)
def _reduce_s(x):
    r = x - math.floor(x)
    if r >= 1.0:
        r -= 1.0
    return r


@njit(cache=True)
def _lift_s(mat, tcoord, tk, tamp, tph, x0, x1):
    y0 = mat[0, 0] * x0 + mat[0, 1] * x1
    y1 = mat[1, 0] * x0 + mat[1, 1] * x1
    for i in range(tamp.shape[0]):
        s = tamp[i] * math.sin(TWO_PI * (tk[i, 0] * x0 + tk[i, 1] * x1) + tph[i])
        if tcoord[i] == 0:
            y0 += s
        else:
            y1 += s
    return y0, y1


@njit(cache=True)
def _jac_s(mat, tcoord, tk, tamp, tph, x0, x1):
    j00 = mat[0, 0]
    j01 = mat[0, 1]
    j10 = mat[1, 0]
    j11 = mat[1, 1]
    for i in range(tamp.shape[0]):
        c = tamp[i] * TWO_PI * math.cos(
            TWO_PI * (tk[i, 0] * x0 + tk[i, 1] * x1) + tph[i]
        )
        if tcoord[i] == 0:
            j00 += c * tk[i, 0]
            j01 += c * tk[i, 1]
        else:
            j10 += c * tk[i, 0]
            j11 += c * tk[i, 1]
    return j00, j01, j10, j11


@njit(cache=True)
def lift_batch(mat, tcoord, tk, tamp, tph, X):
    B = X.shape[0]
    Y = np.empty((B, 2))
    for b in range(B):
        y0, y1 = _lift_s(mat, tcoord, tk, tamp, tph, X[b, 0], X[b, 1])
        Y[b, 0] = y0
        Y[b, 1] = y1
    return Y


@njit(cache=True)
def jac_batch(mat, tcoord, tk, tamp, tph, X):
    B = X.shape[0]
    J = np.empty((B, 2, 2))
    for b in range(B):
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, X[b, 0], X[b, 1])
        J[b, 0, 0] = j00
        J[b, 0, 1] = j01
        J[b, 1, 0] = j10
        J[b, 1, 1] = j11
    return J


@njit(cache=True)
def _invert_s(mat, minv, tcoord, tk, tamp, tph, w0, w1, tol, maxit):
    """Newton solve of lift(y) = (w0, w1), seeded with the linear inverse."""
    y0 = minv[0, 0] * w0 + minv[0, 1] * w1
    y1 = minv[1, 0] * w0 + minv[1, 1] * w1
    ok = False
    for _ in range(maxit):
        f0, f1 = _lift_s(mat, tcoord, tk, tamp, tph, y0, y1)
        g0 = f0 - w0
        g1 = f1 - w1
        if max(abs(g0), abs(g1)) <= tol:
            ok = True
            break
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, y0, y1)
        d = j00 * j11 - j01 * j10
        if abs(d) < 1e-300:
            break
        y0 -= (j11 * g0 - j01 * g1) / d
        y1 -= (-j10 * g0 + j00 * g1) / d
    return y0, y1, ok


@njit(cache=True)
def invert_lift_batch(mat, minv, tcoord, tk, tamp, tph, Y, tol, maxit):
    B = Y.shape[0]
    X = np.empty((B, 2))
    ok = np.zeros(B, dtype=np.bool_)
    for b in range(B):
        x0, x1, o = _invert_s(
            mat, minv, tcoord, tk, tamp, tph, Y[b, 0], Y[b, 1], tol, maxit
        )
        X[b, 0] = x0
        X[b, 1] = x1
        ok[b] = o
    return X, ok


@njit(cache=True)
def _periodic_G(mat, tcoord, tk, tamp, tph, x0, x1, m0, m1, n):
    """Residual of the period-n lift equation and its monodromy matrix.

    Iterates with mod-1 reduction while accumulating the integer translation
    T <- A T + floor-step, so G = y_n + T_n - x - m is free of the large
    cancellations a direct lift iteration would create.
    """
    y0 = x0
    y1 = x1
    T0 = 0.0
    T1 = 0.0
    M00 = 1.0
    M01 = 0.0
    M10 = 0.0
    M11 = 1.0
    for _ in range(n):
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, y0, y1)
        n00 = j00 * M00 + j01 * M10
        n01 = j00 * M01 + j01 * M11
        n10 = j10 * M00 + j11 * M10
        n11 = j10 * M01 + j11 * M11
        M00, M01, M10, M11 = n00, n01, n10, n11
        z0, z1 = _lift_s(mat, tcoord, tk, tamp, tph, y0, y1)
        f0 = math.floor(z0)
        f1 = math.floor(z1)
        y0 = z0 - f0
        y1 = z1 - f1
        if y0 >= 1.0:
            y0 -= 1.0
            f0 += 1.0
        if y1 >= 1.0:
            y1 -= 1.0
            f1 += 1.0
        t0n = mat[0, 0] * T0 + mat[0, 1] * T1 + f0
        t1n = mat[1, 0] * T0 + mat[1, 1] * T1 + f1
        T0, T1 = t0n, t1n
    G0 = (y0 - x0) + (T0 - m0)
    G1 = (y1 - x1) + (T1 - m1)
    return G0, G1, M00, M01, M10, M11


@njit(cache=True)
def periodic_newton_batch(mat, tcoord, tk, tamp, tph, X, mvec, n, tol, maxit):
    """Newton refinement of period-n points (lift equation F^n(x) = x + m).

    Damped with up to four step halvings per iteration; per-point success
    flags instead of exceptions so callers can retry with a finer homotopy.
    """
    B = X.shape[0]
    pts = np.empty((B, 2))
    resid = np.empty(B)
    ok = np.zeros(B, dtype=np.bool_)
    iters = np.zeros(B, dtype=np.int64)
    for b in range(B):
        x0 = X[b, 0]
        x1 = X[b, 1]
        m0 = mvec[b, 0]
        m1 = mvec[b, 1]
        # achievable residual floor: the lift traverses magnitudes ~|m|,
        # so rounding limits the residual to a few eps times that scale
        tol_b = max(tol, 8.881784197001252e-16 * (1.0 + max(abs(m0), abs(m1))))
        G0, G1, M00, M01, M10, M11 = _periodic_G(
            mat, tcoord, tk, tamp, tph, x0, x1, m0, m1, n
        )
        r = max(abs(G0), abs(G1))
        for it in range(maxit):
            if r <= tol_b:
                ok[b] = True
                break
            iters[b] = it + 1
            d00 = M00 - 1.0
            d11 = M11 - 1.0
            dd = d00 * d11 - M01 * M10
            if abs(dd) < 1e-300:
                break
            dx0 = (d11 * G0 - M01 * G1) / dd
            dx1 = (-M10 * G0 + d00 * G1) / dd
            lam = 1.0
            accepted = False
            for _ in range(5):
                c0 = x0 - lam * dx0
                c1 = x1 - lam * dx1
                H0, H1, N00, N01, N10, N11 = _periodic_G(
                    mat, tcoord, tk, tamp, tph, c0, c1, m0, m1, n
                )
                rc = max(abs(H0), abs(H1))
                if rc < r or rc <= tol_b:
                    x0, x1 = c0, c1
                    G0, G1, M00, M01, M10, M11 = H0, H1, N00, N01, N10, N11
                    r = rc
                    accepted = True
                    break
                lam *= 0.5
            if not accepted:
                break
        if r <= tol_b:
            ok[b] = True
        pts[b, 0] = x0
        pts[b, 1] = x1
        resid[b] = r
    return pts, resid, ok, iters


@njit(cache=True)
def orbit_products_batch(mat, tcoord, tk, tamp, tph, X, n):
    """n-step monodromy data at each point: trace, product of step
    determinants, torus gap |F^n(x) - x|, and the full monodromy matrix."""
    B = X.shape[0]
    tr = np.empty(B)
    dprod = np.empty(B)
    gap = np.empty(B)
    Mout = np.empty((B, 2, 2))
    for b in range(B):
        x0 = _reduce_s(X[b, 0])
        x1 = _reduce_s(X[b, 1])
        y0 = x0
        y1 = x1
        M00 = 1.0
        M01 = 0.0
        M10 = 0.0
        M11 = 1.0
        dp = 1.0
        for _ in range(n):
            j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, y0, y1)
            dp *= j00 * j11 - j01 * j10
            n00 = j00 * M00 + j01 * M10
            n01 = j00 * M01 + j01 * M11
            n10 = j10 * M00 + j11 * M10
            n11 = j10 * M01 + j11 * M11
            M00, M01, M10, M11 = n00, n01, n10, n11
            z0, z1 = _lift_s(mat, tcoord, tk, tamp, tph, y0, y1)
            y0 = _reduce_s(z0)
            y1 = _reduce_s(z1)
        d0 = abs(y0 - x0)
        if d0 > 0.5:
            d0 = 1.0 - d0
        d1 = abs(y1 - x1)
        if d1 > 0.5:
            d1 = 1.0 - d1
        tr[b] = M00 + M11
        dprod[b] = dp
        gap[b] = max(d0, d1)
        Mout[b, 0, 0] = M00
        Mout[b, 0, 1] = M01
        Mout[b, 1, 0] = M10
        Mout[b, 1, 1] = M11
    return tr, dprod, gap, Mout


@njit(cache=True)
def _pullback_chain(mat, tcoord, tk, tamp, tph, zbuf, top, bottom, vref):
    """Pull vref back from orbit index ``top + 1`` down to index ``bottom``
    through inverse Jacobians, unit-normalised, sign-fixed against vref."""
    v0 = vref[0]
    v1 = vref[1]
    for j in range(top, bottom - 1, -1):
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, zbuf[j, 0], zbuf[j, 1])
        d = j00 * j11 - j01 * j10
        w0 = (j11 * v0 - j01 * v1) / d
        w1 = (-j10 * v0 + j00 * v1) / d
        nrm = math.hypot(w0, w1)
        v0 = w0 / nrm
        v1 = w1 / nrm
    if v0 * vref[0] + v1 * vref[1] < 0.0:
        v0 = -v0
        v1 = -v1
    return v0, v1


@njit(cache=True)
def stable_pair_batch(mat, tcoord, tk, tamp, tph, X, depth, vref):
    """Unit stable directions at x and F(x) plus the signed stretch of DF.

    One forward orbit of depth+3 points per input; the directions at x and at
    F(x) come from two pullback chains of equal length but distinct seeds, so
    the reported residual of DF(x) v(x) = ms * v(F x) is a genuine measure of
    chain convergence (errors contract by (contraction/expansion)^depth).
    Signs are fixed by positive inner product with ``vref``, which orients the
    bundle inside the certified cone.
    """
    B = X.shape[0]
    vs = np.empty((B, 2))
    vsf = np.empty((B, 2))
    ms = np.empty(B)
    resid = np.empty(B)
    zbuf = np.empty((depth + 3, 2))
    for b in range(B):
        zbuf[0, 0] = _reduce_s(X[b, 0])
        zbuf[0, 1] = _reduce_s(X[b, 1])
        for j in range(depth + 2):
            z0, z1 = _lift_s(mat, tcoord, tk, tamp, tph, zbuf[j, 0], zbuf[j, 1])
            zbuf[j + 1, 0] = _reduce_s(z0)
            zbuf[j + 1, 1] = _reduce_s(z1)
        # direction at x: seed at orbit index depth+1, pull down to index 0
        u0, u1 = _pullback_chain(mat, tcoord, tk, tamp, tph, zbuf, depth, 0, vref)
        # direction at F(x): seed at orbit index depth+2, pull down to index 1
        v0, v1 = _pullback_chain(mat, tcoord, tk, tamp, tph, zbuf, depth + 1, 1, vref)
        # signed stretch: DF(x) v(x) = ms * v(F x) + residual
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, zbuf[0, 0], zbuf[0, 1])
        p0 = j00 * u0 + j01 * u1
        p1 = j10 * u0 + j11 * u1
        m = p0 * v0 + p1 * v1
        r0 = p0 - m * v0
        r1 = p1 - m * v1
        vs[b, 0] = u0
        vs[b, 1] = u1
        vsf[b, 0] = v0
        vsf[b, 1] = v1
        ms[b] = m
        resid[b] = math.hypot(r0, r1)
    return vs, vsf, ms, resid


@njit(cache=True)
def _pushforward_chain(mat, tcoord, tk, tamp, tph, wbuf, top, bottom, uref):
    """Push uref forward from backward-orbit index ``top`` down to index
    ``bottom`` (the orbit satisfies F(w[j]) = w[j-1]), unit-normalised,
    sign-fixed against uref."""
    v0 = uref[0]
    v1 = uref[1]
    for j in range(top, bottom, -1):
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, wbuf[j, 0], wbuf[j, 1])
        w0 = j00 * v0 + j01 * v1
        w1 = j10 * v0 + j11 * v1
        nrm = math.hypot(w0, w1)
        v0 = w0 / nrm
        v1 = w1 / nrm
    if v0 * uref[0] + v1 * uref[1] < 0.0:
        v0 = -v0
        v1 = -v1
    return v0, v1


@njit(cache=True)
def unstable_pair_batch(mat, minv, tcoord, tk, tamp, tph, X, depth, uref, inv_tol, inv_maxit):
    """Unit unstable directions at x and F(x) plus the signed stretch of DF.

    Uses a backward orbit (Newton lift inversion) and pushes the reference
    direction forward along it.  ``ok`` reports inversion success per point.
    """
    B = X.shape[0]
    vu = np.empty((B, 2))
    vuf = np.empty((B, 2))
    mu = np.empty(B)
    resid = np.empty(B)
    ok = np.zeros(B, dtype=np.bool_)
    wbuf = np.empty((depth + 2, 2))
    for b in range(B):
        wbuf[0, 0] = _reduce_s(X[b, 0])
        wbuf[0, 1] = _reduce_s(X[b, 1])
        good = True
        for j in range(depth + 1):
            y0, y1, o = _invert_s(
                mat, minv, tcoord, tk, tamp, tph, wbuf[j, 0], wbuf[j, 1],
                inv_tol, inv_maxit,
            )
            if not o:
                good = False
                break
            wbuf[j + 1, 0] = _reduce_s(y0)
            wbuf[j + 1, 1] = _reduce_s(y1)
        if not good:
            vu[b, 0] = np.nan
            vu[b, 1] = np.nan
            vuf[b, 0] = np.nan
            vuf[b, 1] = np.nan
            mu[b] = np.nan
            resid[b] = np.nan
            ok[b] = False
            continue
        # direction at x: seed at backward index depth+1, push depth+1 times
        u0, u1 = _pushforward_chain(
            mat, tcoord, tk, tamp, tph, wbuf, depth + 1, 0, uref
        )
        # direction at F(x): seed at backward index depth, push depth times to
        # x and once more through DF(x) -- an independent chain of equal length
        w0, w1 = _pushforward_chain(mat, tcoord, tk, tamp, tph, wbuf, depth, 0, uref)
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, wbuf[0, 0], wbuf[0, 1])
        q0 = j00 * w0 + j01 * w1
        q1 = j10 * w0 + j11 * w1
        nrm = math.hypot(q0, q1)
        f0 = q0 / nrm
        f1 = q1 / nrm
        if f0 * uref[0] + f1 * uref[1] < 0.0:
            f0 = -f0
            f1 = -f1
        # signed stretch: DF(x) v(x) = mu * v(F x) + residual
        p0 = j00 * u0 + j01 * u1
        p1 = j10 * u0 + j11 * u1
        m = p0 * f0 + p1 * f1
        r0 = p0 - m * f0
        r1 = p1 - m * f1
        vu[b, 0] = u0
        vu[b, 1] = u1
        vuf[b, 0] = f0
        vuf[b, 1] = f1
        mu[b] = m
        resid[b] = math.hypot(r0, r1)
        ok[b] = True
    return vu, vuf, mu, resid, ok


@njit(cache=True)
def _field_s(mat, tcoord, tk, tamp, tph, x0, x1, vref, depth, zbuf):
    """Unit stable direction at a torus point via depth-step pullback."""
    zbuf[0, 0] = _reduce_s(x0)
    zbuf[0, 1] = _reduce_s(x1)
    for j in range(depth):
        z0, z1 = _lift_s(mat, tcoord, tk, tamp, tph, zbuf[j, 0], zbuf[j, 1])
        zbuf[j + 1, 0] = _reduce_s(z0)
        zbuf[j + 1, 1] = _reduce_s(z1)
    v0 = vref[0]
    v1 = vref[1]
    for j in range(depth - 1, -1, -1):
        j00, j01, j10, j11 = _jac_s(mat, tcoord, tk, tamp, tph, zbuf[j, 0], zbuf[j, 1])
        d = j00 * j11 - j01 * j10
        w0 = (j11 * v0 - j01 * v1) / d
        w1 = (-j10 * v0 + j00 * v1) / d
        nrm = math.hypot(w0, w1)
        v0 = w0 / nrm
        v1 = w1 / nrm
    if v0 * vref[0] + v1 * vref[1] < 0.0:
        v0 = -v0
        v1 = -v1
    return v0, v1


@njit(cache=True)
def _deriv_s(mat, tcoord, tk, tamp, tph, y, modes, vref, sgn, depth, zbuf, out):
    """Velocity of the stable flow plus quadrature derivatives per mode."""
    M = modes.shape[0]
    r0 = _reduce_s(y[0])
    r1 = _reduce_s(y[1])
    v0, v1 = _field_s(mat, tcoord, tk, tamp, tph, r0, r1, vref, depth, zbuf)
    out[0] = sgn * v0
    out[1] = sgn * v1
    for m in range(M):
        ph = TWO_PI * (modes[m, 0] * r0 + modes[m, 1] * r1)
        out[2 + m] = math.cos(ph)
        out[2 + M + m] = math.sin(ph)


@njit(cache=True)
def _dp45_try(mat, tcoord, tk, tamp, tph, y, h, k, ytmp, dy, modes, vref, sgn, depth, zbuf):
    """One trial step: fills stages k[1..6] (k[0] preloaded, FSAL), writes the
    5th-order increment into dy and returns the embedded position error."""
    S = y.shape[0]
    for i in range(S):
        ytmp[i] = y[i] + h * (A21 * k[0, i])
    _deriv_s(mat, tcoord, tk, tamp, tph, ytmp, modes, vref, sgn, depth, zbuf, k[1])
    for i in range(S):
        ytmp[i] = y[i] + h * (A31 * k[0, i] + A32 * k[1, i])
    _deriv_s(mat, tcoord, tk, tamp, tph, ytmp, modes, vref, sgn, depth, zbuf, k[2])
    for i in range(S):
        ytmp[i] = y[i] + h * (A41 * k[0, i] + A42 * k[1, i] + A43 * k[2, i])
    _deriv_s(mat, tcoord, tk, tamp, tph, ytmp, modes, vref, sgn, depth, zbuf, k[3])
    for i in range(S):
        ytmp[i] = y[i] + h * (
            A51 * k[0, i] + A52 * k[1, i] + A53 * k[2, i] + A54 * k[3, i]
        )
    _deriv_s(mat, tcoord, tk, tamp, tph, ytmp, modes, vref, sgn, depth, zbuf, k[4])
    for i in range(S):
        ytmp[i] = y[i] + h * (
            A61 * k[0, i]
            + A62 * k[1, i]
            + A63 * k[2, i]
            + A64 * k[3, i]
            + A65 * k[4, i]
        )
    _deriv_s(mat, tcoord, tk, tamp, tph, ytmp, modes, vref, sgn, depth, zbuf, k[5])
    for i in range(S):
        dy[i] = h * (
            B1 * k[0, i] + B3 * k[2, i] + B4 * k[3, i] + B5 * k[4, i] + B6 * k[5, i]
        )
        ytmp[i] = y[i] + dy[i]
    _deriv_s(mat, tcoord, tk, tamp, tph, ytmp, modes, vref, sgn, depth, zbuf, k[6])
    e0 = h * (
        E1 * k[0, 0]
        + E3 * k[2, 0]
        + E4 * k[3, 0]
        + E5 * k[4, 0]
        + E6 * k[5, 0]
        + E7 * k[6, 0]
    )
    e1 = h * (
        E1 * k[0, 1]
        + E3 * k[2, 1]
        + E4 * k[3, 1]
        + E5 * k[4, 1]
        + E6 * k[5, 1]
        + E7 * k[6, 1]
    )
    return math.hypot(e0, e1)


@njit(cache=True)
def flow_run_batch(
    mat, tcoord, tk, tamp, tph, X0, tcheck, modes, vref, sgn, depth, rtol,
    max_step, max_steps,
):
    """Integrate the unit stable flow with per-mode complex quadrature.

    State per trajectory: lift position (never reduced) plus the running
    integrals of exp(2*pi*i k.x) for each mode, advanced together through the
    embedded 5(4) pair.  Error control is on position only, per unit time
    (err <= rtol*h); position and integral accumulators use compensated
    summation.  Checkpoints are hit exactly by clipping the step.
    """
    B = X0.shape[0]
    C = tcheck.shape[0]
    M = modes.shape[0]
    S = 2 + 2 * M
    pos = np.zeros((B, C, 2))
    Hre = np.zeros((B, C, M))
    Him = np.zeros((B, C, M))
    status = np.zeros(B, dtype=np.int64)
    nsteps = np.zeros(B, dtype=np.int64)
    hmin = np.full(B, np.inf)
    k = np.zeros((7, S))
    y = np.zeros(S)
    comp = np.zeros(S)
    ytmp = np.empty(S)
    dy = np.empty(S)
    zbuf = np.empty((depth + 1, 2))
    for b in range(B):
        for i in range(S):
            y[i] = 0.0
            comp[i] = 0.0
        y[0] = X0[b, 0]
        y[1] = X0[b, 1]
        t = 0.0
        tcomp = 0.0
        h = min(0.01, max_step)
        _deriv_s(mat, tcoord, tk, tamp, tph, y, modes, vref, sgn, depth, zbuf, k[0])
        ci = 0
        attempts = 0
        st = 0
        while ci < C:
            attempts += 1
            if attempts > max_steps:
                st = 2
                break
            target = tcheck[ci]
            rem = target - t
            if rem <= 1e-12 * max(1.0, abs(target)):
                pos[b, ci, 0] = y[0]
                pos[b, ci, 1] = y[1]
                for m in range(M):
                    Hre[b, ci, m] = y[2 + m]
                    Him[b, ci, m] = y[2 + M + m]
                ci += 1
                continue
            clipped = rem <= h
            h_use = rem if clipped else h
            if h_use < 1e-13 * max(1.0, t):
                st = 1
                break
            err = _dp45_try(
                mat, tcoord, tk, tamp, tph, y, h_use, k, ytmp, dy, modes, vref,
                sgn, depth, zbuf,
            )
            tolh = rtol * h_use
            if err <= tolh:
                for i in range(S):
                    inc = dy[i] - comp[i]
                    tot = y[i] + inc
                    comp[i] = (tot - y[i]) - inc
                    y[i] = tot
                inc = h_use - tcomp
                tot = t + inc
                tcomp = (tot - t) - inc
                t = tot
                for i in range(S):
                    k[0, i] = k[6, i]
                nsteps[b] += 1
                if h_use < hmin[b]:
                    hmin[b] = h_use
                if clipped:
                    t = target
                    tcomp = 0.0
                    pos[b, ci, 0] = y[0]
                    pos[b, ci, 1] = y[1]
                    for m in range(M):
                        Hre[b, ci, m] = y[2 + m]
                        Him[b, ci, m] = y[2 + M + m]
                    ci += 1
                else:
                    if err > 0.0:
                        fac = 0.9 * (tolh / err) ** 0.25
                        if fac < 0.2:
                            fac = 0.2
                        elif fac > 5.0:
                            fac = 5.0
                    else:
                        fac = 5.0
                    h = h_use * fac
                    if h > max_step:
                        h = max_step
            else:
                fac = 0.9 * (tolh / err) ** 0.25
                if fac < 0.2:
                    fac = 0.2
                elif fac > 1.0:
                    fac = 1.0
                h = h_use * fac
        status[b] = st
    return pos, Hre, Him, status, nsteps, hmin


@njit(cache=True)
def rotation_run_batch(
    mat, tcoord, tk, tamp, tph, X0, section_c, nreturns, vref, sgn, depth,
    rtol, max_step, max_steps, v1_margin,
):
    """Integrate the stable flow on the lift and collect section crossings.

    The section is the family of vertical lines x1 = section_c + j; the lifted
    x1 coordinate is monotone while |v1| stays above ``v1_margin`` (enforced;
    status 3 otherwise).  Each crossing ordinate is refined to the section by
    Newton on the step size.  Records the first/last crossing ordinates and
    the crossing count, which determine the mean displacement per return.
    """
    B = X0.shape[0]
    yfirst = np.zeros(B)
    ylast = np.zeros(B)
    count = np.zeros(B, dtype=np.int64)
    minv1 = np.full(B, np.inf)
    status = np.zeros(B, dtype=np.int64)
    tfinal = np.zeros(B)
    modes = np.zeros((0, 2))
    S = 2
    k = np.zeros((7, S))
    kr = np.zeros((7, S))
    y = np.zeros(S)
    yold = np.zeros(S)
    comp = np.zeros(S)
    ytmp = np.empty(S)
    dy = np.empty(S)
    dyr = np.empty(S)
    zbuf = np.empty((depth + 1, 2))
    for b in range(B):
        y[0] = X0[b, 0]
        y[1] = X0[b, 1]
        comp[0] = 0.0
        comp[1] = 0.0
        t = 0.0
        tcomp = 0.0
        h = min(0.01, max_step)
        _deriv_s(mat, tcoord, tk, tamp, tph, y, modes, vref, sgn, depth, zbuf, k[0])
        lv = math.floor(y[0] - section_c)
        st = 0
        attempts = 0
        while count[b] < nreturns:
            attempts += 1
            if attempts > max_steps:
                st = 2
                break
            if h < 1e-13 * max(1.0, t):
                st = 1
                break
            err = _dp45_try(
                mat, tcoord, tk, tamp, tph, y, h, k, ytmp, dy, modes, vref,
                sgn, depth, zbuf,
            )
            v1lo = np.inf
            for j in range(7):
                a = abs(k[j, 0])
                if a < v1lo:
                    v1lo = a
            if v1lo < minv1[b]:
                minv1[b] = v1lo
            if v1lo < v1_margin:
                st = 3
                break
            tolh = rtol * h
            if err <= tolh:
                yold[0] = y[0]
                yold[1] = y[1]
                for i in range(S):
                    inc = dy[i] - comp[i]
                    tot = y[i] + inc
                    comp[i] = (tot - y[i]) - inc
                    y[i] = tot
                h_used = h
                inc = h_used - tcomp
                tot = t + inc
                tcomp = (tot - t) - inc
                t = tot
                lv_new = math.floor(y[0] - section_c)
                if lv_new != lv:
                    # refine the crossing ordinate inside [t-h, t]
                    target = section_c + (lv_new if lv_new > lv else lv)
                    hc = h_used * (target - yold[0]) / (y[0] - yold[0])
                    for i in range(S):
                        kr[0, i] = k[0, i]
                    yc1 = y[1]
                    for _ in range(6):
                        if hc < 0.0:
                            hc = 0.0
                        elif hc > h_used:
                            hc = h_used
                        _dp45_try(
                            mat, tcoord, tk, tamp, tph, yold, hc, kr, ytmp,
                            dyr, modes, vref, sgn, depth, zbuf,
                        )
                        xc0 = yold[0] + dyr[0]
                        yc1 = yold[1] + dyr[1]
                        v1c = kr[6, 0]
                        if abs(v1c) < 1e-12:
                            break
                        delta = (target - xc0) / v1c
                        hc += delta
                        if abs(delta) < 1e-13:
                            break
                    if count[b] == 0:
                        yfirst[b] = yc1
                    ylast[b] = yc1
                    count[b] += 1
                    lv = lv_new
                    if count[b] >= nreturns:
                        break
                for i in range(S):
                    k[0, i] = k[6, i]
                if err > 0.0:
                    fac = 0.9 * (tolh / err) ** 0.25
                    if fac < 0.2:
                        fac = 0.2
                    elif fac > 5.0:
                        fac = 5.0
                else:
                    fac = 5.0
                h = h_used * fac
                if h > max_step:
                    h = max_step
            else:
                fac = 0.9 * (tolh / err) ** 0.25
                if fac < 0.2:
                    fac = 0.2
                elif fac > 1.0:
                    fac = 1.0
                h = h * fac
        status[b] = st
        tfinal[b] = t
    return yfirst, ylast, count, minv1, status, tfinal
