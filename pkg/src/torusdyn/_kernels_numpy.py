"""Pure-numpy backend for the numerical kernels.

Twin of ``_kernels_numba``: same public functions, same signatures, same
semantics and status codes.  Batch kernels are vectorised across points; the
two flow kernels step one trajectory at a time (this backend exists as a
dependency-free fallback and a cross-check, not as the fast path).
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi

# Dormand-Prince 5(4) tableau in array form.  Row 6 equals the 5th-order
# weights (FSAL), so the stage-6 evaluation point is the step endpoint.
_A_TAB = np.zeros((7, 7))
_A_TAB[1, 0] = 1.0 / 5.0
_A_TAB[2, :2] = (3.0 / 40.0, 9.0 / 40.0)
_A_TAB[3, :3] = (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0)
_A_TAB[4, :4] = (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0)
_A_TAB[5, :5] = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_A_TAB[6, :6] = (
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E_W = np.array(
    [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ]
)


def _reduce(x):
    r = x - np.floor(x)
    return np.where(r >= 1.0, r - 1.0, r)


def lift_batch(mat, tcoord, tk, tamp, tph, X):
    Y = X @ mat.T
    for i in range(tamp.shape[0]):
        s = tamp[i] * np.sin(TWO_PI * (X @ tk[i]) + tph[i])
        Y[:, tcoord[i]] += s
    return Y


def jac_batch(mat, tcoord, tk, tamp, tph, X):
    B = X.shape[0]
    J = np.broadcast_to(mat, (B, 2, 2)).copy()
    for i in range(tamp.shape[0]):
        c = tamp[i] * TWO_PI * np.cos(TWO_PI * (X @ tk[i]) + tph[i])
        J[:, tcoord[i], 0] += c * tk[i, 0]
        J[:, tcoord[i], 1] += c * tk[i, 1]
    return J


def _solve2(J, v):
    """Batched 2x2 solve J w = v for J (B,2,2), v (B,2)."""
    d = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    w0 = (J[:, 1, 1] * v[:, 0] - J[:, 0, 1] * v[:, 1]) / d
    w1 = (-J[:, 1, 0] * v[:, 0] + J[:, 0, 0] * v[:, 1]) / d
    return np.column_stack([w0, w1])


def invert_lift_batch(mat, minv, tcoord, tk, tamp, tph, Y, tol, maxit):
    B = Y.shape[0]
    X = Y @ minv.T
    ok = np.zeros(B, dtype=np.bool_)
    active = np.ones(B, dtype=np.bool_)
    for _ in range(maxit):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        G = lift_batch(mat, tcoord, tk, tamp, tph, X[idx]) - Y[idx]
        r = np.max(np.abs(G), axis=1)
        done = r <= tol
        ok[idx[done]] = True
        active[idx[done]] = False
        idx = idx[~done]
        if idx.size == 0:
            break
        J = jac_batch(mat, tcoord, tk, tamp, tph, X[idx])
        X[idx] -= _solve2(J, G[~done])
    return X, ok


def _periodic_G(mat, tcoord, tk, tamp, tph, X, mvec, n):
    """Residual of the period-n lift equation and monodromy, batched.

    Mod-1 reduction with integer-translation bookkeeping T <- A T + floor-step
    keeps all trigonometric arguments in [0,1) and the residual free of large
    cancellations.
    """
    y = X.copy()
    T = np.zeros_like(X)
    B = X.shape[0]
    M = np.broadcast_to(np.eye(2), (B, 2, 2)).copy()
    for _ in range(n):
        J = jac_batch(mat, tcoord, tk, tamp, tph, y)
        M = J @ M
        z = lift_batch(mat, tcoord, tk, tamp, tph, y)
        f = np.floor(z)
        y = z - f
        fix = y >= 1.0
        y[fix] -= 1.0
        f[fix] += 1.0
        T = T @ mat.T + f
    G = (y - X) + (T - mvec)
    return G, M


def periodic_newton_batch(mat, tcoord, tk, tamp, tph, X, mvec, n, tol, maxit):
    B = X.shape[0]
    pts = X.copy()
    # achievable residual floor: the lift traverses magnitudes ~|m|,
    # so rounding limits the residual to a few eps times that scale
    tol_eff = np.maximum(
        tol, 8.881784197001252e-16 * (1.0 + np.max(np.abs(mvec), axis=1))
    )
    G, M = _periodic_G(mat, tcoord, tk, tamp, tph, pts, mvec, n)
    resid = np.max(np.abs(G), axis=1)
    iters = np.zeros(B, dtype=np.int64)
    alive = np.ones(B, dtype=np.bool_)
    for _ in range(maxit):
        act = np.flatnonzero(alive & (resid > tol_eff))
        if act.size == 0:
            break
        iters[act] += 1
        d00 = M[act, 0, 0] - 1.0
        d11 = M[act, 1, 1] - 1.0
        dd = d00 * d11 - M[act, 0, 1] * M[act, 1, 0]
        sing = np.abs(dd) < 1e-300
        alive[act[sing]] = False
        act = act[~sing]
        if act.size == 0:
            continue
        dd = dd[~sing]
        d00 = d00[~sing]
        d11 = d11[~sing]
        dx0 = (d11 * G[act, 0] - M[act, 0, 1] * G[act, 1]) / dd
        dx1 = (-M[act, 1, 0] * G[act, 0] + d00 * G[act, 1]) / dd
        dx = np.column_stack([dx0, dx1])
        lam = np.ones(act.size)
        pending = np.ones(act.size, dtype=np.bool_)
        for _bt in range(5):
            sub = np.flatnonzero(pending)
            if sub.size == 0:
                break
            rows = act[sub]
            cand = pts[rows] - lam[sub, None] * dx[sub]
            Gc, Mc = _periodic_G(mat, tcoord, tk, tamp, tph, cand, mvec[rows], n)
            rc = np.max(np.abs(Gc), axis=1)
            better = (rc < resid[rows]) | (rc <= tol_eff[rows])
            good = rows[better]
            pts[good] = cand[better]
            G[good] = Gc[better]
            M[good] = Mc[better]
            resid[good] = rc[better]
            pending[sub[better]] = False
            lam[sub[~better]] *= 0.5
        alive[act[pending]] = False
    ok = resid <= tol_eff
    return pts, resid, ok, iters


def orbit_products_batch(mat, tcoord, tk, tamp, tph, X, n):
    B = X.shape[0]
    x0 = _reduce(X)
    y = x0.copy()
    M = np.broadcast_to(np.eye(2), (B, 2, 2)).copy()
    dprod = np.ones(B)
    for _ in range(n):
        J = jac_batch(mat, tcoord, tk, tamp, tph, y)
        dprod *= J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        M = J @ M
        y = _reduce(lift_batch(mat, tcoord, tk, tamp, tph, y))
    d = np.abs(y - x0)
    d = np.minimum(d, 1.0 - d)
    tr = M[:, 0, 0] + M[:, 1, 1]
    gap = np.max(d, axis=1)
    return tr, dprod, gap, M


def _normalize_signfix(v, ref):
    nrm = np.sqrt(v[:, 0] ** 2 + v[:, 1] ** 2)
    v = v / nrm[:, None]
    flip = (v @ ref) < 0.0
    v[flip] = -v[flip]
    return v


def stable_pair_batch(mat, tcoord, tk, tamp, tph, X, depth, vref):
    B = X.shape[0]
    orbit = np.empty((depth + 3, B, 2))
    orbit[0] = _reduce(X)
    for j in range(depth + 2):
        orbit[j + 1] = _reduce(lift_batch(mat, tcoord, tk, tamp, tph, orbit[j]))
    jacs = [
        jac_batch(mat, tcoord, tk, tamp, tph, orbit[j]) for j in range(depth + 2)
    ]

    def pull(top, bottom):
        v = np.broadcast_to(vref, (B, 2)).copy()
        for j in range(top, bottom - 1, -1):
            w = _solve2(jacs[j], v)
            nrm = np.sqrt(w[:, 0] ** 2 + w[:, 1] ** 2)
            v = w / nrm[:, None]
        return _normalize_signfix(v, vref)

    vs = pull(depth, 0)
    vsf = pull(depth + 1, 1)
    J0 = jacs[0]
    p = np.einsum("bij,bj->bi", J0, vs)
    ms = np.sum(p * vsf, axis=1)
    r = p - ms[:, None] * vsf
    resid = np.sqrt(r[:, 0] ** 2 + r[:, 1] ** 2)
    return vs, vsf, ms, resid


def unstable_pair_batch(mat, minv, tcoord, tk, tamp, tph, X, depth, uref, inv_tol, inv_maxit):
    B = X.shape[0]
    orbit = np.empty((depth + 2, B, 2))
    orbit[0] = _reduce(X)
    allok = np.ones(B, dtype=np.bool_)
    for j in range(depth + 1):
        pre, okj = invert_lift_batch(
            mat, minv, tcoord, tk, tamp, tph, orbit[j], inv_tol, inv_maxit
        )
        allok &= okj
        orbit[j + 1] = _reduce(pre)
    jacs = [
        jac_batch(mat, tcoord, tk, tamp, tph, orbit[j]) for j in range(depth + 2)
    ]

    def push(top, bottom):
        v = np.broadcast_to(uref, (B, 2)).copy()
        for j in range(top, bottom, -1):
            w = np.einsum("bij,bj->bi", jacs[j], v)
            nrm = np.sqrt(w[:, 0] ** 2 + w[:, 1] ** 2)
            v = w / nrm[:, None]
        return _normalize_signfix(v, uref)

    vu = push(depth + 1, 0)
    vmid = push(depth, 0)
    J0 = jacs[0]
    q = np.einsum("bij,bj->bi", J0, vmid)
    vuf = _normalize_signfix(q.copy(), uref)
    p = np.einsum("bij,bj->bi", J0, vu)
    mu = np.sum(p * vuf, axis=1)
    r = p - mu[:, None] * vuf
    resid = np.sqrt(r[:, 0] ** 2 + r[:, 1] ** 2)
    bad = ~allok
    vu[bad] = np.nan
    vuf[bad] = np.nan
    mu[bad] = np.nan
    resid[bad] = np.nan
    return vu, vuf, mu, resid, allok


# -- flow kernels (one trajectory at a time) ---------------------------------


def _field_one(mat, tcoord, tk, tamp, tph, x, vref, depth):
    """Unit stable direction at one torus point via depth-step pullback."""
    z = _reduce(np.asarray(x, dtype=np.float64))[None, :]
    orbit = np.empty((depth + 1, 2))
    orbit[0] = z[0]
    for j in range(depth):
        z = _reduce(lift_batch(mat, tcoord, tk, tamp, tph, z))
        orbit[j + 1] = z[0]
        # keep stepping from the newly reduced point
    v = vref.copy()
    for j in range(depth - 1, -1, -1):
        J = jac_batch(mat, tcoord, tk, tamp, tph, orbit[j : j + 1])[0]
        d = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        w0 = (J[1, 1] * v[0] - J[0, 1] * v[1]) / d
        w1 = (-J[1, 0] * v[0] + J[0, 0] * v[1]) / d
        nrm = math.hypot(w0, w1)
        v = np.array([w0 / nrm, w1 / nrm])
    if v @ vref < 0.0:
        v = -v
    return v


def _deriv_one(mat, tcoord, tk, tamp, tph, y, modes, vref, sgn, depth):
    M = modes.shape[0]
    out = np.empty(2 + 2 * M)
    r = _reduce(y[:2])
    v = _field_one(mat, tcoord, tk, tamp, tph, r, vref, depth)
    out[0] = sgn * v[0]
    out[1] = sgn * v[1]
    if M:
        ph = TWO_PI * (modes @ r)
        out[2 : 2 + M] = np.cos(ph)
        out[2 + M :] = np.sin(ph)
    return out


def _dp45_try(mat, tcoord, tk, tamp, tph, y, h, k, modes, vref, sgn, depth):
    """Fill stages k[1..6] (k[0] preloaded), return (dy, position error)."""
    ytmp = y
    for s in range(1, 7):
        ytmp = y + h * (_A_TAB[s, :s] @ k[:s])
        k[s] = _deriv_one(mat, tcoord, tk, tamp, tph, ytmp, modes, vref, sgn, depth)
    dy = ytmp - y  # row 6 of the tableau is the 5th-order weight row
    ev = h * (_E_W @ k)
    return dy, math.hypot(ev[0], ev[1])


def flow_run_batch(
    mat, tcoord, tk, tamp, tph, X0, tcheck, modes, vref, sgn, depth, rtol,
    max_step, max_steps,
):
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
    for b in range(B):
        y = np.zeros(S)
        y[:2] = X0[b]
        comp = np.zeros(S)
        k = np.zeros((7, S))
        t = 0.0
        tcomp = 0.0
        h = min(0.01, max_step)
        k[0] = _deriv_one(mat, tcoord, tk, tamp, tph, y, modes, vref, sgn, depth)
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
                pos[b, ci] = y[:2]
                Hre[b, ci] = y[2 : 2 + M]
                Him[b, ci] = y[2 + M :]
                ci += 1
                continue
            clipped = rem <= h
            h_use = rem if clipped else h
            if h_use < 1e-13 * max(1.0, t):
                st = 1
                break
            dy, err = _dp45_try(
                mat, tcoord, tk, tamp, tph, y, h_use, k, modes, vref, sgn, depth
            )
            tolh = rtol * h_use
            if err <= tolh:
                inc = dy - comp
                tot = y + inc
                comp = (tot - y) - inc
                y = tot
                inct = h_use - tcomp
                tott = t + inct
                tcomp = (tott - t) - inct
                t = tott
                k[0] = k[6]
                nsteps[b] += 1
                hmin[b] = min(hmin[b], h_use)
                if clipped:
                    t = target
                    tcomp = 0.0
                    pos[b, ci] = y[:2]
                    Hre[b, ci] = y[2 : 2 + M]
                    Him[b, ci] = y[2 + M :]
                    ci += 1
                else:
                    fac = 5.0 if err == 0.0 else min(
                        5.0, max(0.2, 0.9 * (tolh / err) ** 0.25)
                    )
                    h = min(max_step, h_use * fac)
            else:
                fac = min(1.0, max(0.2, 0.9 * (tolh / err) ** 0.25))
                h = h_use * fac
        status[b] = st
    return pos, Hre, Him, status, nsteps, hmin


def rotation_run_batch(
    mat, tcoord, tk, tamp, tph, X0, section_c, nreturns, vref, sgn, depth,
    rtol, max_step, max_steps, v1_margin,
):
    B = X0.shape[0]
    yfirst = np.zeros(B)
    ylast = np.zeros(B)
    count = np.zeros(B, dtype=np.int64)
    minv1 = np.full(B, np.inf)
    status = np.zeros(B, dtype=np.int64)
    tfinal = np.zeros(B)
    modes = np.zeros((0, 2))
    for b in range(B):
        y = X0[b].copy()
        comp = np.zeros(2)
        k = np.zeros((7, 2))
        kr = np.zeros((7, 2))
        t = 0.0
        tcomp = 0.0
        h = min(0.01, max_step)
        k[0] = _deriv_one(mat, tcoord, tk, tamp, tph, y, modes, vref, sgn, depth)
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
            dy, err = _dp45_try(
                mat, tcoord, tk, tamp, tph, y, h, k, modes, vref, sgn, depth
            )
            v1lo = np.min(np.abs(k[:, 0]))
            minv1[b] = min(minv1[b], v1lo)
            if v1lo < v1_margin:
                st = 3
                break
            tolh = rtol * h
            if err <= tolh:
                yold = y.copy()
                inc = dy - comp
                tot = y + inc
                comp = (tot - y) - inc
                y = tot
                h_used = h
                inct = h_used - tcomp
                tott = t + inct
                tcomp = (tott - t) - inct
                t = tott
                lv_new = math.floor(y[0] - section_c)
                if lv_new != lv:
                    target = section_c + (lv_new if lv_new > lv else lv)
                    hc = h_used * (target - yold[0]) / (y[0] - yold[0])
                    kr[0] = k[0]
                    yc1 = y[1]
                    for _ in range(6):
                        hc = min(max(hc, 0.0), h_used)
                        dyr, _err2 = _dp45_try(
                            mat, tcoord, tk, tamp, tph, yold, hc, kr, modes,
                            vref, sgn, depth,
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
                k[0] = k[6]
                fac = 5.0 if err == 0.0 else min(
                    5.0, max(0.2, 0.9 * (tolh / err) ** 0.25)
                )
                h = min(max_step, h_used * fac)
            else:
                fac = min(1.0, max(0.2, 0.9 * (tolh / err) ** 0.25))
                h = h * fac
        status[b] = st
        tfinal[b] = t
    return yfirst, ylast, count, minv1, status, tfinal
