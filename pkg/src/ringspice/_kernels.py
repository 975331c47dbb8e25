"""Compiled scalar kernels shared by the device API and the MNA engine.

Everything here works on plain floats / flat arrays so that numba can
compile it once and both the Python-facing model functions and the
transient loop call the exact same code.

MOSFET parameter rows (``MOS_*`` column indices) are laid out by
``models.mos_param_row``.
"""

import math

import numpy as np
from numba import njit

# columns of a MOSFET parameter row
MOS_POL = 0
MOS_VT0 = 1
MOS_GAMMA = 2
MOS_PHI2 = 3
MOS_VTH = 4
MOS_BETA = 5
MOS_N0 = 6
MOS_LAMBDA = 7
MOS_CONV = 8
MOS_BSLOPE = 9
MOS_DIS = 10
MOS_DN = 11
MOS_DRS = 12
MOS_NCOL = 13

DIODE_EXP_LIMIT = 40.0
# slope factor stops growing once the surface-potential argument drops below phi2 / 16
SLOPE_ARG_FLOOR = 1.0 / 16.0

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1
STATUS_NON_FINITE = 2


@njit(cache=True)
def softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True)
def sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def threshold_norm(vt0n, gamma, phi2, vb, conv):
    """Normalized (NMOS-equivalent) threshold and its slope in ``vb``.

    Returns ``(vt, dvt_dvb, diode_region)``.
    """
    arg = phi2 - vb
    if arg > 0.0:
        sq = math.sqrt(arg)
        dvt = -0.5 * gamma / sq
    else:
        sq = 0.0
        dvt = 0.0
    vt = vt0n + gamma * sq
    if conv:
        vt -= gamma * math.sqrt(phi2)
    return vt, dvt, arg < 0.0


@njit(cache=True)
def slope_factor(n0, phi2, vb, bslope):
    """Slope factor and its derivative in ``vb``.

    With ``bslope`` the factor follows the depletion-capacitance law
    n = 1 + (n0 - 1) * sqrt(phi2 / arg), which equals ``n0`` at zero bulk
    bias; otherwise it is the constant ``n0``.
    """
    if not bslope or n0 <= 1.0:
        return n0, 0.0
    arg = phi2 - vb
    floor = SLOPE_ARG_FLOOR * phi2
    if arg > floor:
        n = 1.0 + (n0 - 1.0) * math.sqrt(phi2 / arg)
        dn = 0.5 * (n0 - 1.0) * math.sqrt(phi2) * arg ** -1.5
        return n, dn
    return 1.0 + (n0 - 1.0) * math.sqrt(phi2 / floor), 0.0


@njit(cache=True)
def _ekv_forward(p, vgs, vds, vbs):
    # normalized device, vds >= 0
    vt, dvt, flag = threshold_norm(p[MOS_VT0], p[MOS_GAMMA], p[MOS_PHI2], vbs, p[MOS_CONV] != 0.0)
    n, dn = slope_factor(p[MOS_N0], p[MOS_PHI2], vbs, p[MOS_BSLOPE] != 0.0)
    vth = p[MOS_VTH]
    lam = p[MOS_LAMBDA]
    vp = (vgs - vt) / n
    xf = vp / (2.0 * vth)
    xr = (vp - vds) / (2.0 * vth)
    lf = softplus(xf)
    lr = softplus(xr)
    sf = sigmoid(xf)
    sr = sigmoid(xr)
    i0 = 2.0 * n * p[MOS_BETA] * vth * vth
    core = i0 * (lf * lf - lr * lr)
    dcore_dvp = i0 * (lf * sf - lr * sr) / vth
    dcore_dvds = i0 * lr * sr / vth
    dcore_dn = core / n - dcore_dvp * vp / n
    clm = 1.0 + lam * vds
    ids = core * clm
    gm = dcore_dvp / n * clm
    gds = dcore_dvds * clm + core * lam
    gmb = (-dcore_dvp * dvt / n + dcore_dn * dn) * clm
    # reverse/forward ratio is the saturation indicator
    if lf > 0.0:
        ratio = (lr * lr) / (lf * lf)
    else:
        ratio = 1.0
    return ids, gm, gds, gmb, vt, flag, (vgs - vt) / (n * vth), ratio


@njit(cache=True)
def mos_eval(p, vgs, vds, vbs):
    """Drain current and small-signal conductances for raw terminal voltages.

    Returns ``(id, gm, gds, gmb, vt, diode_region, x_inv, rev_ratio)`` where
    ``id`` flows into the drain, ``vt`` carries the device polarity sign,
    ``x_inv`` is the normalized overdrive (vgs - vt) / (n V_Th) and
    ``rev_ratio`` is the reverse/forward channel-charge ratio.
    """
    s = p[MOS_POL]
    vg = s * vgs
    vd = s * vds
    vb = s * vbs
    if vd >= 0.0:
        ids, gm, gds, gmb, vt, flag, x, r = _ekv_forward(p, vg, vd, vb)
    else:
        # source/drain swap for a symmetric device
        f, fg, fd, fb, vt, flag, x, r = _ekv_forward(p, vg - vd, -vd, vb - vd)
        ids = -f
        gm = -fg
        gds = fg + fd + fb
        gmb = -fb
    return s * ids, gm, gds, gmb, s * vt, flag, x, r


@njit(cache=True)
def diode_eval(i_s, n, vth, v):
    """Junction current and conductance with a C1 linear tail past the exponent limit."""
    nvt = n * vth
    x = v / nvt
    if x > DIODE_EXP_LIMIT:
        e = math.exp(DIODE_EXP_LIMIT)
        return i_s * (e * (1.0 + x - DIODE_EXP_LIMIT) - 1.0), i_s * e / nvt
    e = math.exp(x)
    return i_s * (e - 1.0), i_s * e / nvt


@njit(cache=True)
def diode_rs_eval(i_s, n, vth, rs, v):
    """Junction in series with ``rs``: solves vj + rs i(vj) = v by Newton.

    Returns the terminal current and d(i)/d(v). ``rs = 0`` is the bare junction.
    """
    if rs <= 0.0:
        return diode_eval(i_s, n, vth, v)
    nvt = n * vth
    # with all of v across rs the junction voltage would be this; the root lies below
    vj = v
    if v > 0.0:
        vj = min(v, nvt * math.log1p(v / (rs * i_s)))
    for _ in range(60):
        i, g = diode_eval(i_s, n, vth, vj)
        f = vj + rs * i - v
        step = f / (1.0 + rs * g)
        vj -= step
        if abs(step) < 1e-13 + 1e-12 * abs(vj):
            break
    i, g = diode_eval(i_s, n, vth, vj)
    return i, g / (1.0 + rs * g)


# --------------------------------------------------------------------------
# MNA assembly and Newton iteration
# --------------------------------------------------------------------------


@njit(cache=True)
def assemble(x, nn, G0, rhs0, gextra, cap_a, cap_b, geq, ieq,
             dio_a, dio_b, dio_p, mos_t, mos_p, F, J, scale):
    """Fill residual ``F`` (KCL, currents leaving each node) and Jacobian ``J``."""
    size = x.shape[0]
    for i in range(size):
        acc = -rhs0[i]
        for j in range(size):
            gij = G0[i, j]
            J[i, j] = gij
            acc += gij * x[j]
        F[i] = acc
        scale[i] = abs(rhs0[i]) if i < nn else 0.0
    for i in range(nn):
        J[i, i] += gextra
        F[i] += gextra * x[i]

    for k in range(cap_a.shape[0]):
        a = cap_a[k]
        b = cap_b[k]
        va = x[a] if a >= 0 else 0.0
        vb = x[b] if b >= 0 else 0.0
        i = geq[k] * (va - vb) + ieq[k]
        g = geq[k]
        if a >= 0:
            F[a] += i
            scale[a] += abs(i)
            J[a, a] += g
            if b >= 0:
                J[a, b] -= g
        if b >= 0:
            F[b] -= i
            scale[b] += abs(i)
            J[b, b] += g
            if a >= 0:
                J[b, a] -= g

    for k in range(dio_a.shape[0]):
        a = dio_a[k]
        b = dio_b[k]
        va = x[a] if a >= 0 else 0.0
        vb = x[b] if b >= 0 else 0.0
        i, g = diode_rs_eval(dio_p[k, 0], dio_p[k, 1], dio_p[k, 2], dio_p[k, 3], va - vb)
        if a >= 0:
            F[a] += i
            scale[a] += abs(i)
            J[a, a] += g
            if b >= 0:
                J[a, b] -= g
        if b >= 0:
            F[b] -= i
            scale[b] += abs(i)
            J[b, b] += g
            if a >= 0:
                J[b, a] -= g

    for k in range(mos_t.shape[0]):
        p = mos_p[k]
        nd = mos_t[k, 0]
        ng = mos_t[k, 1]
        ns = mos_t[k, 2]
        nb = mos_t[k, 3]
        vd = x[nd] if nd >= 0 else 0.0
        vg = x[ng] if ng >= 0 else 0.0
        vs = x[ns] if ns >= 0 else 0.0
        vbk = x[nb] if nb >= 0 else 0.0
        ids, gm, gds, gmb, vt, flag, xi, rr = mos_eval(p, vg - vs, vd - vs, vbk - vs)
        gss = -(gm + gds + gmb)
        # channel current: leaves drain, enters source
        if nd >= 0:
            F[nd] += ids
            scale[nd] += abs(ids)
            J[nd, nd] += gds
            if ng >= 0:
                J[nd, ng] += gm
            if ns >= 0:
                J[nd, ns] += gss
            if nb >= 0:
                J[nd, nb] += gmb
        if ns >= 0:
            F[ns] -= ids
            scale[ns] += abs(ids)
            if nd >= 0:
                J[ns, nd] -= gds
            if ng >= 0:
                J[ns, ng] -= gm
            J[ns, ns] -= gss
            if nb >= 0:
                J[ns, nb] -= gmb
        # bulk junctions: anode is the p side
        s = p[MOS_POL]
        for t in range(2):
            nj = ns if t == 0 else nd
            vj = vs if t == 0 else vd
            if nj == nb:
                continue
            i, g = diode_rs_eval(p[MOS_DIS], p[MOS_DN], p[MOS_VTH], p[MOS_DRS], s * (vbk - vj))
            if s > 0.0:
                a = nb
                b = nj
            else:
                a = nj
                b = nb
            if a >= 0:
                F[a] += i
                scale[a] += abs(i)
                J[a, a] += g
                if b >= 0:
                    J[a, b] -= g
            if b >= 0:
                F[b] -= i
                scale[b] += abs(i)
                J[b, b] += g
                if a >= 0:
                    J[b, a] -= g


@njit(cache=True)
def newton(x0, nn, G0, rhs0, gextra, cap_a, cap_b, geq, ieq,
           dio_a, dio_b, dio_p, mos_t, mos_p,
           abstol, reltol, vntol, max_iter, vlimit):
    """Damped Newton on the MNA residual.

    Returns ``(x, converged, iterations, worst_index)``; ``worst_index`` is the
    unknown with the largest normalized error at exit.
    """
    size = x0.shape[0]
    x = x0.copy()
    F = np.empty(size)
    J = np.empty((size, size))
    scale = np.empty(size)
    worst = 0
    for it in range(max_iter):
        assemble(x, nn, G0, rhs0, gextra, cap_a, cap_b, geq, ieq,
                 dio_a, dio_b, dio_p, mos_t, mos_p, F, J, scale)
        for i in range(size):
            if not math.isfinite(F[i]):
                return x, False, it, i
        dx = np.linalg.solve(J, -F)
        ok = True
        worst_err = 0.0
        for i in range(size):
            d = dx[i]
            if not math.isfinite(d):
                return x, False, it, i
            if i < nn:
                if d > vlimit:
                    d = vlimit
                elif d < -vlimit:
                    d = -vlimit
                tol_v = reltol * max(abs(x[i]), abs(x[i] + d)) + vntol
                tol_i = abstol + reltol * scale[i]
                err = max(abs(d) / tol_v, abs(F[i]) / tol_i)
                if err > 1.0:
                    ok = False
                if err > worst_err:
                    worst_err = err
                    worst = i
            x[i] += d
        if ok and it > 0:
            return x, True, it + 1, worst
    return x, False, max_iter, worst


@njit(cache=True)
def kcl_residual(x, nn, G0, rhs0, gextra, cap_a, cap_b, geq, ieq,
                 dio_a, dio_b, dio_p, mos_t, mos_p):
    size = x.shape[0]
    F = np.empty(size)
    J = np.empty((size, size))
    scale = np.empty(size)
    assemble(x, nn, G0, rhs0, gextra, cap_a, cap_b, geq, ieq,
             dio_a, dio_b, dio_p, mos_t, mos_p, F, J, scale)
    return F[:nn].copy(), scale[:nn].copy()


@njit(cache=True)
def run_transient(x0, nn, G0, rhs0, gmin, cap_a, cap_b, cap_c,
                  dio_a, dio_b, dio_p, mos_t, mos_p,
                  dt, nsteps, trap, be_steps,
                  abstol, reltol, vntol, max_iter, vlimit, max_halvings):
    """Fixed-step implicit integration with local step halving.

    Returns ``(X, status, fail_time, max_residual)``; ``X[k]`` is the state at
    ``k * dt`` and ``max_residual[k]`` the largest nodal KCL residual of the
    last accepted sub-step of output step ``k``.
    """
    size = x0.shape[0]
    ncap = cap_a.shape[0]
    X = np.zeros((nsteps + 1, size))
    max_res = np.zeros(nsteps + 1)
    X[0] = x0
    x = x0.copy()
    # capacitor currents at the last accepted point; unknown at t = 0 after an
    # .ic start, so the first step is always backward Euler, which needs none
    icap = np.zeros(ncap)
    vcap = np.empty(ncap)
    geq = np.empty(ncap)
    ieq = np.empty(ncap)
    t = 0.0
    for step in range(1, nsteps + 1):
        use_trap = trap and step > max(be_steps, 1)
        level = 0
        done = 0  # sub-steps completed at the current level
        while True:
            nsub = 1 << level
            h = dt / nsub
            for k in range(ncap):
                a = cap_a[k]
                b = cap_b[k]
                va = x[a] if a >= 0 else 0.0
                vb = x[b] if b >= 0 else 0.0
                vcap[k] = va - vb
                if use_trap:
                    geq[k] = 2.0 * cap_c[k] / h
                    ieq[k] = -geq[k] * vcap[k] - icap[k]
                else:
                    geq[k] = cap_c[k] / h
                    ieq[k] = -geq[k] * vcap[k]
            xn, conv, its, worst = newton(x, nn, G0, rhs0, gmin, cap_a, cap_b, geq, ieq,
                                          dio_a, dio_b, dio_p, mos_t, mos_p,
                                          abstol, reltol, vntol, max_iter, vlimit)
            if not conv:
                for i in range(size):
                    if not math.isfinite(xn[i]):
                        return X[:step], STATUS_NON_FINITE, t + h, max_res[:step]
                if level >= max_halvings:
                    return X[:step], STATUS_NO_CONVERGENCE, t + h, max_res[:step]
                level += 1
                done *= 2
                continue
            for k in range(ncap):
                a = cap_a[k]
                b = cap_b[k]
                va = xn[a] if a >= 0 else 0.0
                vb = xn[b] if b >= 0 else 0.0
                icap[k] = geq[k] * (va - vb) + ieq[k]
            x = xn
            done += 1
            t += h
            if done >= nsub:
                break
        res, sc = kcl_residual(x, nn, G0, rhs0, gmin, cap_a, cap_b, geq, ieq,
                               dio_a, dio_b, dio_p, mos_t, mos_p)
        m = 0.0
        for i in range(nn):
            if abs(res[i]) > m:
                m = abs(res[i])
        max_res[step] = m
        t = step * dt
        X[step] = x
    return X, STATUS_OK, t, max_res
