"""Flat-array closed-loop stepping kernel.

The whole closed loop (plant, network weights, memory contents, state
keys) lives in one contiguous float64 vector so the integrator can be
compiled with numba. Without numba the same functions run as plain
Python. The dataclass-facing API in `simulation` mirrors this kernel
operation for operation; an equivalence test ties the two paths.

State vector layout (nh = hidden width, cap = memory capacity):

    [0:2]    joint angles            [2:4]    joint velocities
    [.. ]    W_out (nh,2) row-major  [..]     b_out (2)
    [.. ]    W_in (10,nh) row-major  [..]     b_in (nh)
    [.. ]    memory contents (nh,cap) row-major      (if cap > 0)
    [.. ]    state keys (2,cap) row-major            (if state-keyed)

Discrete quantities (attention weights, active count) are held constant
across the four integrator stages of each step and updated between steps.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco

N_INPUT = 10

# indices into the scalar-parameter vector
S_K_ROBUST = 0
S_KAPPA = 1
S_CW = 2
S_CV = 3
S_ZM = 4
S_WRITE_GAIN = 5
S_KEY_RATE = 6
S_THRESHOLD = 7
S_SHARPNESS = 8
S_DIV_BOUND = 9
N_SCAL = 10

# indices into the diagnostics vector
D_ONEHOT_VIOL = 0
D_RETENTION_VIOL = 1
D_REALLOC_COUNT = 2
D_WRSUM_ERR = 3
D_FINAL_ACTIVE = 4
D_JUMPS_APPLIED = 5
N_DIAG = 6

# run status codes
OK = 0
DIVERGED = 1
SINGULAR = 2

# aux layout: s(2) sd(2) sdd(2) e(2) edot(2) r(2) tau(2) u_ad(2) sigma(nh) read(nh)
A_S = 0
A_SD = 2
A_SDD = 4
A_E = 6
A_ED = 8
A_R = 10
A_TAU = 12
A_UAD = 14
A_SIG = 16


def layout(n_hidden: int, capacity: int, state_keyed: bool):
    """Block offsets of the flat state vector."""
    o_w = 4
    o_bo = o_w + 2 * n_hidden
    o_v = o_bo + 2
    o_bv = o_v + N_INPUT * n_hidden
    o_h = o_bv + n_hidden
    o_k = o_h + n_hidden * capacity
    size = o_k + (2 * capacity if state_keyed else 0)
    return o_w, o_bo, o_v, o_bv, o_h, o_k, size


@njit(cache=True)
def _signals(t, y, nh, Lam, ref, xt, z, sig, out12):
    """Reference, errors, network input and hidden activations at (t, y).

    out12 holds [s, sdot, sddot, e, edot, r] (two entries each).
    """
    for j in range(2):
        w = ref[j, 2]
        sn = math.sin(w * t)
        cs = math.cos(w * t)
        out12[0 + j] = ref[j, 0] + ref[j, 1] * sn
        out12[2 + j] = ref[j, 1] * w * cs
        out12[4 + j] = -ref[j, 1] * w * w * sn
    e0 = out12[0] - y[0]
    e1 = out12[1] - y[1]
    ed0 = out12[2] - y[2]
    ed1 = out12[3] - y[3]
    out12[6] = e0
    out12[7] = e1
    out12[8] = ed0
    out12[9] = ed1
    out12[10] = ed0 + Lam[0, 0] * e0 + Lam[0, 1] * e1
    out12[11] = ed1 + Lam[1, 0] * e0 + Lam[1, 1] * e1

    xt[0] = e0
    xt[1] = e1
    xt[2] = ed0
    xt[3] = ed1
    for j in range(6):
        xt[4 + j] = out12[j]

    o_v = 6 + 2 * nh
    o_bv = o_v + N_INPUT * nh
    for k in range(nh):
        acc = y[o_bv + k]
        for i in range(N_INPUT):
            acc += y[o_v + i * nh + k] * xt[i]
        z[k] = acc
        if acc >= 0.0:
            ez = math.exp(-acc)
            sig[k] = 1.0 / (1.0 + ez)
        else:
            ez = math.exp(acc)
            sig[k] = ez / (1.0 + ez)


@njit(cache=True)
def deriv(t, y, wr, nh, cap, has_keys, phi, rho, psi, gamma,
          Kv, Lam, scal, ref, dy, aux, xt, z):
    """Closed-loop time derivative; fills dy (same layout as y) and aux.

    Returns 0, or SINGULAR when the inertia matrix fails its condition
    bound. Attention weights wr are treated as given constants.
    """
    o_w = 4
    o_bo = o_w + 2 * nh
    o_v = o_bo + 2
    o_bv = o_v + N_INPUT * nh
    o_h = o_bv + nh
    o_k = o_h + nh * cap

    sig = aux[A_SIG:A_SIG + nh]
    _signals(t, y, nh, Lam, ref, xt, z, sig, aux[:12])
    e0 = aux[A_E]
    e1 = aux[A_E + 1]
    r0 = aux[A_R]
    r1 = aux[A_R + 1]

    # memory read and Frobenius norms (inactive columns are all-zero)
    read = aux[A_SIG + nh:A_SIG + 2 * nh]
    for k in range(nh):
        read[k] = 0.0
    musq = 0.0
    for i in range(cap):
        wi = wr[i]
        for k in range(nh):
            hv = y[o_h + k * cap + i]
            musq += hv * hv
            if wi != 0.0:
                read[k] += wi * hv
    wsq = 0.0
    for k in range(2 * nh):
        wv = y[o_w + k]
        wsq += wv * wv
    vsq = 0.0
    for k in range(N_INPUT * nh):
        vv = y[o_v + k]
        vsq += vv * vv

    # controller terms
    uad0 = -y[o_bo]
    uad1 = -y[o_bo + 1]
    for k in range(nh):
        act = sig[k] + read[k]
        uad0 -= y[o_w + 2 * k] * act
        uad1 -= y[o_w + 2 * k + 1] * act
    bound = math.sqrt(wsq) + math.sqrt(vsq) + math.sqrt(musq) + scal[S_ZM]
    v0 = -scal[S_K_ROBUST] * bound * r0
    v1 = -scal[S_K_ROBUST] * bound * r1
    ubl0 = -(Kv[0, 0] * r0 + Kv[0, 1] * r1)
    ubl1 = -(Kv[1, 0] * r0 + Kv[1, 1] * r1)
    tau0 = -(ubl0 + uad0 + v0)
    tau1 = -(ubl1 + uad1 + v1)
    aux[A_TAU] = tau0
    aux[A_TAU + 1] = tau1
    aux[A_UAD] = uad0
    aux[A_UAD + 1] = uad1

    # plant
    c2 = math.cos(y[1])
    s2 = math.sin(y[1])
    m00 = phi + rho + 2.0 * psi * c2
    m01 = rho + psi * c2
    m11 = rho
    tr = m00 + m11
    det = m00 * m11 - m01 * m01
    disc = math.sqrt(max(tr * tr - 4.0 * det, 0.0))
    lo = 0.5 * (tr - disc)
    hi = 0.5 * (tr + disc)
    if det <= 0.0 or lo <= 0.0 or hi > 1e12 * lo:
        return SINGULAR
    xd0 = y[2]
    xd1 = y[3]
    ps2 = psi * s2
    ng = psi * gamma * math.cos(y[0] + y[1])
    n0 = phi * gamma * math.cos(y[0]) + ng
    rhs0 = tau0 - (-ps2 * xd1 * xd0 - ps2 * (xd0 + xd1) * xd1) - n0
    rhs1 = tau1 - (ps2 * xd0 * xd0) - ng
    dy[0] = xd0
    dy[1] = xd1
    dy[2] = (m11 * rhs0 - m01 * rhs1) / det
    dy[3] = (m00 * rhs1 - m01 * rhs0) / det

    # weight adaptation (stacked-form law, written per entry)
    e_norm = math.sqrt(e0 * e0 + e1 * e1)
    kw = scal[S_KAPPA] * scal[S_CW] * e_norm
    kv_ = scal[S_KAPPA] * scal[S_CV] * e_norm
    for k in range(nh):
        sp = sig[k] * (1.0 - sig[k])
        t1 = sig[k] - sp * z[k]
        dy[o_w + 2 * k] = scal[S_CW] * t1 * r0 - kw * y[o_w + 2 * k]
        dy[o_w + 2 * k + 1] = scal[S_CW] * t1 * r1 - kw * y[o_w + 2 * k + 1]
    dy[o_bo] = scal[S_CW] * r0 - kw * y[o_bo]
    dy[o_bo + 1] = scal[S_CW] * r1 - kw * y[o_bo + 1]
    for k in range(nh):
        sp = sig[k] * (1.0 - sig[k])
        uk = sp * (y[o_w + 2 * k] * r0 + y[o_w + 2 * k + 1] * r1)
        for i in range(N_INPUT):
            dy[o_v + i * nh + k] = (scal[S_CV] * xt[i] * uk
                                    - kv_ * y[o_v + i * nh + k])
        dy[o_bv + k] = scal[S_CV] * uk - kv_ * y[o_bv + k]

    # memory write: attended columns relax toward the write target
    if cap > 0:
        wg = scal[S_WRITE_GAIN]
        for i in range(cap):
            wi = wr[i]
            if wi == 0.0:
                for k in range(nh):
                    dy[o_h + k * cap + i] = 0.0
            else:
                for k in range(nh):
                    corr = y[o_w + 2 * k] * r0 + y[o_w + 2 * k + 1] * r1
                    dy[o_h + k * cap + i] = wi * (wg * sig[k] + corr
                                                  - y[o_h + k * cap + i])
        if has_keys != 0:
            ck = scal[S_KEY_RATE]
            for i in range(cap):
                wi = wr[i]
                dy[o_k + i] = -ck * wi * (y[o_k + i] - y[0])
                dy[o_k + cap + i] = -ck * wi * (y[o_k + cap + i] - y[1])
    return OK


@njit(cache=True)
def attention_select(t, y, nh, cap, n_active, att_mode, metric, scal,
                     Lam, ref, wr, dvec, xt, z, sig12):
    """Fill attention weights and per-column distances; return the chosen
    index (-1 when there is no memory)."""
    for i in range(cap):
        wr[i] = 0.0
        dvec[i] = np.nan
    if att_mode == 0 or cap == 0:
        return -1
    o_bv = 6 + 2 * nh + N_INPUT * nh
    o_h = o_bv + nh
    o_k = o_h + nh * cap
    if metric == 1:
        q0 = y[0]
        q1 = y[1]
        for i in range(n_active):
            d0 = abs(y[o_k + i] - q0)
            d1 = abs(y[o_k + cap + i] - q1)
            dvec[i] = d0 if d0 > d1 else d1
    else:
        sig = sig12[:nh]
        out12 = sig12[nh:nh + 12]
        _signals(t, y, nh, Lam, ref, xt, z, sig, out12)
        wg = scal[S_WRITE_GAIN]
        for i in range(n_active):
            dmax = 0.0
            for k in range(nh):
                d = abs(sig[k] - y[o_h + k * cap + i] / wg)
                if d > dmax:
                    dmax = d
            dvec[i] = dmax
    if att_mode == 2:
        best = 0
        bd = dvec[0]
        for i in range(1, n_active):
            if dvec[i] < bd:
                bd = dvec[i]
                best = i
        wr[best] = 1.0
        return best
    # soft: softmax over negated distances, max-subtracted
    beta = scal[S_SHARPNESS]
    amax = -beta * dvec[0]
    for i in range(1, n_active):
        a = -beta * dvec[i]
        if a > amax:
            amax = a
    tot = 0.0
    for i in range(n_active):
        wr[i] = math.exp(-beta * dvec[i] - amax)
        tot += wr[i]
    best = 0
    for i in range(n_active):
        wr[i] /= tot
        if wr[i] > wr[best]:
            best = i
    return best


@njit(cache=True)
def maybe_reallocate(t, y, nh, cap, has_keys, n_active, realloc_mode,
                     scal, Lam, ref, xt, z, sig12):
    """Post-step reallocation check; mutates y in place on a shift.

    Returns (fired, new_n_active, target).
    """
    if realloc_mode == 0 or cap == 0:
        return 0, n_active, -1
    if realloc_mode == 1 and n_active >= cap:
        return 0, n_active, -1
    sig = sig12[:nh]
    out12 = sig12[nh:nh + 12]
    _signals(t, y, nh, Lam, ref, xt, z, sig, out12)
    o_bv = 6 + 2 * nh + N_INPUT * nh
    o_h = o_bv + nh
    o_k = o_h + nh * cap
    wg = scal[S_WRITE_GAIN]
    dmin = math.inf
    dmaxv = -math.inf
    imax = 0
    for i in range(n_active):
        dmax = 0.0
        for k in range(nh):
            d = abs(sig[k] - y[o_h + k * cap + i] / wg)
            if d > dmax:
                dmax = d
        if dmax < dmin:
            dmin = dmax
        if dmax > dmaxv:
            dmaxv = dmax
            imax = i
    if dmin < scal[S_THRESHOLD]:
        return 0, n_active, -1
    if n_active < cap:
        target = n_active
        n_active += 1
    else:
        target = imax
    for k in range(nh):
        y[o_h + k * cap + target] = wg * sig[k]
    if has_keys != 0:
        y[o_k + target] = y[0]
        y[o_k + cap + target] = y[1]
    return 1, n_active, target


@njit(cache=True)
def _record(samp, t, y, aux, wr, dvec, n_active, istar, ar, nh, cap,
            T_t, T_x, T_xd, T_s, T_e, T_r, T_tau, T_uad, T_read, T_wr,
            T_dist, T_ns, T_istar, T_ar):
    T_t[samp] = t
    for j in range(2):
        T_x[samp, j] = y[j]
        T_xd[samp, j] = y[2 + j]
        T_s[samp, j] = aux[A_S + j]
        T_e[samp, j] = aux[A_E + j]
        T_r[samp, j] = aux[A_R + j]
        T_tau[samp, j] = aux[A_TAU + j]
        T_uad[samp, j] = aux[A_UAD + j]
    for k in range(nh):
        T_read[samp, k] = aux[A_SIG + nh + k]
    for i in range(cap):
        T_wr[samp, i] = wr[i]
        T_dist[samp, i] = dvec[i]
    T_ns[samp] = n_active
    T_istar[samp] = istar
    T_ar[samp] = ar


@njit(cache=True)
def run_loop(y, n_steps, dt, sample_every, substeps,
             nh, cap, has_keys, n_active0, att_mode, metric, realloc_mode,
             m1, m2, l1, l2, g,
             Kv, Lam, scal, ref,
             jump_steps, jump_kinds, jump_factors, jump_dm2,
             T_t, T_x, T_xd, T_s, T_e, T_r, T_tau, T_uad, T_read, T_wr,
             T_dist, T_ns, T_istar, T_ar, diag):
    """Integrate the closed loop over n_steps fixed steps of size dt.

    Per step: apply any scheduled mass jump, freeze the attention
    selection, record a sample when due, advance the continuous states by
    `substeps` RK4 sub-integrations of length dt/substeps (the attention
    hold, jump grid and reallocation checks all stay on the dt grid),
    then run the reallocation check on the new state. Returns
    (status, steps_done, samples_written); y holds the final state.
    """
    size = y.size
    ycur = y.copy()
    k1 = np.empty(size)
    k2 = np.empty(size)
    k3 = np.empty(size)
    k4 = np.empty(size)
    ytmp = np.empty(size)
    ynext = np.empty(size)
    xt = np.empty(N_INPUT)
    z = np.empty(nh)
    aux = np.zeros(A_SIG + 2 * nh)
    sig12 = np.empty(nh + 12)
    wr = np.zeros(cap)
    dvec = np.zeros(cap)

    o_bv = 6 + 2 * nh + N_INPUT * nh
    o_h = o_bv + nh

    phi = (m1 + m2) * l1 * l1
    rho = m2 * l2 * l2
    psi = m2 * l1 * l2
    gamma = g / l1

    n_active = n_active0
    jp = 0
    nj = jump_steps.size
    samp = 0
    ar_since = 0
    status = OK
    onehot_viol = 0.0
    retention_viol = 0.0
    realloc_count = 0.0
    wrsum_err = 0.0
    div_bound = scal[S_DIV_BOUND]

    n = 0
    while n < n_steps:
        t = n * dt
        while jp < nj and jump_steps[jp] == n:
            if jump_kinds[jp] == 0:
                m1 = m1 * jump_factors[jp]
                m2 = m2 * jump_factors[jp]
            else:
                m1 = math.sqrt(m1 * m1 + jump_dm2[jp, 0])
                m2 = math.sqrt(m2 * m2 + jump_dm2[jp, 1])
            phi = (m1 + m2) * l1 * l1
            rho = m2 * l2 * l2
            psi = m2 * l1 * l2
            jp += 1

        istar = attention_select(t, ycur, nh, cap, n_active, att_mode,
                                 metric, scal, Lam, ref, wr, dvec, xt, z, sig12)
        if cap > 0 and att_mode != 0:
            ssum = 0.0
            onehot_ok = True
            for i in range(cap):
                ssum += wr[i]
                if att_mode == 2 and wr[i] != 0.0 and wr[i] != 1.0:
                    onehot_ok = False
            err = abs(ssum - 1.0)
            if err > wrsum_err:
                wrsum_err = err
            if att_mode == 2 and (not onehot_ok or ssum != 1.0):
                onehot_viol += 1.0

        st = deriv(t, ycur, wr, nh, cap, has_keys, phi, rho, psi, gamma,
                   Kv, Lam, scal, ref, k1, aux, xt, z)
        if st != OK:
            status = st
            break
        if n % sample_every == 0:
            _record(samp, t, ycur, aux, wr, dvec, n_active, istar, ar_since,
                    nh, cap, T_t, T_x, T_xd, T_s, T_e, T_r, T_tau, T_uad,
                    T_read, T_wr, T_dist, T_ns, T_istar, T_ar)
            samp += 1
            ar_since = 0

        h = dt / substeps
        half = 0.5 * h
        sixth = h / 6.0
        for i in range(size):
            ynext[i] = ycur[i]
        bad = False
        for m in range(substeps):
            tm = t + m * h
            if m > 0:
                st = deriv(tm, ynext, wr, nh, cap, has_keys, phi, rho, psi,
                           gamma, Kv, Lam, scal, ref, k1, aux, xt, z)
                if st != OK:
                    bad = True
                    break
            for i in range(size):
                ytmp[i] = ynext[i] + half * k1[i]
            st = deriv(tm + half, ytmp, wr, nh, cap, has_keys, phi, rho, psi,
                       gamma, Kv, Lam, scal, ref, k2, aux, xt, z)
            if st != OK:
                bad = True
                break
            for i in range(size):
                ytmp[i] = ynext[i] + half * k2[i]
            st = deriv(tm + half, ytmp, wr, nh, cap, has_keys, phi, rho, psi,
                       gamma, Kv, Lam, scal, ref, k3, aux, xt, z)
            if st != OK:
                bad = True
                break
            for i in range(size):
                ytmp[i] = ynext[i] + h * k3[i]
            st = deriv(tm + h, ytmp, wr, nh, cap, has_keys, phi, rho, psi,
                       gamma, Kv, Lam, scal, ref, k4, aux, xt, z)
            if st != OK:
                bad = True
                break
            for i in range(size):
                ynext[i] = ynext[i] + sixth * (k1[i] + 2.0 * k2[i]
                                               + 2.0 * k3[i] + k4[i])
        if bad:
            status = st
            break

        # unattended columns must not move at all
        for i in range(cap):
            if wr[i] == 0.0:
                for k in range(nh):
                    if ynext[o_h + k * cap + i] != ycur[o_h + k * cap + i]:
                        retention_viol += 1.0
                        break
        for i in range(size):
            ycur[i] = ynext[i]

        xn = math.sqrt(ycur[0] * ycur[0] + ycur[1] * ycur[1])
        xdn = math.sqrt(ycur[2] * ycur[2] + ycur[3] * ycur[3])
        if not (xn + xdn <= div_bound):
            status = DIVERGED
            n += 1
            break

        fired, n_active, _tgt = maybe_reallocate(
            t + dt, ycur, nh, cap, has_keys, n_active, realloc_mode,
            scal, Lam, ref, xt, z, sig12)
        if fired != 0:
            realloc_count += 1.0
            ar_since = 1
        n += 1

    if status == OK and n_steps % sample_every == 0:
        t = n_steps * dt
        istar = attention_select(t, ycur, nh, cap, n_active, att_mode,
                                 metric, scal, Lam, ref, wr, dvec, xt, z, sig12)
        st = deriv(t, ycur, wr, nh, cap, has_keys, phi, rho, psi, gamma,
                   Kv, Lam, scal, ref, k1, aux, xt, z)
        if st == OK:
            _record(samp, t, ycur, aux, wr, dvec, n_active, istar, ar_since,
                    nh, cap, T_t, T_x, T_xd, T_s, T_e, T_r, T_tau, T_uad,
                    T_read, T_wr, T_dist, T_ns, T_istar, T_ar)
            samp += 1
        else:
            status = st

    for i in range(size):
        y[i] = ycur[i]
    diag[D_ONEHOT_VIOL] = onehot_viol
    diag[D_RETENTION_VIOL] = retention_viol
    diag[D_REALLOC_COUNT] = realloc_count
    diag[D_WRSUM_ERR] = wrsum_err
    diag[D_FINAL_ACTIVE] = n_active
    diag[D_JUMPS_APPLIED] = jp
    return status, n, samp
