"""Time-stepping kernels for the ladder Maxwell-Bloch system.

Both backends implement the same integrating-factor (Lawson) RK4 step. The
linear, velocity-diagonal part (decay plus detuning of each velocity class) is
propagated exactly; the control coupling, the field source and the transit
decay are treated explicitly. At every stage the field is rebuilt by
integrating the polarization source along z with a fourth-order cumulative
rule (trapezoid for fewer than four slices); ``qz`` holds the matching node
weights for integrals over the whole cell.

Array conventions (all complex128 unless stated):
    P, S    (n_z, n_v)  optical and storage coherence per slice and velocity class
    Q       (n_z, n_v)  optical coherence of the passive (unpumped) absorber
    e_in    (2 n_t + 1,) input field on the half-step grid
    omega   (2 n_t + 1, n_z) float, control Rabi frequency (rad/ns)
    tof     (2 n_t + 1,) float, transit decay rate of S (1/ns)
    lam_*   (n_v,) linear rates, dX/dt = lam_X * X + ...

Returned traces are sampled on the full-step grid (n_t + 1 points).
"""

import numpy as np

from .._accel import HAVE_NUMBA, njit

__all__ = ["integrate", "integrate_numba", "integrate_numpy", "z_weights"]


@njit(cache=True, fastmath=True)
def _field(P, Q, w, A, A_u, dz, e0, E, src):
    n_z, n_v = P.shape
    for j in range(n_z):
        s = 0j
        for v in range(n_v):
            s += w[v] * P[j, v]
        s *= A
        if A_u != 0.0:
            q = 0j
            for v in range(n_v):
                q += w[v] * Q[j, v]
            s += A_u * q
        src[j] = 1j * s
    E[0] = e0
    if n_z < 4:
        for j in range(1, n_z):
            E[j] = E[j - 1] + 0.5 * dz * (src[j - 1] + src[j])
        return
    c = dz / 24.0
    E[1] = e0 + c * (9.0 * src[0] + 19.0 * src[1] - 5.0 * src[2] + src[3])
    for j in range(1, n_z - 2):
        E[j + 1] = E[j] + c * (13.0 * (src[j] + src[j + 1]) - src[j - 1] - src[j + 2])
    m = n_z - 1
    E[m] = E[m - 1] + c * (9.0 * src[m] + 19.0 * src[m - 1] - 5.0 * src[m - 2] + src[m - 3])


@njit(cache=True, fastmath=True)
def _quad_z(values, qz):
    total = 0.0 * values[0]
    for j in range(values.shape[0]):
        total += qz[j] * values[j]
    return total


@njit(cache=True, fastmath=True)
def integrate_numba(
    e_in, omega, tof, lam_p, lam_s, lam_q, w, A, A_u, dz, qz, h, gamma_p, gamma_s,
    P, S, Q, snap_every,
):
    n_half = e_in.shape[0]
    n_t = (n_half - 1) // 2
    n_z, n_v = P.shape
    has_q = A_u != 0.0

    fp = np.exp(lam_p * h)
    fp2 = np.exp(lam_p * 0.5 * h)
    fs = np.exp(lam_s * h)
    fs2 = np.exp(lam_s * 0.5 * h)
    fq = np.exp(lam_q * h)
    fq2 = np.exp(lam_q * 0.5 * h)

    Pt = np.empty_like(P)
    St = np.empty_like(S)
    Qt = np.empty_like(Q)
    aP = np.empty_like(P)
    aS = np.empty_like(S)
    aQ = np.empty_like(Q)
    E = np.empty(n_z, dtype=np.complex128)
    src = np.empty(n_z, dtype=np.complex128)

    e_out = np.empty(n_t + 1, dtype=np.complex128)
    stored = np.empty(n_t + 1)
    excitation = np.empty(n_t + 1)
    decay = np.empty(n_t + 1)
    coherence = np.empty(n_t + 1, dtype=np.complex128)
    n_snap = n_t // snap_every + 1 if snap_every > 0 else 0
    snaps = np.zeros((n_snap, n_z), dtype=np.complex128)

    rowP = np.empty(n_z)
    rowS = np.empty(n_z)
    rowQ = np.empty(n_z)
    rowC = np.empty(n_z, dtype=np.complex128)

    h2 = 0.5 * h
    h3 = h / 3.0
    h6 = h / 6.0

    for n in range(n_t + 1):
        # stage 1, also the diagnostics of the state at t_n
        _field(P, Q, w, A, A_u, dz, e_in[2 * n], E, src)
        e_out[n] = E[n_z - 1]
        if n_snap > 0 and n % snap_every == 0:
            for j in range(n_z):
                snaps[n // snap_every, j] = E[j]
        tr = tof[2 * n]
        for j in range(n_z):
            sp = 0.0
            ss = 0.0
            sq = 0.0
            sc = 0j
            for v in range(n_v):
                p = P[j, v]
                s = S[j, v]
                sp += w[v] * (p.real * p.real + p.imag * p.imag)
                ss += w[v] * (s.real * s.real + s.imag * s.imag)
                sc += w[v] * s
            if has_q:
                for v in range(n_v):
                    q = Q[j, v]
                    sq += w[v] * (q.real * q.real + q.imag * q.imag)
            rowP[j] = sp
            rowS[j] = ss
            rowQ[j] = sq
            rowC[j] = sc
        iP = _quad_z(rowP, qz)
        iS = _quad_z(rowS, qz)
        iQ = _quad_z(rowQ, qz)
        stored[n] = A * iS
        excitation[n] = A * (iP + iS) + A_u * iQ
        decay[n] = 2.0 * (A * (gamma_p * iP + (gamma_s + tr) * iS) + A_u * gamma_p * iQ)
        coherence[n] = _quad_z(rowC, qz)
        if n == n_t:
            break

        om = omega[2 * n]
        for j in range(n_z):
            iE = 1j * E[j]
            half = 0.5j * om[j]
            for v in range(n_v):
                p = P[j, v]
                s = S[j, v]
                kp = iE + half * s
                ks = half * p - tr * s
                aP[j, v] = fp[v] * (p + h6 * kp)
                aS[j, v] = fs[v] * (s + h6 * ks)
                Pt[j, v] = fp2[v] * (p + h2 * kp)
                St[j, v] = fs2[v] * (s + h2 * ks)
            if has_q:
                for v in range(n_v):
                    q = Q[j, v]
                    aQ[j, v] = fq[v] * (q + h6 * iE)
                    Qt[j, v] = fq2[v] * (q + h2 * iE)

        # stage 2
        _field(Pt, Qt, w, A, A_u, dz, e_in[2 * n + 1], E, src)
        om = omega[2 * n + 1]
        tr = tof[2 * n + 1]
        for j in range(n_z):
            iE = 1j * E[j]
            half = 0.5j * om[j]
            for v in range(n_v):
                p = Pt[j, v]
                s = St[j, v]
                kp = iE + half * s
                ks = half * p - tr * s
                aP[j, v] += h3 * fp2[v] * kp
                aS[j, v] += h3 * fs2[v] * ks
                Pt[j, v] = fp2[v] * P[j, v] + h2 * kp
                St[j, v] = fs2[v] * S[j, v] + h2 * ks
            if has_q:
                for v in range(n_v):
                    aQ[j, v] += h3 * fq2[v] * iE
                    Qt[j, v] = fq2[v] * Q[j, v] + h2 * iE

        # stage 3
        _field(Pt, Qt, w, A, A_u, dz, e_in[2 * n + 1], E, src)
        for j in range(n_z):
            iE = 1j * E[j]
            half = 0.5j * om[j]
            for v in range(n_v):
                p = Pt[j, v]
                s = St[j, v]
                kp = iE + half * s
                ks = half * p - tr * s
                aP[j, v] += h3 * fp2[v] * kp
                aS[j, v] += h3 * fs2[v] * ks
                Pt[j, v] = fp[v] * P[j, v] + h * fp2[v] * kp
                St[j, v] = fs[v] * S[j, v] + h * fs2[v] * ks
            if has_q:
                for v in range(n_v):
                    aQ[j, v] += h3 * fq2[v] * iE
                    Qt[j, v] = fq[v] * Q[j, v] + h * fq2[v] * iE

        # stage 4
        _field(Pt, Qt, w, A, A_u, dz, e_in[2 * n + 2], E, src)
        om = omega[2 * n + 2]
        tr = tof[2 * n + 2]
        for j in range(n_z):
            iE = 1j * E[j]
            half = 0.5j * om[j]
            for v in range(n_v):
                p = Pt[j, v]
                s = St[j, v]
                P[j, v] = aP[j, v] + h6 * (iE + half * s)
                S[j, v] = aS[j, v] + h6 * (half * p - tr * s)
            if has_q:
                for v in range(n_v):
                    Q[j, v] = aQ[j, v] + h6 * iE

    return e_out, stored, excitation, decay, coherence, snaps


def z_weights(n_z, dz):
    """Node weights of the whole-cell quadrature matching the field marching."""
    q = np.zeros(n_z)
    if n_z < 4:
        q[:] = dz
        q[0] = q[-1] = 0.5 * dz
        return q
    c = dz / 24.0
    q[:4] += c * np.array([9.0, 19.0, -5.0, 1.0])
    q[-4:] += c * np.array([1.0, -5.0, 19.0, 9.0])
    for j in range(1, n_z - 2):
        q[j - 1 : j + 3] += c * np.array([-1.0, 13.0, 13.0, -1.0])
    return q


def _field_np(P, Q, w, A, A_u, dz, e0):
    src = A * (P @ w)
    if A_u != 0.0:
        src = src + A_u * (Q @ w)
    src = 1j * src
    n_z = src.shape[0]
    E = np.empty(n_z, dtype=np.complex128)
    E[0] = e0
    if n_z < 4:
        E[1:] = e0 + 0.5 * dz * np.cumsum(src[:-1] + src[1:])
        return E
    c = dz / 24.0
    steps = np.empty(n_z - 1, dtype=np.complex128)
    steps[0] = c * (9.0 * src[0] + 19.0 * src[1] - 5.0 * src[2] + src[3])
    steps[1:-1] = c * (13.0 * (src[1:-2] + src[2:-1]) - src[:-3] - src[3:])
    steps[-1] = c * (9.0 * src[-1] + 19.0 * src[-2] - 5.0 * src[-3] + src[-4])
    E[1:] = e0 + np.cumsum(steps)
    return E


def integrate_numpy(
    e_in, omega, tof, lam_p, lam_s, lam_q, w, A, A_u, dz, qz, h, gamma_p, gamma_s,
    P, S, Q, snap_every,
):
    n_t = (e_in.shape[0] - 1) // 2
    n_z = P.shape[0]
    has_q = A_u != 0.0

    fp, fp2 = np.exp(lam_p * h), np.exp(lam_p * 0.5 * h)
    fs, fs2 = np.exp(lam_s * h), np.exp(lam_s * 0.5 * h)
    fq, fq2 = np.exp(lam_q * h), np.exp(lam_q * 0.5 * h)

    e_out = np.empty(n_t + 1, dtype=np.complex128)
    stored = np.empty(n_t + 1)
    excitation = np.empty(n_t + 1)
    decay = np.empty(n_t + 1)
    coherence = np.empty(n_t + 1, dtype=np.complex128)
    n_snap = n_t // snap_every + 1 if snap_every > 0 else 0
    snaps = np.zeros((n_snap, n_z), dtype=np.complex128)

    def rhs(Pc, Sc, E, om, tr):
        iE = (1j * E)[:, None]
        half = (0.5j * om)[:, None]
        return iE + half * Sc, half * Pc - tr * Sc, iE

    for n in range(n_t + 1):
        E = _field_np(P, Q, w, A, A_u, dz, e_in[2 * n])
        e_out[n] = E[-1]
        if n_snap > 0 and n % snap_every == 0:
            snaps[n // snap_every] = E
        tr = tof[2 * n]
        iP = (np.abs(P) ** 2) @ w @ qz
        iS = (np.abs(S) ** 2) @ w @ qz
        iQ = (np.abs(Q) ** 2) @ w @ qz if has_q else 0.0
        stored[n] = A * iS
        excitation[n] = A * (iP + iS) + A_u * iQ
        decay[n] = 2.0 * (A * (gamma_p * iP + (gamma_s + tr) * iS) + A_u * gamma_p * iQ)
        coherence[n] = S @ w @ qz
        if n == n_t:
            break

        k1p, k1s, k1q = rhs(P, S, E, omega[2 * n], tr)
        Pt = fp2 * (P + 0.5 * h * k1p)
        St = fs2 * (S + 0.5 * h * k1s)
        Qt = fq2 * (Q + 0.5 * h * k1q) if has_q else Q

        E = _field_np(Pt, Qt, w, A, A_u, dz, e_in[2 * n + 1])
        k2p, k2s, k2q = rhs(Pt, St, E, omega[2 * n + 1], tof[2 * n + 1])
        Pt = fp2 * P + 0.5 * h * k2p
        St = fs2 * S + 0.5 * h * k2s
        Qt = fq2 * Q + 0.5 * h * k2q if has_q else Q

        E = _field_np(Pt, Qt, w, A, A_u, dz, e_in[2 * n + 1])
        k3p, k3s, k3q = rhs(Pt, St, E, omega[2 * n + 1], tof[2 * n + 1])
        Pt = fp * P + h * fp2 * k3p
        St = fs * S + h * fs2 * k3s
        Qt = fq * Q + h * fq2 * k3q if has_q else Q

        E = _field_np(Pt, Qt, w, A, A_u, dz, e_in[2 * n + 2])
        k4p, k4s, k4q = rhs(Pt, St, E, omega[2 * n + 2], tof[2 * n + 2])

        P = fp * (P + h / 6 * k1p) + h / 3 * fp2 * (k2p + k3p) + h / 6 * k4p
        S = fs * (S + h / 6 * k1s) + h / 3 * fs2 * (k2s + k3s) + h / 6 * k4s
        if has_q:
            Q = fq * (Q + h / 6 * k1q) + h / 3 * fq2 * (k2q + k3q) + h / 6 * k4q

    return e_out, stored, excitation, decay, coherence, snaps


def integrate(*args, backend=None):
    """Dispatch to the numba kernel when available (or requested)."""
    if backend is None:
        backend = "numba" if HAVE_NUMBA else "numpy"
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is disabled or missing")
        return integrate_numba(*args)
    if backend == "numpy":
        args = list(args)
        # the numpy path works on copies; the numba path updates P, S, Q in place
        for i in (14, 15, 16):
            args[i] = args[i].copy()
        return integrate_numpy(*args)
    raise ValueError(f"unknown backend {backend!r}")
