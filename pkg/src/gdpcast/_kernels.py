"""Compiled inner loops for univariate-observation state-space recursions.

Failures are reported through a returned index (``-1`` means success) so
callers can raise informative Python exceptions.
"""
import numpy as np
from numba import njit

Q_FLOOR = 1e-300


@njit(cache=True)
def psd_sqrt(A):
    """Factor ``L`` with ``L @ L.T == A`` for symmetric PSD ``A`` (negative eigenvalues clipped)."""
    w, U = np.linalg.eigh(A)
    for i in range(w.size):
        w[i] = np.sqrt(w[i]) if w[i] > 0.0 else 0.0
    return U * w


@njit(cache=True)
def _lower_factor(M):
    """Lower-triangular ``L`` with ``L @ L.T == M @ M.T``, via QR of ``M.T``."""
    r = np.linalg.qr(np.ascontiguousarray(M.T))[1]
    return np.ascontiguousarray(r.T)


@njit(cache=True)
def sqrt_filter(y, F, G, Wh, V, m0, SC0):
    """Kalman filter propagating square-root factors of R_t and C_t.

    ``Wh`` and ``SC0`` are factors with ``Wh Wh' = W`` and ``SC0 SC0' = C0``.
    Both steps are orthogonal triangularisations of stacked factors, so the
    filtered covariances never come from a subtraction.
    """
    n = y.size
    p = m0.size
    a = np.empty((n, p))
    SR = np.empty((n, p, p))
    f = np.empty(n)
    Q = np.empty(n)
    m = np.empty((n, p))
    SC = np.empty((n, p, p))
    ll = 0.0
    mp = m0.copy()
    Sp = SC0.copy()
    pred = np.zeros((p, p + Wh.shape[1]))
    pred[:, p:] = Wh
    upd = np.zeros((p + 1, p + 1))
    upd[0, 0] = np.sqrt(V)
    for t in range(n):
        at = G @ mp
        pred[:, :p] = G @ Sp
        Srt = _lower_factor(pred)
        upd[0, 1:] = F @ Srt
        upd[1:, 1:] = Srt
        post = _lower_factor(upd)
        sq = post[0, 0]
        qt = sq * sq
        ft = F @ at
        if not qt > Q_FLOOR:
            return a, SR, f, Q, m, SC, ll, t
        e = y[t] - ft
        mt = at + post[1:, 0] * (e / sq)
        a[t] = at
        SR[t] = Srt
        f[t] = ft
        Q[t] = qt
        m[t] = mt
        SC[t] = post[1:, 1:]
        ll += -0.5 * (np.log(2.0 * np.pi * qt) + e * e / qt)
        mp = mt
        Sp = SC[t]
    return a, SR, f, Q, m, SC, ll, -1


@njit(cache=True)
def filter_full(y, F, G, W, V, m0, C0):
    """Square-root filter returning full covariances ``R_t`` and ``C_t``."""
    a, SR, f, Q, m, SC, ll, bad = sqrt_filter(y, F, G, psd_sqrt(W), V, m0, psd_sqrt(C0))
    n, p = m.shape
    R = np.zeros((n, p, p))
    C = np.zeros((n, p, p))
    stop = n if bad < 0 else bad
    for t in range(stop):
        R[t] = SR[t] @ SR[t].T
        C[t] = SC[t] @ SC[t].T
    return a, R, f, Q, m, C, ll, bad


@njit(cache=True)
def innovations(y, F, G, W, V, m0, C0):
    """Prediction errors and their variances only; used inside optimisers."""
    n = y.size
    p = m0.size
    v = np.empty(n)
    Q = np.empty(n)
    mp = m0.copy()
    Cp = C0.copy()
    at = np.empty(p)
    GC = np.empty((p, p))
    Rt = np.empty((p, p))
    RF = np.empty(p)
    for t in range(n):
        for i in range(p):
            acc = 0.0
            for k in range(p):
                acc += G[i, k] * mp[k]
            at[i] = acc
            for j in range(p):
                acc = 0.0
                for k in range(p):
                    acc += G[i, k] * Cp[k, j]
                GC[i, j] = acc
        for i in range(p):
            for j in range(i, p):
                acc = W[i, j]
                for k in range(p):
                    acc += GC[i, k] * G[j, k]
                Rt[i, j] = acc
                Rt[j, i] = acc
        ft = 0.0
        for i in range(p):
            acc = 0.0
            for k in range(p):
                acc += Rt[i, k] * F[k]
            RF[i] = acc
            ft += F[i] * at[i]
        qt = V
        for i in range(p):
            qt += F[i] * RF[i]
        if not qt > Q_FLOOR:
            return v, Q, t
        e = y[t] - ft
        for i in range(p):
            mp[i] = at[i] + RF[i] * (e / qt)
            for j in range(i, p):
                c = Rt[i, j] - RF[i] * RF[j] / qt
                Cp[i, j] = c
                Cp[j, i] = c
        v[t] = e
        Q[t] = qt
    return v, Q, -1


@njit(cache=True)
def _backward_step(G, Wh, St):
    """Factors for ``theta_t | theta_{t+1}`` given ``St St' = C_t``.

    Triangularising ``[[Wh, G St], [0, St]]`` yields ``L`` with
    ``L L' = R_{t+1}``, ``K`` with ``J = K L^{-1}`` and ``H`` with
    ``H H' = C_t - J R_{t+1} J'``.
    """
    p = St.shape[0]
    q = Wh.shape[1]
    pre = np.zeros((2 * p, q + p))
    pre[:p, :q] = Wh
    pre[:p, q:] = G @ St
    pre[p:, q:] = St
    post = _lower_factor(pre)
    return post[:p, :p].copy(), post[p:, :p].copy(), post[p:, p:].copy()


@njit(cache=True)
def _solve_lower(L, b):
    # minimum-norm solution, so singular R_{t+1} is handled like a pseudo-inverse
    return np.linalg.lstsq(L, b)[0]


@njit(cache=True)
def rts_smoother(G, Wh, a, m, SC, m0, SC0):
    """Rauch-Tung-Striebel pass in square-root form; row 0 is time 0 (the prior)."""
    n, p = m.shape
    s = np.empty((n + 1, p))
    S = np.empty((n + 1, p, p))
    s[n] = m[n - 1]
    root = SC[n - 1].copy()
    S[n] = root @ root.T
    for t in range(n - 1, -1, -1):
        if t == 0:
            mt, St = m0, SC0
        else:
            mt, St = m[t - 1], SC[t - 1]
        L, K, H = _backward_step(G, Wh, St)
        s[t] = mt + K @ _solve_lower(L, s[t + 1] - a[t])
        stack = np.empty((p, 2 * p))
        stack[:, :p] = H
        stack[:, p:] = K @ _solve_lower(L, root)
        root = _lower_factor(stack)
        S[t] = root @ root.T
    return s, S


@njit(cache=True)
def backward_sample(G, Wh, a, m, SC, m0, SC0, z):
    """Draw a state path theta_0..theta_n given filter output and N(0, 1) noise ``z``."""
    n, p = m.shape
    theta = np.empty((n + 1, p))
    theta[n] = m[n - 1] + SC[n - 1] @ z[n]
    for t in range(n - 1, -1, -1):
        if t == 0:
            mt, St = m0, SC0
        else:
            mt, St = m[t - 1], SC[t - 1]
        L, K, H = _backward_step(G, Wh, St)
        theta[t] = mt + K @ _solve_lower(L, theta[t + 1] - a[t]) + H @ z[t]
    return theta
