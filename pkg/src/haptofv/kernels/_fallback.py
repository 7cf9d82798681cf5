"""Pure numpy implementations of the hot kernels.

Every function here has the same signature and semantics as its counterpart
in the compiled ``_core`` module. These versions also accept object arrays
(e.g. of ``mpmath.mpf``), which the compiled core does not.
"""
import numpy as np

HARMONIC_GUARD = 1e-300


def rk4_reaction(m, p, v, alpha, beta, mu_p, mu_v, eta, lam, dt):
    def f(m, p, v):
        switch = -alpha * m + beta * p * v
        return (
            switch,
            -switch + mu_p * p * (1 - (m + p) - eta * v),
            mu_v * v * (1 - v) - lam * v * m,
        )

    half = dt / 2
    k1 = f(m, p, v)
    k2 = f(m + half * k1[0], p + half * k1[1], v + half * k1[2])
    k3 = f(m + half * k2[0], p + half * k2[1], v + half * k2[2])
    k4 = f(m + dt * k3[0], p + dt * k3[1], v + dt * k3[2])
    sixth = dt / 6
    return tuple(
        u + sixth * (a + 2 * b + 2 * c + d)
        for u, a, b, c, d in zip((m, p, v), k1, k2, k3, k4)
    )


def _scatter(index, weights, n):
    # bincount would round anything else to float64
    if weights.dtype != np.float64:
        out = np.zeros(n, dtype=object)
        np.add.at(out, index, weights)
        return out
    return np.bincount(index, weights=weights, minlength=n)


def _harmonic(a, b):
    # negative arguments (transient Newton iterates only) block the edge
    s = a + b
    ok = (a >= 0) & (b >= 0) & (s > HARMONIC_GUARD)
    s = np.where(ok, s, 1.0)
    h = np.where(ok, a * b / s, 0.0)
    ha = np.where(ok, (b / s) ** 2, 0.0)
    hb = np.where(ok, (a / s) ** 2, 0.0)
    return h, ha, hb


def coefficients(m, p, v, kappa_m, kappa_v, eps1, numerics_variant):
    """Cell values of D, dD/dm, V, dV/dm."""
    s = m + p
    vs = v * s
    den = 1.0 + vs
    D = kappa_m * vs / den + eps1
    dD = kappa_m * v / (den * den)
    if numerics_variant:
        q = 1.0 + s
        V = kappa_v / (q * q)
        dV = -2.0 * kappa_v / (q * q * q)
    else:
        V = kappa_v / ((1.0 + v) * (1.0 + v))
        dV = np.zeros_like(V)
    return D, dD, V, dV


def edge_fluxes(m, p, v, left, right, trans, kappa_m, kappa_v, eps1, numerics_variant):
    """Per-edge diffusive gain of the left cell and drift transport left -> right."""
    D, _, V, _ = coefficients(m, p, v, kappa_m, kappa_v, eps1, numerics_variant)
    H, _, _ = _harmonic(D[left], D[right])
    G, _, _ = _harmonic(V[left], V[right])
    F = H * (m[right] - m[left]) * trans
    g = G * (v[right] - v[left]) * trans
    drift = g * np.where(g > 0, m[left], m[right])
    return F, drift


def assemble(m, p, v, rhs, left, right, trans, scale,
             kappa_m, kappa_v, eps1, numerics_variant,
             pos_diag, pos_ll, pos_lr, pos_rl, pos_rr, nnz, want_jacobian):
    """Residual of the implicit m-equation and, optionally, CSR Jacobian data.

    residual = m - scale * sum_edges(F - drift, signed per cell) - rhs
    """
    n = m.shape[0]
    D, dD, V, dV = coefficients(m, p, v, kappa_m, kappa_v, eps1, numerics_variant)
    ml, mr = m[left], m[right]
    H, Ha, Hb = _harmonic(D[left], D[right])
    G, Ga, Gb = _harmonic(V[left], V[right])
    dm = mr - ml
    dvt = (v[right] - v[left]) * trans
    g = G * dvt
    up_left = g > 0
    mup = np.where(up_left, ml, mr)
    net = H * dm * trans - g * mup

    div = _scatter(left, net, n) - _scatter(right, net, n)
    residual = m - scale * div - rhs
    if not want_jacobian:
        return residual, None

    dnet_l = trans * (Ha * dD[left] * dm - H) - (dvt * Ga * dV[left] * mup + np.where(up_left, g, 0.0))
    dnet_r = trans * (Hb * dD[right] * dm + H) - (dvt * Gb * dV[right] * mup + np.where(up_left, 0.0, g))
    pos = np.concatenate([pos_diag, pos_ll, pos_lr, pos_rl, pos_rr])
    val = np.concatenate([
        np.ones(n), -scale * dnet_l, -scale * dnet_r, scale * dnet_l, scale * dnet_r,
    ])
    data = _scatter(pos, val, nnz)
    return residual, data
