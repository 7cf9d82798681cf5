# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as ``_fallback``, float64 only."""
import numpy as np
from libc.stdint cimport int64_t

cdef double HARMONIC_GUARD = 1e-300


cdef inline void _react(double m, double p, double v,
                        double alpha, double beta, double mu_p, double mu_v,
                        double eta, double lam,
                        double* dm, double* dp, double* dv) noexcept nogil:
    cdef double shift = -alpha * m + beta * p * v
    dm[0] = shift
    dp[0] = -shift + mu_p * p * (1.0 - (m + p) - eta * v)
    dv[0] = mu_v * v * (1.0 - v) - lam * v * m


def rk4_reaction(const double[::1] m, const double[::1] p, const double[::1] v,
                 double alpha, double beta, double mu_p, double mu_v,
                 double eta, double lam, double dt):
    cdef Py_ssize_t n = m.shape[0], c
    out_m = np.empty(n)
    out_p = np.empty(n)
    out_v = np.empty(n)
    cdef double[::1] om = out_m, op = out_p, ov = out_v
    cdef double half = dt / 2.0, sixth = dt / 6.0
    cdef double a1, b1, c1, a2, b2, c2, a3, b3, c3, a4, b4, c4
    with nogil:
        for c in range(n):
            _react(m[c], p[c], v[c], alpha, beta, mu_p, mu_v, eta, lam, &a1, &b1, &c1)
            _react(m[c] + half * a1, p[c] + half * b1, v[c] + half * c1,
                   alpha, beta, mu_p, mu_v, eta, lam, &a2, &b2, &c2)
            _react(m[c] + half * a2, p[c] + half * b2, v[c] + half * c2,
                   alpha, beta, mu_p, mu_v, eta, lam, &a3, &b3, &c3)
            _react(m[c] + dt * a3, p[c] + dt * b3, v[c] + dt * c3,
                   alpha, beta, mu_p, mu_v, eta, lam, &a4, &b4, &c4)
            om[c] = m[c] + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            op[c] = p[c] + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            ov[c] = v[c] + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
    return out_m, out_p, out_v


def assemble(const double[::1] m, const double[::1] p, const double[::1] v,
             const double[::1] rhs, const int64_t[::1] left, const int64_t[::1] right,
             const double[::1] trans, double scale,
             double kappa_m, double kappa_v, double eps1, bint numerics_variant,
             const int64_t[::1] pos_diag, const int64_t[::1] pos_ll, const int64_t[::1] pos_lr,
             const int64_t[::1] pos_rl, const int64_t[::1] pos_rr, Py_ssize_t nnz,
             bint want_jacobian):
    cdef Py_ssize_t n = m.shape[0], ne = left.shape[0], c, e, l, r
    cdef double s, vs, den, q
    D_arr = np.empty(n)
    dD_arr = np.empty(n)
    V_arr = np.empty(n)
    dV_arr = np.empty(n)
    cdef double[::1] D = D_arr, dD = dD_arr, V = V_arr, dV = dV_arr
    div_arr = np.zeros(n)
    cdef double[::1] div = div_arr
    residual = np.empty(n)
    cdef double[::1] res = residual
    data_arr = np.zeros(nnz if want_jacobian else 0)
    cdef double[::1] data = data_arr
    cdef double sab, H, Ha, Hb, G, Ga, Gb, dm, dvt, g, mup, net, dl, dr, gl, gr

    with nogil:
        for c in range(n):
            s = m[c] + p[c]
            vs = v[c] * s
            den = 1.0 + vs
            D[c] = kappa_m * vs / den + eps1
            dD[c] = kappa_m * v[c] / (den * den)
            if numerics_variant:
                q = 1.0 + s
                V[c] = kappa_v / (q * q)
                dV[c] = -2.0 * kappa_v / (q * q * q)
            else:
                V[c] = kappa_v / ((1.0 + v[c]) * (1.0 + v[c]))
                dV[c] = 0.0

        for e in range(ne):
            l = left[e]
            r = right[e]
            sab = D[l] + D[r]
            if D[l] >= 0 and D[r] >= 0 and sab > HARMONIC_GUARD:
                H = D[l] * D[r] / sab
                Ha = (D[r] / sab) * (D[r] / sab)
                Hb = (D[l] / sab) * (D[l] / sab)
            else:
                H = 0.0
                Ha = 0.0
                Hb = 0.0
            sab = V[l] + V[r]
            if V[l] >= 0 and V[r] >= 0 and sab > HARMONIC_GUARD:
                G = V[l] * V[r] / sab
                Ga = (V[r] / sab) * (V[r] / sab)
                Gb = (V[l] / sab) * (V[l] / sab)
            else:
                G = 0.0
                Ga = 0.0
                Gb = 0.0
            dm = m[r] - m[l]
            dvt = (v[r] - v[l]) * trans[e]
            g = G * dvt
            if g > 0:
                mup = m[l]
                gl = g
                gr = 0.0
            else:
                mup = m[r]
                gl = 0.0
                gr = g
            net = H * dm * trans[e] - g * mup
            div[l] += net
            div[r] -= net
            if want_jacobian:
                dl = trans[e] * (Ha * dD[l] * dm - H) - (dvt * Ga * dV[l] * mup + gl)
                dr = trans[e] * (Hb * dD[r] * dm + H) - (dvt * Gb * dV[r] * mup + gr)
                data[pos_ll[e]] -= scale * dl
                data[pos_lr[e]] -= scale * dr
                data[pos_rl[e]] += scale * dl
                data[pos_rr[e]] += scale * dr

        for c in range(n):
            res[c] = m[c] - scale * div[c] - rhs[c]
            if want_jacobian:
                data[pos_diag[c]] += 1.0

    return residual, (data_arr if want_jacobian else None)
