"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
fallback is used. Set ``HAPTOFV_KERNELS=python`` to force the fallback.
Non-float64 inputs (e.g. mpmath object arrays) always go to the fallback.
"""
import os

import numpy as np

from . import _fallback

if os.environ.get("HAPTOFV_KERNELS", "").lower() == "python":
    _core = None
else:
    try:
        from . import _core
    except ImportError:  # extension not built
        _core = None

BACKEND = "compiled" if _core is not None else "python"


def _is_f64(*arrays) -> bool:
    return all(isinstance(a, np.ndarray) and a.dtype == np.float64 for a in arrays)


def rk4_reaction(m, p, v, alpha, beta, mu_p, mu_v, eta, lam, dt, backend=None):
    mod = _pick(backend, m, p, v)
    if mod is _core:
        m, p, v = (np.ascontiguousarray(a) for a in (m, p, v))
        alpha, beta, mu_p, mu_v, eta, lam, dt = map(float, (alpha, beta, mu_p, mu_v, eta, lam, dt))
    return mod.rk4_reaction(m, p, v, alpha, beta, mu_p, mu_v, eta, lam, dt)


def assemble(m, p, v, rhs, left, right, trans, scale, kappa_m, kappa_v, eps1,
             numerics_variant, pos_diag, pos_ll, pos_lr, pos_rl, pos_rr, nnz,
             want_jacobian, backend=None):
    mod = _pick(backend, m, p, v, rhs)
    if mod is _core:
        m, p, v, rhs = (np.ascontiguousarray(a) for a in (m, p, v, rhs))
    return mod.assemble(m, p, v, rhs, left, right, trans, float(scale), float(kappa_m),
                        float(kappa_v), float(eps1), bool(numerics_variant), pos_diag,
                        pos_ll, pos_lr, pos_rl, pos_rr, nnz, want_jacobian)


def _pick(backend, *arrays):
    if backend == "python" or _core is None or not _is_f64(*arrays):
        if backend == "compiled" and _core is None:
            raise RuntimeError("compiled kernels requested but haptofv.kernels._core is not built")
        return _fallback
    return _core
