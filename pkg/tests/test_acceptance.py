"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line to the terminal.
"""
import math
import time

import mpmath
import numpy as np
import pytest
from scipy import ndimage

from haptofv.fv import ImplicitProblem
from haptofv.grid import build_grid, neighbors
from haptofv.initial import generate_initial_state, tissue_mask
from haptofv.kernels import _fallback
from haptofv.integrate import TimeStepConfig, imex_step, rk4_reaction_step, run_simulation
from haptofv.model import ModelParams, State
from haptofv.studies import (default_problem, imex_self_convergence, logistic_rk4_errors,
                             weighted_norm)

P = ModelParams()


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {n}: {detail}"
    return emit


def test_criterion_1_rk4_order(report):
    t0 = time.perf_counter()
    e_coarse, e_fine = logistic_rk4_errors([0.02, 0.01], t_end=1.0, mu_v=0.021, v0=0.5)
    elapsed = time.perf_counter() - t0
    ratio = e_coarse / e_fine
    report(1, 14 <= ratio <= 18 and elapsed < 1.0,
           f"error ratio {ratio:.4f} (errors {e_coarse:.3e}, {e_fine:.3e}), {elapsed:.2f} s")


def test_criterion_2_conservation(report):
    t0 = time.perf_counter()
    g, s0 = default_problem(20)
    cfg = TimeStepConfig(dt=0.01, t_end=1.0)
    worst = 0.0
    s = s0
    for _ in range(100):
        w = rk4_reaction_step(s, P, cfg.dt)
        s, stats = imex_step(s, g, P, cfg)
        worst = max(worst, abs(s.m.sum() - w.m.sum()) / w.m.sum(), stats.mass_balance)
    s = s0
    for _ in range(100):
        s, _ = imex_step(s, g, P, cfg, reactions=False)
    drift = abs(s.m.sum() - s0.m.sum()) / s0.m.sum()
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-10 and drift <= 1e-9 and elapsed < 10,
           f"max step balance {worst:.2e}, transport-only drift {drift:.2e}, {elapsed:.1f} s")


@pytest.fixture(scope="module")
def run_50x50():
    g = build_grid(50, 50)
    s0 = generate_initial_state(g)
    track = dict(min_m=np.inf, min_v=np.inf, max_v=-np.inf, max_p=-np.inf, iters=[], residuals=[])

    def observe(s):
        track["min_m"] = min(track["min_m"], s.m.min())
        track["min_v"] = min(track["min_v"], s.v.min())
        track["max_v"] = max(track["max_v"], s.v.max())
        track["max_p"] = max(track["max_p"], s.p.max())

    t0 = time.perf_counter()
    s = s0
    cfg = TimeStepConfig(dt=0.01, t_end=50.0)
    observe(s)
    for _ in range(cfg.n_steps):
        s, stats = imex_step(s, g, P, cfg)
        track["iters"].append(stats.newton_iters)
        track["residuals"].append(stats.residual_norm)
        observe(s)
    track["elapsed"] = time.perf_counter() - t0
    track["p0_max"] = s0.p.max()
    return track


def test_criterion_3_bounds(run_50x50, report):
    r = run_50x50
    p_cap = max(1.0, r["p0_max"]) + 1e-8
    ok = (r["min_v"] >= -1e-12 and r["max_v"] <= 1 + 1e-12 and r["max_p"] <= p_cap
          and r["min_m"] >= -1e-12 and r["elapsed"] < 120)
    report(3, ok, f"min m {r['min_m']:.3e}, v in [{r['min_v']:.3e}, {r['max_v']:.6f}], "
                  f"max p {r['max_p']:.6f} (cap {p_cap:.6f}), {r['elapsed']:.0f} s")


def _exact_central_differences(prob, m, h, digits=30):
    """Central differences with step ``h``, evaluated in ``digits``-digit arithmetic.

    Cells of one class of the 5-coloring ``(i + 2 j) mod 5`` never share a
    residual row, so each class is perturbed at once.
    """
    g = prob.grid
    st = g.stencil
    n = g.n_cells
    idx = np.arange(n)
    color = (idx % g.nx + 2 * (idx // g.nx)) % 5
    fd = np.zeros((n, n))
    with mpmath.workdps(digits):
        mp = lambda a: np.array([mpmath.mpf(float(x)) for x in a], dtype=object)
        p, v, rhs, trans, base = mp(prob.p), mp(prob.v), mp(prob.rhs), mp(g.transmissibility), mp(m)
        scale = mpmath.mpf(prob.dt) / mpmath.mpf(g.cell_area)
        hm = mpmath.mpf(h)

        def residual(x):
            return _fallback.assemble(x, p, v, rhs, g.edge_left, g.edge_right, trans, scale,
                                      mpmath.mpf(P.kappa_m), mpmath.mpf(P.kappa_v), 0, False,
                                      st.pos_diag, st.pos_ll, st.pos_lr, st.pos_rl, st.pos_rr,
                                      st.nnz, False)[0]

        for c in range(5):
            cols = np.flatnonzero(color == c)
            e = np.array([hm if color[k] == c else mpmath.mpf(0) for k in range(n)], dtype=object)
            d = (residual(base + e) - residual(base - e)) / (2 * hm)
            for k in cols:
                rows = np.array([k] + [nb.right for nb in neighbors(g, int(k))])
                fd[rows, k] = [float(x) for x in d[rows]]
    return fd


def test_criterion_4_jacobian(report):
    # float64 differences carry ~eps |r| / h = 1e-10 roundoff, which swamps 1e-5 relative on
    # entries near 1e-6; the same step evaluated at 30 digits is the oracle
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    g = build_grid(8, 8)
    n = g.n_cells
    worst = 0.0
    for _ in range(50):
        m, p, v = rng.uniform(0, 1, n), rng.uniform(0, 1, n), rng.uniform(0, 1, n)
        prob = ImplicitProblem(g, P, p, v, rng.uniform(0, 1, n), 0.01)
        J = prob.residual_and_jacobian(m)[1].toarray()
        fd = _exact_central_differences(prob, m, 1e-6)
        # the drift direction depends on v only: no upwind switch inside the stencil
        nz = (J != 0) | (fd != 0)
        rel = np.abs(J - fd)[nz] / np.maximum(np.abs(J), np.abs(fd))[nz]
        worst = max(worst, rel.max())
    elapsed = time.perf_counter() - t0
    report(4, worst <= 1e-5 and elapsed < 30,
           f"max entrywise relative error {worst:.2e} over 50 states, {elapsed:.1f} s")


def test_criterion_5_newton(run_50x50, report):
    its = np.array(run_50x50["iters"])
    res = max(run_50x50["residuals"])
    ok = its.max() <= 25 and res <= 1e-10 and np.median(its) <= 5
    report(5, ok, f"{its.size} steps, max {its.max()} iterations, median {np.median(its):g}, "
                  f"worst final residual {res:.2e}")


def test_criterion_6_self_convergence(report):
    t0 = time.perf_counter()
    g, s0 = default_problem(20)
    diffs, (ratio,) = imex_self_convergence(g, s0, P, (0.04, 0.02, 0.01), 1.0)
    elapsed = time.perf_counter() - t0
    report(6, 1.7 <= ratio <= 2.3 and elapsed < 60,
           f"differences {diffs[0]:.3e}, {diffs[1]:.3e}; ratio {ratio:.4f}, {elapsed:.1f} s")


@pytest.mark.slow
def test_criterion_7_go_or_grow(report):
    t0 = time.perf_counter()
    g = build_grid(100, 100)
    s0 = generate_initial_state(g)
    s = run_simulation(s0, g, P, TimeStepConfig(dt=0.01, t_end=200.0))
    elapsed = time.perf_counter() - t0
    near = ndimage.binary_dilation(g.to_2d(tissue_mask(g)), iterations=3).ravel()
    frac = s.m[near].sum() / s.m.sum()
    grew = s.m.sum() > s0.m.sum()
    kept = bool(np.all(s.v[s0.v == 0] == 0))
    report(7, frac >= 0.8 and grew and kept,
           f"(a) m-mass near tissue {frac:.4f}; (b) mass_m {g.cell_area * s0.m.sum():.5f} -> "
           f"{g.cell_area * s.m.sum():.5f}; (c) v=0 set kept: {kept}; {elapsed / 60:.1f} min")


def test_criterion_8_degenerate_limit(report):
    g, s0 = default_problem(20)
    s0 = State(s0.m, s0.p, np.zeros(g.n_cells))
    s = run_simulation(s0, g, ModelParams(eps1=0.0), TimeStepConfig(dt=0.01, t_end=1.0))
    err = np.abs(s.m - s0.m * math.exp(-P.alpha * 1.0)).max()
    report(8, err <= 1e-10, f"max |m - m0 exp(-alpha t)| at t=1: {err:.2e}")


def test_criterion_9_eps1_relaxation(report):
    g, s0 = default_problem(20)
    cfg = TimeStepConfig(dt=0.01, t_end=1.0)
    ref = run_simulation(s0, g, P, cfg)
    diffs = [weighted_norm(run_simulation(s0, g, ModelParams(eps1=e), cfg), ref, g)
             for e in (1e-2, 1e-3, 1e-4)]
    ok = diffs[0] > diffs[1] > diffs[2]
    report(9, ok, "differences for eps1 = 1e-2, 1e-3, 1e-4: " + ", ".join(f"{d:.3e}" for d in diffs))
