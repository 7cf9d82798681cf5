"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--sizes 50 100 200] [--repeat 20]

Times the residual+Jacobian assembly, the residual alone, the RK4 reaction
step, and one full IMEX step on the default initial data.
"""
import argparse
import timeit

from haptofv import kernels
from haptofv.fv import ImplicitProblem
from haptofv.grid import build_grid
from haptofv.initial import generate_initial_state
from haptofv.integrate import TimeStepConfig, imex_step, rk4_reaction_step
from haptofv.model import ModelParams


def bench(fn, repeat):
    fn()  # warm up
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    backends = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the numpy fallback only")
    params = ModelParams()
    cfg = TimeStepConfig(t_end=1.0)
    print(f"{'n':>5} {'kernel':<12} " + " ".join(f"{b + ' [ms]':>14}" for b in backends) + "   speedup")
    for n in args.sizes:
        grid = build_grid(n, n)
        state = rk4_reaction_step(generate_initial_state(grid), params, 0.01)
        cases = {
            "assemble+J": lambda b: ImplicitProblem(grid, params, state.p, state.v, state.m, 0.01,
                                                    backend=b).residual_and_jacobian(state.m),
            "residual": lambda b: ImplicitProblem(grid, params, state.p, state.v, state.m, 0.01,
                                                  backend=b).residual(state.m),
            "rk4": lambda b: rk4_reaction_step(state, params, 0.01, backend=b),
            "imex step": lambda b: imex_step(state, grid, params, cfg, backend=b),
        }
        for name, case in cases.items():
            reps = max(3, args.repeat // 4) if name == "imex step" else args.repeat
            times = [bench(lambda: case(b), reps) * 1e3 for b in backends]
            speed = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else ""
            print(f"{n:>5} {name:<12} " + " ".join(f"{t:>14.3f}" for t in times) + "  " + speed)


if __name__ == "__main__":
    main()
