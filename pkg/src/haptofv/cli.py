"""Command-line driver: ``haptofv run | check | convergence``.

Exit codes: 0 success, 1 solver failure or failed check, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .diagnostics import check_bounds, p_upper_bound
from .grid import build_grid
from .initial import generate_initial_state
from .integrate import SimulationAborted, run_simulation
from .io import (ConfigError, DiagnosticsWriter, build_config, discover_snapshots,
                 dump_config, load_config_file, read_csv_grid, read_diagnostics, write_snapshot)
from .model import State
from .studies import (default_problem, imex_self_convergence, logistic_rk4_errors,
                      observed_orders)

log = logging.getLogger("haptofv")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haptofv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate from the grate-like initial data")
    run.add_argument("--config", help="key=value config file")
    run.add_argument("--seed", type=int)
    run.add_argument("--nx", type=int)
    run.add_argument("--ny", type=int)
    run.add_argument("--dt", type=float)
    run.add_argument("--t-end", type=float, dest="t_end")
    run.add_argument("--out", dest="output_dir")
    run.add_argument("--taxis-variant", choices=["continuous", "numerics"], dest="taxis_variant")
    run.add_argument("--eps1", type=float)
    run.add_argument("--snapshot-every", type=float, dest="snapshot_interval")
    run.add_argument("--diagnostics-every", type=float, dest="diagnostics_interval")
    run.add_argument("--format", choices=["csv_grid", "vtk_legacy"], dest="output_format")
    run.add_argument("--heatmaps", action="store_const", const=True, dest="emit_heatmaps")

    check = sub.add_parser("check", help="bound and conservation checks on csv_grid snapshots")
    check.add_argument("directory")
    check.add_argument("--config", help="config file for the model parameters")
    check.add_argument("--mass-tol", type=float, default=1e-10,
                       help="threshold on the recorded per-step mass balance")

    conv = sub.add_parser("convergence", help="dt-halving study with observed orders")
    conv.add_argument("--preset", choices=["logistic", "imex"], default="logistic")
    conv.add_argument("--digits", type=int, default=50,
                      help="working precision of the logistic preset")
    conv.add_argument("--n", type=int, default=20, help="grid size of the imex preset")
    conv.add_argument("--t-end", type=float, default=1.0, dest="t_end")
    return parser


def _run(args) -> int:
    file_layer = load_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in (
        "seed", "nx", "ny", "dt", "t_end", "output_dir", "taxis_variant", "eps1",
        "snapshot_interval", "diagnostics_interval", "output_format", "emit_heatmaps")}
    cfg = build_config(file_layer, flags)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))
    grid = build_grid(cfg.nx, cfg.ny)
    params = cfg.model_params()
    tcfg = cfg.time_config()
    initial = generate_initial_state(grid, seed=cfg.seed)

    snap_every = cfg.steps_per(cfg.snapshot_interval)
    diag_every = cfg.steps_per(cfg.diagnostics_interval)
    n_steps = tcfg.n_steps
    log.info("grid %dx%d, %d steps of dt=%g, kernels=%s", cfg.nx, cfg.ny, n_steps, cfg.dt,
             __import__("haptofv.kernels", fromlist=["BACKEND"]).BACKEND)

    with DiagnosticsWriter(out / "diagnostics.csv") as diag:
        def sink(step, time, state, record):
            final = step == n_steps
            if step % diag_every == 0 or final:
                diag.write(record)
            if step % snap_every == 0 or final:
                write_snapshot(state, grid, time, cfg, step)
                log.info("t=%g  mass_m=%.6g  newton=%d", time, record.mass_m, record.newton_iters)

        try:
            run_simulation(initial, grid, params, tcfg, sink,
                           record_every=math.gcd(snap_every, diag_every))
        except SimulationAborted as exc:
            write_snapshot(exc.state, grid, exc.time, cfg, exc.step)
            (out / "failure.txt").write_text(
                f"step={exc.step}\ntime={exc.time!r}\nreason={exc.cause}\n")
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


def _check(args) -> int:
    cfg = build_config(load_config_file(args.config) if args.config else {})
    params = cfg.model_params()
    snaps = discover_snapshots(args.directory)
    if not snaps:
        print(f"no csv_grid snapshots in {args.directory}", file=sys.stderr)
        return EXIT_CONFIG
    problems = 0
    p0_max = None
    print("step,time,mass_m,mass_p,mass_v,violations")
    for step in sorted(snaps):
        files = snaps[step]
        missing = {"m", "p", "v"} - files.keys()
        if missing:
            print(f"step {step}: missing fields {sorted(missing)}", file=sys.stderr)
            problems += 1
            continue
        fields = {}
        for name in ("m", "p", "v", "c"):
            if name in files:
                _, t, values = read_csv_grid(files[name])
                fields[name] = values
        state = State(fields["m"], fields["p"], fields["v"])
        if p0_max is None:
            p0_max = float(state.p.max())
        violations = check_bounds(state, p0_max, params)
        if "c" in fields and not np.array_equal(fields["c"], state.m + state.p):
            print(f"step {step}: c differs from m + p", file=sys.stderr)
            problems += 1
        for v in violations[:5]:
            print(f"step {step}: {v.field}[{v.cell}] = {v.value!r} out of bounds "
                  f"(C_p = {p_upper_bound(params, p0_max):g})", file=sys.stderr)
        problems += len(violations)
        area = 1.0 / state.m.size
        print(f"{step},{t!r},{area * state.m.sum():.10g},{area * state.p.sum():.10g},"
              f"{area * state.v.sum():.10g},{len(violations)}")
    diag_path = Path(args.directory) / "diagnostics.csv"
    if diag_path.exists():
        worst = max((r["mass_balance_residual"] for r in read_diagnostics(diag_path)), default=0.0)
        print(f"max recorded mass balance residual: {worst:.3e}")
        if worst > args.mass_tol:
            print(f"mass balance residual {worst:.3e} above {args.mass_tol:.1e}", file=sys.stderr)
            problems += 1
    return EXIT_OK if problems == 0 else EXIT_FAIL


def _convergence(args) -> int:
    if args.preset == "logistic":
        dts = [0.04, 0.02, 0.01, 0.005]
        errors = logistic_rk4_errors(dts, t_end=args.t_end, digits=args.digits)
        print(f"RK4 reaction integrator, logistic tissue ODE, t={args.t_end:g}, {args.digits} digits")
        print("dt,error,order")
        orders = [float("nan")] + observed_orders(errors)
        for dt, e, o in zip(dts, errors, orders):
            print(f"{dt:g},{e:.6e},{o:.4f}")
    else:
        grid, initial = default_problem(args.n)
        from .model import ModelParams
        dts = (0.04, 0.02, 0.01)
        diffs, ratios = imex_self_convergence(grid, initial, ModelParams(), dts, args.t_end)
        print(f"IMEX self-convergence, {args.n}x{args.n} grid, t={args.t_end:g}")
        print("pair,difference")
        for (a, b), d in zip(zip(dts[:-1], dts[1:]), diffs):
            print(f"{a:g}/{b:g},{d:.6e}")
        for r in ratios:
            print(f"ratio {r:.4f}  order {math.log2(r):.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "check":
            return _check(args)
        return _convergence(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
