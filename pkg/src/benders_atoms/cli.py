"""Command-line front end.

Subcommands: solve, generate, bench, embed, trace-dump.  Exit codes for
solve: 0 Optimal/Feasible, 2 Infeasible, 3 Unbounded, 1 any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from time import perf_counter

import numpy as np

from . import bench as bench_mod
from .driver import SolverConfig, solve_hybrid, write_traces
from .emulator import DeviceSpec, embed
from .errors import BendersAtomsError
from .milp import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    GeneratorConfig,
    generate_instances,
    load_instance,
    save_instance,
)
from .qubo import PenaltyWeights, load_qubo_matrix
from .samplers import AnnealSchedule

_STATUS_EXIT = {OPTIMAL: 0, FEASIBLE: 0, INFEASIBLE: 2, UNBOUNDED: 3}


def _fmt_float(x: float) -> str:
    return repr(round(float(x), 9))


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sampler", choices=["exact", "anneal", "emulator"], default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=500)
    p.add_argument("--epsilon", type=float, default=0.5, help="encoding precision in (0,1]")
    p.add_argument("--pi1", type=float, default=100.0)
    p.add_argument("--pi2", type=float, default=4.0)
    p.add_argument("--pi3", type=float, default=4.0)
    p.add_argument("--pi-obj", type=float, default=1.0)
    p.add_argument("--max-qubits", type=int, default=24)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--sa-sweeps", type=int, default=None,
                   help="annealing sweeps per chain (default 200*t)")
    p.add_argument("--pulse-iters", type=int, default=20,
                   help="emulator pulse-shaping evaluations per iteration")
    p.add_argument("--out-dir", type=Path, default=None)


def _solver_config(args, seed=None) -> SolverConfig:
    return SolverConfig(
        sampler=args.sampler,
        weights=PenaltyWeights(
            pi_obj=args.pi_obj, pi1=args.pi1, pi2=args.pi2, pi3=args.pi3
        ),
        eps=args.epsilon,
        shots=args.shots,
        max_iterations=args.max_iters,
        max_qubits=args.max_qubits,
        seed=args.seed if seed is None else seed,
        schedule=AnnealSchedule(sweeps=args.sa_sweeps),
        emulator_opts={"p": args.pulse_iters},
    )


def cmd_solve(args) -> int:
    op = load_instance(args.instance)
    cfg = _solver_config(args)
    start = perf_counter()
    solution, traces = solve_hybrid(op, cfg)
    wall_ms = (perf_counter() - start) * 1e3
    print(
        f"status={solution.status}"
        f" objective={_fmt_float(solution.objective) if np.isfinite(solution.objective) else 'nan'}"
        f" iterations={len(traces)}"
    )
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        stem = Path(args.instance).name.replace(".milp.json", "")
        write_traces(traces, args.out_dir / f"{stem}.trace.jsonl")
        qubits = traces[0].qubits if traces else 0
        summary = (
            "instance,status,objective,iterations,qubits,wall_ms\n"
            f"{stem},{solution.status},"
            f"{bench_mod._fmt(solution.objective if np.isfinite(solution.objective) else None)},"
            f"{len(traces)},{qubits},{wall_ms:.3f}\n"
        )
        (args.out_dir / f"{stem}.summary.csv").write_text(summary)
    return _STATUS_EXIT.get(solution.status, 1)


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(
        n_range=tuple(args.n_range),
        p_range=tuple(args.p_range),
        m1_range=tuple(args.m1_range),
        seed=args.seed,
        count=args.count,
    )
    out = args.out_dir or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    for i, op in enumerate(generate_instances(cfg)):
        save_instance(op, out / f"instance_{i:04d}.milp.json")
    print(f"wrote {args.count} instances to {out}")
    return 0


def cmd_bench(args) -> int:
    if args.instances_dir is not None:
        paths = sorted(Path(args.instances_dir).glob("*.milp.json"))
        instances = [load_instance(p) for p in paths]
    else:
        gen = GeneratorConfig(
            n_range=tuple(args.n_range),
            p_range=tuple(args.p_range),
            m1_range=tuple(args.m1_range),
            seed=args.seed,
            count=args.count,
        )
        instances = generate_instances(gen)
    backends = [b.strip() for b in args.backends.split(",") if b.strip()]
    cfg = _solver_config(args)
    records = bench_mod.run_bench(instances, backends, cfg)
    out = args.out_dir or Path("bench-out")
    bench_mod.write_bench_outputs(records, out)
    print(f"wrote {len(records)} records to {out}")
    return 0


def cmd_embed(args) -> int:
    Q, _constant = load_qubo_matrix(args.qubo)
    device = DeviceSpec(max_atoms=args.max_atoms)
    if Q.shape[0] > device.max_atoms:
        raise BendersAtomsError(
            f"QUBO has {Q.shape[0]} variables, atom limit is {device.max_atoms}"
        )
    register, deviation = embed(Q, device, seed=args.seed)
    out = args.out or Path(str(args.qubo) + ".register.json")
    Path(out).write_text(json.dumps(register.to_jsonable()))
    print(f"deviation={_fmt_float(deviation)}")
    print(f"register written to {out}")
    return 0


def cmd_trace_dump(args) -> int:
    for line in Path(args.trace).read_text().splitlines():
        tr = json.loads(line)
        print(
            f"it={tr['index']} t={tr['qubits']} x={tuple(tr['x'])} phi={tr['phi']}"
            f" sp={tr['sp_status']}:{tr['sp_objective']}"
            f" cut={tr['cut_added']} converged={tr['converged']}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="benders-atoms",
        description="Hybrid Benders decomposition MILP solver with QUBO master problems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("instance", type=Path)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write random instance files")
    g.add_argument("--count", type=int, default=60)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-range", type=int, nargs=2, default=[2, 5])
    g.add_argument("--p-range", type=int, nargs=2, default=[2, 10])
    g.add_argument("--m1-range", type=int, nargs=2, default=[5, 14])
    g.add_argument("--out-dir", type=Path, default=None)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run a backend comparison suite")
    b.add_argument("--instances-dir", type=Path, default=None)
    b.add_argument("--count", type=int, default=60)
    b.add_argument("--n-range", type=int, nargs=2, default=[2, 5])
    b.add_argument("--p-range", type=int, nargs=2, default=[2, 10])
    b.add_argument("--m1-range", type=int, nargs=2, default=[5, 14])
    b.add_argument("--backends", default="exact,anneal")
    _add_solver_flags(b)
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("embed", help="embed a QUBO interchange file into a register")
    e.add_argument("qubo", type=Path)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--max-atoms", type=int, default=12)
    e.add_argument("--out", type=Path, default=None)
    e.set_defaults(func=cmd_embed)

    t = sub.add_parser("trace-dump", help="pretty-print a trace JSONL file")
    t.add_argument("trace", type=Path)
    t.set_defaults(func=cmd_trace_dump)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BendersAtomsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
