"""Benchmark harness: run instance suites against one or more backends,
compare with the brute-force oracle, and emit deterministic CSV metrics.

Wall-clock times are written to a separate timings file so that the
records and aggregate CSVs are byte-identical across repeated runs with
the same seed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter

import numpy as np

from .driver import IterationTrace, SolverConfig, solve_hybrid
from .errors import BendersAtomsError
from .milp import FEASIBLE, OPTIMAL, MilpSolution, OriginalProblem, brute_force_solve

THREADS_ENV = "BENDERS_ATOMS_THREADS"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if not np.isfinite(value):
            return ""
        return f"{value:.9g}"
    return str(value)


@dataclass(frozen=True)
class BenchRecord:
    instance_id: str
    backend: str
    qubits: int          # t at the first iteration (the grouping bucket)
    max_qubits: int      # largest t reached during the run
    status: str
    objective: float | None
    optimal_objective: float | None
    gap: float | None
    iterations: int
    wall_ms: float
    seed: int

    FIELDS = (
        "instance_id",
        "backend",
        "qubits",
        "max_qubits",
        "status",
        "objective",
        "optimal_objective",
        "gap",
        "iterations",
        "seed",
    )

    def csv_row(self) -> str:
        return ",".join(_fmt(getattr(self, f)) for f in self.FIELDS)


@dataclass(frozen=True)
class Aggregate:
    backend: str
    qubits: int
    count: int
    feasible_pct: float
    mean_gap: float | None
    gap_ci95: float | None
    mean_iterations: float
    iter_ci95: float

    FIELDS = (
        "backend",
        "qubits",
        "count",
        "feasible_pct",
        "mean_gap",
        "gap_ci95",
        "mean_iterations",
        "iter_ci95",
    )

    def csv_row(self) -> str:
        return ",".join(_fmt(getattr(self, f)) for f in self.FIELDS)


def gap_value(objective: float | None, optimal: float | None) -> float | None:
    """(obj_algo - obj_opt) / obj_opt; None when either side is undefined
    or the optimum is zero."""
    if objective is None or optimal is None:
        return None
    if not (np.isfinite(objective) and np.isfinite(optimal)):
        return None
    if abs(optimal) <= 1e-12:
        return None
    return (objective - optimal) / optimal


def solve_instance(
    op: OriginalProblem,
    instance_id: str,
    backend: str,
    cfg: SolverConfig,
    oracle: MilpSolution | None = None,
) -> BenchRecord:
    """One instance on one backend; solver errors become an 'Error:' status
    so a suite run always completes."""
    if oracle is None:
        oracle = brute_force_solve(op)
    opt_obj = oracle.objective if oracle.status == OPTIMAL else None
    start = perf_counter()
    try:
        sol, traces = solve_hybrid(op, cfg)
        status = sol.status
        objective = sol.objective if status in (OPTIMAL, FEASIBLE) else None
    except BendersAtomsError as exc:
        sol, traces = None, []
        status = f"Error:{type(exc).__name__}"
        objective = None
    wall_ms = (perf_counter() - start) * 1e3
    qubits = traces[0].qubits if traces else 0
    max_qubits = max((tr.qubits for tr in traces), default=0)
    return BenchRecord(
        instance_id=instance_id,
        backend=backend,
        qubits=qubits,
        max_qubits=max_qubits,
        status=status,
        objective=objective,
        optimal_objective=opt_obj,
        gap=gap_value(objective, opt_obj),
        iterations=len(traces),
        wall_ms=wall_ms,
        seed=cfg.seed,
    )


def run_bench(
    instances: list[OriginalProblem],
    backends: list[str],
    base_cfg: SolverConfig,
    backend_cfgs: dict[str, SolverConfig] | None = None,
) -> list[BenchRecord]:
    """Cartesian product of instances x backends, oracle included; rows are
    returned in (instance, backend) order regardless of the worker count."""
    backend_cfgs = backend_cfgs or {}
    oracles = [brute_force_solve(op) for op in instances]
    tasks = []
    for i, op in enumerate(instances):
        for backend in backends:
            cfg = backend_cfgs.get(backend) or _with_sampler(base_cfg, backend)
            tasks.append((i, op, f"inst{i:04d}", backend, cfg))

    workers = max(1, int(os.environ.get(THREADS_ENV, "1")))
    if workers == 1:
        results = [
            solve_instance(op, iid, backend, cfg, oracles[i])
            for i, op, iid, backend, cfg in tasks
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(solve_instance, op, iid, backend, cfg, oracles[i])
                for i, op, iid, backend, cfg in tasks
            ]
            results = [f.result() for f in futures]
    return results


def _with_sampler(cfg: SolverConfig, backend: str) -> SolverConfig:
    from dataclasses import replace

    return replace(cfg, sampler=backend)


def aggregate(records: list[BenchRecord]) -> list[Aggregate]:
    """Group per backend and first-iteration qubit count."""
    groups: dict[tuple[str, int], list[BenchRecord]] = {}
    for rec in records:
        groups.setdefault((rec.backend, rec.qubits), []).append(rec)
    out = []
    for (backend, qubits) in sorted(groups):
        recs = groups[(backend, qubits)]
        feasible = [r for r in recs if r.status in (OPTIMAL, FEASIBLE)]
        gaps = [r.gap for r in recs if r.gap is not None]
        iters = [r.iterations for r in recs]
        out.append(
            Aggregate(
                backend=backend,
                qubits=qubits,
                count=len(recs),
                feasible_pct=100.0 * len(feasible) / len(recs),
                mean_gap=float(np.mean(gaps)) if gaps else None,
                gap_ci95=_ci95(gaps),
                mean_iterations=float(np.mean(iters)),
                iter_ci95=_ci95(iters) or 0.0,
            )
        )
    return out


def _ci95(values) -> float | None:
    if not values:
        return None
    if len(values) < 2:
        return 0.0
    return float(1.96 * np.std(values, ddof=1) / np.sqrt(len(values)))


def write_csv(path: str | Path, header: tuple[str, ...], rows: list[str]) -> None:
    Path(path).write_text(",".join(header) + "\n" + "".join(r + "\n" for r in rows))


def write_bench_outputs(records: list[BenchRecord], out_dir: str | Path) -> None:
    """records.csv and aggregates.csv are deterministic; timings.csv holds
    the wall-clock column and is excluded from that guarantee."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "records.csv", BenchRecord.FIELDS, [r.csv_row() for r in records])
    write_csv(
        out / "aggregates.csv",
        Aggregate.FIELDS,
        [a.csv_row() for a in aggregate(records)],
    )
    timing_rows = [
        f"{r.instance_id},{r.backend},{r.wall_ms:.3f}" for r in records
    ]
    write_csv(out / "timings.csv", ("instance_id", "backend", "wall_ms"), timing_rows)
