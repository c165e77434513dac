"""The hybrid decomposition loop: compile the master to a QUBO, sample it,
pick the best candidate, solve the linear subproblem, then either add an
optimality/feasibility cut or stop.

Termination follows the classical scheme: with duals mu from a feasible
subproblem, the cut value (b - A x)'mu is compared against the decoded
surrogate phi; convergence is declared when the cut can no longer lower
it.  The best subproblem-feasible incumbent is tracked across iterations
so that budget- or iteration-limited runs still return a usable solution.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cuts import CutPool
from .errors import BudgetExceeded, DuplicateCut, RelaxationInfeasible, RelaxationUnbounded
from .milp import FEASIBLE, INFEASIBLE, OPTIMAL, UNBOUNDED, MilpSolution, OriginalProblem
from .qubo import (
    BoundSet,
    DecodedMaster,
    PenaltyWeights,
    QuboModel,
    build_qubo,
    compute_bounds,
    decode,
    fractional_bits,
    qubit_count,
    repair_bits,
)
from .samplers import AnnealSchedule, SampleSet, SamplerConfig, get_sampler
from . import simplex

DEFAULT_QUBIT_BUDGET = 24


def default_weights() -> PenaltyWeights:
    """Driver defaults: master rows keep the heavy weight (their residuals
    live on an integer grid and must dominate), while cut rows use a small
    weight so that the unavoidable fractional mismatch between real-valued
    duals and the binary encoding grid cannot outweigh objective
    differences between candidates.  A full grid step of cut violation
    still costs more than the objective can gain."""
    return PenaltyWeights(pi_obj=1.0, pi1=100.0, pi2=4.0, pi3=4.0)


@dataclass(frozen=True)
class SolverConfig:
    sampler: str = "exact"
    weights: PenaltyWeights = field(default_factory=default_weights)
    eps: float = 0.5
    shots: int = 500
    max_iterations: int = 50
    eps_conv: float = 1e-6
    max_qubits: int = DEFAULT_QUBIT_BUDGET
    seed: int = 0
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    emulator_opts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.eps_conv <= 0:
            raise ValueError("eps_conv must be > 0")


@dataclass(frozen=True)
class CandidateSelection:
    decoded: DecodedMaster
    feasible: bool       # sample satisfied master rows and cuts up to grid
    used_fallback: bool  # no sample was feasible; lowest-cost one returned


@dataclass
class IterationTrace:
    index: int
    qubits: int
    qubo_constant: float
    x: tuple
    phi: float
    master_slacks: tuple
    cut_slacks: tuple
    mp_objective: float
    qubo_cost: float
    candidate_feasible: bool
    used_fallback: bool
    sp_status: str
    sp_objective: float | None
    cut_added: str | None
    cut_constant: float | None
    cut_value: float | None
    converged: bool
    budget_stop: bool
    stalled: bool
    build_ms: float
    sample_ms: float
    sp_ms: float

    def to_jsonable(self) -> dict:
        out = dict(self.__dict__)
        out["x"] = list(self.x)
        out["master_slacks"] = list(self.master_slacks)
        out["cut_slacks"] = list(self.cut_slacks)
        return out


def polish_bits(model: QuboModel, bits: np.ndarray) -> np.ndarray:
    """Classical post-processing of one sample: repair the continuous
    registers, then steepest-descent over single x-bit flips with the
    registers re-repaired after each flip, until no flip lowers the cost.
    A sample that is already a repaired local minimum (in particular, the
    exact backend's output) passes through unchanged."""
    current = repair_bits(model, bits)
    cost = model.cost(current)
    for _ in range(4 * model.n + 4):
        best_bits, best_cost = None, cost - 1e-12
        for j in range(model.n):
            trial = current.copy()
            trial[j] = 1.0 - trial[j]
            trial = repair_bits(model, trial)
            c = model.cost(trial)
            if c < best_cost:
                best_bits, best_cost = trial, c
        if best_bits is None:
            break
        current, cost = best_bits, best_cost
    return current


def select_candidate(
    samples: SampleSet, model: QuboModel, op: OriginalProblem
) -> CandidateSelection:
    """Pick the sample to hand to the subproblem.

    Samples are first polished (continuous-register repair plus x-bit
    steepest descent).  Polished samples whose master rows hold exactly and
    whose cut inequalities hold up to the encoding grid then compete on
    the master objective c'x + phi; when none qualifies, the lowest-cost
    sample is returned and flagged, and the subproblem supplies the
    corrective cut.
    """
    phi_entry = model.entry("phi")
    phi_grid = 2.0 ** -phi_entry.encoding.D if phi_entry.encoding.width else 1.0
    seen: set[tuple[int, ...]] = set()
    decoded = []
    for e in samples.entries:
        bits = polish_bits(model, e.bits)
        key = tuple(int(b) for b in bits)
        if key in seen:
            continue
        seen.add(key)
        decoded.append(decode(model, bits))
    decoded.sort(key=lambda d: (d.qubo_cost, tuple(int(b) for b in d.bits)))

    def is_feasible(d: DecodedMaster) -> bool:
        for kind, coeffs, const in zip(model.eq_kinds, model.eq_coeffs, model.eq_consts):
            if kind == "master_slack":
                # encoded equality must hold exactly (integer grid)
                if abs(float(coeffs @ d.bits) + const) > 1e-9:
                    return False
            else:
                # cuts: check the inequality the slack mediates, allowing
                # the half-grid round-up of the phi encoding
                lhs = float(coeffs[: model.n] @ d.x) + const
                if kind == "opt_slack":
                    lhs += d.phi
                if lhs > 0.5 * phi_grid + 1e-9:
                    return False
        return True

    feasible = [d for d in decoded if is_feasible(d)]
    if feasible:
        best = max(feasible, key=lambda d: (d.mp_objective, tuple(-b for b in d.bits)))
        return CandidateSelection(decoded=best, feasible=True, used_fallback=False)
    return CandidateSelection(decoded=decoded[0], feasible=False, used_fallback=True)


def make_optimality_cut(pool: CutPool, mu: np.ndarray, op: OriginalProblem):
    """Store (mu, b'mu); raises DuplicateCut on an identical stored cut."""
    return pool.add_optimality(mu, op)


def make_feasibility_cut(pool: CutPool, ray: np.ndarray, op: OriginalProblem):
    """Store (r, b'r); raises DuplicateCut on an identical stored cut."""
    return pool.add_feasibility(ray, op)


def _iteration_seed(seed: int, iteration: int) -> int:
    return int(np.random.SeedSequence((seed, iteration)).generate_state(1)[0])


def solve_hybrid(
    op: OriginalProblem, cfg: SolverConfig, sampler=None
) -> tuple[MilpSolution, list[IterationTrace]]:
    """Run the decomposition loop and return the solution plus the full
    per-iteration trace.

    Status is Optimal on convergence, Feasible when the iteration or qubit
    budget ran out after at least one subproblem-feasible candidate,
    Infeasible when none was ever found, Unbounded when the subproblem (or
    the surrogate relaxation) is unbounded.
    """
    if sampler is None:
        extra = dict(cfg.emulator_opts) if cfg.sampler == "emulator" else {}
        sampler = get_sampler(cfg.sampler, **extra)
    budget = min(cfg.max_qubits, getattr(sampler, "limit", cfg.max_qubits))

    try:
        base_bounds = compute_bounds(op, None, cfg.eps)
    except RelaxationUnbounded:
        sol = MilpSolution(
            x=np.zeros(op.n), y=np.zeros(op.p), objective=np.inf, status=UNBOUNDED
        )
        return sol, []
    except RelaxationInfeasible:
        sol = MilpSolution(
            x=np.zeros(op.n), y=np.zeros(op.p), objective=-np.inf, status=INFEASIBLE
        )
        return sol, []

    D = fractional_bits(cfg.eps)
    eps_conv = max(cfg.eps_conv, 2.0**-D / 2.0)

    pool = CutPool()
    traces: list[IterationTrace] = []
    incumbent: tuple[float, np.ndarray, np.ndarray] | None = None

    def finish(status: str, x=None, y=None, objective=None) -> MilpSolution:
        if status in (OPTIMAL, FEASIBLE) and x is None:
            objective, x, y = incumbent
        return MilpSolution(
            x=x if x is not None else np.zeros(op.n),
            y=y if y is not None else np.zeros(op.p),
            objective=float(objective) if objective is not None else -np.inf,
            status=status,
        )

    for iteration in range(1, cfg.max_iterations + 1):
        t_build = time.perf_counter()
        bounds = compute_bounds(op, pool, cfg.eps)
        t = qubit_count(op, pool, bounds, cfg.eps)
        if t > budget:
            if incumbent is not None:
                traces.append(_budget_trace(iteration, t))
                return finish(FEASIBLE), traces
            raise BudgetExceeded(f"master needs {t} qubits, budget is {budget}")
        model = build_qubo(op, pool, cfg.weights, bounds, cfg.eps)
        build_ms = (time.perf_counter() - t_build) * 1e3

        t_sample = time.perf_counter()
        scfg = SamplerConfig(
            shots=cfg.shots,
            seed=_iteration_seed(cfg.seed, iteration),
            schedule=cfg.schedule,
        )
        samples = sampler.sample(model, scfg)
        sample_ms = (time.perf_counter() - t_sample) * 1e3

        selection = select_candidate(samples, model, op)
        cand = selection.decoded
        x_hat = cand.x

        t_sp = time.perf_counter()
        sp = simplex.solve_subproblem(op, x_hat)
        sp_ms = (time.perf_counter() - t_sp) * 1e3

        trace = IterationTrace(
            index=iteration,
            qubits=t,
            qubo_constant=model.constant,
            x=tuple(int(v) for v in x_hat),
            phi=cand.phi,
            master_slacks=tuple(cand.master_slacks),
            cut_slacks=tuple(cand.cut_slacks),
            mp_objective=cand.mp_objective,
            qubo_cost=cand.qubo_cost,
            candidate_feasible=selection.feasible,
            used_fallback=selection.used_fallback,
            sp_status=sp.status,
            sp_objective=sp.objective,
            cut_added=None,
            cut_constant=None,
            cut_value=None,
            converged=False,
            budget_stop=False,
            stalled=False,
            build_ms=build_ms,
            sample_ms=sample_ms,
            sp_ms=sp_ms,
        )
        traces.append(trace)

        if sp.status == UNBOUNDED:
            return finish(UNBOUNDED, x=x_hat, y=np.zeros(op.p), objective=np.inf), traces

        if sp.status == INFEASIBLE:
            try:
                cut = make_feasibility_cut(pool, sp.ray, op)
            except DuplicateCut:
                trace.stalled = True
                if incumbent is not None:
                    return finish(FEASIBLE), traces
                return finish(INFEASIBLE), traces
            trace.cut_added = "Feasibility"
            trace.cut_constant = cut.constant
            continue

        f_value = float(sp.objective)
        cut_value = float((op.b - op.A @ x_hat) @ sp.duals) if op.m1 else f_value
        trace.cut_value = cut_value
        master_ok = op.master_feasible(x_hat)
        if master_ok:
            total = float(op.c @ x_hat + f_value)
            if incumbent is None or total > incumbent[0] + 1e-12:
                incumbent = (total, x_hat.copy(), sp.y.copy())

        if cut_value < cand.phi - eps_conv:
            try:
                cut = make_optimality_cut(pool, sp.duals, op)
            except DuplicateCut:
                trace.stalled = True
                if incumbent is not None:
                    return finish(FEASIBLE), traces
                return finish(INFEASIBLE), traces
            trace.cut_added = "Optimality"
            trace.cut_constant = cut.constant
            continue

        trace.converged = True
        if master_ok:
            return finish(OPTIMAL, x=x_hat, y=sp.y, objective=op.c @ x_hat + f_value), traces
        if incumbent is not None:
            return finish(FEASIBLE), traces
        return finish(INFEASIBLE), traces

    if incumbent is not None:
        return finish(FEASIBLE), traces
    return finish(INFEASIBLE), traces


def _budget_trace(iteration: int, qubits: int) -> IterationTrace:
    return IterationTrace(
        index=iteration,
        qubits=qubits,
        qubo_constant=0.0,
        x=(),
        phi=0.0,
        master_slacks=(),
        cut_slacks=(),
        mp_objective=0.0,
        qubo_cost=0.0,
        candidate_feasible=False,
        used_fallback=False,
        sp_status="Skipped",
        sp_objective=None,
        cut_added=None,
        cut_constant=None,
        cut_value=None,
        converged=False,
        budget_stop=True,
        stalled=False,
        build_ms=0.0,
        sample_ms=0.0,
        sp_ms=0.0,
    )


def write_traces(traces: list[IterationTrace], path: str | Path) -> None:
    """One JSON object per line, one line per iteration."""
    with Path(path).open("w") as fh:
        for tr in traces:
            fh.write(json.dumps(tr.to_jsonable()) + "\n")
