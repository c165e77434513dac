"""MILP data model, instance file I/O, random instance generation and a
brute-force reference oracle.

The canonical problem shape is

    max  c'x + h'y
    s.t. A x + G y <= b        (m1 linking rows)
         B x       <= b'       (m2 master-only rows)
         x in {0,1}^n,  y >= 0

Objective sense is fixed to maximization; minimization inputs must be
negated by the caller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, ParseError, SizeError

# Solution status labels (also used verbatim by the CLI).
OPTIMAL = "Optimal"
FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"

FEASIBILITY_TOL = 1e-7

INSTANCE_SUFFIX = ".milp.json"

_INSTANCE_KEYS = ("n", "p", "m1", "m2", "A", "G", "b", "B", "b_prime", "c", "h")


def _as_matrix(data, rows: int, cols: int, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        arr = arr.reshape(rows if rows else 0, cols)
    if arr.ndim != 2 or arr.shape != (rows, cols):
        raise DimensionError(f"{name}: expected shape {(rows, cols)}, got {arr.shape}")
    return arr


def _as_vector(data, length: int, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float).reshape(-1)
    if arr.shape != (length,):
        raise DimensionError(f"{name}: expected length {length}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class OriginalProblem:
    """Immutable MILP instance; the single source of truth for decomposition."""

    n: int
    p: int
    m1: int
    m2: int
    A: np.ndarray
    G: np.ndarray
    b: np.ndarray
    B: np.ndarray
    b_prime: np.ndarray
    c: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if min(self.n, self.p) < 1 or min(self.m1, self.m2) < 0:
            raise DimensionError("n, p must be >= 1 and m1, m2 >= 0")
        object.__setattr__(self, "A", _as_matrix(self.A, self.m1, self.n, "A"))
        object.__setattr__(self, "G", _as_matrix(self.G, self.m1, self.p, "G"))
        object.__setattr__(self, "b", _as_vector(self.b, self.m1, "b"))
        object.__setattr__(self, "B", _as_matrix(self.B, self.m2, self.n, "B"))
        object.__setattr__(self, "b_prime", _as_vector(self.b_prime, self.m2, "b_prime"))
        object.__setattr__(self, "c", _as_vector(self.c, self.n, "c"))
        object.__setattr__(self, "h", _as_vector(self.h, self.p, "h"))
        for name in ("A", "G", "b", "B", "b_prime", "c", "h"):
            getattr(self, name).setflags(write=False)

    def master_feasible(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        """True when B x <= b' + tol componentwise."""
        if self.m2 == 0:
            return True
        return bool(np.all(self.B @ x <= self.b_prime + tol))

    def objective_value(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.c @ x + self.h @ y)


@dataclass(frozen=True)
class MilpSolution:
    """Solver output for an :class:`OriginalProblem`."""

    x: np.ndarray
    y: np.ndarray
    objective: float
    status: str

    def is_feasible_for(self, op: OriginalProblem, tol: float = FEASIBILITY_TOL) -> bool:
        if self.status not in (OPTIMAL, FEASIBLE):
            return False
        if self.m_residual(op) > tol:
            return False
        if op.m1 and np.max(op.A @ self.x + op.G @ self.y - op.b) > tol:
            return False
        return bool(np.all(self.y >= -tol))

    def m_residual(self, op: OriginalProblem) -> float:
        if op.m2 == 0:
            return 0.0
        return float(np.max(op.B @ self.x - op.b_prime, initial=0.0))


@dataclass(frozen=True)
class GeneratorConfig:
    """Random-instance generator settings.

    Defaults match the benchmark regime: 2-5 binaries, 2-10 continuous
    variables, 5-14 linking rows and a single all-ones master row.
    """

    n_range: tuple[int, int] = (2, 5)
    p_range: tuple[int, int] = (2, 10)
    m1_range: tuple[int, int] = (5, 14)
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        for name in ("n_range", "p_range", "m1_range"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < (2 if name == "n_range" else 1):
                raise ValueError(f"{name} empty or below minimum: {(lo, hi)}")
        if self.count < 0:
            raise ValueError("count must be >= 0")


def load_instance(path: str | Path) -> OriginalProblem:
    """Read and validate a ``*.milp.json`` instance file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read instance {path}: {exc}") from exc
    missing = [k for k in _INSTANCE_KEYS if k not in raw]
    if missing:
        raise ParseError(f"{path}: missing keys {missing}")
    try:
        return OriginalProblem(
            n=int(raw["n"]),
            p=int(raw["p"]),
            m1=int(raw["m1"]),
            m2=int(raw["m2"]),
            A=raw["A"],
            G=raw["G"],
            b=raw["b"],
            B=raw["B"],
            b_prime=raw["b_prime"],
            c=raw["c"],
            h=raw["h"],
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed field: {exc}") from exc


def save_instance(op: OriginalProblem, path: str | Path) -> None:
    """Write an instance as JSON; floats use shortest lossless repr."""
    payload = {
        "n": op.n,
        "p": op.p,
        "m1": op.m1,
        "m2": op.m2,
        "A": op.A.tolist(),
        "G": op.G.tolist(),
        "b": op.b.tolist(),
        "B": op.B.tolist(),
        "b_prime": op.b_prime.tolist(),
        "c": op.c.tolist(),
        "h": op.h.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def generate_instances(cfg: GeneratorConfig) -> list[OriginalProblem]:
    """Draw random instances: A non-positive, G and b non-negative, B a
    single all-ones row, b' a random positive integer strictly below n,
    c and h non-negative. Deterministic for a fixed seed."""
    rng = np.random.default_rng(cfg.seed)
    out = []
    for _ in range(cfg.count):
        n = int(rng.integers(cfg.n_range[0], cfg.n_range[1] + 1))
        p = int(rng.integers(cfg.p_range[0], cfg.p_range[1] + 1))
        m1 = int(rng.integers(cfg.m1_range[0], cfg.m1_range[1] + 1))
        A = -np.round(rng.uniform(0.0, 5.0, size=(m1, n)), 1)
        G = np.round(rng.uniform(0.0, 5.0, size=(m1, p)), 1)
        b = np.round(rng.uniform(1.0, 10.0, size=m1), 1)
        B = np.ones((1, n))
        b_prime = np.array([float(rng.integers(1, n))])
        c = np.round(rng.uniform(0.0, 10.0, size=n), 1)
        h = np.round(rng.uniform(1.0, 10.0, size=p), 1)
        out.append(
            OriginalProblem(n=n, p=p, m1=m1, m2=1, A=A, G=G, b=b, B=B, b_prime=b_prime, c=c, h=h)
        )
    return out


def brute_force_solve(
    op: OriginalProblem,
    subproblem_solver: Callable | None = None,
) -> MilpSolution:
    """Reference oracle: enumerate every x in {0,1}^n satisfying B x <= b',
    solve the LP in y for each, and keep the best total objective.

    Exact for n <= 20; raises :class:`SizeError` above that.
    """
    from . import simplex  # late import keeps this module free of solver deps

    if op.n > 20:
        raise SizeError(f"brute force limited to n <= 20, got n = {op.n}")
    solver = subproblem_solver or simplex.solve_subproblem

    best_obj = -np.inf
    best: tuple[np.ndarray, np.ndarray] | None = None
    any_master_feasible = False
    for bits in range(1 << op.n):
        x = np.array([(bits >> i) & 1 for i in range(op.n)], dtype=float)
        if not op.master_feasible(x):
            continue
        any_master_feasible = True
        outcome = solver(op, x)
        if outcome.status == UNBOUNDED:
            return MilpSolution(x=x, y=np.zeros(op.p), objective=np.inf, status=UNBOUNDED)
        if outcome.status != OPTIMAL:
            continue
        total = float(op.c @ x + outcome.objective)
        if total > best_obj + 1e-12:
            best_obj = total
            best = (x, outcome.y)
    if best is None:
        status = INFEASIBLE
        return MilpSolution(x=np.zeros(op.n), y=np.zeros(op.p), objective=-np.inf, status=status)
    return MilpSolution(x=best[0], y=best[1], objective=best_obj, status=OPTIMAL)
