"""Dense two-phase primal simplex with dual values and certificates.

Solves LPs of the form

    max/min  c'x
    s.t.     A x {<=,>=,=} b   (row senses per row)
             l <= x <= u       (entries may be -inf / +inf)

and returns optimal primal/dual values, a Farkas-type row certificate on
infeasible problems, or an unbounded recession direction.

Internally every problem is rewritten over nonnegative variables (finite
lower bounds shifted away, remaining upper bounds appended as explicit
rows, free variables split) and solved as a maximization on a dense
tableau.  The pivot rule is Dantzig's with lowest-index tie breaks;
Bland's rule takes over after a run of degenerate pivots, which keeps the
method finite.  Identical inputs follow identical pivot sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, RelaxationInfeasible, RelaxationUnbounded
from .milp import INFEASIBLE, OPTIMAL, UNBOUNDED, OriginalProblem

MAX = "max"
MIN = "min"
LE = "LE"
GE = "GE"
EQ = "EQ"

FEAS_TOL = 1e-7      # primal feasibility
COST_TOL = 1e-9      # reduced-cost optimality
PIVOT_TOL = 1e-10    # zero-pivot threshold


@dataclass(frozen=True)
class LinearProgram:
    sense: str
    objective: np.ndarray
    A: np.ndarray
    rhs: np.ndarray
    senses: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        ncols = c.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(-1, ncols)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if self.sense not in (MAX, MIN):
            raise ValueError(f"sense must be '{MAX}' or '{MIN}'")
        if A.shape != (rhs.shape[0], ncols):
            raise ValueError(f"A shape {A.shape} inconsistent with objective/rhs")
        if len(self.senses) != rhs.shape[0]:
            raise ValueError("row senses length mismatch")
        if lower.shape != (ncols,) or upper.shape != (ncols,):
            raise ValueError("bound vector length mismatch")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def nrows(self) -> int:
        return self.A.shape[0]

    @property
    def ncols(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class LpResult:
    """Outcome of a simplex solve.

    primal / duals / objective are set on Optimal results.  ray carries the
    Farkas row certificate (Infeasible) or the improving recession direction
    on columns (Unbounded).  dual_objective is reconstructed independently
    from the reported duals and bound multipliers so that strong duality can
    be checked against objective.
    """

    status: str
    primal: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    ray: np.ndarray | None = None
    dual_objective: float | None = None
    pivots: int = 0


def farkas_certificate_value(lp: LinearProgram, ray: np.ndarray) -> float:
    """Strength of an infeasibility certificate; positive proves the system
    plus box empty.

    The ray must carry nonnegative weights on <= rows and nonpositive on
    >= rows; the aggregated row then satisfies (ray'A) x <= ray'b on every
    feasible x, so min over the box of (ray'A) x exceeding ray'b is a
    contradiction.  Returns -inf for rays with invalid signs or an
    unbounded box minimum.
    """
    ray = np.asarray(ray, dtype=float).reshape(-1)
    for i, sense in enumerate(lp.senses):
        if sense == LE and ray[i] < -1e-9:
            return -np.inf
        if sense == GE and ray[i] > 1e-9:
            return -np.inf
    coef = ray @ lp.A
    scale = max(1.0, float(np.max(np.abs(lp.A))) if lp.A.size else 1.0)
    coef = np.where(np.abs(coef) <= 1e-9 * scale, 0.0, coef)
    value = 0.0
    for j in range(lp.ncols):
        if coef[j] > 0:
            value += coef[j] * lp.lower[j]
        elif coef[j] < 0:
            value += coef[j] * lp.upper[j]
    if not np.isfinite(value):
        return -np.inf
    return value - float(ray @ lp.rhs)


def dual_objective_value(lp: LinearProgram, duals: np.ndarray) -> float:
    """Dual objective reconstructed from row duals: b'y plus the bound
    multipliers implied by the reduced costs c - A'y."""
    duals = np.asarray(duals, dtype=float).reshape(-1)
    rho = lp.objective - (duals @ lp.A if lp.nrows else np.zeros(lp.ncols))
    rho = np.where(np.abs(rho) <= 1e-9, 0.0, rho)
    value = float(duals @ lp.rhs) if lp.nrows else 0.0
    for j in range(lp.ncols):
        if lp.sense == MAX:
            bound = lp.upper[j] if rho[j] > 0 else lp.lower[j]
        else:
            bound = lp.lower[j] if rho[j] > 0 else lp.upper[j]
        if rho[j] != 0.0:
            value += rho[j] * bound
    return value


class _StandardForm:
    """Rewrites an LP over nonnegative variables and maps results back."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n = lp.ncols
        self.offset = np.zeros(n)
        # x_j = offset_j + sum(coef * s_col) over (col, coef) pairs
        self.var_cols: list[list[tuple[int, float]]] = []
        col_signs: list[float] = []
        col_user: list[int] = []
        upper_rows: list[tuple[int, float]] = []
        k = 0
        for j in range(n):
            lo, up = lp.lower[j], lp.upper[j]
            if np.isfinite(lo):
                self.offset[j] = lo
                self.var_cols.append([(k, 1.0)])
                col_signs.append(1.0)
                col_user.append(j)
                if np.isfinite(up):
                    upper_rows.append((k, up - lo))
                k += 1
            elif np.isfinite(up):
                self.offset[j] = up
                self.var_cols.append([(k, -1.0)])
                col_signs.append(-1.0)
                col_user.append(j)
                k += 1
            else:
                self.var_cols.append([(k, 1.0), (k + 1, -1.0)])
                col_signs.extend([1.0, -1.0])
                col_user.extend([j, j])
                k += 2
        self.ns = k

        m_user = lp.nrows
        m = m_user + len(upper_rows)
        A = np.zeros((m, self.ns))
        b = np.zeros(m)
        senses = list(lp.senses)
        if m_user:
            for col, (sign, j) in enumerate(zip(col_signs, col_user)):
                A[:m_user, col] = sign * lp.A[:, j]
            b[:m_user] = lp.rhs - lp.A @ self.offset
        for i, (col, ub) in enumerate(upper_rows):
            A[m_user + i, col] = 1.0
            b[m_user + i] = ub
            senses.append(LE)
        self.m_user = m_user
        self.A = A
        self.b = b
        self.senses = senses

        self.sigma = 1.0 if lp.sense == MAX else -1.0
        c = np.zeros(self.ns)
        for col, (sign, j) in enumerate(zip(col_signs, col_user)):
            c[col] = sign * lp.objective[j]
        self.const = float(lp.objective @ self.offset)
        self.c = self.sigma * c  # internal problem is always a maximization

    def x_from_s(self, s: np.ndarray) -> np.ndarray:
        x = self.offset.copy()
        for j, parts in enumerate(self.var_cols):
            for col, coef in parts:
                x[j] += coef * s[col]
        return x

    def ray_from_s(self, d_s: np.ndarray) -> np.ndarray:
        d = np.zeros(self.lp.ncols)
        for j, parts in enumerate(self.var_cols):
            for col, coef in parts:
                d[j] += coef * d_s[col]
        return d

    def user_objective(self, internal: float) -> float:
        return self.sigma * internal + self.const


class _Tableau:
    """Dense simplex tableau carrying both phase cost rows."""

    def __init__(self, sf: _StandardForm):
        A, b, senses = sf.A.copy(), sf.b.copy(), list(sf.senses)
        m, ns = A.shape
        self.row_flip = np.ones(m)
        for i in range(m):
            if b[i] < 0.0:
                A[i, :] *= -1.0
                b[i] *= -1.0
                self.row_flip[i] = -1.0
                senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]

        n_slack = sum(1 for s in senses if s == LE)
        n_surp = sum(1 for s in senses if s == GE)
        n_art = sum(1 for s in senses if s in (GE, EQ))
        total = ns + n_slack + n_surp + n_art
        M = np.zeros((m, total))
        M[:, :ns] = A
        self.basis = [0] * m
        si, ui, ai = ns, ns + n_slack, ns + n_slack + n_surp
        self.art_start = ns + n_slack + n_surp
        for i in range(m):
            if senses[i] == LE:
                M[i, si] = 1.0
                self.basis[i] = si
                si += 1
            elif senses[i] == GE:
                M[i, ui] = -1.0
                M[i, ai] = 1.0
                self.basis[i] = ai
                ui += 1
                ai += 1
            else:
                M[i, ai] = 1.0
                self.basis[i] = ai
                ai += 1
        self.M0 = M.copy()
        self.T = np.hstack([M, b.reshape(-1, 1)])
        self.m, self.ns, self.total = m, ns, total

        c1 = np.zeros(total)
        c1[self.art_start:] = -1.0
        self.c1 = c1
        self.z1 = self._reduced_row(c1)
        self.c2 = np.zeros(total)
        self.c2[:ns] = sf.c
        self.z2 = self._reduced_row(self.c2)
        self.pivots = 0
        self.degenerate_run = 0
        self.bland = False
        self._ray_col = -1

    def _reduced_row(self, c: np.ndarray) -> np.ndarray:
        z = np.zeros(self.total + 1)
        z[:-1] = -c
        for i, bj in enumerate(self.basis):
            if c[bj] != 0.0:
                z += c[bj] * self.T[i, :]
        return z

    def _entering(self, z: np.ndarray, allow: np.ndarray) -> int:
        red = np.where(allow, -z[:-1], -np.inf)
        if self.bland:
            idx = np.nonzero(red > COST_TOL)[0]
            return int(idx[0]) if idx.size else -1
        j = int(np.argmax(red))
        return j if red[j] > COST_TOL else -1

    def _leaving(self, col: int) -> int:
        a = self.T[:, col]
        rows = np.nonzero(a > PIVOT_TOL)[0]
        if rows.size == 0:
            return -1
        ratios = self.T[rows, -1] / a[rows]
        best = float(np.min(ratios))
        tied = rows[ratios <= best + 1e-12]
        if self.bland:
            return int(min(tied, key=lambda i: self.basis[i]))
        return int(tied[0])

    def _pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row, :] /= T[row, col]
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T -= np.outer(colvals, T[row, :])
        for z in (self.z1, self.z2):
            if z[col] != 0.0:
                z -= z[col] * T[row, :]
        self.basis[row] = col
        self.pivots += 1

    def run(self, phase: int, allow: np.ndarray) -> str:
        z = self.z1 if phase == 1 else self.z2
        limit = 10000 + 200 * (self.m + self.total)
        bland_after = 5 * (self.m + self.total)
        while True:
            if self.pivots > limit:
                raise NumericalError(f"simplex exceeded {limit} pivots")
            col = self._entering(z, allow)
            if col < 0:
                return "optimal"
            row = self._leaving(col)
            if row < 0:
                self._ray_col = col
                return "unbounded"
            before = z[-1]
            self._pivot(row, col)
            if abs(z[-1] - before) <= 1e-12:
                self.degenerate_run += 1
                if self.degenerate_run >= bland_after:
                    self.bland = True
            else:
                self.degenerate_run = 0

    def basic_solution(self) -> np.ndarray:
        s = np.zeros(self.total)
        for i, bj in enumerate(self.basis):
            s[bj] = self.T[i, -1]
        return s

    def row_duals(self, costs: np.ndarray) -> np.ndarray:
        B = self.M0[:, self.basis]
        try:
            y = np.linalg.solve(B.T, costs[self.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis while extracting duals") from exc
        return y * self.row_flip  # multipliers for the pre-flip row orientation

    def drive_out_artificials(self) -> None:
        for i in range(self.m):
            if self.basis[i] >= self.art_start:
                row = self.T[i, : self.art_start]
                cand = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
                if cand.size:
                    self._pivot(i, int(cand[0]))


def solve(lp: LinearProgram) -> LpResult:
    """Two-phase simplex solve; deterministic for identical inputs."""
    sf = _StandardForm(lp)
    if sf.A.shape[0] == 0:
        return _solve_unconstrained(lp, sf)
    tab = _Tableau(sf)

    allow_all = np.ones(tab.total, dtype=bool)
    if tab.run(1, allow_all) != "optimal":
        raise NumericalError("phase 1 reported unbounded")
    if tab.z1[-1] < -1e-9:  # residual artificial mass: infeasible
        y1 = tab.row_duals(tab.c1)
        ray = _normalize_ray(y1[: sf.m_user])
        return LpResult(status=INFEASIBLE, ray=ray, pivots=tab.pivots)

    tab.drive_out_artificials()
    allow = np.ones(tab.total, dtype=bool)
    allow[tab.art_start:] = False
    status = tab.run(2, allow)

    if status == "unbounded":
        d_s = np.zeros(tab.total)
        d_s[tab._ray_col] = 1.0
        for i, bj in enumerate(tab.basis):
            d_s[bj] = -tab.T[i, tab._ray_col]
        d_x = sf.ray_from_s(d_s[: sf.ns])
        return LpResult(status=UNBOUNDED, ray=_normalize_ray(d_x), pivots=tab.pivots)

    s = tab.basic_solution()
    x = sf.x_from_s(s[: sf.ns])
    obj = sf.user_objective(float(sf.c @ s[: sf.ns]))
    y = tab.row_duals(tab.c2)
    duals = sf.sigma * y[: sf.m_user]
    duals = np.where(np.abs(duals) <= 1e-9, 0.0, duals)
    return LpResult(
        status=OPTIMAL,
        primal=x,
        duals=duals,
        objective=obj,
        dual_objective=dual_objective_value(lp, duals),
        pivots=tab.pivots,
    )


def _normalize_ray(ray: np.ndarray) -> np.ndarray:
    ray = np.where(np.abs(ray) <= 1e-12, 0.0, ray)
    scale = np.max(np.abs(ray)) if ray.size else 0.0
    return ray / scale if scale > 0 else ray


def _solve_unconstrained(lp: LinearProgram, sf: _StandardForm) -> LpResult:
    # no rows: the optimum sits at the bound corner, or the LP is unbounded
    improving = np.nonzero(sf.c > COST_TOL)[0]
    if improving.size:
        d_s = np.zeros(sf.ns)
        d_s[improving[0]] = 1.0
        return LpResult(status=UNBOUNDED, ray=sf.ray_from_s(d_s))
    x = sf.x_from_s(np.zeros(sf.ns))
    obj = sf.user_objective(0.0)
    return LpResult(
        status=OPTIMAL,
        primal=x,
        duals=np.zeros(0),
        objective=obj,
        dual_objective=dual_objective_value(lp, np.zeros(0)),
    )


@dataclass(frozen=True)
class SubproblemOutcome:
    """Result of the linear subproblem at a fixed binary assignment."""

    status: str
    objective: float | None = None
    y: np.ndarray | None = None
    duals: np.ndarray | None = None
    ray: np.ndarray | None = None


def solve_subproblem(op: OriginalProblem, x_hat: np.ndarray) -> SubproblemOutcome:
    """Solve max h'y s.t. G y <= b - A x_hat, y >= 0.

    Feasible: returns y*, the objective, and nonnegative duals on the
    linking rows (an extreme point of the dual).  Infeasible: returns a
    nonnegative row ray r with r'(b - A x_hat) < 0.  Unbounded: status only.
    """
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    if x_hat.shape != (op.n,):
        raise ValueError(f"x_hat must have length {op.n}")
    rhs = op.b - op.A @ x_hat
    lp = LinearProgram(
        sense=MAX,
        objective=op.h,
        A=op.G,
        rhs=rhs,
        senses=(LE,) * op.m1,
        lower=np.zeros(op.p),
        upper=np.full(op.p, np.inf),
    )
    res = solve(lp)
    if res.status == OPTIMAL:
        return SubproblemOutcome(
            status=OPTIMAL,
            objective=res.objective,
            y=res.primal,
            duals=np.maximum(res.duals, 0.0),
        )
    if res.status == INFEASIBLE:
        ray = np.where(np.abs(res.ray) <= 1e-9, 0.0, res.ray)
        return SubproblemOutcome(status=INFEASIBLE, ray=ray)
    return SubproblemOutcome(status=UNBOUNDED)


def _relaxation_lp(
    op: OriginalProblem, objective: np.ndarray, *, with_master_rows: bool = True
) -> LinearProgram:
    ncols = op.n + op.p
    rows, rhs = [], []
    if op.m1:
        rows.append(np.hstack([op.A, op.G]))
        rhs.append(op.b)
    if with_master_rows and op.m2:
        rows.append(np.hstack([op.B, np.zeros((op.m2, op.p))]))
        rhs.append(op.b_prime)
    A = np.vstack(rows) if rows else np.zeros((0, ncols))
    r = np.concatenate(rhs) if rhs else np.zeros(0)
    return LinearProgram(
        sense=MAX,
        objective=objective,
        A=A,
        rhs=r,
        senses=(LE,) * A.shape[0],
        lower=np.zeros(ncols),
        upper=np.concatenate([np.ones(op.n), np.full(op.p, np.inf)]),
    )


def _solve_relaxation(lp: LinearProgram) -> float:
    res = solve(lp)
    if res.status == INFEASIBLE:
        raise RelaxationInfeasible("bound relaxation has no feasible point")
    if res.status == UNBOUNDED:
        raise RelaxationUnbounded("bound relaxation is unbounded")
    return float(res.objective)


def phi_max_bound(op: OriginalProblem) -> float:
    """Upper bound for the surrogate continuous variable: max h'y over the
    relaxed set {Ax + Gy <= b, Bx <= b', x in [0,1]^n, y >= 0}."""
    objective = np.concatenate([np.zeros(op.n), op.h])
    return _solve_relaxation(_relaxation_lp(op, objective))


def phi_max_bound_loose(op: OriginalProblem) -> float:
    """Comparison bound without the master-only rows; the tightened
    relaxation must never exceed it."""
    objective = np.concatenate([np.zeros(op.n), op.h])
    return _solve_relaxation(_relaxation_lp(op, objective, with_master_rows=False))


def phi_min_bound(op: OriginalProblem) -> float:
    """Lower bound for the surrogate variable; sizes its negative bits."""
    objective = np.concatenate([np.zeros(op.n), -op.h])
    return -_solve_relaxation(_relaxation_lp(op, objective))


def slack_max_bound(op: OriginalProblem, k: int) -> float:
    """Upper bound for the k-th (0-based) master-row slack b'_k - B_k x
    over the relaxed feasible set."""
    if not 0 <= k < op.m2:
        raise IndexError(f"master row {k} out of range")
    objective = np.concatenate([-op.B[k], np.zeros(op.p)])
    return float(op.b_prime[k] + _solve_relaxation(_relaxation_lp(op, objective)))


def slack_max_bound_loose(op: OriginalProblem, k: int) -> float:
    """Box-only comparison bound: b'_k - min over x in [0,1]^n of B_k x."""
    if not 0 <= k < op.m2:
        raise IndexError(f"master row {k} out of range")
    return float(op.b_prime[k] - np.minimum(op.B[k], 0.0).sum())
