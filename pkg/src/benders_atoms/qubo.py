"""Compiles the current master problem into a QUBO and decodes bitstrings.

The master maximizes c'x + phi subject to the master-only rows and the
accumulated Benders cuts.  Each inequality gains a nonnegative slack, the
resulting equality is squared and weighted, and phi plus every slack is
binary encoded with integer, fractional and (for phi) negative bits.  The
QUBO minimizes, so the linear objective enters negated:

    H = pi_obj * (-(c'x + phi))
      + sum_k pi1 * (B_k x + s_m_k - b'_k)^2
      + sum over optimality cuts  pi2 * (phi + mu'A x + s_o - b'mu)^2
      + sum over feasibility cuts pi3 * (r'A x + s_f - b'r)^2

The dropped constant is kept alongside Q so decoded costs equal the
penalized Hamiltonian exactly, not up to a shift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cuts import FEASIBILITY, OPTIMALITY, Cut, CutPool
from .errors import BoundError, LengthError, RelaxationUnbounded, SizeError
from .milp import OriginalProblem
from . import simplex

ROLE_X = "x"
ROLE_PHI = "phi"
ROLE_MASTER_SLACK = "master_slack"
ROLE_OPT_SLACK = "opt_slack"
ROLE_FEAS_SLACK = "feas_slack"


def fractional_bits(eps: float) -> int:
    """Bits needed for resolution eps: smallest D with 2^-D <= eps."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"precision must lie in (0, 1], got {eps}")
    return max(0, int(math.ceil(-math.log2(eps) - 1e-12)))


def integer_bits(ub: float) -> int:
    """floor(log2(ub)) + 1 for ub >= 1, else 0."""
    if ub < 1.0:
        return 0
    return int(math.floor(math.log2(ub) + 1e-12)) + 1


def _is_integral(value: float) -> bool:
    return abs(value - round(value)) <= 1e-9


@dataclass(frozen=True)
class BinaryEncoding:
    """Positional binary encoding with P integer, D fractional and N
    negative-integer bits starting at ``offset`` in the global layout."""

    P: int
    D: int
    N: int
    offset: int

    @property
    def width(self) -> int:
        return self.P + self.D + self.N

    def weights(self) -> np.ndarray:
        w = [2.0**i for i in range(self.P)]
        w += [2.0**-j for j in range(1, self.D + 1)]
        w += [-(2.0 ** (k - 1)) for k in range(1, self.N + 1)]
        return np.array(w)

    @property
    def minimum(self) -> float:
        return -(2.0**self.N - 1.0)

    @property
    def maximum(self) -> float:
        hi = 2.0**self.P - 1.0
        if self.D:
            hi += 1.0 - 2.0**-self.D
        return hi

    def value(self, bits: np.ndarray) -> float:
        if self.width == 0:
            return 0.0
        return float(self.weights() @ bits)

    def encode(self, value: float) -> np.ndarray:
        """Bits reproducing ``value`` exactly; raises if not representable."""
        neg = 0 if value >= 0 else min(int(math.ceil(-value)), 2**self.N - 1)
        scaled = (value + neg) * 2.0**self.D
        m = round(scaled)
        if abs(scaled - m) > 1e-9 or m < 0 or (m >> self.D) > 2**self.P - 1:
            raise ValueError(f"{value} not representable by {self}")
        bits = np.zeros(self.width)
        for i in range(self.P):
            bits[i] = (m >> (self.D + i)) & 1
        for j in range(1, self.D + 1):
            bits[self.P + j - 1] = (m >> (self.D - j)) & 1
        for k in range(1, self.N + 1):
            bits[self.P + self.D + k - 1] = (neg >> (k - 1)) & 1
        return bits


def _encoding_for_bound(ub: float, D: int, offset: int) -> BinaryEncoding:
    """Sizes a nonnegative slack: zero bits for a zero bound, no integer
    bits below 1, fractional bits only for non-integral bounds."""
    if ub < -1e-9:
        raise BoundError(f"negative slack bound {ub}")
    ub = max(ub, 0.0)
    if ub <= 1e-12:
        return BinaryEncoding(P=0, D=0, N=0, offset=offset)
    frac = 0 if _is_integral(ub) else D
    return BinaryEncoding(P=integer_bits(ub), D=frac, N=0, offset=offset)


def _phi_encoding(phi_max: float, phi_min: float, D: int, offset: int) -> BinaryEncoding:
    if phi_max is None or not np.isfinite(phi_max):
        raise BoundError("phi upper bound missing or infinite")
    if abs(phi_max) <= 1e-12 and abs(phi_min) <= 1e-12:
        return BinaryEncoding(P=0, D=0, N=0, offset=offset)
    P = integer_bits(phi_max)
    if phi_min >= -1e-9:
        N = 0
    elif -phi_min >= 1.0:
        N = integer_bits(-phi_min)
    else:
        N = 1
    return BinaryEncoding(P=P, D=D, N=N, offset=offset)


@dataclass(frozen=True)
class PenaltyWeights:
    """Squared-penalty weights; the objective scaling may be zero, the
    constraint weights must be strictly positive."""

    pi_obj: float = 1.0
    pi1: float = 100.0
    pi2: float = 100.0
    pi3: float = 100.0

    def __post_init__(self):
        if self.pi_obj < 0:
            raise ValueError("pi_obj must be >= 0")
        if min(self.pi1, self.pi2, self.pi3) <= 0:
            raise ValueError("constraint penalties must be > 0")


@dataclass(frozen=True)
class BoundSet:
    """Upper bounds feeding the encodings: phi range, one slack bound per
    master row, one per cut (pool order)."""

    phi_max: float
    phi_min: float
    master_slack_max: tuple[float, ...]
    cut_slack_max: tuple[float, ...] = ()


def compute_bounds(
    op: OriginalProblem,
    cuts: CutPool | None = None,
    eps: float = 0.5,
    *,
    loose: bool = False,
) -> BoundSet:
    """Solve the bound-tightening relaxations and derive per-cut slack
    bounds.

    The optimality-cut slack absorbs the gap between the cut's rhs and the
    encoded phi, which sits at the grid floor of the lowest cut rhs (capped
    by the encoding maximum); the needed range is evaluated exactly over
    the master-feasible binary assignments for small n, with an LP-based
    fallback above that.  Feasibility-cut slacks span the full rhs range.

    ``loose=True`` computes the comparison bounds that skip the extra
    valid rows (used to verify the tightening claim, never to build)."""
    if loose:
        phi_max = simplex.phi_max_bound_loose(op)
        slack_bounds = tuple(simplex.slack_max_bound_loose(op, k) for k in range(op.m2))
    else:
        phi_max = simplex.phi_max_bound(op)
        slack_bounds = tuple(simplex.slack_max_bound(op, k) for k in range(op.m2))
    try:
        phi_min = min(simplex.phi_min_bound(op), phi_max)
    except RelaxationUnbounded:
        # only the maximizing relaxation forces an abort; an unbounded
        # minimum just means no negative bits are justified
        phi_min = min(0.0, phi_max)
    cut_list = list(cuts) if cuts is not None else []
    cut_bounds = _cut_slack_bounds(op, cut_list, float(phi_max), float(phi_min), eps)
    return BoundSet(
        phi_max=float(phi_max),
        phi_min=float(phi_min),
        master_slack_max=slack_bounds,
        cut_slack_max=cut_bounds,
    )


_ENUM_N_LIMIT = 12


def _master_feasible_vertices(op: OriginalProblem) -> np.ndarray | None:
    if op.n > _ENUM_N_LIMIT:
        return None
    ks = np.arange(1 << op.n, dtype=np.uint32)
    X = ((ks[:, None] >> np.arange(op.n)) & 1).astype(float)
    if op.m2:
        keep = np.all(X @ op.B.T <= op.b_prime + 1e-9, axis=1)
        X = X[keep]
    return X


def _cut_slack_bounds(
    op: OriginalProblem,
    cut_list: list[Cut],
    phi_max: float,
    phi_min: float,
    eps: float,
) -> tuple[float, ...]:
    if not cut_list:
        return ()
    D = fractional_bits(eps)
    grid = 2.0**-D
    enc = _phi_encoding(phi_max, phi_min, D, 0)
    enc_max = enc.maximum
    X = _master_feasible_vertices(op)
    coefs = np.array([c.vector @ op.A for c in cut_list])
    consts = np.array([c.constant for c in cut_list])
    kinds = [c.kind for c in cut_list]

    if X is not None and X.shape[0]:
        rhs = consts[None, :] - X @ coefs.T  # (n_x, n_cuts)
        opt_rhs = np.where([k == OPTIMALITY for k in kinds], rhs, np.inf)
        phi_floor = np.floor(np.min(opt_rhs, axis=1) / grid) * grid
        phi_hat = np.clip(phi_floor, enc.minimum, enc_max)
        bounds = []
        for j, kind in enumerate(kinds):
            if kind == OPTIMALITY:
                need = np.max(rhs[:, j] - phi_hat)
            else:
                need = np.max(rhs[:, j])
            bounds.append(max(grid, float(need) + grid))
        return tuple(bounds)

    # large n: fall back to LP ranges over the master-constrained box
    bounds = []
    low_rhs = np.inf
    hi = np.zeros(len(cut_list))
    for j, (coef, const, kind) in enumerate(zip(coefs, consts, kinds)):
        hi[j] = const - _master_box_min(op, coef)
        if kind == OPTIMALITY:
            low_rhs = min(low_rhs, const - _master_box_max(op, coef))
    phi_low = 0.0 if not np.isfinite(low_rhs) else np.clip(np.floor(low_rhs / grid) * grid, 0.0, enc_max)
    for j, kind in enumerate(kinds):
        need = hi[j] - (phi_low if kind == OPTIMALITY else 0.0)
        bounds.append(max(grid, float(need) + grid))
    return tuple(bounds)


def _master_box_min(op: OriginalProblem, coef: np.ndarray) -> float:
    return -_master_box_max(op, -coef)


def _master_box_max(op: OriginalProblem, coef: np.ndarray) -> float:
    lp = simplex.LinearProgram(
        sense=simplex.MAX,
        objective=coef,
        A=op.B if op.m2 else np.zeros((0, op.n)),
        rhs=op.b_prime if op.m2 else np.zeros(0),
        senses=(simplex.LE,) * op.m2,
        lower=np.zeros(op.n),
        upper=np.ones(op.n),
    )
    res = simplex.solve(lp)
    if res.status != "Optimal":
        raise BoundError("master box relaxation failed while bounding a cut slack")
    return float(res.objective)


@dataclass(frozen=True)
class LayoutEntry:
    role: str
    index: int
    encoding: BinaryEncoding


@dataclass(frozen=True)
class QuboModel:
    """Symmetric QUBO matrix plus the bit layout and decoding metadata.

    Cost of a bitstring z is z'Qz + constant; eq_coeffs @ z + eq_consts
    gives the residual of every penalized equality (master rows first,
    then cuts in pool order)."""

    Q: np.ndarray
    constant: float
    t: int
    n: int
    layout: tuple[LayoutEntry, ...]
    c_x: np.ndarray
    eq_coeffs: np.ndarray
    eq_consts: np.ndarray
    eq_kinds: tuple[str, ...]

    def __post_init__(self):
        for name in ("Q", "c_x", "eq_coeffs", "eq_consts"):
            getattr(self, name).setflags(write=False)

    def cost(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return float(z @ self.Q @ z + self.constant)

    def costs(self, Z: np.ndarray) -> np.ndarray:
        """Vectorized cost over rows of Z."""
        Z = np.asarray(Z, dtype=float)
        return np.einsum("bi,ij,bj->b", Z, self.Q, Z) + self.constant

    def entry(self, role: str, index: int = 0) -> LayoutEntry:
        for e in self.layout:
            if e.role == role and e.index == index:
                return e
        raise KeyError(f"no layout entry {role}[{index}]")


@dataclass(frozen=True)
class DecodedMaster:
    """A sampler bitstring mapped back to master-problem values."""

    x: np.ndarray
    phi: float
    master_slacks: np.ndarray
    cut_slacks: np.ndarray
    penalty_residuals: np.ndarray
    qubo_cost: float
    mp_objective: float
    bits: np.ndarray


def _layout_for(
    op: OriginalProblem, cuts: CutPool | None, bounds: BoundSet, eps: float
) -> tuple[list[LayoutEntry], int]:
    D = fractional_bits(eps)
    entries: list[LayoutEntry] = []
    pos = 0
    for i in range(op.n):
        entries.append(LayoutEntry(ROLE_X, i, BinaryEncoding(P=1, D=0, N=0, offset=pos)))
        pos += 1
    phi_enc = _phi_encoding(bounds.phi_max, bounds.phi_min, D, pos)
    entries.append(LayoutEntry(ROLE_PHI, 0, phi_enc))
    pos += phi_enc.width
    if len(bounds.master_slack_max) != op.m2:
        raise BoundError("missing master-row slack bounds")
    for k in range(op.m2):
        enc = _encoding_for_bound(bounds.master_slack_max[k], D, pos)
        entries.append(LayoutEntry(ROLE_MASTER_SLACK, k, enc))
        pos += enc.width
    cut_list = list(cuts) if cuts is not None else []
    if len(bounds.cut_slack_max) < len(cut_list):
        raise BoundError("missing cut slack bounds")
    for i, cut in enumerate(cut_list):
        enc = _encoding_for_bound(bounds.cut_slack_max[i], D, pos)
        role = ROLE_OPT_SLACK if cut.kind == OPTIMALITY else ROLE_FEAS_SLACK
        entries.append(LayoutEntry(role, i, enc))
        pos += enc.width
    return entries, pos


def qubit_count(
    op: OriginalProblem, cuts: CutPool | None, bounds: BoundSet, eps: float
) -> int:
    """Total bit count of the compiled master, without materializing Q."""
    _, t = _layout_for(op, cuts, bounds, eps)
    return t


def build_qubo(
    op: OriginalProblem,
    cuts: CutPool | None,
    weights: PenaltyWeights,
    bounds: BoundSet,
    eps: float = 0.5,
    max_qubits: int | None = None,
) -> QuboModel:
    """Compile the master problem with the current cuts into a QUBO."""
    entries, t = _layout_for(op, cuts, bounds, eps)
    if max_qubits is not None and t > max_qubits:
        raise SizeError(f"master needs {t} qubits, budget is {max_qubits}")

    Q = np.zeros((t, t))
    constant = 0.0

    def add_penalty(a: np.ndarray, gamma: float, weight: float) -> None:
        nonlocal constant
        nz = np.nonzero(a)[0]
        sub = np.outer(a[nz], a[nz])
        Q[np.ix_(nz, nz)] += weight * sub
        Q[nz, nz] += 2.0 * weight * gamma * a[nz]
        constant += weight * gamma * gamma

    phi_entry = next(e for e in entries if e.role == ROLE_PHI)
    phi_cols = np.arange(phi_entry.encoding.offset, phi_entry.encoding.offset + phi_entry.encoding.width)
    phi_w = phi_entry.encoding.weights()

    # objective, negated for minimization: pi_obj * (-(c'x + phi))
    for i in range(op.n):
        Q[i, i] += weights.pi_obj * (-op.c[i])
    Q[phi_cols, phi_cols] += weights.pi_obj * (-phi_w)

    eq_rows: list[np.ndarray] = []
    eq_consts: list[float] = []
    eq_kinds: list[str] = []

    for e in entries:
        if e.role != ROLE_MASTER_SLACK:
            continue
        k = e.index
        a = np.zeros(t)
        a[: op.n] = op.B[k]
        enc = e.encoding
        a[enc.offset : enc.offset + enc.width] = enc.weights()
        gamma = -float(op.b_prime[k])
        add_penalty(a, gamma, weights.pi1)
        eq_rows.append(a)
        eq_consts.append(gamma)
        eq_kinds.append(ROLE_MASTER_SLACK)

    for e in entries:
        if e.role not in (ROLE_OPT_SLACK, ROLE_FEAS_SLACK):
            continue
        cut = list(cuts)[e.index]
        a = np.zeros(t)
        a[: op.n] = cut.vector @ op.A
        enc = e.encoding
        a[enc.offset : enc.offset + enc.width] = enc.weights()
        gamma = -cut.constant
        if cut.kind == OPTIMALITY:
            a[phi_cols] += phi_w
            add_penalty(a, gamma, weights.pi2)
        else:
            add_penalty(a, gamma, weights.pi3)
        eq_rows.append(a)
        eq_consts.append(gamma)
        eq_kinds.append(e.role)

    eq_coeffs = np.array(eq_rows) if eq_rows else np.zeros((0, t))
    return QuboModel(
        Q=(Q + Q.T) / 2.0,
        constant=constant,
        t=t,
        n=op.n,
        layout=tuple(entries),
        c_x=op.c.copy(),
        eq_coeffs=eq_coeffs,
        eq_consts=np.array(eq_consts),
        eq_kinds=tuple(eq_kinds),
    )


def repair_bits(model: QuboModel, z: np.ndarray) -> np.ndarray:
    """Classical post-processing of a sampled bitstring: keep the x bits,
    re-derive the phi and slack registers at their cost-optimal values for
    that x (phi at the grid floor of the binding cut capped by its range,
    slacks absorbing their equalities).  Samples from an exact minimizer
    are already in this form and pass through unchanged."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != (model.t,):
        raise LengthError(f"bitstring length {z.shape[0]} != t = {model.t}")
    out = z.copy()
    x = z[: model.n]
    phi_entry = model.entry(ROLE_PHI)
    enc_phi = phi_entry.encoding

    cut_rows = [
        (kind, coeffs, const)
        for kind, coeffs, const in zip(model.eq_kinds, model.eq_coeffs, model.eq_consts)
        if kind != ROLE_MASTER_SLACK
    ]
    opt_rhs = [
        -const - float(coeffs[: model.n] @ x)
        for kind, coeffs, const in cut_rows
        if kind == ROLE_OPT_SLACK
    ]
    if enc_phi.width:
        grid = 2.0**-enc_phi.D if enc_phi.D else 1.0
        target = min(opt_rhs) if opt_rhs else enc_phi.maximum
        phi_val = np.clip(np.floor(target / grid + 1e-12) * grid, max(enc_phi.minimum, 0.0), enc_phi.maximum)
        out[enc_phi.offset : enc_phi.offset + enc_phi.width] = enc_phi.encode(float(phi_val))
        phi_val = float(phi_val)
    else:
        phi_val = 0.0

    for e in model.layout:
        if e.role == ROLE_X or e.role == ROLE_PHI or e.encoding.width == 0:
            continue
        enc = e.encoding
        if e.role == ROLE_MASTER_SLACK:
            # slack for B_k x + s = b'_k
            coeffs = model.eq_coeffs[e.index]
            target = -model.eq_consts[e.index] - float(coeffs[: model.n] @ x)
        else:
            kind, coeffs, const = cut_rows[e.index]
            target = -const - float(coeffs[: model.n] @ x)
            if kind == ROLE_OPT_SLACK:
                target -= phi_val
        grid = 2.0**-enc.D if enc.D else 1.0
        val = np.clip(np.floor(target / grid + 1e-12) * grid, 0.0, enc.maximum)
        out[enc.offset : enc.offset + enc.width] = enc.encode(float(max(val, 0.0)))
    return out


def decode(model: QuboModel, z: np.ndarray) -> DecodedMaster:
    """Map a bitstring back to (x, phi, slacks) plus residuals and cost."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != (model.t,):
        raise LengthError(f"bitstring length {z.shape[0]} != t = {model.t}")
    x = z[: model.n].copy()
    phi = 0.0
    master_slacks = []
    cut_slacks = []
    for e in model.layout:
        enc = e.encoding
        bits = z[enc.offset : enc.offset + enc.width]
        if e.role == ROLE_PHI:
            phi = enc.value(bits)
        elif e.role == ROLE_MASTER_SLACK:
            master_slacks.append(enc.value(bits))
        elif e.role in (ROLE_OPT_SLACK, ROLE_FEAS_SLACK):
            cut_slacks.append(enc.value(bits))
    residuals = model.eq_coeffs @ z + model.eq_consts if model.eq_coeffs.size else np.zeros(0)
    return DecodedMaster(
        x=x,
        phi=phi,
        master_slacks=np.array(master_slacks),
        cut_slacks=np.array(cut_slacks),
        penalty_residuals=residuals,
        qubo_cost=model.cost(z),
        mp_objective=float(model.c_x @ x + phi),
        bits=z.copy(),
    )


def export_qubo(model: QuboModel, path: str | Path) -> None:
    """Interchange file: upper-triangle entries with cost convention
    sum_{i<=j} q_ij z_i z_j + constant."""
    entries = []
    for i in range(model.t):
        for j in range(i, model.t):
            q = model.Q[i, j] if i == j else 2.0 * model.Q[i, j]
            if q != 0.0:
                entries.append([i, j, q])
    payload = {"t": model.t, "constant": model.constant, "entries": entries}
    Path(path).write_text(json.dumps(payload))


def load_qubo_matrix(path: str | Path) -> tuple[np.ndarray, float]:
    """Read an interchange file back into a symmetric matrix + constant."""
    raw = json.loads(Path(path).read_text())
    t = int(raw["t"])
    Q = np.zeros((t, t))
    for i, j, q in raw["entries"]:
        i, j = int(i), int(j)
        if i == j:
            Q[i, i] += q
        else:
            Q[i, j] += q / 2.0
            Q[j, i] += q / 2.0
    return Q, float(raw.get("constant", 0.0))
