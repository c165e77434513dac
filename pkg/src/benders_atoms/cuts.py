"""Accumulated Benders cuts exchanged between the driver and the QUBO builder."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateCut
from .milp import OriginalProblem

OPTIMALITY = "optimality"
FEASIBILITY = "feasibility"


@dataclass(frozen=True)
class Cut:
    """One Benders cut: a row-multiplier vector and its rhs constant b'v.

    Optimality cuts encode phi <= (b - Ax)'mu; feasibility cuts encode
    (b - Ax)'r >= 0.
    """

    kind: str
    vector: np.ndarray
    constant: float

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    def rhs_at(self, op: OriginalProblem, x: np.ndarray) -> float:
        """(b - Ax)'v for this cut's multipliers."""
        return float(self.constant - (self.vector @ op.A) @ x)


class CutPool:
    """Insertion-ordered pool of optimality and feasibility cuts.

    Stored multipliers must be nonnegative up to noise; adding an exact
    duplicate raises :class:`DuplicateCut`, which signals a stalled loop.
    """

    def __init__(self):
        self._cuts: list[Cut] = []

    def __len__(self) -> int:
        return len(self._cuts)

    def __iter__(self):
        return iter(self._cuts)

    @property
    def cuts(self) -> tuple[Cut, ...]:
        return tuple(self._cuts)

    @property
    def optimality(self) -> tuple[Cut, ...]:
        return tuple(c for c in self._cuts if c.kind == OPTIMALITY)

    @property
    def feasibility(self) -> tuple[Cut, ...]:
        return tuple(c for c in self._cuts if c.kind == FEASIBILITY)

    def _add(self, kind: str, vector: np.ndarray, op: OriginalProblem) -> Cut:
        vector = np.asarray(vector, dtype=float).reshape(-1)
        if vector.shape != (op.m1,):
            raise ValueError(f"cut vector must have length m1 = {op.m1}")
        if np.any(vector < -1e-9):
            raise ValueError("cut multipliers must be nonnegative")
        vector = np.maximum(vector, 0.0)
        for cut in self._cuts:
            if cut.kind == kind and np.array_equal(cut.vector, vector):
                raise DuplicateCut(f"identical {kind} cut already stored")
        cut = Cut(kind=kind, vector=vector, constant=float(op.b @ vector))
        self._cuts.append(cut)
        return cut

    def add_optimality(self, mu: np.ndarray, op: OriginalProblem) -> Cut:
        return self._add(OPTIMALITY, mu, op)

    def add_feasibility(self, ray: np.ndarray, op: OriginalProblem) -> Cut:
        return self._add(FEASIBILITY, ray, op)
