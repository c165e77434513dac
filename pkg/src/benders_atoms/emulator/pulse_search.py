"""Derivative-free pulse-parameter search.

The search space is the box (omega_max, delta_init, delta_final, duration);
evaluation of a point runs the register evolution, samples bitstrings and
scores them by the average QUBO cost <C> = (1/N) sum w_i C(b_i).  The
default optimizer spends the first half of the budget on the box midpoint
plus Latin-hypercube exploration and the second half on coordinate-wise
golden-section refinement around the incumbent.  Any object with the same
``propose`` / ``observe`` surface can be plugged in instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..qubo import QuboModel
from ..samplers import SampleSet
from .dynamics import PulseParams, System
from .register import DeviceSpec, Register

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0  # 0.618...


@dataclass(frozen=True)
class ParameterBox:
    """Search bounds; the detuning intervals must not overlap so that any
    proposal keeps delta_init <= delta_final."""

    omega: tuple[float, float] = (0.5, 12.57)
    delta_init: tuple[float, float] = (-8.0, 0.0)
    delta_final: tuple[float, float] = (0.0, 8.0)
    duration: tuple[float, float] = (0.25, 2.0)

    def __post_init__(self):
        for name in ("omega", "delta_init", "delta_final", "duration"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} bounds reversed")
        if self.delta_init[1] > self.delta_final[0] + 1e-12:
            raise ValueError("delta_init interval must end before delta_final starts")
        if self.omega[0] <= 0 or self.duration[0] <= 0:
            raise ValueError("omega and duration must be positive")

    @property
    def lows(self) -> np.ndarray:
        return np.array([self.omega[0], self.delta_init[0], self.delta_final[0], self.duration[0]])

    @property
    def highs(self) -> np.ndarray:
        return np.array([self.omega[1], self.delta_init[1], self.delta_final[1], self.duration[1]])

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lows + self.highs)

    def clip(self, vec: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(vec, self.lows), self.highs)

    def to_params(self, vec: np.ndarray) -> PulseParams:
        v = self.clip(np.asarray(vec, dtype=float))
        return PulseParams(
            omega_max=float(v[0]),
            delta_init=float(v[1]),
            delta_final=float(v[2]),
            duration=float(v[3]),
        )

    @staticmethod
    def for_device(device: DeviceSpec) -> "ParameterBox":
        return ParameterBox(
            omega=(0.5, device.omega_device),
            delta_init=(-8.0, 0.0),
            delta_final=(0.0, 8.0),
            duration=(max(0.25, device.t_min), min(2.0, device.t_max)),
        )


class LatinGoldenOptimizer:
    """Default black-box proposer: midpoint, Latin-hypercube exploration
    for the first ceil(p/2) evaluations, then coordinate-cycling
    golden-section refinement around the incumbent."""

    def __init__(self, box: ParameterBox, budget: int, seed: int = 0):
        self.box = box
        self.budget = budget
        self.explore = max(1, int(np.ceil(budget / 2)))
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x1b0c)))
        n_lhs = max(0, self.explore - 1)
        dims = 4
        if n_lhs:
            strata = np.stack([rng.permutation(n_lhs) for _ in range(dims)], axis=1)
            u = rng.random((n_lhs, dims))
            unit = (strata + u) / n_lhs
            self.lhs = self.box.lows + unit * (self.box.highs - self.box.lows)
        else:
            self.lhs = np.zeros((0, dims))
        self.incumbent: np.ndarray | None = None
        self.incumbent_cost = np.inf
        self._dim = 0
        self._gs: dict[int, dict] = {}
        self._pending: tuple[int, float] | None = None

    def propose(self, k: int, history) -> np.ndarray:
        if k == 0:
            return self.box.midpoint()
        if k < self.explore:
            return self.lhs[k - 1]
        return self._golden_step()

    def observe(self, vec: np.ndarray, cost: float) -> None:
        if cost < self.incumbent_cost:
            self.incumbent_cost = cost
            self.incumbent = np.asarray(vec, dtype=float).copy()
        if self._pending is not None:
            d, probe = self._pending
            st = self._gs[d]
            if st.get("f1") is None:
                st["f1"] = cost
            else:
                st["f2"] = cost
                self._shrink(d)
            self._pending = None

    def _golden_step(self) -> np.ndarray:
        d = self._dim
        st = self._gs.get(d)
        if st is None or st.get("exhausted"):
            lo, hi = self.box.lows[d], self.box.highs[d]
            st = {"a": lo, "b": hi, "f1": None, "f2": None, "exhausted": False}
            self._gs[d] = st
        a, b = st["a"], st["b"]
        if st["f1"] is None:
            probe = b - GOLDEN * (b - a)
            st["x1"] = probe
        else:
            probe = a + GOLDEN * (b - a)
            st["x2"] = probe
            self._dim = (self._dim + 1) % 4  # next proposal refines another axis
        self._pending = (d, probe)
        vec = (self.incumbent if self.incumbent is not None else self.box.midpoint()).copy()
        vec[d] = probe
        return vec

    def _shrink(self, d: int) -> None:
        st = self._gs[d]
        if st["f1"] <= st["f2"]:
            st["b"] = st["x2"]
        else:
            st["a"] = st["x1"]
        st["f1"] = st["f2"] = None
        if st["b"] - st["a"] < 1e-3 * (self.box.highs[d] - self.box.lows[d]):
            st["exhausted"] = True


def average_cost(samples: SampleSet) -> float:
    """<C> over a sample set: multiplicity-weighted mean cost."""
    total = sum(e.multiplicity * e.cost for e in samples.entries)
    return total / samples.shots


def shape_pulse(
    register: Register,
    model: QuboModel,
    box: ParameterBox,
    p: int,
    shots: int,
    seed: int = 0,
    optimizer=None,
    dt: float | None = None,
) -> tuple[PulseParams, SampleSet]:
    """Run exactly p sequence evaluations and return the best parameters
    with their samples by average cost; evaluation 1 is the box midpoint."""
    if p < 1:
        raise ValueError("iteration budget p must be >= 1")
    system = System(register)
    opt = optimizer if optimizer is not None else LatinGoldenOptimizer(box, p, seed)
    history: list[tuple[np.ndarray, float]] = []
    best_cost = np.inf
    best: tuple[PulseParams, SampleSet] | None = None
    for k in range(p):
        vec = box.clip(np.asarray(opt.propose(k, history), dtype=float))
        params = box.to_params(vec)
        result = system.evolve_auto(params, dt)
        shot_seed = np.random.SeedSequence((seed, k)).generate_state(1)[0]
        samples = measure_with(system, result, model, shots, int(shot_seed))
        cost = average_cost(samples)
        history.append((vec, cost))
        if hasattr(opt, "observe"):
            opt.observe(vec, cost)
        if cost < best_cost:
            best_cost = cost
            best = (params, samples)
    return best


def measure_with(system: System, result, model: QuboModel, shots: int, seed: int) -> SampleSet:
    from .dynamics import measure

    return measure(result, model, shots, seed)
