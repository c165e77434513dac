"""Sampling backends over QUBO models: exact enumeration and simulated
annealing.  Both return a :class:`SampleSet`; the emulator backend lives in
:mod:`benders_atoms.emulator` and implements the same contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SizeError
from .qubo import QuboModel

EXACT_LIMIT = 24
_ENUM_CHUNK = 1 << 16


@dataclass(frozen=True)
class SampleEntry:
    bits: np.ndarray
    multiplicity: int
    cost: float

    def key(self) -> tuple[int, ...]:
        return tuple(int(b) for b in self.bits)


@dataclass(frozen=True)
class SampleSet:
    """Bitstrings with multiplicities and costs, sorted by ascending cost
    with lexicographic tie breaks; multiplicities sum to the shot count."""

    entries: tuple[SampleEntry, ...]
    shots: int

    @property
    def best(self) -> SampleEntry:
        return self.entries[0]

    def to_jsonable(self) -> dict:
        return {
            "shots": self.shots,
            "entries": [
                ["".join(str(int(b)) for b in e.bits), e.multiplicity, e.cost]
                for e in self.entries
            ],
        }

    @staticmethod
    def from_counts(model: QuboModel, counts: dict[tuple[int, ...], int]) -> "SampleSet":
        entries = []
        for bits, mult in counts.items():
            z = np.array(bits, dtype=float)
            entries.append(SampleEntry(bits=z, multiplicity=int(mult), cost=model.cost(z)))
        entries.sort(key=lambda e: (e.cost, e.key()))
        return SampleSet(entries=tuple(entries), shots=sum(e.multiplicity for e in entries))


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric Metropolis schedule; None fields fall back to the
    size-derived defaults (T0 = max|Q| * t, 200 * t sweeps)."""

    t0: float | None = None
    alpha: float = 0.95
    sweeps: int | None = None


@dataclass(frozen=True)
class SamplerConfig:
    shots: int = 500
    seed: int = 0
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


def exact_minimize(model: QuboModel) -> tuple[np.ndarray, float]:
    """Global minimum of z'Qz + constant by chunked enumeration; ties are
    broken toward the lexicographically smallest bitstring."""
    t = model.t
    if t > EXACT_LIMIT:
        raise SizeError(f"exact enumeration limited to t <= {EXACT_LIMIT}, got {t}")
    shifts = np.arange(t, dtype=np.uint32)
    lex_weights = 1 << (t - 1 - shifts).astype(np.int64)
    best_cost = np.inf
    best_key = -1
    best_bits: np.ndarray | None = None
    for start in range(0, 1 << t, _ENUM_CHUNK):
        ks = np.arange(start, min(start + _ENUM_CHUNK, 1 << t), dtype=np.uint32)
        Z = ((ks[:, None] >> shifts) & 1).astype(float)
        costs = np.einsum("bi,ij,bj->b", Z, model.Q, Z) + model.constant
        i = int(np.argmin(costs))
        chunk_min = costs[i]
        if chunk_min > best_cost:
            continue
        tied = np.nonzero(costs == chunk_min)[0]
        keys = (Z[tied].astype(np.int64) @ lex_weights)
        j = tied[int(np.argmin(keys))]
        key = int(Z[j].astype(np.int64) @ lex_weights)
        if chunk_min < best_cost or (chunk_min == best_cost and key < best_key):
            best_cost = float(chunk_min)
            best_key = key
            best_bits = Z[j].copy()
    return best_bits, best_cost


class ExactSampler:
    """Oracle backend: every shot reports the global minimizer."""

    name = "exact"
    limit = EXACT_LIMIT

    def sample(self, model: QuboModel, cfg: SamplerConfig) -> SampleSet:
        if model.t > self.limit:
            raise SizeError(f"exact backend limited to t <= {self.limit}")
        bits, cost = exact_minimize(model)
        entry = SampleEntry(bits=bits, multiplicity=cfg.shots, cost=cost)
        return SampleSet(entries=(entry,), shots=cfg.shots)


class AnnealSampler:
    """Independent single-bit-flip Metropolis chains with a geometric
    temperature schedule; one chain per shot, streams keyed by
    (seed, shot index) so execution order cannot change results."""

    name = "anneal"

    def sample(self, model: QuboModel, cfg: SamplerConfig) -> SampleSet:
        t = model.t
        if t < 1:
            raise SizeError("model must have at least one bit")
        sched = cfg.schedule
        sweeps = sched.sweeps if sched.sweeps is not None else 200 * t
        qmax = float(np.max(np.abs(model.Q))) if model.Q.size else 0.0
        t0 = sched.t0 if sched.t0 is not None else max(qmax * t, 1e-12)

        streams = np.random.SeedSequence(cfg.seed).spawn(cfg.shots)
        rngs = [np.random.default_rng(s) for s in streams]
        Z = np.stack([r.integers(0, 2, size=t) for r in rngs]).astype(float)

        n_steps = sweeps * t
        if n_steps:
            Z = self._run_chains(model.Q, Z, rngs, n_steps, t0, sched.alpha, t)

        counts: dict[tuple[int, ...], int] = {}
        for c in range(cfg.shots):
            key = tuple(int(b) for b in Z[c])
            counts[key] = counts.get(key, 0) + 1
        return SampleSet.from_counts(model, counts)

    @staticmethod
    def _run_chains(Q, Z, rngs, n_steps, t0, alpha, t):
        shots = Z.shape[0]
        G = Z @ Q
        diag = np.diag(Q)
        rows = np.arange(shots)
        temps = t0 * alpha ** (np.arange(n_steps) // t)
        temps = np.maximum(temps, 1e-300)
        chunk = 512
        for start in range(0, n_steps, chunk):
            width = min(chunk, n_steps - start)
            flips = np.stack([r.integers(0, t, size=width) for r in rngs])
            unifs = np.stack([r.random(width) for r in rngs])
            for s in range(width):
                idx = flips[:, s]
                z_i = Z[rows, idx]
                g_off = G[rows, idx] - diag[idx] * z_i
                sign = 1.0 - 2.0 * z_i
                delta = sign * (diag[idx] + 2.0 * g_off)
                with np.errstate(over="ignore", under="ignore"):
                    accept = (delta <= 0.0) | (
                        unifs[:, s] < np.exp(-delta / temps[start + s])
                    )
                if not np.any(accept):
                    continue
                Z[rows[accept], idx[accept]] = 1.0 - z_i[accept]
                G[accept] += sign[accept, None] * Q[idx[accept], :]
        return Z


_BACKENDS = {"exact": ExactSampler, "anneal": AnnealSampler}


def get_sampler(name: str, **kwargs):
    """Instantiate a sampling backend by name; the emulator registers
    itself on import."""
    if name == "emulator":
        from .emulator import EmulatorSampler

        return EmulatorSampler(**kwargs)
    try:
        return _BACKENDS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown sampler '{name}'") from None
