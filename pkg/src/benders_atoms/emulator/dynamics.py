"""Time-dependent statevector evolution of the driven Rydberg register.

The effective Hamiltonian is

    H(t) = (Omega(t)/2) sum_u sigma_x^u - Delta(t) sum_u n_u
         + sum_{u<v} U_uv n_u n_v

with a trapezoidal amplitude (rise T/4, plateau T/2, fall T/4 up to
omega_max) and a linear detuning sweep from delta_init to delta_final.
Integration is fixed-step 4th-order Runge-Kutta with the Hamiltonian
frozen at each step midpoint; the norm drift is checked against 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NormDriftError, SizeError
from ..qubo import QuboModel
from ..samplers import SampleSet
from .register import Register

NORM_TOL = 1e-6
MAX_ATOMS = 12


@dataclass(frozen=True)
class PulseParams:
    omega_max: float
    delta_init: float
    delta_final: float
    duration: float

    def __post_init__(self):
        if self.omega_max <= 0:
            raise ValueError("omega_max must be positive")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.delta_init > self.delta_final + 1e-12:
            raise ValueError("detuning must sweep upward (delta_init <= delta_final)")

    def omega_at(self, t: float) -> float:
        T = self.duration
        rise, fall = T / 4.0, 3.0 * T / 4.0
        if t <= 0.0 or t >= T:
            return 0.0
        if t < rise:
            return self.omega_max * t / rise
        if t > fall:
            return self.omega_max * (T - t) / (T - fall)
        return self.omega_max

    def delta_at(self, t: float) -> float:
        frac = min(max(t / self.duration, 0.0), 1.0)
        return self.delta_init + (self.delta_final - self.delta_init) * frac

    def as_vector(self) -> np.ndarray:
        return np.array([self.omega_max, self.delta_init, self.delta_final, self.duration])


@dataclass(frozen=True)
class EvolutionResult:
    statevector: np.ndarray
    norm_drift: float


class System:
    """Precomputed operators for one register, reused across evolutions."""

    def __init__(self, register: Register):
        M = register.size
        if M > MAX_ATOMS:
            raise SizeError(f"statevector emulation limited to {MAX_ATOMS} atoms")
        self.M = M
        dim = 1 << M
        idx = np.arange(dim)
        self.flip_idx = np.array([idx ^ (1 << u) for u in range(M)])
        bits = (idx[None, :] >> np.arange(M)[:, None]) & 1
        self.popcount = bits.sum(axis=0).astype(float)
        U = register.interaction_matrix()
        inter = np.zeros(dim)
        for u in range(M):
            for v in range(u + 1, M):
                inter += U[u, v] * (bits[u] & bits[v])
        self.interaction_diag = inter

    def evolve(self, pulse: PulseParams, dt: float) -> EvolutionResult:
        T = pulse.duration
        if dt > T / 100.0 + 1e-15:
            raise ValueError("dt must be at most duration/100")
        steps = max(1, int(np.ceil(T / dt - 1e-12)))
        h = T / steps
        dim = 1 << self.M
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0

        flip = self.flip_idx
        inter = self.interaction_diag
        pop = self.popcount

        def deriv(v, om, diag):
            return -1j * (om * v[flip].sum(axis=0) + diag * v)

        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(steps):
                tm = (k + 0.5) * h
                om = 0.5 * pulse.omega_at(tm)
                diag = inter - pulse.delta_at(tm) * pop

                k1 = deriv(psi, om, diag)
                k2 = deriv(psi + (0.5 * h) * k1, om, diag)
                k3 = deriv(psi + (0.5 * h) * k2, om, diag)
                k4 = deriv(psi + h * k3, om, diag)
                psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        norm2 = float(np.vdot(psi, psi).real)
        drift = abs(norm2 - 1.0)
        if not np.isfinite(norm2) or drift > NORM_TOL:
            raise NormDriftError(f"norm drift {drift:.2e} exceeds {NORM_TOL}")
        return EvolutionResult(statevector=psi, norm_drift=drift)

    def spectral_scale(self, pulse: PulseParams) -> float:
        """Upper bound on the Hamiltonian spectral radius during the pulse."""
        dmax = abs(max(pulse.delta_init, pulse.delta_final, key=abs))
        return (
            float(self.interaction_diag.max(initial=0.0))
            + dmax * self.M
            + 0.5 * pulse.omega_max * self.M
        )

    def evolve_auto(self, pulse: PulseParams, dt: float | None = None) -> EvolutionResult:
        """Evolve with the step chosen inside the integrator's stability
        region, halving until the norm drift passes."""
        if dt is None:
            # keep dt * spectral_radius below the classical RK4 limit 2.83
            stable = 2.2 / max(self.spectral_scale(pulse), 1e-9)
            dt = min(pulse.duration / 1000.0, stable)
        step = min(dt, pulse.duration / 100.0)
        last: NormDriftError | None = None
        for _ in range(6):
            try:
                return self.evolve(pulse, step)
            except NormDriftError as exc:
                last = exc
                step /= 2.0
        raise last


def evolve(register: Register, pulse: PulseParams, dt: float) -> EvolutionResult:
    """One-shot evolution; prefer :class:`System` when reusing a register."""
    return System(register).evolve(pulse, dt)


def measure(
    result: EvolutionResult,
    model: QuboModel,
    shots: int,
    seed: int = 0,
) -> SampleSet:
    """Draw shots from |amplitude|^2 and attach QUBO costs per bitstring.

    Basis index k maps to bits via z_u = (k >> u) & 1, matching the
    sampler bit order.
    """
    psi = result.statevector
    probs = np.abs(psi) ** 2
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    M = int(np.log2(psi.shape[0]))
    counts: dict[tuple[int, ...], int] = {}
    for k in np.nonzero(draws)[0]:
        bits = tuple((int(k) >> u) & 1 for u in range(M))
        counts[bits] = int(draws[k])
    return SampleSet.from_counts(model, counts)
