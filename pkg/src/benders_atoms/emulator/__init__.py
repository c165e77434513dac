"""Neutral-atom analog sampling backend: greedy register embedding,
statevector dynamics under shaped pulses, and derivative-free pulse
optimization, all behind the common sampler contract."""

from __future__ import annotations

from ..errors import SizeError
from ..qubo import QuboModel
from ..samplers import SampleSet, SamplerConfig
from .dynamics import EvolutionResult, PulseParams, System, evolve, measure
from .pulse_search import (
    LatinGoldenOptimizer,
    ParameterBox,
    average_cost,
    shape_pulse,
)
from .register import DeviceSpec, Register, embed, triangular_lattice

__all__ = [
    "DeviceSpec",
    "EmulatorSampler",
    "EvolutionResult",
    "LatinGoldenOptimizer",
    "ParameterBox",
    "PulseParams",
    "Register",
    "System",
    "average_cost",
    "embed",
    "evolve",
    "measure",
    "shape_pulse",
    "triangular_lattice",
]


class EmulatorSampler:
    """Sampler backend running embed -> pulse shaping -> measurement."""

    name = "emulator"

    def __init__(
        self,
        device: DeviceSpec | None = None,
        box: ParameterBox | None = None,
        p: int = 20,
        dt: float | None = None,
        limit: int | None = None,
    ):
        self.device = device or DeviceSpec()
        self.box = box or ParameterBox.for_device(self.device)
        self.p = p
        self.dt = dt
        self.limit = limit if limit is not None else self.device.max_atoms

    def sample(self, model: QuboModel, cfg: SamplerConfig) -> SampleSet:
        if model.t > self.limit:
            raise SizeError(f"emulator limited to {self.limit} qubits, model needs {model.t}")
        register, _deviation = embed(model, self.device, seed=cfg.seed)
        _params, samples = shape_pulse(
            register,
            model,
            box=self.box,
            p=self.p,
            shots=cfg.shots,
            seed=cfg.seed,
            dt=self.dt,
        )
        return samples
