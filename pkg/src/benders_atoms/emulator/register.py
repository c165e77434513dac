"""Atom register geometry and the greedy QUBO embedding heuristic.

Atoms are placed on a triangular lattice of candidate positions so that the
pairwise interactions C6 / r^6 track the QUBO couplings as closely as the
geometry allows: the first (seeded-random) atom sits at the register
center, every later atom takes the candidate position minimizing the sum
of absolute deviations against the already-placed atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError
from ..qubo import QuboModel


@dataclass(frozen=True)
class DeviceSpec:
    """Analog-device constants; defaults are representative of published
    neutral-atom hardware and freely configurable."""

    c6: float = 5.42e6          # rad um^6 / us
    min_distance: float = 4.0   # um
    max_radius: float = 35.0    # um
    omega_device: float = 12.57  # rad / us
    t_min: float = 0.016        # us
    t_max: float = 4.0          # us
    max_atoms: int = 12


@dataclass(frozen=True)
class Register:
    """Planar atom positions plus the interaction constants."""

    positions: np.ndarray       # (M, 2) in um
    c6: float
    min_distance: float
    max_radius: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    def interaction_matrix(self) -> np.ndarray:
        """u_ij = C6 / r_ij^6, symmetric, zero diagonal."""
        pos = self.positions
        diff = pos[:, None, :] - pos[None, :, :]
        r = np.sqrt((diff**2).sum(-1))
        with np.errstate(divide="ignore"):
            U = self.c6 / r**6
        np.fill_diagonal(U, 0.0)
        return U

    def to_jsonable(self) -> dict:
        return {"positions": self.positions.tolist(), "C6": self.c6}


def coupling_matrix(Q: np.ndarray) -> np.ndarray:
    """Pairwise coupling of bits i, j in z'Qz: both off-diagonal entries of
    the symmetric matrix contribute, so the coupling is 2 Q_ij."""
    J = Q + Q.T
    np.fill_diagonal(J, 0.0)
    return J


def triangular_lattice(spacing: float, max_radius: float) -> np.ndarray:
    """Candidate positions on a triangular lattice trimmed to the register
    disc, sorted by distance to the center then lexicographically."""
    a1 = np.array([spacing, 0.0])
    a2 = np.array([spacing / 2.0, spacing * np.sqrt(3.0) / 2.0])
    reach = int(np.ceil(max_radius / spacing)) + 1
    pts = []
    for i in range(-2 * reach, 2 * reach + 1):
        for j in range(-2 * reach, 2 * reach + 1):
            p = i * a1 + j * a2
            if p @ p <= max_radius**2 + 1e-9:
                pts.append(p)
    pts = np.array(pts)
    order = np.lexsort((pts[:, 1].round(9), pts[:, 0].round(9), (pts**2).sum(1).round(9)))
    return pts[order]


def embed(
    model: QuboModel | np.ndarray,
    device: DeviceSpec = DeviceSpec(),
    seed: int = 0,
) -> tuple[Register, float]:
    """Greedy register embedding; returns the register and the achieved
    total deviation sum_{i!=j} |q_ij - u_ij|.

    Raises :class:`CapacityError` when the lattice offers fewer candidate
    positions than atoms.
    """
    Q = model.Q if isinstance(model, QuboModel) else np.asarray(model, dtype=float)
    M = Q.shape[0]
    J = coupling_matrix(Q)

    mags = np.abs(J[np.triu_indices(M, k=1)]) if M > 1 else np.zeros(0)
    positive = mags[mags > 0]
    if positive.size:
        qbar = float(np.median(positive))
        spacing = (device.c6 / qbar) ** (1.0 / 6.0)
    else:
        spacing = device.max_radius / 2.0
    spacing = float(np.clip(spacing, device.min_distance, device.max_radius / 2.0))

    lattice = triangular_lattice(spacing, device.max_radius)
    if lattice.shape[0] < M:
        raise CapacityError(f"{lattice.shape[0]} candidate positions for {M} atoms")

    rng = np.random.default_rng(seed)
    first = int(rng.integers(0, M))
    order = [first] + [u for u in range(M) if u != first]

    placed_pos = np.zeros((M, 2))
    placed_pos[first] = lattice[0]  # lattice[0] is the center
    available = [tuple(np.round(p, 9)) for p in lattice[1:]]
    avail_arr = lattice[1:].copy()
    placed = [first]

    for u in order[1:]:
        prev = placed_pos[placed]  # (k, 2)
        diff = avail_arr[:, None, :] - prev[None, :, :]
        r6 = ((diff**2).sum(-1)) ** 3
        with np.errstate(divide="ignore"):
            u_cand = device.c6 / r6
        dev = np.abs(J[u, placed][None, :] - u_cand).sum(axis=1)
        best = int(np.argmin(dev))  # candidates pre-sorted by the tie rule
        placed_pos[u] = avail_arr[best]
        avail_arr = np.delete(avail_arr, best, axis=0)
        placed.append(u)

    register = Register(
        positions=placed_pos,
        c6=device.c6,
        min_distance=device.min_distance,
        max_radius=device.max_radius,
    )
    U = register.interaction_matrix()
    off = ~np.eye(M, dtype=bool)
    deviation = float(np.abs(J - U)[off].sum())
    return register, deviation
