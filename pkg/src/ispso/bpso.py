"""Binary PSO dynamics: velocity update, sigmoid transfer, bit sampling, best tracking."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fitness import FitnessValue, beats


@dataclass(frozen=True)
class PsoParams:
    c1: float = 1.5
    c2: float = 2.0
    vmax: float = 4.0
    n_particles: int = 30
    max_iterations: int = 100
    inertia: float = 1.0

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("pso.c1 and pso.c2 must be > 0")
        if self.vmax <= 0:
            raise ValueError("pso.vmax must be > 0")
        if self.n_particles < 2:
            raise ValueError("pso.particles must be >= 2")
        if self.max_iterations < 0:
            raise ValueError("pso.iterations must be >= 0")


@dataclass
class ParticleState:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: FitnessValue | None = None


@dataclass
class SwarmState:
    particles: list[ParticleState]
    gbest_position: np.ndarray | None = None
    gbest_fitness: FitnessValue | None = None
    gbest_index: int = -1
    iteration: int = 0
    tie_eps: float = field(default=1e-9, repr=False)

    @classmethod
    def from_arrays(cls, positions: np.ndarray, velocities: np.ndarray, tie_eps: float = 1e-9) -> "SwarmState":
        parts = [
            ParticleState(np.array(x, dtype=np.int8), np.array(v, dtype=float), np.array(x, dtype=np.int8))
            for x, v in zip(positions, velocities)
        ]
        return cls(parts, tie_eps=tie_eps)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.particles])

    def __len__(self) -> int:
        return len(self.particles)


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-np.asarray(v, dtype=float)))


def update_velocity(
    p: ParticleState,
    gbest: np.ndarray,
    params: PsoParams,
    rng: np.random.Generator | None = None,
    r1: np.ndarray | None = None,
    r2: np.ndarray | None = None,
) -> np.ndarray:
    """One cognitive and one social draw per dimension; result clamped to ±vmax.

    Pass ``r1``/``r2`` to pin the uniform draws; otherwise they come from
    ``rng`` (r1 block first, then r2).
    """
    d = len(p.position)
    if len(p.velocity) != d or len(p.pbest_position) != d or len(gbest) != d:
        raise ValueError("position, velocity, pbest and gbest must share one length")
    if r1 is None:
        r1 = rng.random(d)
    if r2 is None:
        r2 = rng.random(d)
    x = p.position.astype(float)
    v = (
        params.inertia * p.velocity
        + params.c1 * r1 * (p.pbest_position - x)
        + params.c2 * r2 * (np.asarray(gbest, dtype=float) - x)
    )
    return np.clip(v, -params.vmax, params.vmax)


def repair_empty(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if not mask.any():
        mask = mask.copy()
        mask[rng.integers(len(mask))] = 1
    return mask


def update_position(
    velocity: np.ndarray,
    rng: np.random.Generator | None = None,
    draws: np.ndarray | None = None,
) -> np.ndarray:
    if draws is None:
        draws = rng.random(len(velocity))
    bits = (np.asarray(draws) < sigmoid(velocity)).astype(np.int8)
    if not bits.any():
        if rng is None:
            rng = np.random.default_rng(0)
        bits = repair_empty(bits, rng)
    return bits


def update_bests(swarm: SwarmState, fitnesses: Sequence[FitnessValue]) -> SwarmState:
    """Refresh personal bests, then the global best; incumbents win ties."""
    if len(fitnesses) != len(swarm.particles):
        raise ValueError("need exactly one fitness per particle")
    eps = swarm.tie_eps
    for p, fv in zip(swarm.particles, fitnesses):
        if p.pbest_fitness is None or beats(fv, p.pbest_fitness, eps):
            p.pbest_position = p.position.copy()
            p.pbest_fitness = fv
    for i, p in enumerate(swarm.particles):
        if swarm.gbest_fitness is None or beats(p.pbest_fitness, swarm.gbest_fitness, eps):
            swarm.gbest_fitness = p.pbest_fitness
            swarm.gbest_position = p.pbest_position.copy()
            swarm.gbest_index = i
    return swarm
