"""Gbest mutation and worst-particle replacement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bpso import SwarmState
from .fitness import FitnessValue, beats, compare_solutions

FLIP = "flip"
REVERSE = "reverse"


@dataclass(frozen=True)
class MutationParams:
    trigger_prob: float = 0.5
    per_bit_prob: float | None = None  # None means 1/d
    mode: str = FLIP

    def __post_init__(self):
        if not 0 <= self.trigger_prob <= 1:
            raise ValueError("mutation.trigger_prob must lie in [0, 1]")
        if self.per_bit_prob is not None and not 0 <= self.per_bit_prob <= 1:
            raise ValueError("mutation.per_bit_prob must lie in [0, 1]")
        if self.mode not in (FLIP, REVERSE):
            raise ValueError(f"mutation.mode must be {FLIP!r} or {REVERSE!r}")

    def bit_prob(self, d: int) -> float:
        return 1.0 / d if self.per_bit_prob is None else self.per_bit_prob


def mutate_gbest(
    gbest: np.ndarray,
    params: MutationParams,
    rng: np.random.Generator,
    draws: np.ndarray | None = None,
) -> np.ndarray:
    """Copy of ``gbest`` differing from it in at least one bit and never empty.

    Each bit flips with probability ``params.bit_prob(d)``; if none did, one
    random bit is forced. An emptied mutant gets one bit switched on, chosen
    so the mutant still differs from ``gbest`` (impossible only when d == 1,
    where the one non-empty mask is ``gbest`` itself).
    ``draws`` pins the per-bit uniforms.
    """
    g = np.asarray(gbest, dtype=np.int8)
    d = len(g)
    if not g.any():
        raise ValueError("gbest must have at least one selected feature")
    if params.mode == REVERSE:
        mutant = (1 - g).astype(np.int8)
    else:
        if draws is None:
            draws = rng.random(d)
        flip = np.asarray(draws) < params.bit_prob(d)
        if not flip.any():
            flip[rng.integers(d)] = True
        mutant = np.where(flip, 1 - g, g).astype(np.int8)
    if not mutant.any():
        ones = np.flatnonzero(g)
        # re-setting the sole original bit would undo the mutation
        choices = np.arange(d) if len(ones) > 1 else np.flatnonzero(g == 0)
        if len(choices) == 0:
            choices = ones
        mutant[choices[rng.integers(len(choices))]] = 1
    return mutant


def worst_index(fitnesses, tie_eps: float = 1e-9, exclude=()) -> int:
    """Index of the worst fitness; ties go to the lowest index."""
    worst = None
    for i, fv in enumerate(fitnesses):
        if i in exclude:
            continue
        if worst is None or compare_solutions(fv, fitnesses[worst], tie_eps) < 0:
            worst = i
    if worst is None:
        raise ValueError("no eligible particle")
    return worst


def replace_gworst(
    swarm: SwarmState,
    mutant: np.ndarray,
    fitness: FitnessValue,
    current: list[FitnessValue],
    exclude=(),
) -> int:
    """Put ``mutant`` into the worst particle; gbest moves only if the mutant beats it.

    ``current`` holds each particle's current fitness; it is updated in place
    for the replaced slot. Returns the replaced index.
    """
    i = worst_index(current, swarm.tie_eps, exclude)
    p = swarm.particles[i]
    p.position = np.array(mutant, dtype=np.int8)
    p.velocity = np.zeros_like(p.velocity)
    current[i] = fitness
    eps = swarm.tie_eps
    if p.pbest_fitness is None or beats(fitness, p.pbest_fitness, eps):
        p.pbest_position = p.position.copy()
        p.pbest_fitness = fitness
        if swarm.gbest_fitness is None or beats(fitness, swarm.gbest_fitness, eps):
            swarm.gbest_position = p.position.copy()
            swarm.gbest_fitness = fitness
            swarm.gbest_index = i
    return i
