"""Feature budget, vote storage, Boltzmann sampling and correlation-aware add/delete."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bpso import SwarmState
from .data import Dataset, mask_indices
from .fitness import FitnessValue, compare_solutions

# Relative tolerance when deciding two mean |correlation| values are tied.
COR_TIE_TOL = 1e-12


@dataclass(frozen=True)
class SeedingParams:
    r: float | None = None
    v: float = 0.5
    temperature: float | None = None
    record_every: int = 5
    top_fraction: float = 0.2
    seed_fraction: float = 0.25
    invert_sign: bool = False

    def __post_init__(self):
        if self.r is not None and not 1 <= self.r <= 50:
            raise ValueError(f"seeding.r must lie in [1, 50], got {self.r}")
        if not 0 <= self.v <= 1:
            raise ValueError(f"seeding.v must lie in [0, 1], got {self.v}")
        if self.temperature is not None and self.temperature <= 0:
            raise ValueError("seeding.temperature must be > 0")
        if self.record_every < 1:
            raise ValueError("seeding.record_every must be >= 1")
        if not 0 < self.top_fraction <= 1:
            raise ValueError("seeding.top_fraction must lie in (0, 1]")
        if not 0 <= self.seed_fraction <= 1:
            raise ValueError("seeding.seed_fraction must lie in [0, 1]")

    def r_for(self, n_samples: int) -> float:
        """Explicit ``r``, else 50 for large sets (> 500 rows) and 1 for small ones."""
        if self.r is not None:
            return self.r
        return 50.0 if n_samples > 500 else 1.0


def feature_budget(n_features: int, n_samples: int, v: float, r: float) -> int:
    """Target subset size: ceil(((N - vN) + CR) / (CR - r)), clamped to [1, N]."""
    if not 0 <= v <= 1:
        raise ValueError(f"v must lie in [0, 1], got {v}")
    if not 1 <= r <= 50:
        raise ValueError(f"r must lie in [1, 50], got {r}")
    if n_samples - r <= 0:
        raise ValueError(f"sample count {n_samples} must exceed r={r}")
    raw = ((n_features - v * n_features) + n_samples) / (n_samples - r)
    return int(min(max(math.ceil(raw), 1), n_features))


def pearson(xi: Sequence[float], xj: Sequence[float]) -> float:
    a = np.asarray(xi, dtype=float)
    b = np.asarray(xj, dtype=float)
    if a.shape != b.shape:
        raise ValueError("vectors must have equal length")
    if a.ndim != 1 or len(a) < 2:
        raise ValueError("need at least two observations")
    da, db = a - a.mean(), b - b.mean()
    den = math.sqrt(float(np.dot(da, da))) * math.sqrt(float(np.dot(db, db)))
    if den == 0.0:
        return 0.0
    return float(np.clip(np.dot(da, db) / den, -1.0, 1.0))


@dataclass(frozen=True)
class CorrelationProfile:
    pairwise: np.ndarray

    @classmethod
    def from_dataset(cls, d: Dataset) -> "CorrelationProfile":
        x = d.samples - d.samples.mean(axis=0)
        norms = np.sqrt((x * x).sum(axis=0))
        live = norms > 0
        c = np.zeros((d.n_features, d.n_features))
        xs = x[:, live] / norms[live]
        c[np.ix_(live, live)] = np.clip(xs.T @ xs, -1.0, 1.0)
        c = (c + c.T) / 2
        np.fill_diagonal(c, 0.0)
        c.setflags(write=False)
        return cls(c)

    @property
    def n_features(self) -> int:
        return self.pairwise.shape[0]

    def mean_abs(self, mask) -> np.ndarray:
        """Mean |c_ij| of each masked feature against the other masked ones (NaN elsewhere)."""
        idx = mask_indices(mask)
        out = np.full(self.n_features, np.nan)
        if len(idx) >= 2:
            sub = np.abs(self.pairwise[np.ix_(idx, idx)])
            out[idx] = sub.sum(axis=1) / (len(idx) - 1)
        return out


def mean_abs_correlation(i: int, profile: CorrelationProfile, mask) -> float:
    idx = mask_indices(mask)
    if len(idx) < 2:
        raise ValueError("mean correlation needs at least two selected features")
    if i not in idx:
        raise ValueError(f"feature {i} is not selected by the mask")
    others = idx[idx != i]
    return float(np.abs(profile.pairwise[i, others]).sum() / len(others))


@dataclass
class StorageList:
    votes: np.ndarray
    top_fraction: float = 0.2
    recorded_iterations: list[int] = field(default_factory=list)
    snapshots: list[np.ndarray] | None = None

    @classmethod
    def empty(cls, n_features: int, top_fraction: float = 0.2, keep_snapshots: bool = False) -> "StorageList":
        return cls(np.zeros(n_features, dtype=np.int64), top_fraction, [], [] if keep_snapshots else None)

    def recount(self) -> np.ndarray:
        """Votes rebuilt from retained snapshots (requires ``keep_snapshots``)."""
        if self.snapshots is None:
            raise RuntimeError("snapshots were not retained")
        total = np.zeros_like(self.votes)
        for snap in self.snapshots:
            total += snap.sum(axis=0)
        return total


def rank_particles(fitnesses: Sequence[FitnessValue], tie_eps: float = 1e-9) -> list[int]:
    """Particle indices best-first; equal fitness keeps index order."""
    order = list(range(len(fitnesses)))
    # insertion sort keeps the comparison exactly compare_solutions
    for a in range(1, len(order)):
        b = a
        while b > 0 and compare_solutions(fitnesses[order[b]], fitnesses[order[b - 1]], tie_eps) > 0:
            order[b], order[b - 1] = order[b - 1], order[b]
            b -= 1
    return order


def record_votes(
    storage: StorageList,
    positions: np.ndarray,
    fitnesses: Sequence[FitnessValue],
    iteration: int,
    tie_eps: float = 1e-9,
) -> StorageList:
    """Add one vote per set bit of each of the fittest ``top_fraction`` particles."""
    if iteration in storage.recorded_iterations:
        raise ValueError(f"iteration {iteration} already recorded")
    positions = np.asarray(positions)
    n_top = math.ceil(storage.top_fraction * len(positions))
    top = rank_particles(fitnesses, tie_eps)[:n_top]
    picked = positions[top].astype(np.int64)
    storage.votes += picked.sum(axis=0)
    storage.recorded_iterations.append(iteration)
    if storage.snapshots is not None:
        storage.snapshots.append(picked.copy())
    return storage


def adaptive_temperature(votes: np.ndarray) -> float:
    return max(1.0, float(np.max(votes)) / 3.0)


def boltzmann_probs(votes: Sequence[float], temperature: float, invert_sign: bool = False) -> np.ndarray:
    """Softmax of votes / T; more votes means more probability unless ``invert_sign``."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    z = np.asarray(votes, dtype=float) / temperature
    if z.size == 0:
        raise ValueError("need at least one vote entry")
    if invert_sign:
        z = -z
    e = np.exp(z - z.max())
    return e / e.sum()


def seed_particle(
    storage: StorageList,
    k: int,
    rng: np.random.Generator,
    temperature: float | None = None,
    invert_sign: bool = False,
) -> np.ndarray:
    """Draw ``k`` distinct features, each draw Boltzmann-weighted over those left."""
    votes = np.asarray(storage.votes, dtype=float)
    n = len(votes)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    t = adaptive_temperature(votes) if temperature is None else temperature
    remaining = list(range(n))
    mask = np.zeros(n, dtype=np.int8)
    for _ in range(k):
        p = boltzmann_probs(votes[remaining], t, invert_sign)
        u = rng.random()
        pick = min(int(np.searchsorted(np.cumsum(p), u, side="right")), len(remaining) - 1)
        mask[remaining.pop(pick)] = 1
    return mask


def prune_particle(mask, profile: CorrelationProfile, k: int, votes: Sequence[int] | None = None) -> np.ndarray:
    """Drop the most redundant selected feature until ``k`` remain.

    Redundancy is mean |correlation| with the other selected features;
    ties drop the lower-voted feature, then the lower index.
    """
    mask = np.array(mask, dtype=np.int8)
    if mask.sum() <= k:
        raise ValueError(f"mask has {int(mask.sum())} features, nothing to prune down to {k}")
    if k < 1:
        raise ValueError("k must be >= 1")
    votes = np.zeros(len(mask)) if votes is None else np.asarray(votes, dtype=float)
    while mask.sum() > k:
        cor = profile.mean_abs(mask)
        idx = mask_indices(mask)
        top = np.nanmax(cor)
        tied = [j for j in idx if cor[j] >= top - COR_TIE_TOL * max(1.0, abs(top))]
        drop = min(tied, key=lambda j: (votes[j], j))
        mask[drop] = 0
    return mask


def apply_seeding(
    swarm: SwarmState,
    storage: StorageList,
    params: SeedingParams,
    k: int,
    profile: CorrelationProfile,
    rng: np.random.Generator,
    fitnesses: Sequence[FitnessValue],
) -> list[int]:
    """Overwrite the worst particles (never the gbest holder) with seeded masks.

    ``fitnesses`` rank the particles' current positions. Replaced particles get
    zero velocity and keep their personal-best record. Returns the indices replaced.
    """
    n_seed = math.floor(params.seed_fraction * len(swarm.particles))
    if n_seed == 0:
        return []
    worst_first = rank_particles(fitnesses, swarm.tie_eps)[::-1]
    targets = [i for i in worst_first if i != swarm.gbest_index][:n_seed]
    for i in targets:
        m = seed_particle(storage, k, rng, params.temperature, params.invert_sign)
        if m.sum() > k:
            m = prune_particle(m, profile, k, storage.votes)
        p = swarm.particles[i]
        p.position = m
        p.velocity = np.zeros_like(p.velocity)
    return targets
