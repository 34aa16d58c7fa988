"""Chaotic orbits and chaos-seeded binary populations."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

LOGISTIC = "logistic"
TENT = "tent-threshold"

# An exact slope of 2 shifts one mantissa bit out per step, so a float
# tent orbit collapses to 0 within ~55 iterates.
TENT_MAX_SLOPE = 1.9999

_DEGENERATE = {
    LOGISTIC: (0.0, 0.25, 0.5, 0.75, 1.0),
    TENT: (0.0, 0.5, 1.0),
}


@dataclass(frozen=True)
class ChaosConfig:
    map_kind: str = LOGISTIC
    alpha: float = 4.0
    seed_x0: float | None = 0.3
    burn_in: int = 100

    def __post_init__(self):
        if self.map_kind not in _DEGENERATE:
            raise ValueError(f"chaos.map must be one of {sorted(_DEGENERATE)}, got {self.map_kind!r}")
        x0 = self.seed_x0
        if x0 is not None and not 0.0 < x0 < 1.0:
            raise ValueError(f"chaos.seed must lie in (0, 1), got {x0}")
        if x0 is not None and any(abs(self.seed_x0 - b) < 1e-12 for b in _DEGENERATE[self.map_kind]):
            raise ValueError(f"chaos.seed {self.seed_x0} is a degenerate seed for the {self.map_kind} map")
        if not 0.0 < self.alpha <= 4.0:
            raise ValueError(f"chaos.alpha must lie in (0, 4], got {self.alpha}")
        if self.burn_in < 0:
            raise ValueError("chaos.burn_in must be >= 0")

    def resolve(self, rng: np.random.Generator) -> "ChaosConfig":
        """Fill an unset seed with a non-degenerate draw from ``rng``."""
        if self.seed_x0 is not None:
            return self
        while True:
            x0 = float(rng.uniform(0.01, 0.99))
            if all(abs(x0 - b) > 1e-6 for b in _DEGENERATE[self.map_kind]):
                return replace(self, seed_x0=x0)


def _check_unit(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"value {x} outside [0, 1]")


def logistic_step(x: float, alpha: float = 4.0) -> float:
    _check_unit(x)
    return alpha * x * (1.0 - x)


def tent_step(x: float, alpha: float = 4.0) -> float:
    """Tent map with slope alpha/2, capped just below 2."""
    _check_unit(x)
    return min(alpha / 2.0, TENT_MAX_SLOPE) * min(x, 1.0 - x)


def tent_binarize(x: float) -> int:
    _check_unit(x)
    return 1 if x >= 0.5 else 0


def chaotic_sequence(cfg: ChaosConfig, length: int) -> np.ndarray:
    if length < 1:
        raise ValueError("length must be >= 1")
    if cfg.seed_x0 is None:
        raise ValueError("chaos seed is unset; call cfg.resolve(rng) first")
    step = logistic_step if cfg.map_kind == LOGISTIC else tent_step
    x = cfg.seed_x0
    for _ in range(cfg.burn_in):
        x = step(x, cfg.alpha)
    out = np.empty(length)
    for i in range(length):
        x = step(x, cfg.alpha)
        out[i] = x
    return out


def init_population(
    n_particles: int,
    n_features: int,
    cfg: ChaosConfig,
    rng: np.random.Generator | None = None,
    vmax: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Binary positions read off one chaotic orbit, ``n_features`` iterates per particle.

    Returns ``(positions, velocities)``. Velocities are zero unless ``vmax`` is
    given, in which case the orbit continues and its iterates are mapped onto
    [-vmax, vmax]. Empty rows get one bit forced on, chosen with ``rng``
    (a fixed generator if omitted).
    """
    if n_particles < 1 or n_features < 1:
        raise ValueError("need at least one particle and one feature")
    size = n_particles * n_features
    orbit = chaotic_sequence(cfg, 2 * size if vmax else size)
    positions = (orbit[:size] >= 0.5).reshape(n_particles, n_features).astype(np.int8)
    rng = np.random.default_rng(0) if rng is None else rng
    for i in np.flatnonzero(positions.sum(axis=1) == 0):
        positions[i, rng.integers(n_features)] = 1
    if vmax:
        velocities = ((2.0 * orbit[size:] - 1.0) * vmax).reshape(n_particles, n_features)
    else:
        velocities = np.zeros((n_particles, n_features))
    return positions, velocities
