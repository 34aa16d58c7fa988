"""The full search loop, its plain-BPSO baseline, and batches of seeded runs.

Random draws come from one ``numpy`` generator per run, consumed in this order:

* start: chaos seed (if unset), initial population (baseline: one P x d block),
  empty-mask repairs;
* each iteration ``t``:
  1. seeding, when ``t`` is a multiple of ``record_every``: ``K`` uniforms per
     replaced particle, worst particle first;
  2. ``r1`` block, ``r2`` block and position block, each P x d, particle-major;
     then one integer per empty position, in particle order;
  3. mutation: one trigger uniform; if it fires, ``d`` per-bit uniforms and
     any forcing/repair integers.

Fitness is pure, so evaluation order never touches the generator.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bpso import (
    PsoParams,
    SwarmState,
    repair_empty,
    update_bests,
    update_position,
    update_velocity,
)
from .chaos import ChaosConfig, init_population
from .data import Dataset, normalize, stratified_kfold
from .fitness import FitnessEvaluator, FitnessValue, KnnParams, compare_solutions
from .metrics import confusion, precision_recall_f
from .mutation import MutationParams, mutate_gbest, replace_gworst
from .seeding import (
    CorrelationProfile,
    SeedingParams,
    StorageList,
    apply_seeding,
    feature_budget,
    prune_particle,
    record_votes,
)

ISPSO_GLOBAL = "ispso_global"
PLAIN_BPSO = "plain_bpso"
VARIANTS = (ISPSO_GLOBAL, PLAIN_BPSO)


@dataclass(frozen=True)
class AlgorithmConfig:
    pso: PsoParams = PsoParams()
    chaos: ChaosConfig = ChaosConfig(seed_x0=None)
    seeding: SeedingParams = SeedingParams()
    mutation: MutationParams = MutationParams()
    knn: KnnParams = KnnParams()
    cv_folds: int = 10
    seed: int = 0
    variant: str = ISPSO_GLOBAL
    normalize_bounds: tuple[float, float] | None = (-1.0, 1.0)
    normalize_per_fold: bool = False
    chaotic_velocity: bool = False
    enforce_final_budget: bool = False
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.cv_folds < 2:
            raise ValueError("cv.folds must be >= 2")
        if self.normalize_bounds is not None:
            lo, hi = self.normalize_bounds
            if not hi > lo:
                raise ValueError("normalization upper bound must exceed lower bound")

    def with_seed(self, seed: int) -> "AlgorithmConfig":
        return replace(self, seed=seed)


@dataclass
class RunTrace:
    """Per-run diagnostics used by the invariant checks."""

    max_abs_velocity: list[float] = field(default_factory=list)
    seeded: list[tuple[int, list[int], list[int]]] = field(default_factory=list)
    mutant_distances: list[int] = field(default_factory=list)
    storage: StorageList | None = None
    n_evaluations: int = 0


@dataclass
class RunResult:
    best_mask: np.ndarray
    best_fitness: FitnessValue
    history: list[FitnessValue]
    wall_time: float
    seed: int
    budget: int
    final_mask: np.ndarray
    final_fitness: FitnessValue
    precision: float
    recall: float
    f_measure: float
    trace: RunTrace = field(repr=False, default_factory=RunTrace)

    @property
    def selected(self) -> list[int]:
        """1-based indices of the reported subset."""
        return [int(j) + 1 for j in np.flatnonzero(self.final_mask)]


def _prepare(d: Dataset, cfg: AlgorithmConfig) -> tuple[Dataset, tuple[float, float] | None]:
    if cfg.normalize_bounds is None:
        return d, None
    if cfg.normalize_per_fold:
        return d, cfg.normalize_bounds
    return normalize(d, *cfg.normalize_bounds), None


def run_once(d: Dataset, cfg: AlgorithmConfig) -> RunResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    pso, sp = cfg.pso, cfg.seeding
    n, dim = d.n_samples, d.n_features
    ispso = cfg.variant == ISPSO_GLOBAL

    r = sp.r_for(n)
    if n - r <= 0:
        raise ValueError(f"{d.name}: sample count {n} must exceed seeding.r={r}")
    budget = feature_budget(dim, n, sp.v, r)

    data, per_fold = _prepare(d, cfg)
    plan = stratified_kfold(data, cfg.cv_folds, seed=cfg.seed)
    evaluate = FitnessEvaluator(data, plan, cfg.knn, per_fold_scaling=per_fold)
    eps = cfg.knn.tie_eps

    if ispso:
        chaos = cfg.chaos.resolve(rng)
        positions, velocities = init_population(
            pso.n_particles, dim, chaos, rng, vmax=pso.vmax if cfg.chaotic_velocity else None
        )
        profile = CorrelationProfile.from_dataset(data)
        storage = StorageList.empty(dim, sp.top_fraction, cfg.keep_snapshots)
    else:
        positions = (rng.random((pso.n_particles, dim)) < 0.5).astype(np.int8)
        for i in range(pso.n_particles):
            positions[i] = repair_empty(positions[i], rng)
        velocities = np.zeros((pso.n_particles, dim))
        storage = None

    swarm = SwarmState.from_arrays(positions, velocities, tie_eps=eps)
    trace = RunTrace(storage=storage)
    current = [evaluate(p.position) for p in swarm.particles]
    update_bests(swarm, current)
    history = [swarm.gbest_fitness]

    for t in range(1, pso.max_iterations + 1):
        swarm.iteration = t
        seeded: list[int] = []
        if ispso and t % sp.record_every == 0:
            record_votes(storage, swarm.positions, current, t, eps)
            seeded = apply_seeding(swarm, storage, sp, budget, profile, rng, current)
            if seeded:
                trace.seeded.append(
                    (t, seeded, [int(swarm.particles[i].position.sum()) for i in seeded])
                )

        r1 = rng.random((pso.n_particles, dim))
        r2 = rng.random((pso.n_particles, dim))
        u = rng.random((pso.n_particles, dim))
        gbest = swarm.gbest_position
        for i, p in enumerate(swarm.particles):
            if i in seeded:
                continue
            p.velocity = update_velocity(p, gbest, pso, r1=r1[i], r2=r2[i])
            p.position = update_position(p.velocity, rng, draws=u[i])
        trace.max_abs_velocity.append(float(max(np.abs(p.velocity).max() for p in swarm.particles)))

        if ispso and rng.random() < cfg.mutation.trigger_prob:
            mutant = mutate_gbest(swarm.gbest_position, cfg.mutation, rng)
            trace.mutant_distances.append(int(np.sum(mutant != swarm.gbest_position)))
            replace_gworst(swarm, mutant, evaluate(mutant), current, exclude=set(seeded))

        current = [evaluate(p.position) for p in swarm.particles]
        update_bests(swarm, current)
        history.append(swarm.gbest_fitness)

    best_mask = swarm.gbest_position.copy()
    final_mask, final_fit = best_mask, swarm.gbest_fitness
    if cfg.enforce_final_budget and best_mask.sum() > budget:
        votes = storage.votes if storage is not None else None
        final_mask = prune_particle(best_mask, CorrelationProfile.from_dataset(data), budget, votes)
        final_fit = evaluate(final_mask)

    preds = evaluate.predictions(final_mask)
    counts = confusion(data.codes.tolist(), preds.tolist(), range(data.n_classes))
    p, rc, f = precision_recall_f(counts)
    trace.n_evaluations = evaluate.n_calls
    return RunResult(
        best_mask=best_mask,
        best_fitness=swarm.gbest_fitness,
        history=history,
        wall_time=time.perf_counter() - t0,
        seed=cfg.seed,
        budget=budget,
        final_mask=final_mask,
        final_fitness=final_fit,
        precision=p,
        recall=rc,
        f_measure=f,
        trace=trace,
    )


def history_is_monotone(history: list[FitnessValue], tie_eps: float = 1e-9) -> bool:
    return all(compare_solutions(b, a, tie_eps) >= 0 for a, b in zip(history, history[1:]))


@dataclass(frozen=True)
class BatchSummary:
    n_runs: int
    mean_accuracy: float
    sd_accuracy: float
    mean_subset_size: float
    mean_wall_time: float
    mean_precision: float
    mean_recall: float
    mean_f_measure: float

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(accuracies, sizes, wall_times=(), precisions=(), recalls=(), fs=()) -> BatchSummary:
    acc = np.asarray(accuracies, dtype=float)
    if acc.size == 0:
        raise ValueError("no runs to summarize")
    sd = float(np.std(acc, ddof=1)) if acc.size > 1 else 0.0

    def mean(xs):
        xs = list(xs)
        return float(np.mean(xs)) if xs else math.nan

    return BatchSummary(
        n_runs=int(acc.size),
        mean_accuracy=float(np.mean(acc)),
        sd_accuracy=sd,
        mean_subset_size=mean(sizes),
        mean_wall_time=mean(wall_times),
        mean_precision=mean(precisions),
        mean_recall=mean(recalls),
        mean_f_measure=mean(fs),
    )


def _run_seeded(args):
    d, cfg = args
    return run_once(d, cfg)


def run_batch(
    d: Dataset,
    cfg: AlgorithmConfig,
    n_runs: int = 20,
    base_seed: int | None = None,
    jobs: int = 1,
) -> tuple[list[RunResult], BatchSummary]:
    """``n_runs`` independent runs with seeds ``base_seed + i``."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    base = cfg.seed if base_seed is None else base_seed
    tasks = [(d, cfg.with_seed(base + i)) for i in range(n_runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_seeded, tasks))
    else:
        results = [_run_seeded(t) for t in tasks]
    summary = summarize(
        [r.final_fitness.cv_accuracy for r in results],
        [r.final_fitness.n_selected for r in results],
        [r.wall_time for r in results],
        [r.precision for r in results],
        [r.recall for r in results],
        [r.f_measure for r in results],
    )
    return results, summary
