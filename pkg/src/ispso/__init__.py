"""Chaos-initialised binary PSO with storage-list seeding for wrapper feature selection."""
from .data import Dataset, FoldPlan, load_dataset, normalize, project, stratified_kfold
from .fitness import FitnessValue, KnnParams, compare_solutions, evaluate_fitness
from .orchestrator import ISPSO_GLOBAL, PLAIN_BPSO, AlgorithmConfig, RunResult, run_batch, run_once

__all__ = [
    "AlgorithmConfig",
    "Dataset",
    "FitnessValue",
    "FoldPlan",
    "ISPSO_GLOBAL",
    "KnnParams",
    "PLAIN_BPSO",
    "RunResult",
    "compare_solutions",
    "evaluate_fitness",
    "load_dataset",
    "normalize",
    "project",
    "run_batch",
    "run_once",
    "stratified_kfold",
]
