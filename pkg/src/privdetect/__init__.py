"""Differentially private entity sanitization and perturbation-trajectory text detection."""

from .allocator import BudgetExceededError, BudgetPlan, PlanConfig, build_plan
from .corpus import Document, filter_corpus, generate_reference, generate_synthetic, read_corpus
from .detector import ClassifierModel, Dataset, TrainConfig, filter_outliers, split_stratified, train
from .entities import EntityKind, SensitivityRegistry, default_registry, load_registry
from .extractor import EntitySpan, ExtractionResult, extract
from .features import FeatureTrajectory, extract_trajectory
from .mechanisms import RandomSource, laplace_sample, perturb_numeric, perturb_textual
from .pipeline import RunConfig, run_ablation, run_pipeline
from .sanitizer import epsilon_grid, sanitize, sanitize_grid
from .scoring import TrigramScorer
from .stats import cohens_d, mann_whitney_u

__all__ = [
    "BudgetExceededError", "BudgetPlan", "PlanConfig", "build_plan",
    "Document", "filter_corpus", "generate_reference", "generate_synthetic", "read_corpus",
    "ClassifierModel", "Dataset", "TrainConfig", "filter_outliers", "split_stratified", "train",
    "EntityKind", "SensitivityRegistry", "default_registry", "load_registry",
    "EntitySpan", "ExtractionResult", "extract",
    "FeatureTrajectory", "extract_trajectory",
    "RandomSource", "laplace_sample", "perturb_numeric", "perturb_textual",
    "RunConfig", "run_ablation", "run_pipeline",
    "epsilon_grid", "sanitize", "sanitize_grid",
    "TrigramScorer",
    "cohens_d", "mann_whitney_u",
]
