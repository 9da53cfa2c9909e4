from veilface.evaluation.baselines import *
from veilface.evaluation.metrics import *
from veilface.evaluation.report import *
from veilface.evaluation.sweep import *
from veilface.evaluation.types import *

__all__ = [
    "DEFAULT_BASELINE_EPS",
    "DEFAULT_PGD_STEPS",
    "MIN_IMPOSTOR_PAIRS",
    "EvaluationConfig",
    "QualityMetrics",
    "RateCell",
    "AblationPoint",
    "MetricsReport",
    "PIXEL_RANGE",
    "attack_success_rate",
    "erasion_success_rate",
    "target_similarities",
    "asr",
    "esr",
    "quality_metrics",
    "target_loss",
    "pgd_baseline",
    "fgsm_baseline",
    "rate_cells",
    "robustness_sweep",
    "ablation_sweep",
    "evaluate_protection",
    "CSV_COLUMNS",
    "save_report",
    "load_report",
    "similarity_rows",
    "write_similarity_csv",
]
