"""Pilot-stage validation of formative survey constructs."""
__version__ = "0.1.0"

from .config import Config, load_config
from .spec_model import (ClassificationAnswers, ConstructSpec, ItemSpec, MeasurementSpec,
                         Recommendation, classify_construct, load_spec, parse_spec,
                         serialize_spec, validate_spec)
from .ingest import (PilotDataset, SmeRatingSet, apply_missing_policy, load_pilot_csv,
                     load_sme_ratings)
from .content_validity import (CvrResult, WeightVector, compute_cvr, cvr_critical_value,
                               derive_weights, researcher_rating_weights)
from .diagnostics import (compute_vif, correlation_matrix, cronbach_alpha,
                          detect_outlier_respondents, item_descriptives,
                          sample_size_adequacy)
from .composites import (CompositeScores, build_higher_order_dataset, weighted_mean_scores,
                         weighted_median_scores)
from .workflow import (GateDecision, IterationRecord, Status, check_iteration_overlap,
                       evaluate_gates, run_project, run_validation)
from .report import generate_report, rerun_from_report
from .synthgen import SynthConfig, generate_pilot_data, generate_sme_ratings

__all__ = [
    "Config", "load_config",
    "ClassificationAnswers", "ConstructSpec", "ItemSpec", "MeasurementSpec", "Recommendation",
    "classify_construct", "load_spec", "parse_spec", "serialize_spec", "validate_spec",
    "PilotDataset", "SmeRatingSet", "apply_missing_policy", "load_pilot_csv",
    "load_sme_ratings",
    "CvrResult", "WeightVector", "compute_cvr", "cvr_critical_value", "derive_weights",
    "researcher_rating_weights",
    "compute_vif", "correlation_matrix", "cronbach_alpha", "detect_outlier_respondents",
    "item_descriptives", "sample_size_adequacy",
    "CompositeScores", "build_higher_order_dataset", "weighted_mean_scores",
    "weighted_median_scores",
    "GateDecision", "IterationRecord", "Status", "check_iteration_overlap", "evaluate_gates",
    "run_project", "run_validation",
    "generate_report", "rerun_from_report",
    "SynthConfig", "generate_pilot_data", "generate_sme_ratings",
]
