from .metrics import (
    MetricsReport,
    RankedList,
    auc,
    expected_random_ndcg,
    ndcg_at_k,
    rank_of_positive,
    ranked_order,
    recall_at_k,
)
from .analysis import (
    ContextScores,
    DisentanglementReport,
    cross_context_cosine,
    disentanglement_report,
    export_representations,
    linear_probe_accuracy,
    matching_consistency,
    matching_scores,
    read_representations,
    top_k_kendall,
    user_context_grid,
    within_user_residuals,
)
from .ranking import candidate_lists, evaluate, score_lists

__all__ = [
    "ContextScores", "DisentanglementReport", "cross_context_cosine", "disentanglement_report",
    "export_representations", "linear_probe_accuracy", "matching_consistency", "matching_scores",
    "read_representations", "top_k_kendall", "user_context_grid", "within_user_residuals",
    "MetricsReport", "RankedList", "auc", "candidate_lists", "evaluate", "expected_random_ndcg",
    "ndcg_at_k", "rank_of_positive", "ranked_order", "recall_at_k", "score_lists",
]
