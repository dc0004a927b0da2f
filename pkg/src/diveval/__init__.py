"""Evaluation toolkit for search result diversification.

Metrics, an axiomatic constraint checker and Metric Unanimity meta-evaluation
over TREC-style runs and diversity qrels.
"""
from __future__ import annotations

from .core import (
    MetricKind,
    MetricSpec,
    RankedList,
    Score,
    TopicJudgments,
    cascade_oracle,
    collapse_single_aspect,
)
from .ingestion import (
    QrelsFile,
    RunFile,
    attach_weights,
    parse_diversity_qrels,
    parse_run,
    parse_weights,
    read_qrels,
    read_run,
    read_weights,
)
from .metaeval import MuReport, NotComputable, ScoreMatrix, metric_unanimity, mu_ranking
from .metrics import evaluate, evaluate_grid, rbu_at_k

__version__ = "0.1.0"

__all__ = [
    "MetricKind", "MetricSpec", "RankedList", "Score", "TopicJudgments", "cascade_oracle",
    "collapse_single_aspect", "QrelsFile", "RunFile", "parse_diversity_qrels", "parse_run",
    "parse_weights", "read_run", "read_qrels", "read_weights", "attach_weights", "MuReport", "NotComputable", "ScoreMatrix", "metric_unanimity",
    "mu_ranking", "evaluate", "evaluate_grid", "rbu_at_k",
]
