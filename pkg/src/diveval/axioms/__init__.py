"""Executable constraints on evaluation metrics and a falsification checker."""
from __future__ import annotations

from .checker import ReplayReport, check_constraint, constraint_matrix, replay_counterexample
from .constraints import ConstraintId, ConstraintVerdict, Instance, SearchBounds, Status
from .table1 import compare, load_table1, render_markdown, render_tsv

__all__ = [
    "ConstraintId", "ConstraintVerdict", "Instance", "SearchBounds", "Status", "ReplayReport",
    "check_constraint", "constraint_matrix", "replay_counterexample", "load_table1", "compare",
    "render_markdown", "render_tsv",
]
