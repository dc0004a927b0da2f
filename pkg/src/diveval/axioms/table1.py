"""Reference verdict table for twenty metric configurations, and renderers."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .constraints import ConstraintId, ConstraintVerdict, Status

SATISFIED_MARK = "●"
UNSATISFIED_MARK = "○"


@dataclass(frozen=True)
class ReferenceRow:
    name: str
    metric: str
    verdicts: tuple[str, ...]


@dataclass(frozen=True)
class ReferenceTable:
    version: int
    constraints: tuple[ConstraintId, ...]
    rows: tuple[ReferenceRow, ...]
    annotations: dict

    @property
    def metrics(self) -> list[str]:
        return [r.metric for r in self.rows]


def load_table1() -> ReferenceTable:
    """Load the embedded reference verdicts."""
    text = resources.files("diveval").joinpath("data/table1.json").read_text(encoding="utf-8")
    data = json.loads(text)
    constraints = tuple(ConstraintId.parse(c) for c in data["constraints"])
    rows = []
    for row in data["rows"]:
        verdicts = tuple(row["verdicts"])
        if len(verdicts) != len(constraints) or set(verdicts) - {SATISFIED_MARK, UNSATISFIED_MARK}:
            raise ValueError(f"malformed reference row {row['name']!r}")
        rows.append(ReferenceRow(row["name"], row["metric"], verdicts))
    return ReferenceTable(int(data["version"]), constraints, tuple(rows), dict(data.get("annotations", {})))


def agrees(expected: str, status: Status) -> bool:
    """A filled mark needs Satisfied; an empty mark accepts Violated or NotApplicable."""
    if expected == SATISFIED_MARK:
        return status is Status.SATISFIED
    return status is not Status.SATISFIED


def compare(matrix: Sequence[Sequence[ConstraintVerdict]], table: ReferenceTable) -> list[tuple[str, str, str, str]]:
    """Cells that disagree with the reference: (metric, constraint, expected, got)."""
    if len(matrix) != len(table.rows):
        raise ValueError("verdict matrix and reference table differ in size")
    out = []
    for row, ref in zip(matrix, table.rows):
        by_c = {v.constraint: v for v in row}
        for c, expected in zip(table.constraints, ref.verdicts):
            got = by_c[c].status
            if not agrees(expected, got):
                out.append((ref.metric, c.value, expected, got.symbol))
    return out


def render_markdown(matrix: Sequence[Sequence[ConstraintVerdict]], names: Sequence[str] | None = None) -> str:
    """Markdown table with ● satisfied, ○ violated, – not applicable."""
    if not matrix:
        return ""
    constraints = [v.constraint.value for v in matrix[0]]
    names = list(names) if names is not None else [row[0].metric for row in matrix]
    lines = ["| Metric | " + " | ".join(constraints) + " |",
             "|---|" + "|".join(":-:" for _ in constraints) + "|"]
    for name, row in zip(names, matrix):
        lines.append(f"| {name} | " + " | ".join(v.status.symbol for v in row) + " |")
    return "\n".join(lines) + "\n"


def render_tsv(matrix: Sequence[Sequence[ConstraintVerdict]]) -> str:
    """``metric constraint status witnesses`` rows."""
    out = []
    for row in matrix:
        for v in row:
            out.append(f"{v.metric}\t{v.constraint.value}\t{v.status.value}\t{v.witnesses_checked}\n")
    return "".join(out)
