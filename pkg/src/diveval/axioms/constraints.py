"""Constraint identifiers, search bounds, verdicts and test instances."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core import TopicJudgments


class ConstraintId(str, enum.Enum):
    PRI = "Pri"
    DEEP = "Deep"
    DEEP_TH = "DeepTh"
    CLOSE_TH = "CloseTh"
    CONF = "Conf"
    ASP_DIV = "AspDiv"
    RED = "Red"
    MRED = "MRed"
    SAT = "Sat"
    ASP_REL = "AspRel"

    @property
    def index(self) -> int:
        return list(ConstraintId).index(self)

    @property
    def relevance_oriented(self) -> bool:
        return self.index < 5

    @classmethod
    def parse(cls, text: str) -> ConstraintId:
        for c in cls:
            if c.value.lower() == text.strip().lower() or c.name.lower() == text.strip().lower():
                return c
        raise ValueError(f"unknown constraint {text!r}; valid: {', '.join(c.value for c in cls)}")


class Status(str, enum.Enum):
    SATISFIED = "Satisfied"
    VIOLATED = "Violated"
    NOT_APPLICABLE = "NotApplicable"

    @property
    def symbol(self) -> str:
        return {"Satisfied": "●", "Violated": "○", "NotApplicable": "–"}[self.value]


@dataclass(frozen=True)
class SearchBounds:
    """Limits of the falsification search.

    Attributes:
        n_max: largest n probed for the deepness threshold.
        m_max: largest m scanned for the closeness threshold.
        r_max_grid: saturation values tried, smallest first.
        instance_count: random instances per universally quantified constraint.
        seed: master seed.
        epsilon: upper end of the small relevance scale.
    """

    n_max: int = 1000
    m_max: int = 1000
    r_max_grid: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    instance_count: int = 1000
    seed: int = 0
    epsilon: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "r_max_grid", tuple(sorted(float(r) for r in self.r_max_grid)))
        if self.instance_count <= 0:
            raise ValueError("instance_count must be positive")
        if self.n_max <= 0 or self.m_max <= 0:
            raise ValueError("n_max and m_max must be positive")
        if not self.r_max_grid or any(not 0.0 < r <= 1.0 for r in self.r_max_grid):
            raise ValueError("r_max_grid values must lie in (0, 1]")
        if not 0.0 < self.epsilon <= 0.01:
            raise ValueError("epsilon must lie in (0, 0.01]")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def doc_id(row: int) -> str:
    return f"d{row:05d}"


@dataclass(frozen=True, eq=False)
class Instance:
    """Two rankings over a shared judged pool and the relation they must satisfy.

    The constraint requires ``Q(better) > Q(worse)`` (or ``>=``). Pool row ``i``
    is document ``doc_id(i)``, so row order is doc-id order.
    """

    constraint: ConstraintId
    pool: np.ndarray
    weights: np.ndarray
    better: tuple[int, ...]
    worse: tuple[int, ...]
    relation: str = ">"
    note: str = ""

    @property
    def aspects(self) -> tuple[str, ...]:
        return tuple(f"t{j + 1}" for j in range(self.pool.shape[1]))

    def judgments(self) -> TopicJudgments:
        aspects = self.aspects
        rel = {doc_id(i): {a: float(v) for a, v in zip(aspects, row) if v > 0}
               for i, row in enumerate(self.pool)}
        return TopicJudgments("synthetic", aspects, dict(zip(aspects, self.weights.tolist())), rel)

    def to_dict(self) -> dict[str, Any]:
        judg = self.judgments()
        return {
            "constraint": self.constraint.value,
            "relation": self.relation,
            "note": self.note,
            "aspects": list(judg.aspects),
            "weights": dict(judg.weights),
            "relevance": {d: dict(row) for d, row in judg.relevance.items()},
            "better": [doc_id(i) for i in self.better],
            "worse": [doc_id(i) for i in self.worse],
        }


@dataclass(frozen=True)
class ConstraintVerdict:
    """Outcome of checking one metric against one constraint.

    ``counterexample`` is a JSON-ready dict (instance, metric and both scores)
    present exactly when the status is Violated. ``witness`` describes what
    established an existential constraint (for example ``"m=2"``).
    """

    metric: str
    constraint: ConstraintId
    status: Status
    witnesses_checked: int
    counterexample: dict[str, Any] | None = field(default=None, compare=False)
    witness: str = ""

    def __post_init__(self):
        if (self.status is Status.VIOLATED) != (self.counterexample is not None):
            raise ValueError("a counterexample is carried exactly by Violated verdicts")

    def counterexample_json(self) -> str:
        return json.dumps(self.counterexample, sort_keys=True)


def relation_holds(better: float, worse: float, relation: str) -> bool:
    if relation == ">":
        return better > worse
    if relation == ">=":
        return better >= worse
    raise ValueError(f"unknown relation {relation!r}")
