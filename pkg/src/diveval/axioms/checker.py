"""Falsification search of metrics against the ten constraints.

Universally quantified constraints are checked on a seeded stream of
instances; the first instance breaking the required inequality is returned as
a counterexample. Existential constraints are searched within the bounds:

* DeepTh holds when the inequality holds on a tail of the probe grid that
  ends at ``n_max`` ("n large enough").
* CloseTh holds when some ``m <= m_max`` satisfies it.
* Sat holds when some ``r_max`` in the grid admits no counterexample.

A tie where a strict inequality is required counts as a violation.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from ..core import MetricSpec, TopicJudgments
from ..metrics import evaluate, score_arrays
from .constraints import (
    ConstraintId,
    ConstraintVerdict,
    Instance,
    SearchBounds,
    Status,
    relation_holds,
)
from .families import (
    UNIVERSAL,
    deepness_probes,
    saturation_instances,
    threshold_pair,
    universal_instances,
)

C = ConstraintId


def _scores(spec: MetricSpec, inst: Instance) -> tuple[float, float]:
    pool = inst.pool
    b = score_arrays(spec, pool[list(inst.better)], inst.weights, pool)
    w = score_arrays(spec, pool[list(inst.worse)], inst.weights, pool)
    return b, w


def _counterexample(spec: MetricSpec, inst: Instance, b: float, w: float) -> dict[str, Any]:
    data = inst.to_dict()
    data.update(metric=spec.label, better_score=b, worse_score=w)
    return data


def _violated(spec, c, inst, b, w, checked, witness="") -> ConstraintVerdict:
    return ConstraintVerdict(spec.label, c, Status.VIOLATED, checked, _counterexample(spec, inst, b, w), witness)


def _search(spec: MetricSpec, c: ConstraintId, instances) -> tuple[int, tuple | None]:
    for count, inst in enumerate(instances, start=1):
        b, w = _scores(spec, inst)
        if not relation_holds(b, w, inst.relation):
            return count, (inst, b, w)
    return count, None


def check_constraint(spec: MetricSpec | str, c: ConstraintId | str,
                     bounds: SearchBounds | None = None) -> ConstraintVerdict:
    """Check one metric against one constraint.

    Ad-hoc metrics are NotApplicable to the diversity constraints, which need
    several aspects. Violated verdicts carry a replayable counterexample.
    """
    spec = MetricSpec.parse(spec) if isinstance(spec, str) else spec
    c = ConstraintId.parse(c) if isinstance(c, str) else ConstraintId(c)
    bounds = bounds or SearchBounds()
    if spec.kind.is_adhoc and not c.relevance_oriented:
        return ConstraintVerdict(spec.label, c, Status.NOT_APPLICABLE, 0)

    if c in UNIVERSAL:
        checked, bad = _search(spec, c, universal_instances(c, bounds))
        if bad:
            return _violated(spec, c, *bad, checked)
        return ConstraintVerdict(spec.label, c, Status.SATISFIED, checked)

    if c is C.DEEP_TH:
        probes = deepness_probes(bounds.n_max)
        checked = 0
        start = None
        for n in reversed(probes):
            inst = threshold_pair(c, n, bounds.epsilon)
            b, w = _scores(spec, inst)
            checked += 1
            if not relation_holds(b, w, inst.relation):
                if start is None:
                    return _violated(spec, c, inst, b, w, checked, f"fails at n={n}")
                break
            start = n
        return ConstraintVerdict(spec.label, c, Status.SATISFIED, checked, witness=f"n>={start}")

    if c is C.CLOSE_TH:
        first = None
        for m in range(1, bounds.m_max + 1):
            inst = threshold_pair(c, m, bounds.epsilon)
            b, w = _scores(spec, inst)
            if relation_holds(b, w, inst.relation):
                return ConstraintVerdict(spec.label, c, Status.SATISFIED, m, witness=f"m={m}")
            if first is None:
                first = (inst, b, w)
        return _violated(spec, c, *first, bounds.m_max, f"no m<={bounds.m_max}")

    if c is C.SAT:
        checked = 0
        bad = None
        for r_max in bounds.r_max_grid:
            count, bad = _search(spec, c, saturation_instances(bounds, r_max))
            checked += count
            if bad is None:
                return ConstraintVerdict(spec.label, c, Status.SATISFIED, checked, witness=f"r_max={r_max:g}")
        return _violated(spec, c, *bad, checked, "no r_max in grid")
    raise AssertionError(c)


def _cell(args) -> ConstraintVerdict:
    spec, c, bounds = args
    return check_constraint(spec, c, bounds)


def constraint_matrix(specs: Sequence[MetricSpec | str], bounds: SearchBounds | None = None,
                      constraints: Sequence[ConstraintId] | None = None,
                      jobs: int = 1) -> list[list[ConstraintVerdict]]:
    """Verdicts for every metric (rows) and constraint (columns)."""
    specs = [MetricSpec.parse(s) if isinstance(s, str) else s for s in specs]
    if not specs:
        raise ValueError("empty metric list")
    bounds = bounds or SearchBounds()
    constraints = list(constraints or ConstraintId)
    cells = [(s, c, bounds) for s in specs for c in constraints]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_cell, cells, chunksize=4))
    else:
        flat = [_cell(x) for x in cells]
    width = len(constraints)
    return [flat[i * width:(i + 1) * width] for i in range(len(specs))]


@dataclass(frozen=True)
class ReplayReport:
    metric: str
    constraint: ConstraintId
    relation: str
    better_score: float
    worse_score: float

    @property
    def holds(self) -> bool:
        """True when the constraint's inequality holds on this instance."""
        return relation_holds(self.better_score, self.worse_score, self.relation)

    def __str__(self) -> str:
        verdict = "pass" if self.holds else "fail"
        return (f"{verdict}: {self.metric} {self.constraint.value} "
                f"Q(better)={self.better_score!r} {self.relation} Q(worse)={self.worse_score!r}")


def replay_counterexample(data: Mapping[str, Any] | str, spec: MetricSpec | str | None = None) -> ReplayReport:
    """Recompute both scores of a stored instance through the doc-id API.

    ``spec`` overrides the metric recorded in the instance.
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ValueError(f"corrupted counterexample: {exc}") from None
    try:
        constraint = ConstraintId.parse(data["constraint"])
        relation = data["relation"]
        if relation not in (">", ">="):
            raise ValueError(f"unknown relation {relation!r}")
        if spec is None:
            spec = data["metric"]
        spec = MetricSpec.parse(spec) if isinstance(spec, str) else spec
        judg = TopicJudgments("synthetic", tuple(data["aspects"]), data["weights"],
                              {d: row for d, row in data["relevance"].items()})
        better, worse = list(data["better"]), list(data["worse"])
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"corrupted counterexample: {exc!r}") from None
    known = set(judg.relevance)
    for doc in better + worse:
        if doc not in known:
            raise ValueError(f"corrupted counterexample: document {doc!r} not in the judged pool")
    b = evaluate(spec, better, judg).value
    w = evaluate(spec, worse, judg).value
    return ReplayReport(spec.label, constraint, relation, b, w)
