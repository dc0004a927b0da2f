"""Readers and writers for TREC run, diversity qrels and aspect-weight files.

All readers accept an open text stream, any iterable of lines, or a string
holding the file content. Lines starting with ``#`` and blank lines are
skipped; CRLF line endings are tolerated.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping

from .core import GRADE_MAPS, RankedList, TopicJudgments

UNIT_SCALE_DIRECTIVE = "# scale: unit"


class ParseError(ValueError):
    """A malformed input line; the message names the line number."""

    def __init__(self, line_no: int, message: str, source: str = "input"):
        super().__init__(f"{source}:{line_no}: {message}")
        self.line_no = line_no


class WeightFallbackWarning(UserWarning):
    """A topic fell back to uniform aspect weights."""


def natural_key(topic: str) -> tuple:
    """Sort numeric topic ids numerically and the rest lexicographically."""
    return (0, int(topic), "") if topic.isdigit() else (1, 0, topic)


def _lines(source: Iterable[str] | str) -> Iterator[tuple[int, str, list[str]]]:
    if isinstance(source, str):
        source = source.splitlines()
    for no, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield no, line, stripped.split()


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunFile:
    run_tag: str
    rankings: Mapping[str, RankedList] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rankings", MappingProxyType(dict(self.rankings)))

    def __reduce__(self):
        return (type(self), (self.run_tag, dict(self.rankings)))

    @property
    def topics(self) -> list[str]:
        return sorted(self.rankings, key=natural_key)


def parse_run(source: Iterable[str] | str, name: str = "run") -> RunFile:
    """Parse ``topic Q0 doc rank score tag`` lines.

    Documents are ordered by descending score, then ascending rank field, then
    ascending doc id. The run tag comes from the first data line.
    """
    rows: dict[str, list[tuple[float, int, str]]] = {}
    seen: dict[str, set[str]] = {}
    tag = None
    for no, _, cols in _lines(source):
        if len(cols) != 6:
            raise ParseError(no, f"expected 6 columns, found {len(cols)}", name)
        topic, _, doc, rank, score, run_tag = cols
        try:
            rank_v = int(rank)
        except ValueError:
            raise ParseError(no, f"rank {rank!r} is not an integer", name) from None
        try:
            score_v = float(score)
        except ValueError:
            raise ParseError(no, f"score {score!r} is not a number", name) from None
        if not math.isfinite(score_v):
            raise ParseError(no, f"score {score!r} is not finite", name)
        if tag is None:
            tag = run_tag
        docs = seen.setdefault(topic, set())
        if doc in docs:
            raise ParseError(no, f"duplicate document {doc!r} for topic {topic}", name)
        docs.add(doc)
        rows.setdefault(topic, []).append((score_v, rank_v, doc))
    rankings = {}
    for topic, entries in rows.items():
        entries.sort(key=lambda e: (-e[0], e[1], e[2]))
        rankings[topic] = RankedList(topic, tuple(e[2] for e in entries), tuple(e[0] for e in entries))
    return RunFile(tag if tag is not None else Path(name).stem, rankings)


def format_run(run: RunFile) -> str:
    """Serialise a run; parsing the output gives back the same run."""
    out = []
    for topic in run.topics:
        ranking = run.rankings[topic]
        n = len(ranking)
        for i, doc in enumerate(ranking.docs):
            score = ranking.scores[i] if ranking.scores is not None else float(n - i)
            out.append(f"{topic} Q0 {doc} {i + 1} {score!r} {run.run_tag}\n")
    return "".join(out)


def read_run(path: str | Path) -> RunFile:
    with open(path, encoding="utf-8") as fh:
        return parse_run(fh, name=str(path))


# --------------------------------------------------------------------------
# diversity qrels
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QrelsFile:
    judgments: Mapping[str, TopicJudgments]
    g_max: int | None

    def __post_init__(self):
        object.__setattr__(self, "judgments", MappingProxyType(dict(self.judgments)))

    def __reduce__(self):
        return (type(self), (dict(self.judgments), self.g_max))

    @property
    def topics(self) -> list[str]:
        return sorted(self.judgments, key=natural_key)

    def replace_judgments(self, judgments: Mapping[str, TopicJudgments]) -> QrelsFile:
        return QrelsFile(judgments, self.g_max)


def parse_diversity_qrels(source: Iterable[str] | str, grade_map: str | Callable[[int, int], float] = "exp",
                          g_max: int | None = None, exclude_general: bool = False,
                          name: str = "qrels") -> QrelsFile:
    """Parse ``topic aspect doc grade`` lines into per-topic judgments.

    Integer grades go through ``grade_map`` (``"exp"``: (2^g - 1)/2^g_max, or
    ``"linear"``). Negative grades count as 0. ``g_max`` defaults to the
    largest grade in the file. A file whose first comment line is
    ``# scale: unit`` holds relevance values in [0, 1] that are read as-is.

    Aspects are those with at least one positive judgment; weights are uniform
    (use ``attach_weights`` for explicit ones). Aspect ``"0"`` is dropped when
    ``exclude_general`` is set.
    """
    if isinstance(source, str):
        source = source.splitlines()
    lines = list(source)
    unit_scale = any(l.strip().lower() == UNIT_SCALE_DIRECTIVE for l in lines
                     if l.strip().startswith("#"))
    mapper = GRADE_MAPS[grade_map] if isinstance(grade_map, str) else grade_map
    raw: dict[str, dict[tuple[str, str], float]] = {}
    for no, _, cols in _lines(lines):
        if len(cols) != 4:
            raise ParseError(no, f"expected 4 columns, found {len(cols)}", name)
        topic, aspect, doc, grade = cols
        if unit_scale:
            try:
                value = float(grade)
            except ValueError:
                raise ParseError(no, f"relevance {grade!r} is not a number", name) from None
            if not 0.0 <= value <= 1.0:
                raise ParseError(no, f"relevance {grade!r} outside [0, 1]", name)
        else:
            try:
                value = int(grade)
            except ValueError:
                raise ParseError(no, f"grade {grade!r} is not an integer", name) from None
            value = max(value, 0)
        cell = raw.setdefault(topic, {})
        if (aspect, doc) in cell:
            raise ParseError(no, f"duplicate judgment ({topic}, {aspect}, {doc})", name)
        cell[(aspect, doc)] = value
    if unit_scale:
        detected = None
    else:
        grades = [g for cell in raw.values() for g in cell.values()]
        detected = max([g for g in grades if g > 0], default=1)
        if g_max is None:
            g_max = detected
        elif g_max < 1:
            raise ValueError(f"g_max must be a positive integer, got {g_max}")
    judgments = {}
    for topic, cell in raw.items():
        relevance: dict[str, dict[str, float]] = {}
        for (aspect, doc), value in cell.items():
            if exclude_general and aspect == "0":
                continue
            r = float(value) if unit_scale else mapper(int(value), g_max)
            relevance.setdefault(doc, {})[aspect] = r
        aspects = sorted({a for row in relevance.values() for a, r in row.items() if r > 0},
                         key=natural_key)
        known = set(aspects)
        relevance = {d: {a: r for a, r in row.items() if a in known} for d, row in relevance.items()}
        judgments[topic] = TopicJudgments.balanced(topic, relevance, aspects)
    return QrelsFile(judgments, None if unit_scale else g_max)


def format_qrels(qrels: QrelsFile) -> str:
    """Serialise mapped relevance values with a ``# scale: unit`` header."""
    out = [UNIT_SCALE_DIRECTIVE + "\n"]
    for topic in qrels.topics:
        judg = qrels.judgments[topic]
        for doc in judg.pool_docs:
            for aspect in judg.aspects:
                if aspect in judg.relevance[doc]:
                    out.append(f"{topic} {aspect} {doc} {judg.relevance[doc][aspect]!r}\n")
    return "".join(out)


def read_qrels(path: str | Path, **kwargs) -> QrelsFile:
    with open(path, encoding="utf-8") as fh:
        return parse_diversity_qrels(fh, name=str(path), **kwargs)


# --------------------------------------------------------------------------
# aspect weights
# --------------------------------------------------------------------------


def parse_weights(source: Iterable[str] | str, name: str = "weights") -> dict[tuple[str, str], float]:
    """Parse ``topic aspect weight`` lines, renormalising each topic to sum 1."""
    raw: dict[str, dict[str, float]] = {}
    for no, _, cols in _lines(source):
        if len(cols) != 3:
            raise ParseError(no, f"expected 3 columns, found {len(cols)}", name)
        topic, aspect, weight = cols
        try:
            w = float(weight)
        except ValueError:
            raise ParseError(no, f"weight {weight!r} is not a number", name) from None
        if not math.isfinite(w) or w < 0:
            raise ParseError(no, f"weight {weight!r} must be finite and non-negative", name)
        per_topic = raw.setdefault(topic, {})
        if aspect in per_topic:
            raise ParseError(no, f"duplicate weight for ({topic}, {aspect})", name)
        per_topic[aspect] = w
    out = {}
    for topic, per_topic in raw.items():
        total = math.fsum(per_topic.values())
        if total <= 0:
            raise ValueError(f"{name}: weights of topic {topic} sum to zero")
        for aspect, w in per_topic.items():
            out[(topic, aspect)] = w / total
    return out


def attach_weights(qrels: QrelsFile, weights: Mapping[tuple[str, str], float] | None) -> QrelsFile:
    """Apply explicit aspect weights to judged topics.

    Weights are renormalised over each topic's judged aspects. A topic that is
    absent from ``weights`` or lacks a weight for one of its aspects keeps
    uniform weights (with a warning); weights for unjudged aspects are ignored.
    """
    if not weights:
        return qrels
    by_topic: dict[str, dict[str, float]] = {}
    for (topic, aspect), w in weights.items():
        by_topic.setdefault(topic, {})[aspect] = w
    out = {}
    for topic, judg in qrels.judgments.items():
        given = by_topic.get(topic)
        if not judg.aspects:
            out[topic] = judg
            continue
        if given is None:
            warnings.warn(f"topic {topic}: no weights given, using uniform weights",
                          WeightFallbackWarning, stacklevel=2)
            out[topic] = judg
            continue
        unknown = sorted(set(given) - set(judg.aspects))
        if unknown:
            warnings.warn(f"topic {topic}: ignoring weights for unjudged aspects {unknown}",
                          WeightFallbackWarning, stacklevel=2)
        missing = [a for a in judg.aspects if a not in given]
        total = math.fsum(given.get(a, 0.0) for a in judg.aspects)
        if missing or total <= 0:
            warnings.warn(f"topic {topic}: weights missing for aspects {missing}, using uniform weights",
                          WeightFallbackWarning, stacklevel=2)
            out[topic] = judg
            continue
        out[topic] = judg.with_weights({a: given[a] / total for a in judg.aspects})
    return qrels.replace_judgments(out)


def format_weights(qrels: QrelsFile) -> str:
    out = []
    for topic in qrels.topics:
        judg = qrels.judgments[topic]
        for aspect in judg.aspects:
            out.append(f"{topic} {aspect} {judg.weights[aspect]!r}\n")
    return "".join(out)


def read_weights(path: str | Path) -> dict[tuple[str, str], float]:
    with open(path, encoding="utf-8") as fh:
        return parse_weights(fh, name=str(path))


__all__ = [
    "RunFile", "QrelsFile", "ParseError", "WeightFallbackWarning", "parse_run", "format_run",
    "read_run", "parse_diversity_qrels", "format_qrels", "read_qrels", "parse_weights",
    "attach_weights", "format_weights", "read_weights", "natural_key",
]
