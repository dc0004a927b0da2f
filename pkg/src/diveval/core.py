"""Domain types shared across the package.

Relevance lives in [0, 1] and is indexed by (document, aspect). Positions are
1-based in every formula; arrays are 0-based internally.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

WEIGHT_TOLERANCE = 1e-9
COLLAPSED_ASPECT = "max"


# --------------------------------------------------------------------------
# Rankings and judgments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RankedList:
    """Documents returned by one system for one topic, best first.

    ``scores`` carries the system scores from the run file. Metrics ignore it.
    """

    topic_id: str
    docs: tuple[str, ...]
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "docs", tuple(self.docs))
        if self.scores is not None:
            object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
            if len(self.scores) != len(self.docs):
                raise ValueError("scores and docs differ in length")
        if len(set(self.docs)) != len(self.docs):
            seen = set()
            dup = next(d for d in self.docs if d in seen or seen.add(d))
            raise ValueError(f"duplicate document {dup!r} in ranking for topic {self.topic_id}")

    def __len__(self) -> int:
        return len(self.docs)

    def prefix(self, n: int) -> RankedList:
        scores = None if self.scores is None else self.scores[:n]
        return RankedList(self.topic_id, self.docs[:n], scores)


@dataclass(frozen=True)
class TopicJudgments:
    """Aspects, aspect weights and graded relevance for one topic.

    ``relevance`` maps doc -> aspect -> value in [0, 1]; absent pairs are 0.
    A topic with no aspects is allowed and scores 0 under every metric.
    """

    topic_id: str
    aspects: tuple[str, ...]
    weights: Mapping[str, float]
    relevance: Mapping[str, Mapping[str, float]]

    def __post_init__(self):
        aspects = tuple(self.aspects)
        if len(set(aspects)) != len(aspects):
            raise ValueError(f"topic {self.topic_id}: duplicate aspect ids")
        object.__setattr__(self, "aspects", aspects)
        weights = {a: float(self.weights.get(a, 0.0)) for a in aspects}
        extra = set(self.weights) - set(aspects)
        if extra:
            raise ValueError(f"topic {self.topic_id}: weights for unknown aspects {sorted(extra)}")
        if any(w < 0 or w > 1 for w in weights.values()):
            raise ValueError(f"topic {self.topic_id}: aspect weights must lie in [0, 1]")
        if aspects and abs(math.fsum(weights.values()) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(
                f"topic {self.topic_id}: aspect weights sum to {math.fsum(weights.values())!r}, not 1"
            )
        rel: dict[str, Mapping[str, float]] = {}
        known = set(aspects)
        for doc, per_aspect in self.relevance.items():
            row = {}
            for a, r in per_aspect.items():
                if a not in known:
                    raise ValueError(f"topic {self.topic_id}: relevance for unknown aspect {a!r}")
                r = float(r)
                if not 0.0 <= r <= 1.0:
                    raise ValueError(f"topic {self.topic_id}: relevance {r} of {doc!r} outside [0, 1]")
                row[a] = r
            rel[doc] = MappingProxyType(row)
        object.__setattr__(self, "weights", MappingProxyType(weights))
        object.__setattr__(self, "relevance", MappingProxyType(rel))

    def __reduce__(self):
        rel = {d: dict(row) for d, row in self.relevance.items()}
        return (type(self), (self.topic_id, self.aspects, dict(self.weights), rel))

    @classmethod
    def balanced(cls, topic_id: str, relevance: Mapping[str, Mapping[str, float]],
                 aspects: Sequence[str] | None = None) -> TopicJudgments:
        """Judgments with uniform weights 1/|aspects|."""
        if aspects is None:
            aspects = sorted({a for row in relevance.values() for a in row})
        aspects = tuple(aspects)
        weights = {a: 1.0 / len(aspects) for a in aspects} if aspects else {}
        return cls(topic_id, aspects, weights, relevance)

    def r(self, doc: str, aspect: str) -> float:
        return self.relevance.get(doc, {}).get(aspect, 0.0)

    @cached_property
    def weight_vector(self) -> np.ndarray:
        return np.array([self.weights[a] for a in self.aspects], dtype=float)

    def matrix(self, docs: Sequence[str]) -> np.ndarray:
        """Relevance of ``docs`` as an (n, |aspects|) array."""
        out = np.zeros((len(docs), len(self.aspects)))
        col = {a: j for j, a in enumerate(self.aspects)}
        for i, d in enumerate(docs):
            row = self.relevance.get(d)
            if row:
                for a, r in row.items():
                    out[i, col[a]] = r
        return out

    @cached_property
    def pool_docs(self) -> tuple[str, ...]:
        """Judged documents sorted by id (the tie-break order for ideal rankings)."""
        return tuple(sorted(self.relevance))

    @cached_property
    def pool(self) -> np.ndarray:
        return self.matrix(self.pool_docs)

    def with_weights(self, weights: Mapping[str, float]) -> TopicJudgments:
        return TopicJudgments(self.topic_id, self.aspects, weights, self.relevance)

    def with_relevance(self, relevance: Mapping[str, Mapping[str, float]]) -> TopicJudgments:
        return TopicJudgments(self.topic_id, self.aspects, self.weights, relevance)


def collapse_single_aspect(judg: TopicJudgments) -> TopicJudgments:
    """Fold every aspect into one, keeping the maximum relevance per document.

    Single-aspect input is returned unchanged.
    """
    if len(judg.aspects) == 1:
        return judg
    rel = {}
    for doc, row in judg.relevance.items():
        rel[doc] = {COLLAPSED_ASPECT: max(row.values(), default=0.0)}
    return TopicJudgments(judg.topic_id, (COLLAPSED_ASPECT,), {COLLAPSED_ASPECT: 1.0}, rel)


# --------------------------------------------------------------------------
# Grade mapping
# --------------------------------------------------------------------------


def exponential_gain(grade: int, g_max: int) -> float:
    """Cascade-style probability of satisfaction: (2^g - 1) / 2^g_max."""
    g = max(int(grade), 0)
    if g_max <= 0:
        return 0.0
    g = min(g, g_max)
    return (2.0 ** g - 1.0) / 2.0 ** g_max


def linear_gain(grade: int, g_max: int) -> float:
    g = max(int(grade), 0)
    if g_max <= 0:
        return 0.0
    return min(g, g_max) / g_max


GRADE_MAPS: dict[str, Callable[[int, int], float]] = {
    "exp": exponential_gain,
    "linear": linear_gain,
}


# --------------------------------------------------------------------------
# Metric specifications
# --------------------------------------------------------------------------


class MetricKind(str, enum.Enum):
    P = "p"
    RR = "rr"
    AP = "ap"
    DCG = "dcg"
    NDCG = "ndcg"
    ERR = "err"
    RBP = "rbp"
    P_IA = "p-ia"
    RR_IA = "rr-ia"
    AP_IA = "ap-ia"
    DCG_IA = "dcg-ia"
    NDCG_IA = "ndcg-ia"
    ERR_IA = "err-ia"
    RBP_IA = "rbp-ia"
    S_RECALL = "s-recall"
    S_RR = "s-rr"
    ALPHA_DCG = "alpha-dcg"
    ALPHA_NDCG = "alpha-ndcg"
    NRBP = "nrbp"
    D_NDCG = "d-ndcg"
    D_SHARP = "d-sharp"
    EU = "eu"
    CT = "ct"
    RBU = "rbu"

    @property
    def is_adhoc(self) -> bool:
        return self in ADHOC_KINDS

    @property
    def is_intent_aware(self) -> bool:
        return self in IA_BASE

    @property
    def base(self) -> MetricKind:
        """Ad-hoc kind underlying an intent-aware kind (identity otherwise)."""
        return IA_BASE.get(self, self)


ADHOC_KINDS = frozenset({MetricKind.P, MetricKind.RR, MetricKind.AP, MetricKind.DCG,
                         MetricKind.NDCG, MetricKind.ERR, MetricKind.RBP})
IA_BASE = {
    MetricKind.P_IA: MetricKind.P,
    MetricKind.RR_IA: MetricKind.RR,
    MetricKind.AP_IA: MetricKind.AP,
    MetricKind.DCG_IA: MetricKind.DCG,
    MetricKind.NDCG_IA: MetricKind.NDCG,
    MetricKind.ERR_IA: MetricKind.ERR,
    MetricKind.RBP_IA: MetricKind.RBP,
}
_ALIASES = {
    "precision": "p", "mrr": "rr", "map": "ap", "ndcg-ia": "ndcg-ia",
    "srecall": "s-recall", "s_recall": "s-recall", "subtopic-recall": "s-recall",
    "srr": "s-rr", "s_rr": "s-rr",
    "alpha-ndcg": "alpha-ndcg", "andcg": "alpha-ndcg", "adcg": "alpha-dcg",
    "d#": "d-sharp", "dsharp": "d-sharp", "d#-measure": "d-sharp", "d-measure": "d-ndcg",
    "cube": "ct", "cubetest": "ct",
}

# parameter name in metric strings -> MetricSpec field
_PARAM_FIELDS = {"p": "p", "alpha": "alpha", "e": "e", "lambda": "lam", "gamma": "gamma"}
_KIND_PARAMS: dict[MetricKind, frozenset[str]] = {
    MetricKind.RBP: frozenset({"p"}),
    MetricKind.RBP_IA: frozenset({"p"}),
    MetricKind.ALPHA_DCG: frozenset({"alpha"}),
    MetricKind.ALPHA_NDCG: frozenset({"alpha"}),
    MetricKind.NRBP: frozenset({"p", "alpha"}),
    MetricKind.D_SHARP: frozenset({"lambda"}),
    MetricKind.EU: frozenset({"alpha", "e"}),
    MetricKind.CT: frozenset({"alpha", "gamma"}),
    MetricKind.RBU: frozenset({"p", "e"}),
}
_NEEDS_CUTOFF = frozenset({MetricKind.P, MetricKind.P_IA, MetricKind.S_RECALL, MetricKind.D_SHARP})


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return format(x, "g")


@dataclass(frozen=True)
class MetricSpec:
    """A metric kind plus its parameters.

    Only the parameters relevant to ``kind`` are read. ``k=None`` means no
    cutoff. String form: ``kind[@cutoff][:param=value,...]``.
    """

    kind: MetricKind
    k: int | None = None
    p: float = 0.99
    alpha: float = 0.5
    e: float = 0.05
    lam: float = 0.5
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind(self.kind))
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise ValueError(f"cutoff must be a positive integer, got {self.k!r}")
        if self.kind in _NEEDS_CUTOFF and self.k is None:
            raise ValueError(f"{self.kind.value} needs a finite cutoff, e.g. {self.kind.value}@10")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"patience p must lie in (0, 1], got {self.p}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.e >= 0.0:
            raise ValueError(f"effort e must be >= 0, got {self.e}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.gamma > 0.0:
            raise ValueError(f"saturation threshold must be > 0, got {self.gamma}")

    @property
    def params(self) -> dict[str, float]:
        names = _KIND_PARAMS.get(self.kind, frozenset())
        return {n: getattr(self, _PARAM_FIELDS[n]) for n in ("p", "alpha", "e", "lambda", "gamma") if n in names}

    @property
    def label(self) -> str:
        s = self.kind.value
        if self.k is not None:
            s += f"@{self.k}"
        params = self.params
        if params:
            s += ":" + ",".join(f"{n}={_fmt(v)}" for n, v in params.items())
        return s

    def __str__(self) -> str:
        return self.label

    def replace(self, **changes) -> MetricSpec:
        from dataclasses import replace
        return replace(self, **changes)

    @classmethod
    def parse(cls, text: str) -> MetricSpec:
        """Parse ``kind[@cutoff][:param=value,...]``; unknown names are errors."""
        raw = text.strip()
        if not raw:
            raise ValueError("empty metric specification")
        head, _, tail = raw.partition(":")
        name, _, cutoff = head.partition("@")
        name = name.strip().lower()
        name = _ALIASES.get(name, name)
        try:
            kind = MetricKind(name)
        except ValueError:
            valid = ", ".join(k.value for k in MetricKind)
            raise ValueError(f"unknown metric kind {name!r}; valid kinds: {valid}") from None
        kwargs: dict[str, object] = {}
        if cutoff:
            if cutoff.strip().lower() in ("inf", "all", "100%"):
                kwargs["k"] = None
            else:
                try:
                    kwargs["k"] = int(cutoff)
                except ValueError:
                    raise ValueError(f"bad cutoff {cutoff!r} in {text!r}") from None
        allowed = _KIND_PARAMS.get(kind, frozenset())
        if tail.strip():
            for item in tail.split(","):
                pname, eq, value = item.partition("=")
                pname = pname.strip().lower()
                if not eq:
                    raise ValueError(f"expected param=value, got {item!r} in {text!r}")
                if pname not in allowed:
                    ok = ", ".join(sorted(allowed)) or "none"
                    raise ValueError(f"parameter {pname!r} not accepted by {kind.value} (accepted: {ok})")
                try:
                    kwargs[_PARAM_FIELDS[pname]] = float(value)
                except ValueError:
                    raise ValueError(f"bad value {value!r} for {pname}") from None
        return cls(kind, **kwargs)


@dataclass(frozen=True)
class Score:
    value: float
    topic_id: str
    spec: MetricSpec

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite score {self.value} for {self.spec} on topic {self.topic_id}")

    def __float__(self) -> float:
        return self.value


# --------------------------------------------------------------------------
# Exact cascade oracle
# --------------------------------------------------------------------------


def cascade_oracle(ranking: RankedList | Sequence[str], judg: TopicJudgments, p: float, e: float,
                   w_override: Mapping[str, float] | None = None, k: int | None = None) -> float:
    """Rank-biased utility evaluated term by term in exact rational arithmetic.

    Every float input is converted to the exact rational it represents, so the
    only rounding happens in the final conversion. Used to cross-check the
    vectorised implementation.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if e < 0:
        raise ValueError(f"e must be >= 0, got {e}")
    docs = ranking.docs if isinstance(ranking, RankedList) else tuple(ranking)
    if k is not None:
        docs = docs[:k]
    weights = dict(judg.weights if w_override is None else w_override)
    fp, fe = Fraction(p), Fraction(e)
    w = {a: Fraction(weights.get(a, 0.0)) for a in judg.aspects}
    not_yet = {a: Fraction(1) for a in judg.aspects}
    total = Fraction(0)
    disc = Fraction(1)
    for doc in docs:
        disc *= fp
        gain = Fraction(0)
        for a in judg.aspects:
            r = Fraction(judg.r(doc, a))
            gain += w[a] * r * not_yet[a]
            not_yet[a] *= 1 - r
        total += disc * (gain - fe)
    return float(total)


__all__ = [
    "RankedList", "TopicJudgments", "MetricKind", "MetricSpec", "Score",
    "collapse_single_aspect", "cascade_oracle", "exponential_gain", "linear_gain",
    "GRADE_MAPS", "ADHOC_KINDS", "IA_BASE", "COLLAPSED_ASPECT",
]
