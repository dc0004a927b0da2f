"""Ad-hoc and diversity effectiveness metrics.

Every metric reduces to a kernel over a ranked relevance array ``R`` of shape
(n, |aspects|), an aspect-weight vector ``w`` and the judged pool ``J`` (one
row per judged document, sorted by doc id) used for ideal rankings and
relevant-document counts. Final reductions use ``math.fsum`` so that two
rankings sharing a prefix are compared on exactly rounded sums.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from .core import (
    MetricKind,
    MetricSpec,
    RankedList,
    Score,
    TopicJudgments,
    collapse_single_aspect,
)
from .ingestion import QrelsFile, RunFile, natural_key
from .metaeval import ScoreMatrix

K = MetricKind


class UnjudgedTopicWarning(UserWarning):
    """A run contains a topic that has no judgments."""


def _fsum(x) -> float:
    return math.fsum(np.asarray(x, dtype=float).ravel().tolist())


def log_discount(n: int) -> np.ndarray:
    """1 / log2(i + 1) for positions i = 1..n."""
    return 1.0 / np.log2(np.arange(2, n + 2, dtype=float))


def cascade_prior(R: np.ndarray) -> np.ndarray:
    """prod_{j<i} (1 - r(d_j, t)) for every position and aspect."""
    if len(R) == 0:
        return np.ones_like(R)
    keep = np.cumprod(1.0 - R, axis=0)
    return np.vstack([np.ones((1, R.shape[1])), keep[:-1]])


def prior_counts(R: np.ndarray) -> np.ndarray:
    """c(i, t): documents before position i with r(d_j, t) > 0."""
    rel = (R > 0).astype(float)
    return np.cumsum(rel, axis=0) - rel


def novelty_gains(R: np.ndarray, alpha: float) -> np.ndarray:
    """r(d_i, t) * (1 - alpha)^c(i, t), per position and aspect."""
    if alpha == 0.0:
        return R * 1.0
    return R * (1.0 - alpha) ** prior_counts(R)


def _dcg(gains: np.ndarray) -> float:
    return _fsum(gains * log_discount(len(gains)))


def _column_sums(terms: np.ndarray) -> np.ndarray:
    return np.array([_fsum(terms[:, j]) for j in range(terms.shape[1])])


# --------------------------------------------------------------------------
# per-aspect ad-hoc kernels
# --------------------------------------------------------------------------


def _adhoc_columns(kind: MetricKind, spec: MetricSpec, R: np.ndarray, J: np.ndarray) -> np.ndarray:
    n, m = R.shape
    if kind is K.P:
        return (R > 0).sum(axis=0) / spec.k
    if kind is K.RR:
        rel = R > 0
        found = rel.any(axis=0) if n else np.zeros(m, bool)
        first = rel.argmax(axis=0) if n else np.zeros(m, int)
        return np.where(found, 1.0 / (first + 1.0), 0.0)
    if kind is K.AP:
        rel = R > 0
        total = (J > 0).sum(axis=0)
        prec = np.cumsum(rel, axis=0) / np.arange(1, n + 1, dtype=float)[:, None]
        sums = _column_sums(np.where(rel, prec, 0.0))
        return np.divide(sums, total, out=np.zeros(m), where=total > 0)
    if kind in (K.DCG, K.NDCG):
        dcg = _column_sums(R * log_discount(n)[:, None])
        if kind is K.DCG:
            return dcg
        ideal = np.array([_ideal_dcg(J[:, j], spec.k) for j in range(m)])
        return np.divide(dcg, ideal, out=np.zeros(m), where=ideal > 0)
    if kind is K.ERR:
        ranks = np.arange(1, n + 1, dtype=float)[:, None]
        return _column_sums(R * cascade_prior(R) / ranks)
    if kind is K.RBP:
        disc = spec.p ** np.arange(n, dtype=float)
        return (1.0 - spec.p) * _column_sums(R * disc[:, None])
    raise ValueError(f"{kind.value} is not an ad-hoc metric")


def _ideal_dcg(values: np.ndarray, k: int | None) -> float:
    ranked = np.sort(values[values > 0])[::-1]
    if k is not None:
        ranked = ranked[:k]
    return _dcg(ranked)


def _greedy_alpha_ideal(J: np.ndarray, alpha: float, k: int | None) -> float:
    """alpha-DCG of the greedy ideal ordering of the judged pool.

    At each step the document with the largest marginal novelty gain is taken;
    ties go to the smaller doc id (the pool row order).
    """
    J = J[(J > 0).any(axis=1)]
    depth = len(J) if k is None else min(k, len(J))
    if depth == 0:
        return 0.0
    rel = (J > 0).astype(float)
    counts = np.zeros(J.shape[1])
    free = np.ones(len(J), bool)
    gains = []
    for _ in range(depth):
        marginal = (J * (1.0 - alpha) ** counts).sum(axis=1)
        marginal[~free] = -1.0
        best = int(np.argmax(marginal))
        if marginal[best] <= 0:
            break
        gains.append(marginal[best])
        free[best] = False
        counts += rel[best]
    return _dcg(np.array(gains))


# --------------------------------------------------------------------------
# array-level entry point
# --------------------------------------------------------------------------


def score_arrays(spec: MetricSpec, R: np.ndarray, w: np.ndarray, J: np.ndarray) -> float:
    """Score a ranking given as a relevance array.

    ``R`` is (n, m) relevance of the ranked documents, ``w`` the m aspect
    weights and ``J`` the (N, m) judged pool. Ad-hoc kinds on multi-aspect
    input fold aspects by maximum relevance.
    """
    kind = spec.kind
    R = np.asarray(R, dtype=float)
    J = np.asarray(J, dtype=float)
    w = np.asarray(w, dtype=float)
    if R.ndim != 2 or J.ndim != 2 or R.shape[1] != J.shape[1] or w.shape != (R.shape[1],):
        raise ValueError("inconsistent relevance array shapes")
    if spec.k is not None:
        R = R[: spec.k]
    n, m = R.shape
    if m == 0:
        return 0.0 if kind not in (K.EU, K.RBU) else _effort_only(spec, n)

    if kind.is_adhoc:
        if m > 1:
            R = R.max(axis=1, keepdims=True)
            J = J.max(axis=1, keepdims=True)
        return float(_adhoc_columns(kind, spec, R, J)[0])
    if kind.is_intent_aware:
        cols = _adhoc_columns(kind.base, spec, R, J)
        return _fsum(w * cols)

    if kind is K.S_RECALL:
        return float((R > 0).any(axis=0).sum() / m) if n else 0.0
    if kind is K.S_RR:
        if n == 0:
            return 0.0
        rel = R > 0
        if not rel.any(axis=0).all():
            return 0.0
        return 1.0 / (rel.argmax(axis=0).max() + 1.0)
    if kind in (K.ALPHA_DCG, K.ALPHA_NDCG):
        value = _dcg(novelty_gains(R, spec.alpha).sum(axis=1))
        if kind is K.ALPHA_DCG:
            return value
        ideal = _greedy_alpha_ideal(J, spec.alpha, spec.k)
        return value / ideal if ideal > 0 else 0.0
    if kind is K.NRBP:
        disc = spec.p ** np.arange(n, dtype=float)
        return _fsum(novelty_gains(R, spec.alpha).sum(axis=1) * disc)
    if kind in (K.D_NDCG, K.D_SHARP):
        dn = _d_ndcg(R, w, J, spec.k)
        if kind is K.D_NDCG:
            return dn
        recall = float((R > 0).any(axis=0).sum() / m) if n else 0.0
        return spec.lam * recall + (1.0 - spec.lam) * dn
    if kind is K.EU:
        disc = 1.0 / (1.0 + np.log2(np.arange(1, n + 1, dtype=float)))
        gain = novelty_gains(R, spec.alpha) @ w
        return _fsum((gain - spec.e) * disc)
    if kind is K.CT:
        before = np.vstack([np.zeros((1, m)), np.cumsum(R, axis=0)])[:n]
        open_ = before < spec.gamma
        gain = (novelty_gains(R, spec.alpha) * open_) @ w
        return _fsum(gain / np.arange(1, n + 1, dtype=float))
    if kind is K.RBU:
        disc = spec.p ** np.arange(1, n + 1, dtype=float)
        gain = (R * cascade_prior(R)) @ w
        return _fsum(disc * (gain - spec.e))
    raise ValueError(f"unsupported metric kind {kind}")


def _effort_only(spec: MetricSpec, n: int) -> float:
    if spec.kind is K.RBU:
        return -spec.e * _fsum(spec.p ** np.arange(1, n + 1, dtype=float))
    return -spec.e * _fsum(1.0 / (1.0 + np.log2(np.arange(1, n + 1, dtype=float))))


def _d_ndcg(R: np.ndarray, w: np.ndarray, J: np.ndarray, k: int | None) -> float:
    value = _dcg(R @ w)
    ideal = _ideal_dcg(J @ w, k)
    return value / ideal if ideal > 0 else 0.0


# --------------------------------------------------------------------------
# public per-metric API
# --------------------------------------------------------------------------


def _arrays(ranking: RankedList | Sequence[str], judg: TopicJudgments):
    docs = ranking.docs if isinstance(ranking, RankedList) else tuple(ranking)
    return judg.matrix(docs), judg.weight_vector, judg.pool


def _score(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    R, w, J = _arrays(ranking, judg)
    return Score(score_arrays(spec, R, w, J), judg.topic_id, spec)


def _require(spec: MetricSpec, *kinds: MetricKind) -> None:
    if spec.kind not in kinds:
        raise ValueError(f"expected one of {[k.value for k in kinds]}, got {spec.kind.value}")


def evaluate(spec: MetricSpec | str, ranking: RankedList | Sequence[str], judg: TopicJudgments) -> Score:
    """Score one ranking with any metric; ad-hoc kinds see collapsed judgments."""
    if isinstance(spec, str):
        spec = MetricSpec.parse(spec)
    if spec.kind.is_adhoc:
        judg = collapse_single_aspect(judg)
    return _score(spec, ranking, judg)


def adhoc_metric(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    """P@k, RR, AP, DCG/nDCG@k, ERR@k or RBP on single-aspect judgments.

    P, RR and AP count a document as relevant when r > 0. nDCG is 0 when the
    ideal DCG is 0.
    """
    if not spec.kind.is_adhoc:
        raise ValueError(f"{spec.kind.value} is not an ad-hoc metric")
    if len(judg.aspects) != 1:
        raise ValueError(
            f"topic {judg.topic_id} has {len(judg.aspects)} aspects; collapse_single_aspect first"
        )
    return _score(spec, ranking, judg)


def intent_aware(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    """Weighted average over aspects of an ad-hoc metric seeing one aspect at a time."""
    kind = spec.kind
    if kind.is_adhoc:
        kind = next(ia for ia, base in _IA_OF.items() if base is kind)
    elif not kind.is_intent_aware:
        raise ValueError(f"{spec.kind.value} has no intent-aware form")
    return _score(spec.replace(kind=kind), ranking, judg)


_IA_OF = {ia: ia.base for ia in MetricKind if ia.is_intent_aware}


def s_recall_at_k(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    """Fraction of aspects with a relevant document in the top k."""
    return _score(spec.replace(kind=K.S_RECALL), ranking, judg)


def s_rr_full_coverage(ranking, judg: TopicJudgments) -> Score:
    return _score(MetricSpec(K.S_RR), ranking, judg)


def alpha_dcg_at_k(spec: MetricSpec, ranking, judg: TopicJudgments, normalized: bool = False) -> Score:
    """alpha-DCG@k; with ``normalized`` divide by the greedy ideal ordering."""
    kind = K.ALPHA_NDCG if normalized else K.ALPHA_DCG
    return _score(spec.replace(kind=kind), ranking, judg)


def nrbp(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    return _score(spec.replace(kind=K.NRBP), ranking, judg)


def d_sharp_measure_at_k(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    """lambda * S-Recall@k + (1 - lambda) * D-nDCG@k.

    D-nDCG uses the global gain sum_t w(t) r(d, t) with a log2 discount,
    normalised by the global-gain ideal ordering of the judged pool.
    """
    return _score(spec.replace(kind=K.D_SHARP), ranking, judg)


def expected_utility(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    return _score(spec.replace(kind=K.EU), ranking, judg)


def cube_test_at_k(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    """Cube Test with 1/i time discount and a hard saturation gate at ``gamma``."""
    return _score(spec.replace(kind=K.CT), ranking, judg)


def rbu_at_k(spec: MetricSpec, ranking, judg: TopicJudgments) -> Score:
    """Rank-biased utility: sum_i p^i (sum_t w(t) r(d_i,t) prod_{j<i}(1-r(d_j,t)) - e)."""
    return _score(spec.replace(kind=K.RBU), ranking, judg)


# --------------------------------------------------------------------------
# grids over runs
# --------------------------------------------------------------------------


def _score_run(args) -> dict[tuple[str, str, str], float]:
    run, topics, specs, judgments = args
    out = {}
    for topic in topics:
        judg = judgments[topic]
        flat = collapse_single_aspect(judg)
        ranking = run.rankings.get(topic, RankedList(topic, ()))
        R_full, w, J = _arrays(ranking, judg)
        R_flat, w_flat, J_flat = _arrays(ranking, flat)
        for spec in specs:
            if spec.kind.is_adhoc:
                value = score_arrays(spec, R_flat, w_flat, J_flat)
            else:
                value = score_arrays(spec, R_full, w, J)
            out[(run.run_tag, topic, spec.label)] = value
    return out


def evaluate_grid(specs: Sequence[MetricSpec | str], runs: Sequence[RunFile], qrels: QrelsFile,
                  jobs: int = 1) -> ScoreMatrix:
    """Score every run on every judged topic under every metric.

    The topic set is the union of run topics that have judgments; a run that
    lacks one of those topics is scored on an empty ranking. Run topics with
    no judgments are dropped with an ``UnjudgedTopicWarning``.
    """
    specs = [MetricSpec.parse(s) if isinstance(s, str) else s for s in specs]
    if not specs:
        raise ValueError("empty metric list")
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        dup = sorted({l for l in labels if labels.count(l) > 1})
        raise ValueError(f"duplicate metrics in grid: {dup}")
    tags = [r.run_tag for r in runs]
    if len(set(tags)) != len(tags):
        raise ValueError("duplicate run tags")
    run_topics = set()
    for run in runs:
        run_topics.update(run.rankings)
    unjudged = sorted(run_topics - set(qrels.judgments), key=natural_key)
    for t in unjudged:
        warnings.warn(f"topic {t} has no judgments; excluded", UnjudgedTopicWarning, stacklevel=2)
    topics = sorted(run_topics & set(qrels.judgments), key=natural_key)
    tasks = [(run, topics, specs, {t: qrels.judgments[t] for t in topics}) for run in runs]
    entries: dict[tuple[str, str, str], float] = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_score_run, tasks):
                entries.update(part)
    else:
        for task in tasks:
            entries.update(_score_run(task))
    return ScoreMatrix(entries, tuple(tags), tuple(topics), tuple(labels))


__all__ = [
    "score_arrays", "evaluate", "adhoc_metric", "intent_aware", "s_recall_at_k",
    "s_rr_full_coverage", "alpha_dcg_at_k", "nrbp", "d_sharp_measure_at_k",
    "expected_utility", "cube_test_at_k", "rbu_at_k", "evaluate_grid",
    "UnjudgedTopicWarning", "log_discount", "cascade_prior", "prior_counts",
]
