"""Score matrices and Metric Unanimity (MU).

MU measures how often a metric's pairwise decisions coincide with
improvements that every other metric agrees on:

    MU(m) = log2( P(dm, dM) / (P(dm) * P(dM)) )

over ordered pairs of distinct runs within a topic. ``dm`` holds when ``m``
scores the first run strictly higher; a tie credits 0.5, so P(dm) = 1/2.
``dM`` holds when every other metric scores the first run at least as high.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

MEAN_ROW = "all"


class NotComputable(ValueError):
    """MU is undefined because the other metrics never agree unanimously."""


@dataclass(frozen=True)
class ScoreMatrix:
    """Scores indexed by (run, topic, metric); every cell must be present."""

    entries: Mapping[tuple[str, str, str], float]
    runs: tuple[str, ...]
    topics: tuple[str, ...]
    metrics: tuple[str, ...]

    def __post_init__(self):
        for name in ("runs", "topics", "metrics"):
            values = tuple(getattr(self, name))
            if len(set(values)) != len(values):
                raise ValueError(f"duplicate {name} in score matrix")
            object.__setattr__(self, name, values)
        entries = {k: float(v) for k, v in self.entries.items()}
        expected = len(self.runs) * len(self.topics) * len(self.metrics)
        runs, topics, metrics = set(self.runs), set(self.topics), set(self.metrics)
        for run, topic, metric in entries:
            if run not in runs or topic not in topics or metric not in metrics:
                raise ValueError(f"cell ({run}, {topic}, {metric}) outside the declared index sets")
        if len(entries) != expected:
            missing = next((r, t, m) for r in self.runs for t in self.topics for m in self.metrics
                           if (r, t, m) not in entries)
            raise ValueError(f"score matrix incomplete: missing cell {missing}")
        object.__setattr__(self, "entries", MappingProxyType(entries))

    def __reduce__(self):
        return (type(self), (dict(self.entries), self.runs, self.topics, self.metrics))

    def __getitem__(self, key: tuple[str, str, str]) -> float:
        return self.entries[key]

    def array(self) -> np.ndarray:
        """Scores as an array of shape (topics, runs, metrics)."""
        out = np.empty((len(self.topics), len(self.runs), len(self.metrics)))
        for ti, t in enumerate(self.topics):
            for ri, r in enumerate(self.runs):
                for mi, m in enumerate(self.metrics):
                    out[ti, ri, mi] = self.entries[(r, t, m)]
        return out

    def means(self) -> dict[tuple[str, str], float]:
        """Per-run mean over topics for every metric."""
        out = {}
        for r in self.runs:
            for m in self.metrics:
                vals = [self.entries[(r, t, m)] for t in self.topics]
                out[(r, m)] = math.fsum(vals) / len(vals) if vals else 0.0
        return out

    def select(self, metrics: Sequence[str]) -> ScoreMatrix:
        metrics = tuple(metrics)
        unknown = [m for m in metrics if m not in self.metrics]
        if unknown:
            raise KeyError(f"unknown metrics {unknown}")
        entries = {k: v for k, v in self.entries.items() if k[2] in metrics}
        return ScoreMatrix(entries, self.runs, self.topics, metrics)

    def to_tsv(self) -> str:
        """``run topic metric value`` rows, then ``all`` rows with per-run means."""
        buf = io.StringIO()
        for r in self.runs:
            for t in self.topics:
                for m in self.metrics:
                    buf.write(f"{r}\t{t}\t{m}\t{self.entries[(r, t, m)]:.6f}\n")
        means = self.means()
        for r in self.runs:
            for m in self.metrics:
                buf.write(f"{r}\t{MEAN_ROW}\t{m}\t{means[(r, m)]:.6f}\n")
        return buf.getvalue()

    @classmethod
    def from_tsv(cls, source: TextIO | Iterable[str] | str) -> ScoreMatrix:
        """Read ``run topic metric value`` rows; ``all`` rows are ignored."""
        if isinstance(source, str):
            source = source.splitlines()
        entries: dict[tuple[str, str, str], float] = {}
        runs: dict[str, None] = {}
        topics: dict[str, None] = {}
        metrics: dict[str, None] = {}
        for no, raw in enumerate(source, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split()
            if len(cols) != 4:
                raise ValueError(f"scores:{no}: expected 4 columns, found {len(cols)}")
            run, topic, metric, value = cols
            if topic == MEAN_ROW:
                continue
            try:
                v = float(value)
            except ValueError:
                raise ValueError(f"scores:{no}: value {value!r} is not a number") from None
            if (run, topic, metric) in entries:
                raise ValueError(f"scores:{no}: duplicate cell ({run}, {topic}, {metric})")
            entries[(run, topic, metric)] = v
            runs[run] = topics[topic] = metrics[metric] = None
        return cls(entries, tuple(runs), tuple(topics), tuple(metrics))


@dataclass(frozen=True)
class MuReport:
    """MU of one metric with the pair counts behind it.

    ``mu`` is None when MU is not computable (no unanimous improvement).
    """

    metric: str
    mu: float | None
    agreements: float
    metric_improvements: float
    unanimous_improvements: float
    total_pairs: int

    @property
    def computable(self) -> bool:
        return self.mu is not None


def _pair_masks(col: np.ndarray, strict: bool) -> np.ndarray:
    """(topics, runs, runs) mask of ordered pairs where col[i] >= col[j] (or >)."""
    a, b = col[:, :, None], col[:, None, :]
    return a > b if strict else a >= b


def _metric_decisions(col: np.ndarray) -> np.ndarray:
    a, b = col[:, :, None], col[:, None, :]
    return (a > b) + 0.5 * (a == b)


def _report(metric: str, dm: np.ndarray, unanimous: np.ndarray) -> MuReport:
    n_runs = dm.shape[1]
    off = ~np.eye(n_runs, dtype=bool)[None, :, :]
    total = int(dm.shape[0] * n_runs * (n_runs - 1))
    dm = np.where(off, dm, 0.0)
    unanimous = unanimous & off
    m_count = math.fsum(dm.ravel().tolist())
    u_count = int(unanimous.sum())
    joint = math.fsum(dm[unanimous].tolist())
    if u_count == 0:
        mu = None
    elif joint == 0:
        mu = -math.inf
    else:
        mu = math.log2(joint * total / (m_count * u_count))
    return MuReport(metric, mu, joint, m_count, float(u_count), total)


def _check(scores: ScoreMatrix, metrics: Sequence[str]) -> None:
    if len(scores.runs) < 2:
        raise ValueError("metric unanimity needs at least 2 runs")
    unknown = [m for m in metrics if m not in scores.metrics]
    if unknown:
        raise KeyError(f"unknown metrics {unknown}")


def mu_report(target: str, others: Sequence[str], scores: ScoreMatrix, strict: bool = False) -> MuReport:
    """MU of ``target`` against ``others`` with its pair counts."""
    others = list(others)
    if not others:
        raise ValueError("metric unanimity needs at least one other metric")
    _check(scores, [target, *others])
    arr = scores.array()
    idx = {m: i for i, m in enumerate(scores.metrics)}
    unanimous = np.ones((arr.shape[0], arr.shape[1], arr.shape[1]), bool)
    for m in others:
        unanimous &= _pair_masks(arr[:, :, idx[m]], strict)
    return _report(target, _metric_decisions(arr[:, :, idx[target]]), unanimous)


def metric_unanimity(target: str, others: Sequence[str], scores: ScoreMatrix, strict: bool = False) -> float:
    """MU of ``target`` against ``others``.

    Args:
        target: metric id in ``scores``.
        others: the reference metrics; duplicates do not change the result.
        scores: score matrix with at least two runs.
        strict: require strict improvements from every other metric. The
            default counts ties as agreement.

    Raises:
        NotComputable: the other metrics never agree on an improvement.
    """
    report = mu_report(target, others, scores, strict)
    if report.mu is None:
        raise NotComputable(f"MU of {target} undefined: the other metrics never agree unanimously")
    return report.mu


def mu_ranking(metrics: Sequence[str], scores: ScoreMatrix, strict: bool = False) -> list[MuReport]:
    """MU of every metric against all the others, best first.

    Ties are ordered by metric id; non-computable metrics come last.
    """
    metrics = list(dict.fromkeys(metrics))
    if len(metrics) < 2:
        raise ValueError("MU ranking needs at least 2 metrics")
    _check(scores, metrics)
    arr = scores.array()
    idx = {m: i for i, m in enumerate(scores.metrics)}
    masks = {m: _pair_masks(arr[:, :, idx[m]], strict) for m in metrics}
    agree = sum(masks[m].astype(np.int64) for m in metrics)
    reports = []
    for m in metrics:
        unanimous = (agree - masks[m]) == len(metrics) - 1
        reports.append(_report(m, _metric_decisions(arr[:, :, idx[m]]), unanimous))
    return sorted(reports, key=lambda r: (r.mu is None, -(r.mu if r.mu is not None else 0.0), r.metric))


def format_mu(reports: Sequence[MuReport]) -> str:
    """TSV: metric, MU (4 decimals or NotComputable), then the pair counts."""
    out = ["metric\tmu\tagreements\tmetric_improvements\tunanimous_improvements\ttotal_pairs\n"]
    for r in reports:
        mu = "NotComputable" if r.mu is None else f"{r.mu:.4f}"
        out.append(f"{r.metric}\t{mu}\t{r.agreements:g}\t{r.metric_improvements:g}\t"
                   f"{r.unanimous_improvements:g}\t{r.total_pairs}\n")
    return "".join(out)


__all__ = ["ScoreMatrix", "MuReport", "NotComputable", "metric_unanimity", "mu_report",
           "mu_ranking", "format_mu", "MEAN_ROW"]
