"""Seeded perturbations of qrels and runs for simulated evaluation scenarios.

Every random stream comes from numpy's PCG64 seeded with a SeedSequence built
from the master seed, the perturbation kind and a CRC-32 of the topic (and
run tag), so results are identical across platforms and independent of the
order in which topics are processed.
"""
from __future__ import annotations

import enum
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import RankedList
from .ingestion import QrelsFile, RunFile

RNG_NAME = "numpy.PCG64"
DEFAULT_CAP = 50


class PerturbationKind(str, enum.Enum):
    GRADES = "grades"
    WEIGHTS = "weights"
    TRUNCATE = "truncate"
    TRUNCATE_CAPPED = "truncate-capped"

    @property
    def index(self) -> int:
        return list(PerturbationKind).index(self)


@dataclass(frozen=True)
class PerturbationSpec:
    kind: PerturbationKind
    seed: int = 0
    cap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PerturbationKind(self.kind))
        if self.kind is PerturbationKind.TRUNCATE_CAPPED:
            if self.cap is None:
                object.__setattr__(self, "cap", DEFAULT_CAP)
            elif self.cap <= 0:
                raise ValueError(f"cap must be positive, got {self.cap}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def header(self) -> str:
        """Provenance comment line written at the top of perturbed files."""
        cap = f" cap={self.cap}" if self.kind is PerturbationKind.TRUNCATE_CAPPED else ""
        return f"# perturbation: kind={self.kind.value} seed={self.seed}{cap} rng={RNG_NAME}\n"


def _rng(seed: int, kind: PerturbationKind, *keys: str) -> np.random.Generator:
    entropy = [seed, kind.index] + [zlib.crc32(k.encode("utf-8")) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def perturb_grades(qrels: QrelsFile, seed: int) -> QrelsFile:
    """Replace every relevance value r by a uniform draw from [0, r].

    Values are redrawn per (document, aspect), visiting documents in id order
    and aspects in topic order.
    """
    out = {}
    for topic, judg in qrels.judgments.items():
        rng = _rng(seed, PerturbationKind.GRADES, topic)
        rel = {}
        for doc in judg.pool_docs:
            row = judg.relevance[doc]
            rel[doc] = {a: (row[a] * rng.random() if row[a] > 0 else 0.0)
                        for a in judg.aspects if a in row}
        out[topic] = judg.with_relevance(rel)
    return qrels.replace_judgments(out)


def perturb_weights(qrels: QrelsFile, seed: int) -> QrelsFile:
    """Draw each aspect weight from (0, 1] and renormalise per topic.

    This is not a uniform sample of the weight simplex.
    """
    out = {}
    for topic, judg in qrels.judgments.items():
        if not judg.aspects:
            out[topic] = judg
            continue
        rng = _rng(seed, PerturbationKind.WEIGHTS, topic)
        w = 1.0 - rng.random(len(judg.aspects))
        w = w / w.sum()
        out[topic] = judg.with_weights(dict(zip(judg.aspects, w.tolist())))
    return qrels.replace_judgments(out)


def truncate_runs(runs: Sequence[RunFile], spec: PerturbationSpec, seed: int | None = None) -> list[RunFile]:
    """Cut every (run, topic) ranking to a random prefix.

    The new length is uniform on {0..n} for proportional truncation, or on
    {0..cap} and then limited to n for capped truncation.
    """
    if spec.kind not in (PerturbationKind.TRUNCATE, PerturbationKind.TRUNCATE_CAPPED):
        raise ValueError(f"{spec.kind.value} is not a truncation kind")
    seed = spec.seed if seed is None else seed
    out = []
    for run in runs:
        rankings = {}
        for topic in run.topics:
            ranking: RankedList = run.rankings[topic]
            rng = _rng(seed, spec.kind, run.run_tag, topic)
            n = len(ranking)
            if spec.kind is PerturbationKind.TRUNCATE:
                length = int(rng.integers(0, n + 1))
            else:
                length = min(n, int(rng.integers(0, spec.cap + 1)))
            rankings[topic] = ranking.prefix(length)
        out.append(RunFile(run.run_tag, rankings))
    return out


def apply(spec: PerturbationSpec, qrels: QrelsFile | None = None,
          runs: Sequence[RunFile] | None = None) -> tuple[QrelsFile | None, list[RunFile] | None]:
    """Apply a perturbation to whichever input it acts on."""
    if spec.kind is PerturbationKind.GRADES:
        return perturb_grades(_need(qrels), spec.seed), None
    if spec.kind is PerturbationKind.WEIGHTS:
        return perturb_weights(_need(qrels), spec.seed), None
    if runs is None:
        raise ValueError("truncation needs runs")
    return None, truncate_runs(runs, spec)


def _need(qrels: QrelsFile | None) -> QrelsFile:
    if qrels is None:
        raise ValueError("this perturbation needs qrels")
    return qrels


__all__ = ["PerturbationKind", "PerturbationSpec", "perturb_grades", "perturb_weights",
           "truncate_runs", "apply", "RNG_NAME", "DEFAULT_CAP"]
