"""Seeded generators of instances meeting each constraint's preconditions.

Relevance-oriented families use a single aspect and relevance in (0, eps],
the small-contribution regime. Diversity families use up to five aspects and
rankings of at most nine documents so that every list fits inside a top-10
cutoff.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .constraints import ConstraintId, Instance, SearchBounds

C = ConstraintId
SINGLE = np.array([1.0])


def constraint_rng(bounds: SearchBounds, constraint: ConstraintId) -> np.random.Generator:
    """Generator for one constraint's instance stream.

    Keyed by (master seed, constraint) so every metric sees the same instances.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([bounds.seed, constraint.index])))


def _small(rng: np.random.Generator, eps: float, size=None):
    """Uniform draw from (0, eps]."""
    return eps * (1.0 - rng.random(size))


def _random_weights(rng: np.random.Generator, m: int) -> np.ndarray:
    w = 1.0 - rng.random(m)
    return w / w.sum()


def _balanced(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def _swap(order: list[int], i: int, j: int) -> tuple[int, ...]:
    out = list(order)
    out[i], out[j] = out[j], out[i]
    return tuple(out)


def _column(values) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(-1, 1)


# --------------------------------------------------------------------------
# relevance-oriented families
# --------------------------------------------------------------------------


def priority(rng: np.random.Generator, eps: float) -> Instance:
    """Swap two documents whose relevance is in the wrong order."""
    n = int(rng.integers(2, 21))
    r = _small(rng, eps, n)
    i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
    while r[i] == r[j]:
        r[j] = _small(rng, eps)
    if r[j] < r[i]:
        r[i], r[j] = r[j], r[i]
    order = list(range(n))
    return Instance(C.PRI, _column(r), SINGLE, _swap(order, i, j), tuple(order), note=f"i={i + 1},j={j + 1}")


def deepness(rng: np.random.Generator, eps: float) -> Instance:
    """Correct the same contiguous inversion at positions i and j > i + 1."""
    n = int(rng.integers(4, 21))
    i = int(rng.integers(0, n - 3))
    j = int(rng.integers(i + 2, n - 1))
    a, b = _small(rng, eps, 2)
    while a == b:
        b = _small(rng, eps)
    a, b = min(a, b), max(a, b)
    r = _small(rng, eps, n)
    r[i] = r[j] = a
    r[i + 1] = r[j + 1] = b
    order = list(range(n))
    return Instance(C.DEEP, _column(r), SINGLE, _swap(order, i, i + 1), _swap(order, j, j + 1),
                    note=f"i={i + 1},j={j + 1}")


def confidence(rng: np.random.Generator, eps: float) -> Instance:
    """Append a non-relevant document to a ranking."""
    n = int(rng.integers(1, 21))
    r = eps * rng.random(n)
    r[rng.random(n) < 0.3] = 0.0
    pool = _column(np.append(r, 0.0))
    order = tuple(range(n))
    return Instance(C.CONF, pool, SINGLE, order, order + (n,), note=f"n={n}")


def threshold_pair(constraint: ConstraintId, n: int, r_c: float) -> Instance:
    """One relevant document on top versus n relevant after n non-relevant.

    Both lists are padded with non-relevant documents to length 2n. Rows
    0..n-1 are the relevant documents, the rest are non-relevant.
    """
    rel = list(range(n))
    junk = list(range(n, 3 * n - 1))
    pool = _column([r_c] * n + [0.0] * (2 * n - 1))
    single = tuple([rel[0]] + junk[: 2 * n - 1])
    many = tuple(junk[:n] + rel)
    if constraint is C.DEEP_TH:
        return Instance(C.DEEP_TH, pool, SINGLE, single, many, note=f"n={n}")
    return Instance(C.CLOSE_TH, pool, SINGLE, many, single, note=f"m={n}")


def deepness_probes(n_max: int) -> list[int]:
    """Every n up to 64, then a geometric grid ending exactly at n_max."""
    probes = list(range(1, min(n_max, 64) + 1))
    n = 64
    while n < n_max:
        n = min(n_max, int(round(n * 1.25)))
        probes.append(n)
    return probes


# --------------------------------------------------------------------------
# diversity families
# --------------------------------------------------------------------------


def aspect_diversity(rng: np.random.Generator, eps: float) -> Instance:
    """Replace d_i by a document more relevant to every aspect."""
    m = int(rng.integers(2, 6))
    n = int(rng.integers(1, 10))
    w = _random_weights(rng, m)
    rows = eps * rng.random((n, m))
    rows[rng.random((n, m)) < 0.3] = 0.0
    i = int(rng.integers(0, n))
    rows[i] = 0.5 * _small(rng, eps, m)
    upgraded = rows[i] + 0.5 * _small(rng, eps, m)
    pool = np.vstack([rows, upgraded])
    order = list(range(n))
    better = list(order)
    better[i] = n
    return Instance(C.ASP_DIV, pool, w, tuple(better), tuple(order), note=f"i={i + 1}")


def redundancy(rng: np.random.Generator, eps: float) -> Instance:
    """Append a document for the less covered aspect rather than the more covered one."""
    m = int(rng.integers(2, 6))
    t, t2 = rng.choice(m, size=2, replace=False).tolist()
    r_c = _small(rng, eps)
    low = int(rng.integers(0, 3))
    high = low + int(rng.integers(1, 4))
    rest = int(rng.integers(0, 9 - low - high))
    others = [a for a in range(m) if a not in (t, t2)] + [-1]
    labels = [t] * high + [t2] * low + [int(rng.choice(others)) for _ in range(rest)]
    labels = [labels[k] for k in rng.permutation(len(labels))]
    rows = np.zeros((len(labels) + 2, m))
    for k, a in enumerate(labels):
        if a >= 0:
            rows[k, a] = r_c
    n = len(labels)
    rows[n, t2] = r_c
    rows[n + 1, t] = r_c
    order = tuple(range(n))
    return Instance(C.RED, rows, _balanced(m), order + (n,), order + (n + 1,),
                    note=f"count_t={high},count_t'={low}")


def monotonic_redundancy(rng: np.random.Generator, eps: float) -> Instance:
    """Two aspects; t dominates t' in every earlier document."""
    n = int(rng.integers(1, 9))
    rt = _small(rng, eps, n)
    rt2 = rt * rng.random(n)
    rt2[rng.random(n) < 0.5] = 0.0
    rt2[rt2 >= rt] = 0.0
    r0 = _small(rng, eps)
    rows = np.column_stack([rt, rt2])
    rows = np.vstack([rows, [0.0, r0], [r0, 0.0]])
    order = tuple(range(n))
    return Instance(C.MRED, rows, _balanced(2), order + (n,), order + (n + 1,), note=f"n={n}")


def saturation(rng: np.random.Generator, r_max: float) -> Instance:
    """After a document with r_max for t, another document for t must not help."""
    m = int(rng.integers(2, 6))
    n = int(rng.integers(1, 9))
    w = _random_weights(rng, m)
    rows = np.zeros((n + 1, m))
    for k in range(n - 1):
        a = int(rng.integers(-1, m))
        if a >= 0:
            rows[k, a] = 1.0 - rng.random()
    t = int(rng.integers(0, m))
    rows[n - 1, t] = r_max
    rows[n, t] = 1.0 - rng.random()
    order = tuple(range(n))
    return Instance(C.SAT, rows, w, order, order + (n,), relation=">=", note=f"r_max={r_max:g}")


def aspect_relevance(rng: np.random.Generator, eps: float) -> Instance:
    """Swap d_i for an equally relevant document on a heavier, unseen aspect."""
    m = int(rng.integers(2, 6))
    w = _random_weights(rng, m)
    t, t2 = rng.choice(m, size=2, replace=False).tolist()
    while w[t] == w[t2]:
        w = _random_weights(rng, m)
    if w[t] > w[t2]:
        t, t2 = t2, t
    n = int(rng.integers(1, 10))
    i = int(rng.integers(0, n))
    others = [a for a in range(m) if a not in (t, t2)] + [-1]
    rows = np.zeros((n + 1, m))
    for k in range(n):
        a = int(rng.choice(others))
        if a >= 0:
            rows[k, a] = 1.0 - rng.random()
    v = 1.0 - rng.random()
    rows[i] = 0.0
    rows[i, t] = v
    rows[n, t2] = v
    order = list(range(n))
    better = list(order)
    better[i] = n
    return Instance(C.ASP_REL, rows, w, tuple(better), tuple(order), note=f"i={i + 1}")


_UNIVERSAL = {
    C.PRI: priority,
    C.DEEP: deepness,
    C.CONF: confidence,
    C.ASP_DIV: aspect_diversity,
    C.RED: redundancy,
    C.MRED: monotonic_redundancy,
    C.ASP_REL: aspect_relevance,
}
UNIVERSAL = frozenset(_UNIVERSAL)


@lru_cache(maxsize=64)
def universal_instances(constraint: ConstraintId, bounds: SearchBounds) -> tuple[Instance, ...]:
    """The seeded instance stream for a universally quantified constraint."""
    rng = constraint_rng(bounds, constraint)
    make = _UNIVERSAL[constraint]
    return tuple(make(rng, bounds.epsilon) for _ in range(bounds.instance_count))


@lru_cache(maxsize=64)
def saturation_instances(bounds: SearchBounds, r_max: float) -> tuple[Instance, ...]:
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([bounds.seed, C.SAT.index, bounds.r_max_grid.index(r_max)])))
    return tuple(saturation(rng, r_max) for _ in range(bounds.instance_count))
