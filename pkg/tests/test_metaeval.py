from __future__ import annotations

import io
import itertools
import math
import pickle
from importlib import resources

import numpy as np
import pytest

from diveval.metaeval import (
    MEAN_ROW,
    NotComputable,
    ScoreMatrix,
    format_mu,
    metric_unanimity,
    mu_ranking,
    mu_report,
)


def worked_example() -> ScoreMatrix:
    text = resources.files("diveval").joinpath("data/mu_example.tsv").read_text(encoding="utf-8")
    return ScoreMatrix.from_tsv(text)


def matrix(values: np.ndarray, metrics: list[str]) -> ScoreMatrix:
    """ScoreMatrix from an array of shape (topics, runs, metrics)."""
    t, r, m = values.shape
    entries = {(f"r{j}", f"q{i}", metrics[k]): float(values[i, j, k])
               for i in range(t) for j in range(r) for k in range(m)}
    return ScoreMatrix(entries, tuple(f"r{j}" for j in range(r)), tuple(f"q{i}" for i in range(t)),
                       tuple(metrics))


def brute_force_mu(scores: ScoreMatrix, target: str, others: list[str]) -> float:
    joint = dm = dM = total = 0.0
    for t in scores.topics:
        for a, b in itertools.permutations(scores.runs, 2):
            x, y = scores[(a, t, target)], scores[(b, t, target)]
            m = 1.0 if x > y else 0.5 if x == y else 0.0
            u = all(scores[(a, t, o)] >= scores[(b, t, o)] for o in others)
            total += 1
            dm += m
            dM += u
            joint += m * u
    return math.log2((joint / total) / ((dm / total) * (dM / total)))


# --------------------------------------------------------------------------
# worked example
# --------------------------------------------------------------------------


def test_worked_example_value():
    mu = metric_unanimity("m1", ["m2", "m3"], worked_example())
    assert mu == pytest.approx(0.415, abs=1e-3)
    assert mu == pytest.approx(math.log2(4 / 3), abs=1e-12)


def test_worked_example_ranking():
    reports = mu_ranking(["m1", "m2", "m3"], worked_example())
    assert [r.metric for r in reports] == ["m2", "m3", "m1"]
    assert [r.mu for r in reports] == pytest.approx([1.0, 1.0, math.log2(4 / 3)], abs=1e-12)


def test_worked_example_metrics_differ():
    reports = mu_ranking(["m1", "m2", "m3"], worked_example())
    assert len({r.mu for r in reports}) > 1


def test_report_counts():
    r = mu_report("m1", ["m2", "m3"], worked_example())
    assert (r.agreements, r.metric_improvements, r.unanimous_improvements, r.total_pairs) == (2, 3, 3, 6)


# --------------------------------------------------------------------------
# definitions
# --------------------------------------------------------------------------


def test_two_runs_agreeing():
    # ordered pairs (a, b) and (b, a): P(joint) = 1/2, P(unanimous) = 1/2
    s = matrix(np.array([[[2.0, 5.0], [1.0, 3.0]]]), ["m", "o"])
    assert metric_unanimity("m", ["o"], s) == pytest.approx(math.log2(0.5 / (0.5 * 0.5)), abs=1e-9)
    assert metric_unanimity("m", ["o"], s) == pytest.approx(1.0, abs=1e-9)


def test_constant_metric_is_zero():
    rng = np.random.default_rng(3)
    vals = rng.random((5, 6, 2))
    vals[:, :, 0] = 0.7
    assert metric_unanimity("c", ["o"], matrix(vals, ["c", "o"])) == 0.0


def test_not_computable():
    s = matrix(np.array([[[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]]), ["m", "o1", "o2"])
    with pytest.raises(NotComputable):
        metric_unanimity("m", ["o1", "o2"], s)
    assert mu_report("m", ["o1", "o2"], s).mu is None


def test_zero_joint_is_minus_infinity():
    s = matrix(np.array([[[1.0, 0.0], [0.0, 1.0]]]), ["m", "o"])
    assert metric_unanimity("m", ["o"], s) == -math.inf


def test_strict_mode():
    s = matrix(np.array([[[1.0, 0.5], [0.0, 0.5]]]), ["m", "o"])
    # every pair is a tie for o, so the default reading counts both as unanimous
    assert mu_report("m", ["o"], s).unanimous_improvements == 2
    with pytest.raises(NotComputable):
        metric_unanimity("m", ["o"], s, strict=True)


def test_errors():
    one_run = matrix(np.ones((2, 1, 2)), ["a", "b"])
    with pytest.raises(ValueError, match="2 runs"):
        metric_unanimity("a", ["b"], one_run)
    s = worked_example()
    with pytest.raises(ValueError):
        metric_unanimity("m1", [], s)
    with pytest.raises(KeyError):
        metric_unanimity("m1", ["zz"], s)
    with pytest.raises(ValueError, match="2 metrics"):
        mu_ranking(["m1"], s)


def test_matches_brute_force_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(20):
        vals = rng.integers(0, 4, size=(4, 5, 3)).astype(float)
        s = matrix(vals, ["a", "b", "c"])
        try:
            got = metric_unanimity("a", ["b", "c"], s)
        except NotComputable:
            continue
        if math.isinf(got):
            continue
        assert got == pytest.approx(brute_force_mu(s, "a", ["b", "c"]), abs=1e-12)


# --------------------------------------------------------------------------
# properties
# --------------------------------------------------------------------------


def test_metric_improvements_are_half_of_pairs():
    rng = np.random.default_rng(5)
    for _ in range(20):
        vals = rng.integers(0, 3, size=(6, 7, 3)).astype(float)
        s = matrix(vals, ["a", "b", "c"])
        for r in mu_ranking(["a", "b", "c"], s):
            assert r.metric_improvements == r.total_pairs / 2


def test_duplicate_reference_metric_invariance():
    rng = np.random.default_rng(6)
    vals = rng.random((10, 8, 3))
    vals = np.concatenate([vals, vals[:, :, 1:2]], axis=2)
    s = matrix(vals, ["a", "b", "c", "b2"])
    assert metric_unanimity("a", ["b", "c", "b2"], s) == metric_unanimity("a", ["b", "c"], s)
    assert metric_unanimity("a", ["b", "c", "c"], s) == metric_unanimity("a", ["b", "c"], s)


def test_monotone_transform_invariance():
    rng = np.random.default_rng(7)
    vals = rng.random((10, 8, 3))
    base = metric_unanimity("a", ["b", "c"], matrix(vals, ["a", "b", "c"]))
    for f in (np.exp, lambda x: 3 * x - 1, lambda x: x ** 3):
        moved = vals.copy()
        moved[:, :, 0] = f(vals[:, :, 0])
        assert metric_unanimity("a", ["b", "c"], matrix(moved, ["a", "b", "c"])) == base
    # per-topic transforms: each topic gets its own increasing map
    moved = vals.copy()
    for t in range(vals.shape[0]):
        moved[t, :, 0] = (t + 1) * vals[t, :, 0] + t
    assert metric_unanimity("a", ["b", "c"], matrix(moved, ["a", "b", "c"])) == base


def test_capturing_more_unanimous_pairs_never_lowers_mu():
    rng = np.random.default_rng(8)
    vals = rng.random((6, 6, 3))
    s = matrix(vals, ["a", "b", "c"])
    before = metric_unanimity("a", ["b", "c"], s)
    # the target copying a reference metric agrees on every unanimous pair
    better = vals.copy()
    better[:, :, 0] = vals[:, :, 1]
    assert metric_unanimity("a", ["b", "c"], matrix(better, ["a", "b", "c"])) >= before


def test_identical_columns_have_equal_mu():
    rng = np.random.default_rng(9)
    vals = rng.random((5, 6, 3))
    vals[:, :, 1] = vals[:, :, 0]
    reports = {r.metric: r.mu for r in mu_ranking(["a", "b", "c"], matrix(vals, ["a", "b", "c"]))}
    assert reports["a"] == reports["b"]


def test_random_and_constant_metrics_near_zero():
    rng = np.random.default_rng(2024)
    quality = rng.random(30)
    vals = np.empty((50, 30, 4))
    for k in range(2):
        vals[:, :, k] = quality[None, :] + 0.3 * rng.random((50, 30))
    vals[:, :, 2] = rng.random((50, 30))
    vals[:, :, 3] = 0.5
    s = matrix(vals, ["s1", "s2", "noise", "const"])
    assert abs(metric_unanimity("noise", ["s1", "s2"], s)) <= 0.05
    assert abs(metric_unanimity("const", ["s1", "s2"], s)) <= 0.05
    reports = mu_ranking(["s1", "s2", "noise"], s.select(["s1", "s2", "noise"]))
    assert reports[-1].metric == "noise"


# --------------------------------------------------------------------------
# score matrix
# --------------------------------------------------------------------------


def test_incomplete_matrix_rejected():
    with pytest.raises(ValueError, match="incomplete"):
        ScoreMatrix({("r1", "q", "m"): 1.0}, ("r1", "r2"), ("q",), ("m",))
    with pytest.raises(ValueError, match="outside"):
        ScoreMatrix({("r1", "q", "m"): 1.0, ("x", "q", "m"): 1.0}, ("r1",), ("q",), ("m",))


def test_tsv_round_trip_and_means():
    s = worked_example()
    text = s.to_tsv()
    assert f"s1\t{MEAN_ROW}\tm1\t1.000000" in text
    assert ScoreMatrix.from_tsv(io.StringIO(text)) == s
    assert s.means()[("s2", "m2")] == pytest.approx(0.3)


def test_array_layout_and_select():
    s = worked_example()
    arr = s.array()
    assert arr.shape == (1, 3, 3)
    assert arr[0, 2, 1] == 0.4
    assert s.select(["m3"]).metrics == ("m3",)


def test_score_matrix_pickles():
    s = worked_example()
    assert pickle.loads(pickle.dumps(s)) == s


def test_format_mu():
    text = format_mu(mu_ranking(["m1", "m2", "m3"], worked_example()))
    lines = text.splitlines()
    assert lines[0].startswith("metric\tmu")
    assert lines[3].startswith("m1\t0.4150\t")
