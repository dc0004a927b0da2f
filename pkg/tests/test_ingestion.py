from __future__ import annotations

import pickle

import pytest
from hypothesis import given
from hypothesis import strategies as st

from diveval.core import RankedList
from diveval.ingestion import (
    ParseError,
    RunFile,
    WeightFallbackWarning,
    attach_weights,
    format_qrels,
    format_run,
    format_weights,
    natural_key,
    parse_diversity_qrels,
    parse_run,
    parse_weights,
    read_qrels,
    read_run,
)

# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------


def test_parse_run_minimal():
    run = parse_run("101 Q0 docA 1 2.0 r1\n")
    assert run.run_tag == "r1"
    assert run.rankings["101"].docs == ("docA",)


def test_parse_run_five_columns_reports_line():
    with pytest.raises(ParseError, match=":2:") as info:
        parse_run("# comment\n101 Q0 docA 1 2.0\n")
    assert info.value.line_no == 2


def test_parse_run_orders_by_score_then_rank():
    run = parse_run("1 Q0 a 3 1.0 r\n1 Q0 b 1 5.0 r\n1 Q0 c 2 1.0 r\n1 Q0 d 9 1.0 r\n")
    assert run.rankings["1"].docs == ("b", "c", "a", "d")


def test_parse_run_rejects_duplicates_and_bad_numbers():
    with pytest.raises(ParseError, match="duplicate"):
        parse_run("1 Q0 a 1 1.0 r\n1 Q0 a 2 0.5 r\n")
    with pytest.raises(ParseError, match="not an integer"):
        parse_run("1 Q0 a x 1.0 r\n")
    with pytest.raises(ParseError, match="not a number"):
        parse_run("1 Q0 a 1 high r\n")
    with pytest.raises(ParseError, match="not finite"):
        parse_run("1 Q0 a 1 nan r\n")


def test_parse_run_topics_natural_order():
    run = parse_run("10 Q0 a 1 1 r\n9 Q0 a 1 1 r\nx Q0 a 1 1 r\n")
    assert run.topics == ["9", "10", "x"]
    assert sorted(["10", "b", "2", "a"], key=natural_key) == ["2", "10", "a", "b"]


def test_run_round_trip_is_fixed_point():
    text = "1 Q0 a 3 0.1 r\n1 Q0 b 1 0.30000000000000004 r\n2 Q0 c 1 -1e-20 r\n"
    once = format_run(parse_run(text))
    twice = format_run(parse_run(once))
    assert once == twice
    assert parse_run(once) == parse_run(text)


@given(st.lists(st.tuples(st.sampled_from(["1", "2", "30"]), st.floats(-1e6, 1e6)), min_size=1, max_size=20))
def test_run_round_trip_property(rows):
    lines = [f"{t} Q0 d{i} {i + 1} {s!r} tag\n" for i, (t, s) in enumerate(rows)]
    run = parse_run("".join(lines))
    assert parse_run(format_run(run)) == run


def test_empty_run_formats_to_nothing():
    assert format_run(RunFile("tag", {})) == ""


def test_read_run_from_file(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text("1 Q0 a 1 1.0 r\n", encoding="utf-8")
    assert read_run(path).rankings["1"] == RankedList("1", ("a",), (1.0,))


def test_run_file_pickles():
    run = parse_run("1 Q0 a 1 1.0 r\n")
    assert pickle.loads(pickle.dumps(run)) == run


# --------------------------------------------------------------------------
# qrels
# --------------------------------------------------------------------------


def test_qrels_exponential_mapping():
    q = parse_diversity_qrels("1 1 d 2\n1 1 e 3\n")
    assert q.g_max == 3
    assert q.judgments["1"].r("d", "1") == 0.375


def test_qrels_linear_mapping_and_explicit_gmax():
    q = parse_diversity_qrels("1 1 d 2\n", grade_map="linear", g_max=4)
    assert q.judgments["1"].r("d", "1") == 0.5


def test_qrels_negative_grade_clamped():
    q = parse_diversity_qrels("1 1 d -2\n1 1 e 1\n")
    assert q.judgments["1"].r("d", "1") == 0.0
    assert q.judgments["1"].r("e", "1") == 0.5


def test_qrels_aspects_need_a_positive_judgment():
    q = parse_diversity_qrels("1 1 d 1\n1 2 d 0\n")
    assert q.judgments["1"].aspects == ("1",)
    assert q.judgments["1"].weights == {"1": 1.0}


def test_qrels_errors():
    with pytest.raises(ParseError, match="duplicate"):
        parse_diversity_qrels("1 1 d 1\n1 1 d 2\n")
    with pytest.raises(ParseError, match="not an integer"):
        parse_diversity_qrels("1 1 d 1.5\n")
    with pytest.raises(ParseError, match="4 columns"):
        parse_diversity_qrels("1 1 d\n")


def test_qrels_exclude_general_aspect():
    text = "1 0 d 1\n1 1 d 1\n1 2 e 1\n"
    assert parse_diversity_qrels(text).judgments["1"].aspects == ("0", "1", "2")
    q = parse_diversity_qrels(text, exclude_general=True)
    assert q.judgments["1"].aspects == ("1", "2")
    assert q.judgments["1"].weights["1"] == 0.5


def test_qrels_unit_scale_round_trip():
    q = parse_diversity_qrels("1 1 d 2\n1 2 d 1\n2 1 x 3\n")
    text = format_qrels(q)
    back = parse_diversity_qrels(text)
    assert back.judgments == q.judgments
    assert format_qrels(back) == text


def test_qrels_unit_scale_validates_range():
    with pytest.raises(ParseError, match="outside"):
        parse_diversity_qrels("# scale: unit\n1 1 d 1.5\n")


def test_read_qrels(tmp_path):
    path = tmp_path / "q.txt"
    path.write_text("1 1 d 1\n", encoding="utf-8")
    assert read_qrels(path).judgments["1"].r("d", "1") == 0.5


def test_qrels_file_pickles():
    q = parse_diversity_qrels("1 1 d 1\n1 2 e 2\n")
    assert pickle.loads(pickle.dumps(q)) == q


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------


def test_weights_renormalised():
    w = parse_weights("1 a 2\n1 b 6\n2 x 0.5\n")
    assert w == {("1", "a"): 0.25, ("1", "b"): 0.75, ("2", "x"): 1.0}


def test_weights_errors():
    with pytest.raises(ParseError, match="non-negative"):
        parse_weights("1 a -0.1\n")
    with pytest.raises(ValueError, match="sum to zero"):
        parse_weights("1 a 0\n")
    with pytest.raises(ParseError, match="duplicate"):
        parse_weights("1 a 1\n1 a 2\n")


def test_attach_weights_and_fallback():
    q = parse_diversity_qrels("1 1 d 1\n1 2 e 1\n2 1 x 1\n2 2 y 1\n")
    with pytest.warns(WeightFallbackWarning, match="topic 2"):
        out = attach_weights(q, parse_weights("1 1 3\n1 2 1\n"))
    assert out.judgments["1"].weights == {"1": 0.75, "2": 0.25}
    assert out.judgments["2"].weights == {"1": 0.5, "2": 0.5}


def test_attach_weights_missing_aspect_falls_back():
    q = parse_diversity_qrels("1 1 d 1\n1 2 e 1\n")
    with pytest.warns(WeightFallbackWarning, match="missing"):
        out = attach_weights(q, {("1", "1"): 1.0})
    assert out.judgments["1"].weights == {"1": 0.5, "2": 0.5}


def test_weights_round_trip():
    q = parse_diversity_qrels("1 1 d 1\n1 2 e 1\n1 3 f 1\n")
    q = attach_weights(q, parse_weights("1 1 1\n1 2 1\n1 3 1\n"))
    w = parse_weights(format_weights(q))
    assert sum(w.values()) == pytest.approx(1.0, abs=1e-12)
    assert attach_weights(q, w).judgments == q.judgments
