from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from diveval.core import TopicJudgments

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_topic(rng: np.random.Generator, n_docs: int, n_aspects: int, zero_rate: float = 0.4,
                 balanced: bool = False, topic: str = "t") -> TopicJudgments:
    """Random judgments over docs d0..d{n-1}; roughly ``zero_rate`` of cells are 0."""
    aspects = [f"a{j}" for j in range(n_aspects)]
    rel = {}
    for i in range(n_docs):
        row = {}
        for a in aspects:
            if rng.random() >= zero_rate:
                row[a] = float(rng.random())
        rel[f"d{i}"] = row
    if balanced:
        return TopicJudgments.balanced(topic, rel, aspects)
    w = 1.0 - rng.random(n_aspects)
    w = w / w.sum()
    return TopicJudgments(topic, tuple(aspects), dict(zip(aspects, w.tolist())), rel)


def random_ranking(rng: np.random.Generator, judg: TopicJudgments, max_len: int | None = None,
                   extra: int = 3) -> list[str]:
    """A random ordering of judged docs plus a few unjudged ones."""
    docs = list(judg.relevance) + [f"u{i}" for i in range(extra)]
    rng.shuffle(docs)
    n = int(rng.integers(0, (max_len or len(docs)) + 1))
    return docs[:n]


@st.composite
def topics_and_rankings(draw, max_docs: int = 12, max_aspects: int = 4, min_aspects: int = 1):
    """Hypothesis strategy: (judgments, ranking) with graded multi-aspect relevance."""
    n_aspects = draw(st.integers(min_aspects, max_aspects))
    n_docs = draw(st.integers(1, max_docs))
    aspects = [f"a{j}" for j in range(n_aspects)]
    values = st.one_of(st.just(0.0), st.floats(0.0, 1.0, allow_nan=False))
    rel = {f"d{i}": {a: draw(values) for a in aspects} for i in range(n_docs)}
    raw_w = draw(st.lists(st.floats(0.01, 1.0), min_size=n_aspects, max_size=n_aspects))
    total = sum(raw_w)
    w = {a: x / total for a, x in zip(aspects, raw_w)}
    judg = TopicJudgments("t", tuple(aspects), w, rel)
    docs = draw(st.permutations(list(rel) + ["u0", "u1"]))
    n = draw(st.integers(0, len(docs)))
    return judg, list(docs[:n])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
