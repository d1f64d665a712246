import math
import random

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from coremsg.aspects import Aspect, AspectAssignment
from coremsg.metrics import (
    LengthMismatch,
    MetricError,
    SinglePoint,
    ZeroVariance,
    aspect_distribution,
    binned_entropy,
    compare_streams,
    mutual_information,
    pearson,
    sentiment_distribution,
    volatility,
)
from coremsg.sentiment import SentimentScore

vals = st.floats(-100, 100, allow_nan=False)


def series(min_size=2, max_size=40):
    return st.lists(vals, min_size=min_size, max_size=max_size)


def paired(draw_x, draw_y):
    n = min(len(draw_x), len(draw_y))
    return np.array(draw_x[:n]), np.array(draw_y[:n])


def nonflat(x):
    return np.ptp(x) > 1e-3


# -- pearson -------------------------------------------------------------------


def test_pearson_examples():
    assert pearson([1, 2, 3], [1, 2, 3]) == 1.0
    assert pearson([1, 2, 3], [3, 2, 1]) == -1.0
    with pytest.raises(ZeroVariance):
        pearson([2, 2, 2], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        pearson([1, 2], [1, 2, 3])


@given(series(3), series(3), st.floats(0.01, 50), vals, st.floats(0.01, 50), vals)
def test_pearson_invariances(x, y, a, b, c, d):
    x, y = paired(x, y)
    assume(nonflat(x) and nonflat(y))
    r = pearson(x, y)
    assert -1.0 <= r <= 1.0
    assert abs(r - pearson(y, x)) <= 1e-10
    assert abs(r - pearson(a * x + b, c * y + d)) <= 1e-10
    assert abs(r + pearson(-a * x, y)) <= 1e-10


# -- mutual information ---------------------------------------------------------


def test_mi_uniform_three_values():
    x = [0, 1, 2] * 5
    assert mutual_information(x, x, 3) == pytest.approx(math.log(3), abs=1e-12)


def test_mi_independent_table():
    x = [0, 0, 1, 1] * 3
    y = [0, 1, 0, 1] * 3
    assert abs(mutual_information(x, y, 2)) <= 1e-12


def test_mi_constant_zero():
    assert mutual_information([4, 4, 4, 4], [1, 2, 3, 4]) == 0.0


def test_mi_label_default_bins():
    x = [-1, 0, 1, -1, 0, 1]
    assert mutual_information(x, x) == pytest.approx(math.log(3), abs=1e-12)


def test_mi_length_mismatch():
    with pytest.raises(LengthMismatch):
        mutual_information([1, 2], [1, 2, 3])


@given(series(), series(), st.integers(1, 12))
def test_mi_properties(x, y, bins):
    x, y = paired(x, y)
    assume(len(x) >= 2)
    m = mutual_information(x, y, bins)
    assert m >= 0.0
    assert abs(m - mutual_information(y, x, bins)) <= 1e-12
    assert abs(mutual_information(x, x, bins) - binned_entropy(x, bins)) <= 1e-12


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 4))
def test_mi_exact_product_tables(nx, ny, reps):
    # every (i, j) cell holds the same count, so the plug-in MI is exactly zero
    x = [i for i in range(nx) for j in range(ny)] * reps
    y = [j for i in range(nx) for j in range(ny)] * reps
    assume(len(x) >= 2)
    assert abs(mutual_information(x, y, max(nx, ny))) <= 1e-12


# -- volatility ------------------------------------------------------------------


def test_volatility_examples():
    assert volatility([3, 3, 3]) == 0.0
    assert volatility([1, -1, 1, -1]) == pytest.approx(math.sqrt(4 / 3), abs=1e-12)
    assert round(volatility([1, -1, 1, -1]), 5) == 1.15470
    with pytest.raises(SinglePoint):
        volatility([1.0])


@given(series(), vals, st.floats(-50, 50))
def test_volatility_invariances(x, c, a):
    x = np.array(x)
    v = volatility(x)
    assert abs(volatility(x + c) - v) <= 1e-12 * max(1.0, v)
    assert abs(volatility(a * x) - abs(a) * v) <= 1e-12 * max(1.0, abs(a) * v)


# -- count tables -------------------------------------------------------------------


def _assign(aspect):
    return AspectAssignment(aspect, {a: 0.0 for a in Aspect}, 1.0)


def test_aspect_distribution_one_each():
    t = aspect_distribution([_assign(a) for a in Aspect])
    assert t.counts == {"growth": 1, "employment": 1, "inflation": 1} and t.total == 3
    text = t.render()
    assert [l.split()[0] for l in text.splitlines()[2:]] == ["growth", "employment", "inflation", "total"]


def test_aspect_table_reference_layout():
    counts = ["growth"] * 842 + ["employment"] * 28 + ["inflation"] * 160
    text = aspect_distribution(counts).render()
    assert "1,030" in text and "842" in text


@given(st.lists(st.sampled_from(list(Aspect)), min_size=1, max_size=50))
def test_aspect_counts_sum(xs):
    t = aspect_distribution(xs)
    assert t.total == len(xs)
    for a in Aspect:
        assert t.counts[a.value] == sum(1 for x in xs if x is a)


def test_sentiment_distribution():
    s = [SentimentScore.from_label("neutral")] * 4
    t = sentiment_distribution(s)
    assert t.counts == {"neutral": 4, "positive": 0, "negative": 0}
    assert t.to_csv().splitlines() == ["label,count", "neutral,4", "positive,0", "negative,0"]
    with pytest.raises(MetricError):
        sentiment_distribution([])


@given(st.lists(st.sampled_from(["negative", "neutral", "positive"]), min_size=1, max_size=50))
def test_sentiment_counts_sum(xs):
    assert sentiment_distribution(xs).total == len(xs)


# -- report ----------------------------------------------------------------------------


def test_compare_streams_report():
    rng = random.Random(4)
    keys = [(f"d{i // 10}", i % 10) for i in range(200)]
    labels = [rng.choice([-1.0, 0.0, 1.0]) for _ in keys]
    noisy = [l + rng.gauss(0, 0.3) for l in labels]
    shuffled = labels[:]
    rng.shuffle(shuffled)
    rep = compare_streams(keys, labels, {"A": noisy, "B": shuffled})
    assert rep.correlation["A"] > rep.correlation["B"]
    assert rep.mutual_information["A"] > rep.mutual_information["B"]
    assert set(rep.volatility) == {"A", "B", "labels"}
    text = rep.render()
    for row in ("correlation", "mutual information", "volatility"):
        assert row in text
    assert rep.to_json()["n"] == 200


def test_compare_streams_constant_stream():
    rep = compare_streams([("a", 0), ("a", 1), ("b", 0)], [1.0, -1.0, 0.0], {"flat": [0.0, 0.0, 0.0]})
    assert rep.correlation["flat"] is None
    assert "-" in rep.render()
