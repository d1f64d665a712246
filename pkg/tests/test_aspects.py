import json
import logging
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coremsg.aspects import (
    DEFAULT_SEEDS,
    Aspect,
    AspectSelector,
    EmptyFile,
    InconsistentDimension,
    NonNumericComponent,
    SeedOutOfVocabulary,
    ZeroVector,
    cosine,
    default_store,
    embed_sentence,
    load_embeddings,
    select_aspect,
    tokenize,
)

LEVEL0 = "Inflation pressures in foreign economies generally remained subdued."
FULL = (
    "Inflation pressures in foreign economies generally remained subdued, even though higher oil "
    "prices put some upward pressure on headline inflation."
)


@pytest.fixture(scope="module")
def store():
    return default_store()


@pytest.fixture(scope="module")
def selector(store):
    return AspectSelector(store)


def raw_fixture_rows():
    text = resources.files("coremsg.data").joinpath("fixture_vectors.txt").read_text(encoding="utf-8")
    return {line.split()[0]: [float(x) for x in line.split()[1:]] for line in text.splitlines() if line}


def test_load_small(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("a 1 2 3\nB 4 5 6\n", encoding="utf-8")
    s = load_embeddings(p)
    assert len(s) == 2 and s.dimension == 3
    assert "b" in s and "B" in s
    np.testing.assert_array_equal(s.get("b"), [4, 5, 6])


def test_inconsistent_dimension_reports_line(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("a 1 2 3\nb 1 2 3 4\n", encoding="utf-8")
    with pytest.raises(InconsistentDimension) as exc:
        load_embeddings(p)
    assert exc.value.lineno == 2


def test_empty_file(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("\n", encoding="utf-8")
    with pytest.raises(EmptyFile):
        load_embeddings(p)


@pytest.mark.parametrize("bad", ["a 1 x 3\n", "a 1 nan 3\n", "a inf 1 1\n"])
def test_non_numeric(tmp_path, bad):
    p = tmp_path / "v.txt"
    p.write_text(bad, encoding="utf-8")
    with pytest.raises(NonNumericComponent):
        load_embeddings(p)


def test_duplicate_last_wins(tmp_path, caplog):
    p = tmp_path / "v.txt"
    p.write_text("a 1 1\nA 2 2\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        s = load_embeddings(p)
    np.testing.assert_array_equal(s.get("a"), [2, 2])
    assert "duplicate" in caplog.text


def test_fixture_matches_manifest(store):
    manifest = json.loads(
        resources.files("coremsg.data").joinpath("fixture_vectors.manifest.json").read_text(encoding="utf-8")
    )
    assert store.dimension == manifest["dimension"] == 8
    assert len(store) == manifest["vocabulary_size"] == 50


def test_embed_single_word(store):
    vec, cov = embed_sentence(store, ["inflation"])
    np.testing.assert_array_equal(vec, store.get("inflation"))
    assert cov == 1.0


def test_embed_oov(store):
    vec, cov = embed_sentence(store, ["zzz", "qqq"])
    assert not vec.any() and cov == 0.0


def test_embed_two_words_hand_average(store):
    rows = raw_fixture_rows()
    expected = [(a + b) / 2 for a, b in zip(rows["oil"], rows["prices"])]
    vec, cov = embed_sentence(store, ["oil", "prices"])
    assert vec.tolist() == pytest.approx(expected, abs=1e-15)
    assert cov == 1.0


def test_embed_coverage_excludes_stopwords(store):
    _, cov = embed_sentence(store, ["the", "oil", "zzz"], {"the"})
    assert cov == 0.5


def test_cosine_examples():
    assert cosine(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == pytest.approx(1.0, abs=1e-12)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    with pytest.raises(ZeroVector):
        cosine(np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        cosine(np.ones(2), np.ones(3))


vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: math.sqrt(sum(x * x for x in v)) > 1e-3
)


@given(vectors, vectors)
def test_cosine_symmetric_and_bounded(u, v):
    a, b = cosine(np.array(u), np.array(v)), cosine(np.array(v), np.array(u))
    assert abs(a - b) <= 1e-12
    assert -1.0 - 1e-12 <= a <= 1.0 + 1e-12


def test_level0_is_inflation(selector):
    assert selector.select(LEVEL0).aspect is Aspect.INFLATION


def test_full_sentence_is_growth(selector):
    assert selector.select(FULL).aspect is Aspect.GROWTH


def test_function_form(store):
    assert select_aspect(LEVEL0, DEFAULT_SEEDS, store).aspect is Aspect.INFLATION


def test_stopwords_only(selector):
    a = selector.select("The and of it.")
    assert a.aspect is Aspect.GROWTH
    assert a.coverage == 0.0
    assert set(a.scores) == set(Aspect) and all(v == 0.0 for v in a.scores.values())


def test_tie_break_priority(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("g 1 0 0\ne 0 1 0\ni 0 0 1\nx 1 1 1\nw 0 1 1\n", encoding="utf-8")
    s = load_embeddings(p)
    seeds = {Aspect.GROWTH: ["g"], Aspect.EMPLOYMENT: ["e"], Aspect.INFLATION: ["i"]}
    assert select_aspect("x", seeds, s, frozenset()).aspect is Aspect.GROWTH
    assert select_aspect("w", seeds, s, frozenset()).aspect is Aspect.EMPLOYMENT


def test_seed_out_of_vocabulary(store):
    seeds = dict(DEFAULT_SEEDS)
    seeds[Aspect.EMPLOYMENT] = ["zzz"]
    with pytest.raises(SeedOutOfVocabulary):
        AspectSelector(store, seeds)


def test_assignment_json(selector):
    js = selector.select(LEVEL0).to_json()
    assert js["aspect"] == "inflation"
    assert list(js["scores"]) == ["growth", "employment", "inflation"]


words = st.lists(st.sampled_from(sorted(raw_fixture_rows()) + ["the", "zzz", "of"]), min_size=1, max_size=12)


@given(words, st.floats(0.01, 100.0))
def test_scale_invariance(store, ws, factor):
    text = " ".join(ws)
    a = AspectSelector(store).select(text)
    b = AspectSelector(store.scaled(factor)).select(text)
    assert a.aspect is b.aspect


@given(words, st.randoms())
def test_token_order_invariance(store, ws, rnd):
    shuffled = list(ws)
    rnd.shuffle(shuffled)
    v1, c1 = embed_sentence(store, ws)
    v2, c2 = embed_sentence(store, shuffled)
    assert np.array_equal(v1, v2) and c1 == c2


@given(words)
def test_aspect_is_argmax(selector, ws):
    a = selector.select(" ".join(ws))
    best = max(a.scores.values())
    assert a.scores[a.aspect] == best
    order = [Aspect.GROWTH, Aspect.EMPLOYMENT, Aspect.INFLATION]
    assert order.index(a.aspect) == min(order.index(k) for k, v in a.scores.items() if v == best)


def test_tokenize():
    assert tokenize("Real GDP rose 2.5 percent, labor-market gains.") == [
        "real", "gdp", "rose", "2.5", "percent", "labor-market", "gains",
    ]
