import json
import threading
import time

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coremsg.sentiment import (
    InvalidScore,
    LengthMismatch,
    MalformedResponse,
    MissingKey,
    NonSuccessStatus,
    PrecomputedBackend,
    RemoteClassifier,
    SentenceRef,
    SentimentLabel,
    SentimentScore,
    TransportError,
    lexicon_classify,
    load_lexicon,
    load_precomputed,
    make_backend,
    precomputed_lookup,
)

LEX = {"strong": 1, "solid": 1, "weak": -1}
POS, NEU, NEG = SentimentLabel.POSITIVE, SentimentLabel.NEUTRAL, SentimentLabel.NEGATIVE


def test_only_positive_terms():
    s = lexicon_classify(LEX, "Strong and solid.")
    assert s.label is POS and s.score == 1.0


def test_no_terms_neutral():
    s = lexicon_classify(LEX, "Rates were unchanged.")
    assert s.label is NEU and s.score == 0.0


def test_negation_flips():
    assert lexicon_classify(LEX, "not strong").label is NEG
    assert lexicon_classify(LEX, "not at all very strong").label is POS  # negator 4 tokens back
    assert lexicon_classify(LEX, "growth wasn't strong").label is NEG


def test_mixed_score_ratio():
    s = lexicon_classify(LEX, "strong, solid, weak")
    assert s.label is POS
    assert s.score == pytest.approx(1 / 3)


def test_shipped_lexicon_loads():
    lex = load_lexicon()
    assert lex["strong"] == 1 and lex["weak"] == -1


def test_empty_lexicon_rejected():
    with pytest.raises(ValueError):
        lexicon_classify({}, "x")


def test_score_invariants_enforced():
    with pytest.raises(InvalidScore):
        SentimentScore(POS, 0.5)
    with pytest.raises(InvalidScore):
        SentimentScore(NEG, -0.2, {POS: 0.5, NEU: 0.2, NEG: 0.3})
    with pytest.raises(InvalidScore):
        SentimentScore.from_probs({"positive": 0.5, "neutral": 0.2, "negative": 0.2})


probs3 = st.tuples(*[st.floats(0.0, 1.0) for _ in range(3)]).filter(lambda t: sum(t) > 1e-3)


@given(probs3)
def test_probs_score_antisymmetric(t):
    total = sum(t)
    p, n, q = (x / total for x in t)
    a = SentimentScore.from_probs({"positive": p, "neutral": n, "negative": q})
    b = SentimentScore.from_probs({"positive": q, "neutral": n, "negative": p})
    assert a.score == pytest.approx(-b.score, abs=1e-12)
    assert a.probs[a.label] == max(a.probs.values())


words = st.lists(st.sampled_from(["strong", "solid", "weak", "not", "no", "rates", "rose"]), max_size=10)


@given(words)
def test_lexicon_outputs_valid(ws):
    s = lexicon_classify(LEX, " ".join(ws))
    assert -1.0 <= s.score <= 1.0
    assert (s.score > 0) == (s.label is POS)
    assert (s.score < 0) == (s.label is NEG)


def _server(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def _echo_handler(request: httpx.Request) -> httpx.Response:
    texts = json.loads(request.content)["texts"]
    out = []
    for t in texts:
        pos = 0.8 if "up" in t else 0.1
        out.append({"label": "positive" if pos > 0.5 else "negative", "probs": {"positive": pos, "neutral": 0.1, "negative": 0.9 - pos}})
    return httpx.Response(200, json=out)


def test_remote_two_items_in_order():
    rc = RemoteClassifier("http://svc/score", client=_server(_echo_handler))
    out = rc.classify(["prices up", "prices down"])
    assert [s.label for s in out] == [POS, NEG]
    assert out[0].score == pytest.approx(0.7)
    assert out[0].probs is not None


def test_remote_batches_preserve_order():
    bodies = []
    lock = threading.Lock()

    def handler(request):
        with lock:
            bodies.append(json.loads(request.content)["texts"])
        time.sleep(0.01)
        return _echo_handler(request)

    texts = [f"t{i} {'up' if i % 3 == 0 else 'down'}" for i in range(23)]
    rc = RemoteClassifier("http://svc/score", batch_size=5, max_in_flight=3, client=_server(handler))
    out = rc.classify(texts)
    assert [s.label is POS for s in out] == [i % 3 == 0 for i in range(23)]
    assert sorted(len(b) for b in bodies) == [3, 5, 5, 5, 5]
    assert rc.requests_sent == 5


def test_remote_bounded_in_flight():
    active = peak = 0
    lock = threading.Lock()

    def handler(request):
        nonlocal active, peak
        with lock:
            active += 1
            peak = max(peak, active)
        time.sleep(0.02)
        with lock:
            active -= 1
        return _echo_handler(request)

    RemoteClassifier("http://svc", batch_size=1, max_in_flight=2, client=_server(handler)).classify(["a"] * 8)
    assert peak <= 2


def test_remote_500():
    rc = RemoteClassifier("http://svc", retries=1, backoff=0, client=_server(lambda r: httpx.Response(500, text="boom")))
    with pytest.raises(NonSuccessStatus) as exc:
        rc.classify(["a"])
    assert exc.value.status == 500 and "boom" in exc.value.excerpt
    assert rc.requests_sent == 2


def test_remote_retry_sends_same_body():
    bodies = []

    def handler(request):
        bodies.append(request.content)
        if len(bodies) == 1:
            return httpx.Response(503)
        return _echo_handler(request)

    RemoteClassifier("http://svc", backoff=0, client=_server(handler)).classify(["a", "b"])
    assert len(bodies) == 2 and bodies[0] == bodies[1]


def test_remote_length_mismatch():
    rc = RemoteClassifier("http://svc", client=_server(lambda r: httpx.Response(200, json=[{"label": "neutral"}])))
    with pytest.raises(LengthMismatch):
        rc.classify(["a", "b"])


@pytest.mark.parametrize(
    "payload",
    [
        {"oops": 1},
        [{"label": "great"}],
        [{"label": "positive", "probs": {"positive": 0.1, "neutral": 0.1, "negative": 0.8}}],
        [{"label": "positive", "probs": {"positive": 0.5, "neutral": 0.1}}],
        [{"label": "positive", "probs": {"positive": 0.9, "neutral": 0.9, "negative": 0.1}}],
    ],
)
def test_remote_malformed(payload):
    rc = RemoteClassifier("http://svc", client=_server(lambda r: httpx.Response(200, json=payload)))
    with pytest.raises(MalformedResponse):
        rc.classify(["a"])


def test_remote_not_json():
    rc = RemoteClassifier("http://svc", client=_server(lambda r: httpx.Response(200, text="<html>")))
    with pytest.raises(MalformedResponse):
        rc.classify(["a"])


def test_remote_transport_error():
    def handler(request):
        raise httpx.ConnectError("refused")

    rc = RemoteClassifier("http://svc", retries=2, backoff=0, client=_server(handler))
    with pytest.raises(TransportError):
        rc.classify(["a"])
    assert rc.requests_sent == 3


@pytest.fixture
def table_file(tmp_path):
    p = tmp_path / "labels.jsonl"
    rows = [
        {"doc_id": "jan", "sentence_idx": 0, "aspect": "inflation", "label": "negative"},
        {"doc_id": "jan", "sentence_idx": 1, "label": 1},
        {"doc_id": "mar", "sentence_idx": 0, "label": "neutral", "probs": {"positive": 0.2, "neutral": 0.5, "negative": 0.3}},
    ]
    p.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return p


def test_precomputed_present(table_file):
    t = load_precomputed(table_file)
    assert precomputed_lookup(t, ("jan", 0)).label is NEG
    assert precomputed_lookup(t, ("jan", 1)).score == 1.0
    assert precomputed_lookup(t, ("mar", 0)).score == pytest.approx(-0.1)


def test_precomputed_missing(table_file):
    t = load_precomputed(table_file)
    with pytest.raises(MissingKey):
        precomputed_lookup(t, ("jan", 9))
    s = precomputed_lookup(t, ("jan", 9), strict=False)
    assert s.label is NEU and s.score == 0.0 and s.fallback


def test_precomputed_backend_counts_fallbacks(table_file):
    b = PrecomputedBackend(table_file, strict=False)
    out = b.score([SentenceRef("jan", 0, "x"), SentenceRef("zzz", 0, "y")])
    assert [s.fallback for s in out] == [False, True]
    assert b.describe()["fallbacks"] == 1


def test_precomputed_duplicate_key(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text('{"doc_id": "a", "sentence_idx": 0, "label": "neutral"}\n' * 2, encoding="utf-8")
    with pytest.raises(ValueError):
        load_precomputed(p)


def test_make_backend():
    assert make_backend("lexicon").kind.value == "lexicon"
    with pytest.raises(ValueError):
        make_backend("remote", {})
    with pytest.raises(ValueError):
        make_backend("telepathy")
