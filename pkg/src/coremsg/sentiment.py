"""Sentence sentiment through pluggable backends: lexicon, remote service, precomputed table."""

from __future__ import annotations

import enum
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import httpx

from .aspects import tokenize

log = logging.getLogger(__name__)

PROB_TOL = 1e-6
NEGATION_WINDOW = 3
NEGATORS = frozenset({"not", "no", "never", "without", "neither", "nor", "nothing", "hardly"})


class SentimentLabel(str, enum.Enum):
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    POSITIVE = "positive"

    @property
    def value_score(self) -> float:
        return {"negative": -1.0, "neutral": 0.0, "positive": 1.0}[self.value]


class BackendKind(str, enum.Enum):
    LEXICON = "lexicon"
    REMOTE = "remote"
    PRECOMPUTED = "precomputed"


class SentimentError(RuntimeError):
    pass


class InvalidScore(SentimentError, ValueError):
    pass


class TransportError(SentimentError):
    pass


class NonSuccessStatus(SentimentError):
    def __init__(self, status: int, excerpt: str):
        super().__init__(f"HTTP {status}: {excerpt}")
        self.status = status
        self.excerpt = excerpt


class LengthMismatch(SentimentError):
    pass


class MalformedResponse(SentimentError):
    pass


class MissingKey(SentimentError, LookupError):
    pass


# argmax ties resolve toward the first label in this order
_TIE_ORDER = (SentimentLabel.NEUTRAL, SentimentLabel.POSITIVE, SentimentLabel.NEGATIVE)


@dataclass(frozen=True)
class SentimentScore:
    label: SentimentLabel
    score: float
    probs: Optional[Mapping[SentimentLabel, float]] = None
    backend: str = ""
    fallback: bool = False

    def __post_init__(self):
        if not -1.0 <= self.score <= 1.0:
            raise InvalidScore(f"score {self.score} outside [-1, 1]")
        if self.probs is None:
            if self.score != self.label.value_score:
                raise InvalidScore(f"label {self.label.value} requires score {self.label.value_score}, got {self.score}")
            return
        if set(self.probs) != set(SentimentLabel):
            raise InvalidScore("probs must cover negative, neutral and positive")
        if any(p < 0 for p in self.probs.values()) or abs(sum(self.probs.values()) - 1.0) > PROB_TOL:
            raise InvalidScore("probs must be non-negative and sum to 1")
        top = max(self.probs.values())
        if self.probs[self.label] < top:
            raise InvalidScore(f"label {self.label.value} is not the most probable")
        expected = self.probs[SentimentLabel.POSITIVE] - self.probs[SentimentLabel.NEGATIVE]
        if abs(self.score - expected) > PROB_TOL:
            raise InvalidScore(f"score {self.score} != P(positive) - P(negative) = {expected}")

    @classmethod
    def from_label(cls, label: SentimentLabel | str, backend: str = "", fallback: bool = False) -> "SentimentScore":
        label = SentimentLabel(label)
        return cls(label, label.value_score, None, backend, fallback)

    @classmethod
    def from_probs(cls, probs: Mapping[SentimentLabel | str, float], backend: str = "") -> "SentimentScore":
        p = {SentimentLabel(k): float(v) for k, v in probs.items()}
        if set(p) != set(SentimentLabel):
            raise InvalidScore("probs must cover negative, neutral and positive")
        top = max(p.values())
        label = next(l for l in _TIE_ORDER if p[l] == top)
        score = max(-1.0, min(1.0, p[SentimentLabel.POSITIVE] - p[SentimentLabel.NEGATIVE]))
        return cls(label, score, p, backend)

    def to_json(self) -> dict:
        out: dict = {"label": self.label.value, "score": self.score, "backend": self.backend}
        if self.probs is not None:
            out["probs"] = {l.value: self.probs[l] for l in SentimentLabel}
        if self.fallback:
            out["fallback"] = True
        return out


NEUTRAL_FALLBACK = SentimentScore(SentimentLabel.NEUTRAL, 0.0, None, BackendKind.PRECOMPUTED.value, True)


# ---------------------------------------------------------------------------
# lexicon backend


def load_lexicon(path: str | Path | None = None) -> dict[str, int]:
    """Read ``term<TAB>+1|-1`` lines; the shipped lexicon when ``path`` is None."""
    if path is None:
        text = resources.files("coremsg.data").joinpath("sentiment_lexicon.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    lex: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1].strip() not in ("+1", "-1", "1"):
            raise ValueError(f"lexicon line {lineno}: expected 'term<TAB>+1|-1'")
        lex[parts[0].strip().lower()] = int(parts[1])
    if not lex:
        raise ValueError("empty sentiment lexicon")
    return lex


def _is_negator(tok: str) -> bool:
    return tok in NEGATORS or tok.endswith("n't")


def lexicon_classify(lexicon: Mapping[str, int], text: str, window: int = NEGATION_WINDOW) -> SentimentScore:
    """Count polarity hits, flipping a hit preceded by a negator within ``window`` tokens.

    The score is ``(pos - neg) / (pos + neg)``, carried as a probability
    split between positive and negative hits so the score invariants hold.
    """
    if not lexicon:
        raise ValueError("empty sentiment lexicon")
    toks = tokenize(text)
    pos = neg = 0
    for i, tok in enumerate(toks):
        pol = lexicon.get(tok)
        if pol is None:
            continue
        if any(_is_negator(t) for t in toks[max(0, i - window):i]):
            pol = -pol
        if pol > 0:
            pos += 1
        else:
            neg += 1
    backend = BackendKind.LEXICON.value
    if pos == neg:
        probs = {SentimentLabel.NEGATIVE: 0.0, SentimentLabel.NEUTRAL: 1.0, SentimentLabel.POSITIVE: 0.0}
    else:
        n = pos + neg
        probs = {SentimentLabel.NEGATIVE: neg / n, SentimentLabel.NEUTRAL: 0.0, SentimentLabel.POSITIVE: pos / n}
    return SentimentScore.from_probs(probs, backend)


# ---------------------------------------------------------------------------
# remote backend


def _parse_item(item: object) -> SentimentScore:
    backend = BackendKind.REMOTE.value
    if not isinstance(item, dict) or "label" not in item:
        raise MalformedResponse(f"item is not an object with a label: {item!r:.80}")
    try:
        label = SentimentLabel(str(item["label"]).lower())
    except ValueError:
        raise MalformedResponse(f"unknown label {item['label']!r}") from None
    probs = item.get("probs")
    try:
        if probs is None:
            return SentimentScore.from_label(label, backend)
        if not isinstance(probs, dict):
            raise MalformedResponse("probs must be an object")
        parsed = {SentimentLabel(str(k).lower()): float(v) for k, v in probs.items()}
        score = SentimentScore.from_probs(parsed, backend)
        if parsed[label] < max(parsed.values()):
            raise MalformedResponse(f"label {label.value} disagrees with probs")
        return SentimentScore(label, score.score, score.probs, backend)
    except (InvalidScore, ValueError, TypeError) as exc:
        raise MalformedResponse(str(exc)) from None


@dataclass
class RemoteClassifier:
    """Client for a classifier served over HTTP (``POST {"texts": [...]}``)."""

    endpoint: str
    timeout: float = 10.0
    max_in_flight: int = 4
    batch_size: int = 32
    retries: int = 2
    backoff: float = 0.2
    client: Optional[httpx.Client] = None
    requests_sent: int = field(default=0, init=False)

    def __post_init__(self):
        if self.max_in_flight < 1 or self.batch_size < 1:
            raise ValueError("max_in_flight and batch_size must be positive")
        self._lock = threading.Lock()

    def _post(self, client: httpx.Client, batch: list[str]) -> list[SentimentScore]:
        body = {"texts": batch}
        for attempt in range(self.retries + 1):
            with self._lock:
                self.requests_sent += 1
            try:
                resp = client.post(self.endpoint, json=body, timeout=self.timeout)
            except httpx.HTTPError as exc:
                if attempt < self.retries:
                    time.sleep(self.backoff * 2**attempt)
                    continue
                raise TransportError(f"{type(exc).__name__}: {exc}") from None
            if resp.status_code >= 500 or resp.status_code == 429:
                if attempt < self.retries:
                    time.sleep(self.backoff * 2**attempt)
                    continue
            if not 200 <= resp.status_code < 300:
                raise NonSuccessStatus(resp.status_code, resp.text[:200])
            try:
                items = resp.json()
            except ValueError:
                raise MalformedResponse("response is not JSON") from None
            if not isinstance(items, list):
                raise MalformedResponse("response is not a JSON array")
            if len(items) != len(batch):
                raise LengthMismatch(f"sent {len(batch)} texts, received {len(items)} results")
            return [_parse_item(it) for it in items]
        raise AssertionError("unreachable")

    def classify(self, texts: Sequence[str]) -> list[SentimentScore]:
        if not texts:
            raise ValueError("no texts to classify")
        batches = [list(texts[i:i + self.batch_size]) for i in range(0, len(texts), self.batch_size)]
        own = self.client is None
        client = self.client or httpx.Client()
        try:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                results = list(pool.map(lambda b: self._post(client, b), batches))
        finally:
            if own:
                client.close()
        return [s for batch in results for s in batch]


def remote_classify(
    endpoint: str,
    texts: Sequence[str],
    timeout: float = 10.0,
    max_in_flight: int = 4,
    **kwargs,
) -> list[SentimentScore]:
    return RemoteClassifier(endpoint, timeout, max_in_flight, **kwargs).classify(texts)


# ---------------------------------------------------------------------------
# precomputed backend

Key = tuple[str, int]


def _score_from_record(rec: dict, backend: str) -> SentimentScore:
    label = rec["label"]
    if isinstance(label, (int, float)) and not isinstance(label, bool):
        label = {-1: "negative", 0: "neutral", 1: "positive"}[int(label)]
    if rec.get("probs") is not None:
        s = SentimentScore.from_probs(rec["probs"], backend)
        if SentimentLabel(label) is not s.label:
            raise InvalidScore(f"label {label} disagrees with probs")
        return s
    return SentimentScore.from_label(str(label).lower(), backend)


def load_precomputed(path: str | Path) -> dict[Key, SentimentScore]:
    """Read JSONL records ``{doc_id, sentence_idx, aspect?, label[, probs]}``."""
    table: dict[Key, SentimentScore] = {}
    backend = BackendKind.PRECOMPUTED.value
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (str(rec["doc_id"]), int(rec["sentence_idx"]))
                score = _score_from_record(rec, backend)
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record ({exc})") from None
            if key in table:
                raise ValueError(f"{path}:{lineno}: duplicate key {key}")
            table[key] = score
    return table


def precomputed_lookup(table: Mapping[Key, SentimentScore], key: Key, strict: bool = True) -> SentimentScore:
    try:
        return table[key]
    except KeyError:
        if strict:
            raise MissingKey(f"no precomputed score for {key}") from None
        return NEUTRAL_FALLBACK


# ---------------------------------------------------------------------------
# backend port used by the pipeline


@dataclass(frozen=True)
class SentenceRef:
    doc_id: str
    sentence_idx: int
    text: str


class SentimentBackend:
    kind: BackendKind

    def score(self, sentences: Sequence[SentenceRef]) -> list[SentimentScore]:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind.value}


class LexiconBackend(SentimentBackend):
    kind = BackendKind.LEXICON

    def __init__(self, path: str | Path | None = None):
        self.path = path
        self.lexicon = load_lexicon(path)

    def score(self, sentences):
        return [lexicon_classify(self.lexicon, s.text) for s in sentences]

    def describe(self):
        return {"kind": self.kind.value, "lexicon": str(self.path) if self.path else "builtin", "terms": len(self.lexicon)}


class RemoteBackend(SentimentBackend):
    kind = BackendKind.REMOTE

    def __init__(self, classifier: RemoteClassifier):
        self.classifier = classifier

    def score(self, sentences):
        return self.classifier.classify([s.text for s in sentences]) if sentences else []

    def describe(self):
        c = self.classifier
        return {"kind": self.kind.value, "endpoint": c.endpoint, "batch_size": c.batch_size, "max_in_flight": c.max_in_flight}


class PrecomputedBackend(SentimentBackend):
    kind = BackendKind.PRECOMPUTED

    def __init__(self, path: str | Path, strict: bool = True):
        self.path = path
        self.strict = strict
        self.table = load_precomputed(path)
        self.fallbacks = 0

    def score(self, sentences):
        out = []
        for s in sentences:
            r = precomputed_lookup(self.table, (s.doc_id, s.sentence_idx), self.strict)
            self.fallbacks += r.fallback
            out.append(r)
        return out

    def describe(self):
        return {"kind": self.kind.value, "table": str(self.path), "strict": self.strict, "fallbacks": self.fallbacks}


def make_backend(kind: str, options: Mapping[str, object] | None = None) -> SentimentBackend:
    opts = dict(options or {})
    k = BackendKind(kind)
    if k is BackendKind.LEXICON:
        return LexiconBackend(opts.get("lexicon"))  # type: ignore[arg-type]
    if k is BackendKind.REMOTE:
        if not opts.get("endpoint"):
            raise ValueError("remote backend needs sentiment.endpoint")
        return RemoteBackend(
            RemoteClassifier(
                str(opts["endpoint"]),
                timeout=float(opts.get("timeout", 10.0)),  # type: ignore[arg-type]
                max_in_flight=int(opts.get("max_in_flight", 4)),  # type: ignore[arg-type]
                batch_size=int(opts.get("batch_size", 32)),  # type: ignore[arg-type]
                retries=int(opts.get("retries", 2)),  # type: ignore[arg-type]
            )
        )
    if not opts.get("table"):
        raise ValueError("precomputed backend needs sentiment.table")
    return PrecomputedBackend(opts["table"], bool(opts.get("strict", True)))  # type: ignore[arg-type]

