"""Aspect selection by cosine similarity against seed-term embeddings."""

from __future__ import annotations

import enum
import logging
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)


class Aspect(str, enum.Enum):
    GROWTH = "growth"
    EMPLOYMENT = "employment"
    INFLATION = "inflation"


# tie-break priority, highest first
ASPECT_PRIORITY = (Aspect.GROWTH, Aspect.EMPLOYMENT, Aspect.INFLATION)

DEFAULT_SEEDS: dict[Aspect, tuple[str, ...]] = {
    Aspect.GROWTH: ("growth", "gdp", "economic", "activity", "output", "expansion"),
    Aspect.EMPLOYMENT: ("employment", "unemployment", "labor", "payroll", "jobs", "workforce"),
    Aspect.INFLATION: ("inflation", "prices", "cpi", "deflation", "price"),
}


class EmbeddingFormatError(ValueError):
    pass


class InconsistentDimension(EmbeddingFormatError):
    def __init__(self, lineno: int, expected: int, found: int):
        super().__init__(f"line {lineno}: expected {expected} components, found {found}")
        self.lineno = lineno


class EmptyFile(EmbeddingFormatError):
    pass


class NonNumericComponent(EmbeddingFormatError):
    pass


class ZeroVector(ValueError):
    pass


class SeedOutOfVocabulary(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingStore:
    dimension: int
    vocabulary: Mapping[str, np.ndarray]
    lowercased: bool = True

    def __post_init__(self):
        if self.dimension <= 0:
            raise EmbeddingFormatError("dimension must be positive")
        for tok, vec in self.vocabulary.items():
            if vec.shape != (self.dimension,):
                raise EmbeddingFormatError(f"vector for {tok!r} has shape {vec.shape}")
            if not np.all(np.isfinite(vec)):
                raise NonNumericComponent(f"vector for {tok!r} has non-finite components")

    def __len__(self) -> int:
        return len(self.vocabulary)

    def __contains__(self, token: str) -> bool:
        return self._key(token) in self.vocabulary

    def _key(self, token: str) -> str:
        return token.lower() if self.lowercased else token

    def get(self, token: str) -> Optional[np.ndarray]:
        return self.vocabulary.get(self._key(token))

    def scaled(self, factor: float) -> "EmbeddingStore":
        return EmbeddingStore(self.dimension, {k: v * factor for k, v in self.vocabulary.items()}, self.lowercased)


def load_embeddings(path: str | Path, lowercase: bool = True) -> EmbeddingStore:
    """Read a GloVe-style text file (``token v1 ... vd`` per line)."""
    vocab: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            token, comps = parts[0], parts[1:]
            if dim is None:
                if not comps:
                    raise InconsistentDimension(lineno, 1, 0)
                dim = len(comps)
            elif len(comps) != dim:
                raise InconsistentDimension(lineno, dim, len(comps))
            try:
                vec = np.array([float(c) for c in comps], dtype=float)
            except ValueError:
                raise NonNumericComponent(f"line {lineno}: non-numeric component") from None
            if not np.all(np.isfinite(vec)):
                raise NonNumericComponent(f"line {lineno}: NaN or Inf component")
            key = token.lower() if lowercase else token
            if key in vocab:
                log.warning("duplicate token %r at line %d; last occurrence wins", key, lineno)
            vocab[key] = vec
    if dim is None:
        raise EmptyFile(f"{path}: no vectors")
    return EmbeddingStore(dim, vocab, lowercase)


_WORD_RE = re.compile(r"[A-Za-z]+(?:[-'][A-Za-z]+)*|\d+(?:\.\d+)?")


def tokenize(text: str) -> list[str]:
    return [m.group().lower() for m in _WORD_RE.finditer(text)]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("coremsg.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(
        w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#")
    )


def embed_sentence(
    store: EmbeddingStore, tokens: Sequence[str], stopwords: Iterable[str] = ()
) -> tuple[np.ndarray, float]:
    """Mean of in-vocabulary, non-stopword token vectors, plus coverage."""
    stop = set(stopwords)
    content = [t for t in tokens if t.lower() not in stop]
    vecs = [v for v in (store.get(t) for t in content) if v is not None]
    if not vecs:
        return np.zeros(store.dimension), 0.0
    # sorted summation keeps the mean independent of token order
    stacked = np.array(sorted(vecs, key=lambda v: tuple(v)))
    return stacked.mean(axis=0), len(vecs) / len(content)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = math.sqrt(float(u @ u)), math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    return max(-1.0, min(1.0, float(u @ v) / (nu * nv)))


@dataclass(frozen=True)
class AspectAssignment:
    aspect: Aspect
    scores: dict[Aspect, float]
    coverage: float

    def to_json(self) -> dict:
        return {
            "aspect": self.aspect.value,
            "scores": {a.value: self.scores[a] for a in ASPECT_PRIORITY},
            "coverage": self.coverage,
        }


def _pick(scores: Mapping[Aspect, float]) -> Aspect:
    best = ASPECT_PRIORITY[0]
    for a in ASPECT_PRIORITY[1:]:
        if scores[a] > scores[best]:
            best = a
    return best


@dataclass
class AspectSelector:
    """Scores propositions against per-aspect seed centroids."""

    store: EmbeddingStore
    seeds: Mapping[Aspect, Sequence[str]] = field(default_factory=lambda: dict(DEFAULT_SEEDS))
    stopwords: frozenset[str] = field(default_factory=load_stopwords)

    def __post_init__(self):
        missing = [a for a in ASPECT_PRIORITY if a not in self.seeds]
        if missing:
            raise SeedOutOfVocabulary(f"no seeds configured for {[a.value for a in missing]}")
        self.centroids: dict[Aspect, np.ndarray] = {}
        for aspect in ASPECT_PRIORITY:
            vecs = []
            for term in self.seeds[aspect]:
                vec, cov = embed_sentence(self.store, tokenize(term))
                if cov > 0:
                    vecs.append(vec)
            if not vecs:
                raise SeedOutOfVocabulary(f"aspect {aspect.value!r} has no embeddable seed term")
            self.centroids[aspect] = np.mean(vecs, axis=0)

    def select(self, proposition: str) -> AspectAssignment:
        vec, coverage = embed_sentence(self.store, tokenize(proposition), self.stopwords)
        if not np.any(vec):
            scores = {a: 0.0 for a in ASPECT_PRIORITY}
        else:
            scores = {a: cosine(vec, self.centroids[a]) for a in ASPECT_PRIORITY}
        return AspectAssignment(_pick(scores), scores, coverage)


def select_aspect(
    proposition: str,
    seeds: Mapping[Aspect, Sequence[str]],
    store: EmbeddingStore,
    stopwords: Optional[frozenset[str]] = None,
) -> AspectAssignment:
    kwargs = {} if stopwords is None else {"stopwords": stopwords}
    return AspectSelector(store, seeds, **kwargs).select(proposition)


def default_store() -> EmbeddingStore:
    """The small fixture store shipped with the package."""
    with resources.as_file(resources.files("coremsg.data").joinpath("fixture_vectors.txt")) as p:
        return load_embeddings(p)
