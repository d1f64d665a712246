"""Corpus ingestion: dated minutes files, sentence splitting and parse-tree sidecars."""

from __future__ import annotations

import datetime as dt
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .treebank import ParseTree, read_ptb_file, yield_text

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    pass


class UnparseableFilename(CorpusError):
    pass


class EmptyDocument(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    pass


class SidecarMismatch(CorpusError):
    pass


DEFAULT_ABBREVIATIONS = frozenset(
    {
        "u.s.", "u.k.", "mr.", "mrs.", "ms.", "dr.", "prof.", "inc.", "corp.", "co.", "ltd.", "jr.", "sr.",
        "st.", "vs.", "e.g.", "i.e.", "no.", "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.",
        "sep.", "sept.", "oct.", "nov.", "dec.",
    }
)

_FILENAME_RE = re.compile(r"^(\d{4}-\d{2}-\d{2})_([A-Za-z0-9][A-Za-z0-9_.-]*)\.txt$")
# sentence-final punctuation, optional closing quotes/brackets, whitespace, then an opener
_BOUNDARY_RE = re.compile(r"[.!?][\"')\]]*(\s+)(?=[\"'(\[]?[A-Z0-9])")


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    start: int
    end: int
    tree: Optional[ParseTree] = field(default=None, compare=False, repr=False)


@dataclass
class Document:
    doc_id: str
    date: dt.date
    raw_text: str
    path: Optional[Path] = None
    sentences: list[Sentence] = field(default_factory=list)


def split_sentences(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[Sentence]:
    """Split on terminal punctuation followed by whitespace and a capital or digit.

    A period closing a listed abbreviation is not a boundary.  Offsets index
    into ``text``; sentence text has its internal whitespace collapsed.
    """
    out: list[Sentence] = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        end = m.start(1)
        if text[m.start()] == ".":
            word = text[start:m.start() + 1].split()[-1].lower() if text[start:m.start() + 1].split() else ""
            if word in abbreviations:
                continue
        _append(out, text, start, end)
        start = m.end()
    _append(out, text, start, len(text))
    return out


def _append(out: list[Sentence], text: str, start: int, end: int) -> None:
    chunk = text[start:end]
    stripped = chunk.strip()
    if not stripped:
        return
    lead = len(chunk) - len(chunk.lstrip())
    s = start + lead
    out.append(Sentence(len(out), " ".join(stripped.split()), s, s + len(stripped)))


def parse_filename(name: str) -> tuple[dt.date, str]:
    m = _FILENAME_RE.match(name)
    if not m:
        raise UnparseableFilename(f"{name!r} does not match YYYY-MM-DD_<id>.txt")
    try:
        return dt.date.fromisoformat(m.group(1)), m.group(2)
    except ValueError:
        raise UnparseableFilename(f"{name!r} has an invalid date") from None


_PTB_UNESCAPE = {"-LRB-": "(", "-RRB-": ")", "-LSB-": "[", "-RSB-": "]", "-LCB-": "{", "-RCB-": "}", "``": '"', "''": '"'}


def _squash(tokens: Sequence[str]) -> str:
    return "".join(_PTB_UNESCAPE.get(t, t) for t in tokens).replace("`", "'")


def attach_trees(doc: Document, trees: Sequence[ParseTree], source: str) -> None:
    if len(trees) != len(doc.sentences):
        raise SidecarMismatch(f"{source}: {len(trees)} trees for {len(doc.sentences)} sentences in {doc.doc_id}")
    for i, (s, t) in enumerate(zip(doc.sentences, trees)):
        toks = [tok for tok, leaf in zip(yield_text(t), t.leaves()) if leaf.label != "-NONE-"]
        if _squash(toks) != _squash(s.text.split()):
            raise SidecarMismatch(f"{source}: tree {i + 1} does not match sentence {i} of {doc.doc_id}")
        doc.sentences[i] = Sentence(s.index, s.text, s.start, s.end, t)


def ingest_corpus(
    corpus_dir: str | Path,
    trees_dir: str | Path | None = None,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[Document]:
    """Read every ``YYYY-MM-DD_<id>.txt`` file, split it and attach ``.ptb`` sidecars."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise EmptyCorpus(f"{root} is not a directory")
    tree_root = Path(trees_dir) if trees_dir is not None else root
    docs: list[Document] = []
    seen: set[str] = set()
    for path in sorted(root.glob("*.txt")):
        date, doc_id = parse_filename(path.name)
        if doc_id in seen:
            raise CorpusError(f"duplicate document id {doc_id!r}")
        seen.add(doc_id)
        raw = path.read_text(encoding="utf-8")
        if not raw.strip():
            raise EmptyDocument(f"{path.name} is empty")
        doc = Document(doc_id, date, raw, path, split_sentences(raw, abbreviations))
        sidecar = tree_root / (path.stem + ".ptb")
        if sidecar.exists():
            attach_trees(doc, read_ptb_file(sidecar), sidecar.name)
        else:
            log.warning("no parse trees for %s; its sentences are not simplified", path.name)
        docs.append(doc)
    if not docs:
        raise EmptyCorpus(f"no YYYY-MM-DD_<id>.txt files in {root}")
    docs.sort(key=lambda d: (d.date, d.doc_id))
    return docs
