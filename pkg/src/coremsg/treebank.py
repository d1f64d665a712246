"""Penn-Treebank bracketed trees and a small tree-pattern language.

Trees are immutable.  Every node carries a half-open ``span`` over the
token positions of the tree it was built in; use :func:`reindex` after
assembling new trees from pieces of old ones.

Pattern syntax (s-expressions over node specs)::

    spec    := labels ['=' capture] ['@' anchors]
    labels  := '*' | TAG ('|' TAG)*
    anchors := words (',' words)*        words joined by '+'
    pattern := spec | '(' spec child* ')'
    child   := pattern | '...'

A bare spec matches any node with a matching label.  A parenthesised
spec with children must match the node's children in order; ``...`` is a
gap matching zero or more children.  An anchor requires the node's
lower-cased yield to begin with one of the listed word sequences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

__all__ = [
    "ParseTree",
    "TreePattern",
    "PTBParseError",
    "UnbalancedBrackets",
    "EmptyConstituent",
    "TrailingInput",
    "PatternSyntaxError",
    "parse_ptb",
    "serialize",
    "yield_text",
    "reindex",
    "read_ptb_file",
    "compile_pattern",
    "match_pattern",
    "split_label",
]


class PTBParseError(ValueError):
    """Base class for bracketed-tree parse failures."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class UnbalancedBrackets(PTBParseError):
    pass


class EmptyConstituent(PTBParseError):
    pass


class TrailingInput(PTBParseError):
    pass


class PatternSyntaxError(ValueError):
    pass


def split_label(raw: str) -> tuple[str, tuple[str, ...]]:
    """Split ``NP-SBJ-1`` into ``("NP", ("SBJ", "1"))``.

    Tags that start with a hyphen (``-NONE-``, ``-LRB-``) are kept whole.
    """
    if raw.startswith("-") or "-" not in raw and "=" not in raw:
        return raw, ()
    parts = re.split(r"[-=]", raw)
    if not parts[0]:
        return raw, ()
    return parts[0], tuple(p for p in parts[1:] if p)


@dataclass(frozen=True)
class ParseTree:
    label: str
    children: tuple["ParseTree", ...] = ()
    token: Optional[str] = None
    span: tuple[int, int] = (0, 0)
    raw_label: str = ""

    def __post_init__(self):
        if (self.token is None) == (len(self.children) == 0):
            raise ValueError("a node has a token XOR at least one child")
        if not self.raw_label:
            object.__setattr__(self, "raw_label", self.label)

    @property
    def functags(self) -> tuple[str, ...]:
        return split_label(self.raw_label)[1]

    @property
    def is_preterminal(self) -> bool:
        return self.token is not None

    @classmethod
    def leaf(cls, label: str, token: str) -> "ParseTree":
        return cls(label=split_label(label)[0], token=token, raw_label=label)

    @classmethod
    def node(cls, label: str, children: Sequence["ParseTree"]) -> "ParseTree":
        return cls(label=split_label(label)[0], children=tuple(children), raw_label=label)

    def leaves(self) -> list["ParseTree"]:
        if self.token is not None:
            return [self]
        out: list[ParseTree] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def subtrees(self) -> Iterator["ParseTree"]:
        """Pre-order traversal (outermost first, then left to right)."""
        yield self
        for c in self.children:
            yield from c.subtrees()

    def __str__(self) -> str:
        return serialize(self)


_TOKEN_RE = re.compile(r"\(|\)|[^()\s]+")


def _lex(text: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]


def parse_ptb(text: str) -> ParseTree:
    """Parse a single bracketed tree.

    An unlabeled outer wrapper, as in ``( (S ...) )``, is dropped.
    """
    toks = _lex(text)
    if not toks:
        raise EmptyConstituent("empty input", 0)
    pos = 0

    def parse_node() -> ParseTree:
        nonlocal pos
        tok, off = toks[pos]
        if tok != "(":
            raise PTBParseError(f"expected '(' but found {tok!r}", off)
        pos += 1
        if pos >= len(toks):
            raise UnbalancedBrackets("unexpected end of input", len(text))
        tok, off_label = toks[pos]
        if tok == ")":
            raise EmptyConstituent("constituent with no label", off_label)
        label = ""
        if tok != "(":
            label = tok
            pos += 1
        children: list[ParseTree] = []
        token: Optional[str] = None
        while True:
            if pos >= len(toks):
                raise UnbalancedBrackets("unexpected end of input", len(text))
            tok, off = toks[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                children.append(parse_node())
            else:
                if token is not None or children:
                    raise PTBParseError(f"unexpected bare token {tok!r}", off)
                token = tok
                pos += 1
        if token is not None and children:
            raise PTBParseError("constituent mixes a token and children", off_label)
        if not label:
            if len(children) == 1 and token is None:
                return children[0]
            raise EmptyConstituent("constituent with no label", off_label)
        if token is None and not children:
            raise EmptyConstituent(f"constituent {label!r} is empty", off_label)
        base, _ = split_label(label)
        if token is not None:
            return ParseTree(label=base, token=token, raw_label=label)
        return ParseTree(label=base, children=tuple(children), raw_label=label)

    tree = parse_node()
    if pos != len(toks):
        if toks[pos][0] == ")":
            raise UnbalancedBrackets("unmatched ')'", toks[pos][1])
        raise TrailingInput("input continues after the tree", toks[pos][1])
    return reindex(tree)


def serialize(tree: ParseTree) -> str:
    if tree.token is not None:
        return f"({tree.raw_label} {tree.token})"
    return "(" + tree.raw_label + " " + " ".join(serialize(c) for c in tree.children) + ")"


def yield_text(tree: ParseTree) -> list[str]:
    return [leaf.token for leaf in tree.leaves()]  # type: ignore[misc]


def reindex(tree: ParseTree, start: int = 0) -> ParseTree:
    """Return a copy of ``tree`` with spans assigned from ``start``."""
    if tree.token is not None:
        return ParseTree(tree.label, (), tree.token, (start, start + 1), tree.raw_label)
    kids = []
    cur = start
    for c in tree.children:
        k = reindex(c, cur)
        kids.append(k)
        cur = k.span[1]
    return ParseTree(tree.label, tuple(kids), None, (start, cur), tree.raw_label)


def read_ptb_file(path: str | Path) -> list[ParseTree]:
    """Read a ``.ptb`` file: one tree per line, ``#`` comments skipped."""
    trees = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                trees.append(parse_ptb(line))
            except PTBParseError as exc:
                raise type(exc)(f"{path}:{lineno}: {exc.args[0]}", exc.position) from None
    return trees


# ---------------------------------------------------------------------------
# patterns

GAP = "..."


@dataclass(frozen=True)
class TreePattern:
    labels: Optional[frozenset[str]]  # None = wildcard
    capture: Optional[str] = None
    anchors: tuple[tuple[str, ...], ...] = ()
    children: Optional[tuple[object, ...]] = None  # TreePattern or GAP
    source: str = field(default="", compare=False)

    def captures(self) -> list[str]:
        out = [self.capture] if self.capture else []
        for c in self.children or ():
            if isinstance(c, TreePattern):
                out.extend(c.captures())
        return out


def _parse_spec(tok: str) -> tuple[Optional[frozenset[str]], Optional[str], tuple[tuple[str, ...], ...]]:
    anchors: tuple[tuple[str, ...], ...] = ()
    if tok[0] in "=@":
        raise PatternSyntaxError(f"missing label in {tok!r}")
    if "@" in tok[1:]:
        idx = tok.index("@", 1)
        tok, anchor_src = tok[:idx], tok[idx + 1:]
        if not anchor_src:
            raise PatternSyntaxError("empty lexical anchor")
        anchors = tuple(tuple(w.lower() for w in alt.split("+")) for alt in anchor_src.split(","))
    capture = None
    if "=" in tok[1:]:
        idx = tok.index("=", 1)
        tok, capture = tok[:idx], tok[idx + 1:]
        if not capture:
            raise PatternSyntaxError("empty capture name")
    if not tok:
        raise PatternSyntaxError("missing label")
    labels = None if tok == "*" else frozenset(tok.split("|"))
    return labels, capture, anchors


def compile_pattern(source: str) -> TreePattern:
    toks = [t for t, _ in _lex(source)]
    if not toks:
        raise PatternSyntaxError("empty pattern")
    pos = 0

    def parse() -> TreePattern:
        nonlocal pos
        tok = toks[pos]
        if tok == ")":
            raise PatternSyntaxError(f"unexpected ')' in {source!r}")
        if tok != "(":
            if tok == GAP:
                raise PatternSyntaxError("gap outside a child list")
            pos += 1
            return TreePattern(*_parse_spec(tok))
        pos += 1
        if pos >= len(toks) or toks[pos] in "()" or toks[pos] == GAP:
            raise PatternSyntaxError(f"missing node spec in {source!r}")
        labels, capture, anchors = _parse_spec(toks[pos])
        pos += 1
        kids: list[object] = []
        while True:
            if pos >= len(toks):
                raise PatternSyntaxError(f"unbalanced pattern {source!r}")
            if toks[pos] == ")":
                pos += 1
                break
            if toks[pos] == GAP:
                kids.append(GAP)
                pos += 1
            else:
                kids.append(parse())
        return TreePattern(labels, capture, anchors, tuple(kids) if kids else None)

    pat = parse()
    if pos != len(toks):
        raise PatternSyntaxError(f"trailing input in pattern {source!r}")
    names = pat.captures()
    if len(names) != len(set(names)):
        raise PatternSyntaxError(f"duplicate capture name in {source!r}")
    return TreePattern(pat.labels, pat.capture, pat.anchors, pat.children, source)


def _node_ok(tree: ParseTree, pat: TreePattern) -> bool:
    if pat.labels is not None and tree.label not in pat.labels:
        return False
    if pat.anchors:
        words = [w.lower() for w in yield_text(tree)]
        if not any(tuple(words[: len(a)]) == a for a in pat.anchors):
            return False
    return True


def _match_node(tree: ParseTree, pat: TreePattern) -> Optional[dict[str, ParseTree]]:
    if not _node_ok(tree, pat):
        return None
    binding: dict[str, ParseTree] = {}
    if pat.children is not None:
        found = _match_seq(tree.children, 0, pat.children, 0)
        if found is None:
            return None
        binding.update(found)
    if pat.capture:
        binding[pat.capture] = tree
    return binding


def _match_seq(kids, i, pats, j) -> Optional[dict[str, ParseTree]]:
    if j == len(pats):
        return {} if i == len(kids) else None
    p = pats[j]
    if p == GAP:
        # lazy: shortest gap first
        for k in range(i, len(kids) + 1):
            rest = _match_seq(kids, k, pats, j + 1)
            if rest is not None:
                return rest
        return None
    if i == len(kids):
        return None
    here = _match_node(kids[i], p)
    if here is None:
        return None
    rest = _match_seq(kids, i + 1, pats, j + 1)
    if rest is None:
        return None
    here.update(rest)
    return here


def match_pattern(tree: ParseTree, pattern: TreePattern | str) -> Optional[dict[str, ParseTree]]:
    """Leftmost-outermost match of ``pattern`` in ``tree``.

    Returns the capture bindings (possibly empty) or ``None`` if nothing
    matches.
    """
    if isinstance(pattern, str):
        pattern = compile_pattern(pattern)
    for node in tree.subtrees():
        found = _match_node(node, pattern)
        if found is not None:
            return found
    return None
