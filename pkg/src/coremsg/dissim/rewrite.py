"""Rewrite expressions: how a rule rebuilds sentences from captured subtrees.

Grammar::

    expr  := term ('-' NAME)*
    term  := base ('[' NAME ':=' NAME ']')*
    base  := NAME | '@root' | '{' piece+ '}'
    piece := NAME | '"literal"' | '%be'

``t - x`` deletes subtree ``x`` from ``t``; ``t[a:=b]`` substitutes ``b``
for ``a``; braces build a new clause from the listed pieces.  ``%be``
becomes is/are/was/were, agreeing with the preceding piece and with the
tense of the first finite verb of the rule's input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from ..treebank import ParseTree, reindex

ROOT = "@root"
BE = "%be"

PUNCT_TAGS = {",", ".", ":", "``", "''", "-LRB-", "-RRB-", "#", "$", "-NONE-"}
FINAL_TOKENS = {".", "!", "?"}
_LITERAL_TAGS = {"this": "DT", "that": "DT", "what": "WP", "it": "PRP", "there": "EX"}
_PLURAL_PRONOUNS = {"they", "we", "these", "those"}


class RewriteError(ValueError):
    """A rewrite expression is malformed or refers to an unbound capture."""


@dataclass(frozen=True)
class Remove:
    base: "Expr"
    names: tuple[str, ...]


@dataclass(frozen=True)
class Substitute:
    base: "Expr"
    target: str
    replacement: str


@dataclass(frozen=True)
class Construct:
    pieces: tuple[str, ...]  # capture names, '"literal"', or %be


Expr = Union[str, Remove, Substitute, Construct]

_EXPR_TOKEN = re.compile(r'\s*(:=|"[^"]*"|[{}\[\]\-]|%be|@root|[A-Za-z_][A-Za-z0-9_]*)')


def _tokenize(src: str) -> list[str]:
    pos, out = 0, []
    src = src.rstrip()
    while pos < len(src):
        m = _EXPR_TOKEN.match(src, pos)
        if not m:
            raise RewriteError(f"cannot tokenize rewrite {src!r} at {pos}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_expr(src: str) -> Expr:
    toks = _tokenize(src)
    pos = 0

    def take(expected: Optional[str] = None) -> str:
        nonlocal pos
        if pos >= len(toks):
            raise RewriteError(f"unexpected end of rewrite {src!r}")
        tok = toks[pos]
        if expected is not None and tok != expected:
            raise RewriteError(f"expected {expected!r} in {src!r}, got {tok!r}")
        pos += 1
        return tok

    def name() -> str:
        tok = take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise RewriteError(f"expected a capture name in {src!r}, got {tok!r}")
        return tok

    if not toks:
        raise RewriteError("empty rewrite expression")
    tok = take()
    expr: Expr
    if tok == "{":
        pieces = []
        while pos < len(toks) and toks[pos] != "}":
            p = take()
            if p in ("[", "]", ":=", "-", "{"):
                raise RewriteError(f"unexpected {p!r} inside braces in {src!r}")
            pieces.append(p)
        take("}")
        if not pieces:
            raise RewriteError(f"empty construction in {src!r}")
        expr = Construct(tuple(pieces))
    elif tok == ROOT or re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
        expr = tok
    else:
        raise RewriteError(f"bad rewrite start {tok!r} in {src!r}")
    while pos < len(toks) and toks[pos] == "[":
        take("[")
        target = name()
        take(":=")
        repl = name()
        take("]")
        expr = Substitute(expr, target, repl)
    removed = []
    while pos < len(toks) and toks[pos] == "-":
        take("-")
        removed.append(name())
    if removed:
        expr = Remove(expr, tuple(removed))
    if pos != len(toks):
        raise RewriteError(f"trailing input in rewrite {src!r}")
    return expr


def expr_names(expr: Expr) -> set[str]:
    if isinstance(expr, str):
        return set() if expr == ROOT else {expr}
    if isinstance(expr, Remove):
        return expr_names(expr.base) | set(expr.names)
    if isinstance(expr, Substitute):
        return expr_names(expr.base) | {expr.target, expr.replacement}
    return {p for p in expr.pieces if not p.startswith('"') and p != BE}


# ---------------------------------------------------------------------------
# tree surgery (identity-based; captured subtrees are objects inside root)


def _without(tree: ParseTree, drop: set[int]) -> Optional[ParseTree]:
    if id(tree) in drop:
        return None
    if tree.token is not None:
        return tree
    kids = [k for k in (_without(c, drop) for c in tree.children) if k is not None]
    if not kids:
        return None
    if len(kids) == len(tree.children) and all(a is b for a, b in zip(kids, tree.children)):
        return tree
    return ParseTree(tree.label, tuple(kids), None, tree.span, tree.raw_label)


def _replace(tree: ParseTree, target: ParseTree, repl: ParseTree) -> ParseTree:
    if tree is target:
        return repl
    if tree.token is not None:
        return tree
    kids = tuple(_replace(c, target, repl) for c in tree.children)
    if all(a is b for a, b in zip(kids, tree.children)):
        return tree
    return ParseTree(tree.label, kids, None, tree.span, tree.raw_label)


def _contains(tree: ParseTree, target: ParseTree) -> bool:
    return any(n is target for n in tree.subtrees())


def _first_finite_tag(tree: ParseTree) -> Optional[str]:
    for leaf in tree.leaves():
        if leaf.label in ("VBD", "VBZ", "VBP", "MD"):
            return leaf.label
    return None


def _is_plural(np: ParseTree) -> bool:
    if np.token is not None:
        return np.label in ("NNS", "NNPS") or np.token.lower() in _PLURAL_PRONOUNS
    if any(c.label == "CC" for c in np.children):
        return True
    head = np
    while head.token is None and head.children and head.children[0].label == "NP":
        head = head.children[0]
    nouns = [l for l in head.leaves() if l.label.startswith("NN") or l.label in ("PRP", "DT")]
    if not nouns:
        return False
    last = nouns[-1]
    return last.label in ("NNS", "NNPS") or (last.token or "").lower() in _PLURAL_PRONOUNS


def _lower_initial(tree: ParseTree) -> ParseTree:
    """Lower-case a capitalized first word moved away from sentence start."""
    leaves = tree.leaves()
    if not leaves:
        return tree
    first = leaves[0]
    tok = first.token or ""
    if (
        first.label in ("NNP", "NNPS")
        or tok == "I"
        or len(tok) < 2
        or not tok[0].isupper()
        or not tok[1:].islower()
    ):
        return tree
    return _replace(tree, first, ParseTree(first.label, (), tok.lower(), first.span, first.raw_label))


def evaluate(expr: Expr, root: ParseTree, binding: dict[str, ParseTree]) -> ParseTree:
    def get(name: str) -> ParseTree:
        if name not in binding:
            raise RewriteError(f"capture {name!r} is not bound")
        return binding[name]

    if isinstance(expr, str):
        return root if expr == ROOT else get(expr)
    if isinstance(expr, Remove):
        base = evaluate(expr.base, root, binding)
        drop = set()
        for n in expr.names:
            t = get(n)
            if t is base or not _contains(base, t):
                raise RewriteError(f"cannot remove {n!r}: not a proper part of the base")
            drop.add(id(t))
        out = _without(base, drop)
        if out is None:
            raise RewriteError("removal left nothing")
        return out
    if isinstance(expr, Substitute):
        base = evaluate(expr.base, root, binding)
        target = get(expr.target)
        if not _contains(base, target):
            raise RewriteError(f"cannot substitute {expr.target!r}: not inside the base")
        return _replace(base, target, get(expr.replacement))
    # Construct
    kids: list[ParseTree] = []
    prev: Optional[ParseTree] = None
    for piece in expr.pieces:
        if piece == BE:
            past = _first_finite_tag(root) == "VBD"
            plural = prev is not None and _is_plural(prev)
            word = ("were" if plural else "was") if past else ("are" if plural else "is")
            node = ParseTree.leaf("VBD" if past else ("VBP" if plural else "VBZ"), word)
        elif piece.startswith('"'):
            word = piece[1:-1]
            tag = _LITERAL_TAGS.get(word.lower(), "NN")
            node = ParseTree.leaf(tag, word)
            if tag in ("DT", "PRP", "EX"):
                node = ParseTree.node("NP", [node])
        else:
            node = get(piece)
        if kids:
            node = _lower_initial(node)
        kids.append(node)
        prev = node
    return ParseTree.node("S", kids)


def tidy(tree: ParseTree) -> ParseTree:
    """Drop stranded commas/colons and guarantee sentence-final punctuation."""
    leaves = tree.leaves()
    drop: set[int] = set()
    kept: list[ParseTree] = []
    for i, leaf in enumerate(leaves):
        if leaf.label in (",", ":"):
            nxt = next((l for l in leaves[i + 1:] if id(l) not in drop), None)
            if not kept or kept[-1].label in (",", ":") or nxt is None or nxt.label in (",", ":", ".") or nxt.token in FINAL_TOKENS:
                drop.add(id(leaf))
                continue
        kept.append(leaf)
    out = _without(tree, drop) if drop else tree
    if out is None:
        raise RewriteError("nothing left after tidying")
    last = out.leaves()[-1]
    if last.token not in FINAL_TOKENS:
        period = ParseTree.leaf(".", ".")
        if out.token is not None:
            out = ParseTree.node("S", [out, period])
        else:
            out = ParseTree(out.label, out.children + (period,), None, out.span, out.raw_label)
    return reindex(out)


def content_tokens(tree: ParseTree) -> list[str]:
    return [l.token for l in tree.leaves() if l.label not in PUNCT_TAGS and l.token not in FINAL_TOKENS]  # type: ignore[misc]


_NO_SPACE_BEFORE = {",", ".", ";", ":", "!", "?", "%", ")", "]", "}", "'s", "'re", "'ve", "n't", "'ll", "'d", "'m", "'", "''"}
_NO_SPACE_AFTER = {"(", "[", "{", "$", "``"}
_BRACKETS = {"-LRB-": "(", "-RRB-": ")", "-LSB-": "[", "-RSB-": "]", "-LCB-": "{", "-RCB-": "}", "``": '"', "''": '"'}


def realize(tree: ParseTree) -> str:
    """Detokenize a tree's yield into a sentence string."""
    out = ""
    prev: Optional[str] = None
    for leaf in tree.leaves():
        tok = leaf.token or ""
        if leaf.label == "-NONE-":
            continue
        shown = _BRACKETS.get(tok, tok)
        if prev is not None and tok not in _NO_SPACE_BEFORE and prev not in _NO_SPACE_AFTER:
            out += " "
        out += shown
        prev = tok
    for i, ch in enumerate(out):
        if ch.isalpha():
            return out[:i] + ch.upper() + out[i + 1:]
    return out
