"""Recursive discourse simplification over constituency trees."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..treebank import ParseTree, match_pattern, reindex, yield_text
from .catalog import RuleCatalog, SimplificationRule, load_catalog
from .relations import (
    NO_RELATION,
    CueLexicon,
    PartRole,
    RelationKind,
    RhetoricalRelation,
    classify_relation,
)
from .rewrite import RewriteError, content_tokens, evaluate, realize, tidy

DEFAULT_MAX_DEPTH = 20


class ConstituencyType(str, enum.Enum):
    CORE = "CORE"
    CONTEXT = "CONTEXT"


class SimplificationError(RuntimeError):
    pass


class RecursionLimitExceeded(SimplificationError):
    pass


class RuleProducedEmptyProposition(SimplificationError):
    pass


@dataclass
class DiscourseNode:
    """One proposition in the discourse tree.

    A node that a rule split keeps its own text and gets the rule outputs
    as children: core parts at the same level, context parts one level
    down.
    """

    text: str
    level: int
    ctype: ConstituencyType
    relation: RhetoricalRelation = NO_RELATION
    children: list["DiscourseNode"] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)
    tree: Optional[ParseTree] = field(default=None, repr=False, compare=False)

    @property
    def is_split(self) -> bool:
        return bool(self.children)

    def walk(self) -> Iterator["DiscourseNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "level": self.level,
            "type": self.ctype.value,
            "relation": self.relation.kind.value,
            "cue": self.relation.cue,
            "children": [c.to_json() for c in self.children],
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_json(cls, d: dict) -> "DiscourseNode":
        return cls(
            text=d["text"],
            level=d["level"],
            ctype=ConstituencyType(d["type"]),
            relation=RhetoricalRelation(RelationKind(d["relation"]), d.get("cue")),
            children=[cls.from_json(c) for c in d.get("children", [])],
            provenance=list(d.get("provenance", [])),
        )


def classify_constituency(rule: SimplificationRule, role: PartRole) -> ConstituencyType:
    if role is PartRole.SUBORDINATE:
        return ConstituencyType.CONTEXT
    return ConstituencyType.CORE


class Simplifier:
    """Applies an ordered rule catalog recursively, top-down, first match wins."""

    def __init__(
        self,
        catalog: Optional[RuleCatalog] = None,
        lexicon: Optional[CueLexicon] = None,
        max_depth: int = DEFAULT_MAX_DEPTH,
    ):
        self.catalog = catalog if catalog is not None else load_catalog()
        if not len(self.catalog):
            raise ValueError("empty ruleset")
        self.lexicon = lexicon if lexicon is not None else CueLexicon.load()
        self.max_depth = max_depth

    def first_match(self, tree: ParseTree) -> Optional[tuple[SimplificationRule, dict]]:
        for rule in self.catalog:
            for pat in rule.patterns:
                binding = match_pattern(tree, pat)
                if binding is not None:
                    return rule, binding
        return None

    def apply(self, rule: SimplificationRule, tree: ParseTree, binding: dict):
        """Run one rule; returns ``[(role, tree, relation)]`` in surface order."""
        cue_tokens: list[str] = []
        if rule.cue is not None:
            cue_tokens = yield_text(evaluate(rule.cue, tree, binding))
        parts = []
        for out in rule.outputs:
            try:
                produced = evaluate(out.expr, tree, binding)
                produced = tidy(produced)
            except RewriteError as exc:
                raise RuleProducedEmptyProposition(f"rule {rule.id}: {exc}") from None
            if not content_tokens(produced):
                raise RuleProducedEmptyProposition(f"rule {rule.id} produced an empty proposition")
            rel = classify_relation(cue_tokens, rule.position, out.role, self.lexicon)
            parts.append((out.role, produced, rel))
        return parts

    def simplify(self, tree: ParseTree) -> DiscourseNode:
        return self._node(reindex(tree), 0, ConstituencyType.CORE, NO_RELATION, [], 0)

    def _node(self, tree, level, ctype, relation, provenance, depth) -> DiscourseNode:
        node = DiscourseNode(realize(tree), level, ctype, relation, [], list(provenance), tree)
        found = self.first_match(tree)
        if found is None:
            return node
        if depth >= self.max_depth:
            raise RecursionLimitExceeded(
                f"rule {found[0].id} still matches after {self.max_depth} nested applications: {node.text!r}"
            )
        rule, binding = found
        for role, part, rel in self.apply(rule, tree, binding):
            kind = classify_constituency(rule, role)
            child_level = level + 1 if kind is ConstituencyType.CONTEXT else level
            node.children.append(
                self._node(part, child_level, kind, rel, provenance + [rule.id], depth + 1)
            )
        return node


def simplify(tree: ParseTree, ruleset: Optional[RuleCatalog] = None, **kwargs) -> DiscourseNode:
    return Simplifier(ruleset, **kwargs).simplify(tree)


def leaf_node(text: str) -> DiscourseNode:
    """Discourse tree for a sentence that is not simplified."""
    return DiscourseNode(text, 0, ConstituencyType.CORE)


def extract_level0(dtree: DiscourseNode) -> list[str]:
    """Key statements: level-0 core propositions not split any further.

    A level-0 node that a rule decomposed is represented by its level-0
    core descendants instead.
    """
    out = []
    for node in dtree.walk():
        if node.level != 0 or node.ctype is not ConstituencyType.CORE:
            continue
        if any(c.ctype is ConstituencyType.CORE for c in node.children):
            continue
        out.append(node.text)
    return out
