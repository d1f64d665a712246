"""Loading and validating the simplification rule catalog."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from ..treebank import TreePattern, compile_pattern
from .relations import PartRole
from .rewrite import Expr, expr_names, parse_expr


class HierarchyEffect(str, enum.Enum):
    CORE_CORE = "CORE_CORE"
    CORE_CONTEXT = "CORE_CONTEXT"


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class RuleOutput:
    role: PartRole
    expr: Expr
    source: str


@dataclass(frozen=True)
class SimplificationRule:
    id: str
    category: str
    effect: HierarchyEffect
    patterns: tuple[TreePattern, ...]
    outputs: tuple[RuleOutput, ...]
    cue: Optional[Expr] = None
    position: str = "medial"
    splitting_only: bool = False
    description: str = ""

    def __post_init__(self):
        roles = [o.role for o in self.outputs]
        if self.effect is HierarchyEffect.CORE_CORE:
            if len(roles) < 2 or any(r is not PartRole.COORDINATE for r in roles):
                raise CatalogError(f"{self.id}: CORE_CORE rules need >=2 coordinate outputs")
        else:
            if PartRole.SUPERORDINATE not in roles or PartRole.SUBORDINATE not in roles:
                raise CatalogError(f"{self.id}: CORE_CONTEXT rules need a superordinate and a subordinate output")
            if PartRole.COORDINATE in roles:
                raise CatalogError(f"{self.id}: CORE_CONTEXT rules cannot have coordinate outputs")
        bound = set()
        for p in self.patterns:
            names = set(p.captures())
            bound = names if not bound else bound & names
        needed = set()
        for o in self.outputs:
            needed |= expr_names(o.expr)
        if self.cue is not None:
            needed |= expr_names(self.cue)
        missing = needed - bound
        if missing:
            raise CatalogError(f"{self.id}: rewrites use names not captured by every pattern: {sorted(missing)}")


@dataclass(frozen=True)
class RuleCatalog:
    version: int
    rules: tuple[SimplificationRule, ...]

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def ids(self) -> list[str]:
        return [r.id for r in self.rules]

    def get(self, rule_id: str) -> SimplificationRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)


def _rule_from_dict(d: dict) -> SimplificationRule:
    try:
        rid = d["id"]
        outputs = []
        for item in d["outputs"]:
            if not isinstance(item, dict) or len(item) != 1:
                raise CatalogError(f"{rid}: each output must be a single 'role: rewrite' mapping")
            (role, src), = item.items()
            outputs.append(RuleOutput(PartRole(role), parse_expr(src), src))
        position = d.get("position", "medial")
        if position not in ("leading", "medial"):
            raise CatalogError(f"{rid}: position must be leading or medial")
        return SimplificationRule(
            id=rid,
            category=d["category"],
            effect=HierarchyEffect(d["effect"]),
            patterns=tuple(compile_pattern(p) for p in d["patterns"]),
            outputs=tuple(outputs),
            cue=parse_expr(d["cue"]) if d.get("cue") else None,
            position=position,
            splitting_only=bool(d.get("splitting_only", False)),
            description=d.get("description", ""),
        )
    except KeyError as exc:
        raise CatalogError(f"rule {d.get('id', '?')}: missing field {exc.args[0]!r}") from None


def load_catalog(path: str | Path | None = None) -> RuleCatalog:
    """Load a rule catalog; the shipped one when ``path`` is None."""
    if path is None:
        text = resources.files("coremsg.data").joinpath("rules.yaml").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or "rules" not in doc:
        raise CatalogError("catalog must be a mapping with a 'rules' list")
    rules = tuple(_rule_from_dict(r) for r in doc["rules"])
    if not rules:
        raise CatalogError("catalog has no rules")
    ids = [r.id for r in rules]
    if len(ids) != len(set(ids)):
        raise CatalogError("duplicate rule ids")
    return RuleCatalog(int(doc.get("version", 1)), rules)
