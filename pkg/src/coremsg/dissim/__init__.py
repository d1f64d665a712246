"""Rule-based discourse simplification into a hierarchy of propositions."""

from .catalog import CatalogError, HierarchyEffect, RuleCatalog, SimplificationRule, load_catalog
from .engine import (
    ConstituencyType,
    DiscourseNode,
    RecursionLimitExceeded,
    RuleProducedEmptyProposition,
    SimplificationError,
    Simplifier,
    classify_constituency,
    extract_level0,
    leaf_node,
    simplify,
)
from .relations import CueLexicon, PartRole, RelationKind, RhetoricalRelation, classify_relation

__all__ = [
    "CatalogError",
    "ConstituencyType",
    "CueLexicon",
    "DiscourseNode",
    "HierarchyEffect",
    "PartRole",
    "RecursionLimitExceeded",
    "RelationKind",
    "RhetoricalRelation",
    "RuleCatalog",
    "RuleProducedEmptyProposition",
    "SimplificationError",
    "SimplificationRule",
    "Simplifier",
    "classify_constituency",
    "classify_relation",
    "extract_level0",
    "leaf_node",
    "load_catalog",
    "simplify",
]
