import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coremsg.treebank import (
    EmptyConstituent,
    ParseTree,
    PatternSyntaxError,
    TrailingInput,
    UnbalancedBrackets,
    compile_pattern,
    match_pattern,
    parse_ptb,
    read_ptb_file,
    reindex,
    serialize,
    yield_text,
)

LABELS = ["S", "NP", "VP", "PP", "SBAR", "ADJP", "NP-SBJ", "S-TPC"]
TAGS = ["DT", "NN", "NNS", "VBD", "IN", "JJ", "CC", ",", "."]
WORDS = ["the", "market", "rose", "and", "fell", "prices", "in", ",", ".", "Fed", "rates", "é"]


def random_tree(rng: random.Random, depth: int = 0) -> ParseTree:
    if depth >= 4 or (depth > 0 and rng.random() < 0.3):
        return ParseTree.leaf(rng.choice(TAGS), rng.choice(WORDS))
    kids = [random_tree(rng, depth + 1) for _ in range(rng.randint(1, 4))]
    return ParseTree.node(rng.choice(LABELS), kids)


def bracket_oracle(text: str) -> tuple[int, list[str]]:
    """Independent reading of a serialized tree: node count and leaf tokens."""
    depth = nodes = 0
    leaves = []
    for m in re.finditer(r"\(\s*([^()\s]+)\s+([^()\s]+)\s*\)|\(|\)", text):
        if m.group(1) is not None:
            nodes += 1
            leaves.append(m.group(2))
        elif m.group() == "(":
            depth += 1
            nodes += 1
        else:
            depth -= 1
            assert depth >= 0
    assert depth == 0
    return nodes, leaves


@st.composite
def trees(draw, depth=0):
    if depth >= 3 or (depth > 0 and draw(st.booleans())):
        return ParseTree.leaf(draw(st.sampled_from(TAGS)), draw(st.sampled_from(WORDS)))
    kids = draw(st.lists(trees(depth=depth + 1), min_size=1, max_size=3))
    return ParseTree.node(draw(st.sampled_from(LABELS)), kids)


def test_parse_three_leaves():
    t = parse_ptb("(S (NP (DT The) (NN market)) (VP (VBD rose)))")
    assert t.label == "S"
    assert yield_text(t) == ["The", "market", "rose"]
    assert t.span == (0, 3)


def test_single_leaf_yield():
    assert yield_text(parse_ptb("(NN rates)")) == ["rates"]


def test_unbalanced_reports_end_of_input():
    src = "(S (NP (DT The)"
    with pytest.raises(UnbalancedBrackets) as exc:
        parse_ptb(src)
    assert exc.value.position == len(src)


def test_stray_close_is_unbalanced():
    with pytest.raises(UnbalancedBrackets):
        parse_ptb("(NN a))")


def test_trailing_input():
    with pytest.raises(TrailingInput):
        parse_ptb("(NN a) (NN b)")


def test_empty_constituent():
    with pytest.raises(EmptyConstituent):
        parse_ptb("(S (NP) (VP (VBD rose)))")


def test_outer_wrapper_dropped():
    t = parse_ptb("( (S (NP (NNS Rates)) (VP (VBD rose))) )")
    assert t.label == "S"


def test_function_tags_split():
    t = parse_ptb("(S (NP-SBJ (NNS Rates)) (VP (VBD rose)))")
    np_ = t.children[0]
    assert np_.label == "NP"
    assert np_.raw_label == "NP-SBJ"
    assert np_.functags == ("SBJ",)
    assert serialize(t) == "(S (NP-SBJ (NNS Rates)) (VP (VBD rose)))"


def test_round_trip_100_random_trees():
    rng = random.Random(7)
    for _ in range(100):
        t = reindex(random_tree(rng))
        text = serialize(t)
        nodes, leaves = bracket_oracle(text)
        assert nodes == sum(1 for _ in t.subtrees())
        assert leaves == yield_text(t)
        again = parse_ptb(text)
        assert again == t
        assert serialize(again) == text


@given(trees())
def test_spans_consistent(tree):
    t = reindex(tree)
    assert len(yield_text(t)) == t.span[1] - t.span[0]
    for node in t.subtrees():
        assert node.span[1] - node.span[0] == len(node.leaves())
        if node.children:
            assert node.children[0].span[0] == node.span[0]
            assert node.children[-1].span[1] == node.span[1]
            for a, b in zip(node.children, node.children[1:]):
                assert a.span[1] == b.span[0]


@given(trees())
def test_serialize_parse_identity(tree):
    t = reindex(tree)
    assert parse_ptb(serialize(t)) == t


@given(trees())
def test_whitespace_normalized(tree):
    text = serialize(reindex(tree))
    noisy = text.replace(" ", "  \n ").replace("(", " ( ")
    assert serialize(parse_ptb(noisy)) == text


def test_token_xor_children():
    with pytest.raises(ValueError):
        ParseTree("NN", (), None)
    with pytest.raises(ValueError):
        ParseTree("NN", (ParseTree.leaf("DT", "a"),), "x")


SBAR_TREE = "(S (NP (NN X)) (VP (VBD fell) (SBAR (IN because) (S (NP (NNS rates)) (VP (VBD rose))))))"


def test_match_sbar_under_vp():
    t = parse_ptb(SBAR_TREE)
    b = match_pattern(t, "(VP ... SBAR=sub ...)")
    assert b is not None
    assert b["sub"] is t.children[1].children[1]
    assert yield_text(b["sub"]) == ["because", "rates", "rose"]


def test_anchor_absent():
    t = parse_ptb(SBAR_TREE)
    assert match_pattern(t, "(S ... CC=c@and ...)") is None
    assert match_pattern(t, "*=x@and") is None


def test_anchor_multiword():
    t = parse_ptb("(S (SBAR (RB even) (IN though) (S (NNS x))) (VP (VBD y)))")
    assert match_pattern(t, "SBAR=s@even+though") is not None
    assert match_pattern(t, "SBAR=s@even+if") is None


def test_wildcard_binds_root():
    t = parse_ptb(SBAR_TREE)
    assert match_pattern(t, "*=all")["all"] is t


def test_leftmost_outermost():
    t = parse_ptb("(S (NP (NP (NN a)) (NP (NN b))) (VP (VBD c)))")
    b = match_pattern(t, "NP=n")
    assert b["n"] is t.children[0]


def test_lazy_gap_prefers_earliest_binding():
    t = parse_ptb("(S (NP (NN a)) (NP (NN b)) (VP (VBD c)))")
    b = match_pattern(t, "(S ... NP=n ...)")
    assert yield_text(b["n"]) == ["a"]


def test_functional_tag_matches_base_label():
    t = parse_ptb("(S (NP-SBJ (NNS Rates)) (VP (VBD rose)))")
    assert match_pattern(t, "(S NP=subj VP)") is not None


def test_duplicate_capture_rejected():
    with pytest.raises(PatternSyntaxError):
        compile_pattern("(S NP=x (VP NP=x))")


@pytest.mark.parametrize("bad", ["(S NP", "(S NP))", "", "(=x NP)"])
def test_bad_patterns(bad):
    with pytest.raises(PatternSyntaxError):
        compile_pattern(bad)


@given(trees())
@settings(max_examples=50)
def test_match_deterministic(tree):
    t = reindex(tree)
    pat = compile_pattern("(* ... NP|VP=x ...)")
    a, b = match_pattern(t, pat), match_pattern(t, pat)
    assert (a is None) == (b is None)
    if a is not None:
        assert a["x"] is b["x"]


def test_read_ptb_file_skips_comments(tmp_path):
    p = tmp_path / "x.ptb"
    p.write_text("# comment\n\n(S (NNS Rates) (VBD rose))\n(NN x)\n", encoding="utf-8")
    ts = read_ptb_file(p)
    assert [yield_text(t) for t in ts] == [["Rates", "rose"], ["x"]]
