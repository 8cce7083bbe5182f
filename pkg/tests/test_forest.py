import pytest

from pihier import corpus_entry, parse
from pihier.forest import (
    EnumerationLimit, congruence_violations, depth, depth_by_enumeration, depth_exact,
    enumerate_congruent_forests, forest_of, forest_to_dot, forest_to_text, nest_nu,
    restriction_height, topology,
)
from pihier.generators import random_plain_term
from pihier.normal_form import nf, prune


def test_nesting_and_depth_of_congruent_pair():
    p = corpus_entry("depth_nested").term()
    q = corpus_entry("depth_flat").term()
    assert nest_nu(p) == 3
    assert nest_nu(q) == 2
    assert depth(p) == depth(q) == 2


def test_forest_structure():
    t = parse("(new a. (a<b> | new c. c<a>)) | d<d>")
    f = forest_of(t)
    assert len(f) == 2
    assert restriction_height(f) == 2
    assert not congruence_violations(f, nf(t))


def test_congruence_violations_detects_misplaced_leaf():
    from pihier.forest import Node
    t = parse("new a. new b. (a<b> | b<c>)")
    x = nf(t)
    ok = forest_of(t)
    assert not congruence_violations(ok, x)
    # move the leaf a<b> out from under both binders
    (a,) = ok
    (b,) = a.children
    leaf_ab, leaf_bc = b.children
    wrong = (Node(a.label, (Node(b.label, (leaf_bc,)),)), leaf_ab)
    assert any("not below" in v for v in congruence_violations(wrong, x))


def test_enumeration_produces_congruent_forests():
    x = nf(parse("new a. new b. (a<b> | b<c> | c<c>)"))
    fs = list(enumerate_congruent_forests(x))
    assert len(fs) > 1
    for f in fs:
        assert not congruence_violations(f, x)


def test_enumeration_limit():
    x = nf(random_plain_term(__import__("random").Random(1), max_restrictions=4, max_actives=5))
    with pytest.raises(EnumerationLimit):
        list(enumerate_congruent_forests(x, limit=1))


def test_depth_exact_matches_enumeration(rng):
    for _ in range(150):
        x = prune(nf(random_plain_term(rng, max_restrictions=4, max_actives=4)))
        assert depth_exact(x) == depth_by_enumeration(x)


def test_depth_of_simple_terms():
    assert depth(parse("0")) == 0
    assert depth(parse("new a. a<b>")) == 1
    assert depth(parse("new a. new b. (a<c> | b<c>)")) == 1
    assert depth(parse("new a. new b. (a<b> | b<a>)")) == 2


def test_renderings():
    f = forest_of(corpus_entry("fig_forest").term())
    dot = forest_to_dot(f)
    assert dot.startswith("digraph") and "->" in dot
    assert "a" in forest_to_text(f)
    topo = topology(nf(corpus_entry("fig_forest").term()))
    assert topo.to_dot().startswith("graph")
    assert len(topo.edges) == 3
