import pytest

from pihier import parse
from pihier.generators import random_plain_term, scramble
from pihier.normal_form import (
    alpha_equiv_seq, canonical, match_seq, migratable, nf, pretty_nf, prune, seq_key,
    tied_relation, to_term,
)


def N(src):
    return nf(parse(src))


def test_nf_pulls_active_restrictions_up():
    x = N("(new a. a<b>) | c(y).(new d. d<y>)")
    assert [n.display for n in x.names] == ["a"]
    assert len(x.actives) == 2
    # restrictions under a prefix stay in the continuation
    cont = x.actives[1].branches[0][1]
    assert [n.display for n in cont.names] == ["d"]


def test_nf_of_nil_is_empty():
    assert N("0").is_zero()
    assert N("0 | 0").is_zero()


def test_prune_drops_unused_restrictions_deeply():
    x = N("new a. new b. (a<c> | d(y).(new e. y<c>))")
    p = prune(x)
    assert [n.display for n in p.names] == ["a"]
    assert prune(p.actives[1].branches[0][1]).names == []


def test_to_term_round_trip():
    x = N("new a. (a<b> | !a(y).y<b>)")
    assert canonical(nf(to_term(x))) == canonical(x)


def test_tied_relation_groups_by_shared_restrictions():
    x = N("new a. new b. (a<c> | a<b> | b<c> | c<c>)")
    t = tied_relation(x)
    assert t.tied(0, 2)
    assert t.linked(0, 1) and not t.linked(0, 2)
    assert not t.tied(0, 3)
    assert sorted(map(sorted, t.components())) == [[0, 1, 2], [3]]


def test_migratable_components():
    x = N("a(x).(new c. new d. new e. (x<c> | c<d> | a<e> | e<f>))")
    p, cont = x.actives[0].branches[0]
    assert migratable(p.var, cont) == {0, 1}


def test_canonical_is_alpha_and_order_invariant():
    a = N("new a. new b. (a<b> | b(x).x<c> | c<c>)")
    b = N("new q. new p. (c<c> | q(y).y<c> | p<q>)")
    assert canonical(a) == canonical(b)


def test_canonical_distinguishes_positions():
    assert canonical(N("new a. new b. a<b>")) != canonical(N("new a. a<a>"))
    assert canonical(N("new a. new b. (a<b> | b<c>)")) != canonical(N("new a. new b. (a<b> | a<c>)"))


def test_canonical_ignores_unused_restrictions():
    assert canonical(N("new z. a<b>")) == canonical(N("a<b>"))


def test_canonical_respects_annotations():
    assert canonical(N("new a:t. a<b>")) != canonical(N("new a:u. a<b>"))


def test_canonical_symmetric_copies():
    a = N("new m1. new m2. (s<m1> | m1(y).c<m1> | s<m2> | m2(y).c<m2>)")
    b = N("new p. new q. (q(y).c<q> | s<p> | p(y).c<p> | s<q>)")
    assert canonical(a) == canonical(b)


def test_canonical_invariant_under_scramble(rng):
    for _ in range(300):
        t = random_plain_term(rng, max_restrictions=5, max_actives=6)
        assert canonical(nf(t)) == canonical(nf(scramble(t, rng)))


def test_seq_key_is_alpha_invariant():
    a = N("a(x).(new d. x<d>)").actives[0]
    b = N("a(y).(new e. y<e>)").actives[0]
    assert seq_key(a) == seq_key(b)


def test_match_seq_enumerates_all_correspondences():
    a = N("new p. new q. (p<q> + q<p>)")
    b = N("new r. new s. (r<s> + s<r>)")
    sa, sb = prune(a).actives[0], prune(b).actives[0]
    found = [dict(m) for m in match_seq(sa, sb, {}, {})]
    assert len(found) == 2


def test_match_seq_restores_maps():
    fwd, back = {}, {}
    a, b = N("a<b>").actives[0], N("a<b>").actives[0]
    list(match_seq(a, b, fwd, back))
    assert fwd == {} and back == {}


def test_alpha_equiv_seq():
    assert alpha_equiv_seq(N("a(x).x<b>").actives[0], N("a(y).y<b>").actives[0]) is not None
    assert alpha_equiv_seq(N("a(x).x<b>").actives[0], N("a(y).b<y>").actives[0]) is None


def test_pretty_nf_mentions_names():
    assert "a" in pretty_nf(N("new a. a<b>"))


@pytest.mark.parametrize("src", ["a<b>", "!a(x).x<x>", "a(x).0 + tau.b<c>"])
def test_seq_key_cached(src):
    s = N(src).actives[0]
    assert seq_key(s) is seq_key(s)
