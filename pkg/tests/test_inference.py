import pytest

from pihier import corpus, corpus_entry, infer, parse, solve_order, typecheck
from pihier.generators import random_plain_term
from pihier.hierarchy import p_safe
from pihier.inference import RecursiveType, generate_constraints, unify_dataflow
from pihier.normal_form import nf
from pihier.tcompat import is_tshaped


def test_client_server_solution():
    r = infer(corpus_entry("client_server").term())
    assert r.ok
    ts, tc, tm = r.type_of("s"), r.type_of("c"), r.type_of("m")
    assert ts.payload == tm and tc.payload == tm
    assert tm.payload is not None and tm.payload.payload is None
    h = r.hierarchy
    chain = [ts.base, tc.base, tm.base, tm.payload.base]
    assert all(h.lt(a, b) for a, b in zip(chain, chain[1:]))
    assert typecheck(h, r.env, r.annotated).ok


def test_json_shape():
    out = infer(corpus_entry("client_server").term()).to_json()
    assert set(out) >= {"status", "hierarchy", "annotations", "env", "constraints", "core"}


def test_ring_core_names_the_contradiction():
    r = infer(corpus_entry("ring").term())
    assert r.status == "unsat"
    kinds = {c["kind"] for c in r.core}
    assert kinds == {"atom", "equal"}
    atom = next(c for c in r.core if c["kind"] == "atom")
    eq = next(c for c in r.core if c["kind"] == "equal")
    assert {atom["lo"], atom["hi"]} <= set(eq["names"])


def test_recursive_types_rejected():
    r = infer(corpus_entry("recursive_types").term())
    assert r.status == "unsat"
    assert r.core[0]["kind"] == "recursive"
    with pytest.raises(RecursiveType):
        unify_dataflow(generate_constraints(nf(corpus_entry("recursive_types").term())))


@pytest.mark.parametrize("entry", corpus(), ids=lambda e: e.name)
def test_corpus_metadata(entry):
    r = infer(entry.term())
    if entry.typable is not None:
        assert r.ok is entry.typable, r.reason


def test_inferred_result_passes_all_checks(rng):
    n_ok = 0
    for _ in range(80):
        t = random_plain_term(rng, max_restrictions=3, max_actives=3)
        r = infer(t)
        assert r.status in ("ok", "unsat")
        if r.ok:
            n_ok += 1
            assert typecheck(r.hierarchy, r.env, r.annotated).ok
            assert is_tshaped(r.hierarchy, r.annotated)
            assert p_safe(r.hierarchy, r.env, r.annotated)
    assert n_ok > 0


def test_free_names_get_env_below_everything():
    r = infer(parse("new a. (c<a> | a(x).0)"))
    assert r.ok
    c = r.type_of("c")
    assert all(r.hierarchy.lt(c.base, ty.base) for ty in r.annotations.values())


def test_budget_gives_inconclusive():
    r = infer(corpus_entry("client_server").term(), max_backtracks=0)
    assert r.status in ("ok", "inconclusive")


def test_solve_order_basic():
    sol = solve_order([[[("s", "c")]], [[("c", "x")]], [[("x", "d")]]], ["s", "c", "x", "d"])
    assert sol.status == "ok" and sol.chain == ["s", "c", "x", "d"]


def test_solve_order_picks_consistent_disjunct():
    sol = solve_order([[[("c", "x")]], [[("x", "c")], [("d", "s")]]], ["s", "c", "x", "d"])
    assert sol.status == "ok"
    assert sol.chain.index("d") < sol.chain.index("s")


def test_solve_order_cycle():
    sol = solve_order([[[("a", "b")]], [[("b", "a")]]], ["a", "b"])
    assert sol.status == "unsat"
    assert sol.cycle


def test_solve_order_empty():
    assert solve_order([], ["t"]).chain == ["t"]


def test_solve_order_accept_callback_prunes():
    sol = solve_order([[[("a", "b")], [("b", "a")]]], ["a", "b"],
                      accept=lambda rank: not ("a" in rank and "b" not in rank))
    assert sol.status == "ok" and sol.chain == ["b", "a"]
