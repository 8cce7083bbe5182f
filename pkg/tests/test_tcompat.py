import pytest

from pihier import Hierarchy, corpus, infer, parse
from pihier.forest import congruence_violations, is_tcompatible_forest
from pihier.generators import random_annotated_term, random_hierarchy
from pihier.normal_form import nf, prune
from pihier.reduction import redexes
from pihier.tcompat import (
    is_tcompat, is_tshaped, phi, reduction_witness, tcompat_by_enumeration, tshaped_failures,
)

H = Hierarchy.chain(["a", "b", "c"])


@pytest.mark.parametrize("src, ok", [
    ("new x:a. new y:b. (x<y> | y<x>)", True),
    ("new x:a. new y:a. x<y>", False),
    ("new x:a. (new y:b. y<x> | new z:b. z<x>)", True),
    ("new x:b. (new y:a. y<x> | new z:a. z<x>)", False),
    ("new x:c. new y:b. new z:a. (x<y> | y<z>)", True),
    ("0", True),
])
def test_phi_on_small_terms(src, ok):
    t = parse(src)
    out = phi(H, t)
    assert out.ok is ok
    assert is_tcompat(H, t) is ok
    assert tcompat_by_enumeration(H, t) is ok
    if ok:
        assert is_tcompatible_forest(H, out.forest)
        assert not congruence_violations(out.forest, prune(nf(t)))
    else:
        assert out.failure


def test_phi_outcome_renderings():
    out = phi(H, parse("new x:a. new y:b. (x<y> | y<x>)"))
    assert out.to_text().startswith("T-compatible")
    assert out.to_json()["ok"] is True


def test_phi_agrees_with_enumeration_on_random_terms(rng):
    for _ in range(120):
        h = random_hierarchy(rng, n=rng.randint(2, 4))
        t = random_annotated_term(rng, h, max_restrictions=4, max_actives=4)
        assert is_tcompat(h, t) == tcompat_by_enumeration(h, t)


def test_tshaped_checks_continuations():
    # top level is fine, the continuation is not
    t = parse("a(z).(new x:a. new y:a. x<y>)")
    assert is_tcompat(H, t)
    assert not is_tshaped(H, t)
    assert tshaped_failures(H, t)


def test_missing_annotation_is_reported():
    from pihier.terms import MissingAnnotation
    with pytest.raises(MissingAnnotation):
        phi(H, parse("new x. x<x>"))


@pytest.mark.parametrize("entry", [e for e in corpus() if e.typable], ids=lambda e: e.name)
def test_reduction_witness_is_compatible(entry):
    r = infer(entry.term())
    x = prune(nf(r.annotated))
    for red in redexes(x)[:20]:
        w = reduction_witness(r.hierarchy, x, red)
        assert is_tcompatible_forest(r.hierarchy, w.forest)
        assert not congruence_violations(w.forest, w.successor)
