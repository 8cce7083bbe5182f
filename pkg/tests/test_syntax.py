import pytest

from pihier import parse, pretty
from pihier.normal_form import canonical, nf
from pihier.syntax import ParseError, parse_type, parse_with_info
from pihier.terms import (
    Choice, In, Out, Par, Repl, Restrict, Tau, Type, alpha_eq, bound_names, free_names,
    is_name_unique,
)


def names(ns):
    return sorted(n.display for n in ns)


def test_basic_prefixes():
    t = parse("a<b> | a(x).x<c> | tau.0")
    assert isinstance(t, Par)
    assert names(free_names(t)) == ["a", "b", "c"]


def test_restriction_scope_and_annotation():
    t = parse("new a : t[u]. a<a>")
    assert isinstance(t, Restrict)
    assert t.type == Type("t", Type("u"))
    assert free_names(t) == set()


def test_nullary_shorthand_desugars_to_fresh_restriction():
    t = parse("a!().b?().0")
    x = nf(t)
    assert len(x.actives) == 1
    assert names(free_names(t)) == ["a", "b"]


def test_replication_and_sum():
    t = parse("!(a(x).0 + b<c>.0)")
    assert isinstance(t, Repl)
    assert isinstance(t.body, Choice)
    assert [type(b.prefix) for b in t.body.branches] == [In, Out]


def test_tau_prefix():
    t = parse("tau.a<b>")
    assert isinstance(t.branches[0].prefix, Tau)


def test_binders_are_renamed_apart():
    t = parse("(new a. a<b>) | (new a. a<c>)")
    assert is_name_unique(t)
    assert len(bound_names(t)) == 2


def test_comments_are_ignored():
    assert canonical(nf(parse("// hello\na<b> // trailing\n"))) == canonical(nf(parse("a<b>")))


@pytest.mark.parametrize("src", ["a<b", "new . a<b>", "a(x", "(a<b> | ", "a<b> |", "!!", "a<b>.?"])
def test_parse_errors(src):
    with pytest.raises(ParseError):
        parse(src)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        parse("a<b> | new x. x(")
    assert "1" in str(err.value)


def test_parse_type():
    assert parse_type("t") == Type("t")
    assert parse_type("t[u[v]]") == Type("t", Type("u", Type("v")))
    with pytest.raises(ParseError):
        parse_type("t[")


def test_parse_with_info_reports_source_names():
    t, info = parse_with_info("new a. a<b>")
    assert info is not None
    assert names(free_names(t)) == ["b"]


@pytest.mark.parametrize("src", [
    "0",
    "a<b>",
    "new a : t. (a<b> | a(x).x<a>)",
    "!c(m).(s<m> | m(y).c<m>)",
    "a(x).0 + b!().c?().0",
    "new a. new b. (a<b> | !tau.(new d. b<d>))",
])
def test_pretty_round_trip(src):
    t = parse(src)
    back = parse(pretty(t))
    assert canonical(nf(t)) == canonical(nf(back))


def test_alpha_eq():
    assert alpha_eq(parse("new a. a<b>"), parse("new c. c<b>"))
    assert not alpha_eq(parse("new a. a<b>"), parse("new c. c<d>"))
