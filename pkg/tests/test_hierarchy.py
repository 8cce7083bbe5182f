import pytest

from pihier import Hierarchy, HierarchyError, parse, parse_env
from pihier.hierarchy import env_to_json, min_T, p_safe, p_safety_violations
from pihier.terms import Type, free_name


def test_chain_order():
    h = Hierarchy.chain(["a", "b", "c"])
    assert h.lt("a", "c") and h.lt("a", "b")
    assert not h.lt("c", "a") and not h.lt("a", "a")
    assert h.leq("a", "a")
    assert h.is_chain() and h.chain_order() == ["a", "b", "c"]


def test_forest_hierarchy():
    h = Hierarchy.from_edges(["r", "x", "y"], [("r", "x"), ("r", "y")])
    assert h.lt("r", "x") and h.lt("r", "y")
    assert not h.lt("x", "y") and not h.lt("y", "x")
    assert not h.is_chain()
    assert sorted(h.children("r")) == ["x", "y"]
    assert h.roots() == ["r"]


def test_parse_text_format():
    h = Hierarchy.parse("a < b < c\n// comment\nd\nb < e")
    assert h.lt("a", "e") and not h.lt("c", "e")
    assert "d" in h


def test_json_round_trip():
    h = Hierarchy.parse("a < b\na < c")
    assert Hierarchy.from_json(h.to_json()) == h


@pytest.mark.parametrize("text", ["a < b\nb < a", "a < b\nc < b", "a <"])
def test_bad_hierarchies(text):
    with pytest.raises(HierarchyError):
        Hierarchy.parse(text)


def test_repeated_chain_label():
    with pytest.raises(HierarchyError):
        Hierarchy.chain(["a", "a"])


def test_min_T():
    h = Hierarchy.chain(["a", "b"])
    x, y = free_name("x"), free_name("y")
    assert min_T(h, [(x, Type("a")), (y, Type("b"))]) == [(x, Type("a"))]


def test_parse_env_and_json():
    env = parse_env("s : t_s[t_m[t_d]], c: t_c ; x:u")
    assert env[free_name("s")] == Type("t_s", Type("t_m", Type("t_d")))
    assert env_to_json(env)["c"] == "t_c"
    with pytest.raises(ValueError):
        parse_env("s t")


def test_p_safety():
    h = Hierarchy.chain(["f", "b"])
    t = parse("new a : b. a<c>")
    assert p_safe(h, {free_name("c"): Type("f")}, t)
    assert not p_safe(h, {free_name("c"): Type("b")}, t)
    assert "no type" in p_safety_violations(h, {}, t)[0]


def test_env_comments_both_styles():
    env = parse_env("a : t  # note\nb : u[t] // other")
    assert sorted(str(t) for t in env.values()) == ["t", "u[t]"]
