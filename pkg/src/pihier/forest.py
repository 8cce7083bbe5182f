"""Forest representations of terms, nesting of restrictions, and depth."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Union

from .hierarchy import Hierarchy
from .normal_form import NF, Seq, Tied, nf, prune, pretty_nf, seq_key, to_term
from .terms import Name, Nil, Par, Repl, Restrict, Term, Type, par, restrict


class EnumerationLimit(RuntimeError):
    """Raised when an exhaustive search exceeds its budget."""


@dataclass(frozen=True)
class NameLabel:
    name: Name
    base: Optional[str] = None

    def __str__(self) -> str:
        return self.name.display if self.base is None else f"{self.name.display} : {self.base}"


Label = Union[NameLabel, Seq]


@dataclass(frozen=True)
class Node:
    label: Label
    children: tuple["Node", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return isinstance(self.label, Seq)


Forest = tuple[Node, ...]


def forest_of(t: Term, base_of: Optional[Callable[[Name], Optional[str]]] = None) -> Forest:
    """The syntax forest of ``t``: one node per active restriction, leaves for sequentials."""
    if isinstance(t, Nil):
        return ()
    if isinstance(t, Restrict):
        base = t.type.base if t.type is not None else (base_of(t.name) if base_of else None)
        return (Node(NameLabel(t.name, base), forest_of(t.body, base_of)),)
    if isinstance(t, Par):
        return forest_of(t.left, base_of) + forest_of(t.right, base_of)
    return (Node(nf(t).actives[0]),)


def restriction_height(f: Forest) -> int:
    best = 0
    for n in f:
        below = restriction_height(n.children)
        best = max(best, below + (0 if n.is_leaf else 1))
    return best


def nest_nu(t: Term) -> int:
    """Maximal number of restrictions on a root-to-leaf path of the syntax forest."""
    return restriction_height(forest_of(t))


def traces(f: Forest, prefix: tuple = ()) -> Iterator[tuple[tuple[NameLabel, ...], Optional[Seq]]]:
    """Root-to-leaf label paths; a childless name node ends a path with ``None``."""
    for n in f:
        if n.is_leaf:
            yield prefix, n.label
        elif not n.children:
            yield prefix + (n.label,), None
        else:
            yield from traces(n.children, prefix + (n.label,))


def is_tcompatible_forest(h: Hierarchy, f: Forest) -> bool:
    """Every path through name nodes has strictly increasing base types."""
    for path, _ in traces(f):
        for a, b in zip(path, path[1:]):
            if not h.lt(a.base, b.base):
                return False
    return True


def forest_nodes(f: Forest) -> Iterator[Node]:
    for n in f:
        yield n
        yield from forest_nodes(n.children)


def forest_to_term(f: Forest, types: Optional[dict[Name, Optional[Type]]] = None) -> Term:
    parts = []
    for n in f:
        if n.is_leaf:
            parts.append(to_term(n.label))
        else:
            ty = (types or {}).get(n.label.name)
            parts.append(restrict([(n.label.name, ty)], forest_to_term(n.children, types)))
    return par(*parts)


def congruence_violations(f: Forest, x: NF) -> list[str]:
    """Checks that ``f`` is the forest of a term congruent to ``x``.

    Conditions: sequential labels only on childless nodes; each active
    restriction labels exactly one node and the leaves are exactly the
    actives; each leaf has its restricted free names on its root path.
    """
    out = []
    names = [n.label.name for n in forest_nodes(f) if not n.is_leaf]
    leaves = [n for n in forest_nodes(f) if n.is_leaf]
    if any(n.children for n in leaves):
        out.append("a sequential process labels an inner node")
    if sorted(names, key=lambda n: n.uid) != sorted(x.names, key=lambda n: n.uid):
        out.append("name labels differ from the active restrictions")
    want = sorted(leaf_key(a) for a in x.actives)
    got = sorted(leaf_key(n.label) for n in leaves)
    if want != got:
        out.append("leaf labels differ from the active sequential processes")
    bound = set(x.names)
    for path, leaf in traces(f):
        if leaf is None:
            continue
        missing = (leaf.fn & bound) - {l.name for l in path}
        if missing:
            out.append(f"leaf {pretty_nf(leaf)} is not below "
                       + ", ".join(sorted(n.display for n in missing)))
    return out


def leaf_key(s: Seq) -> str:
    return seq_key(s)


def forest_key(f: Forest) -> str:
    """Isomorphism-invariant encoding of a labelled forest."""
    parts = []
    for n in f:
        if n.is_leaf:
            parts.append("L" + leaf_key(n.label))
        else:
            parts.append(f"N{n.label.name.uid}:{n.label.base}(" + forest_key(n.children) + ")")
    return ",".join(sorted(parts))


# ---------------------------------------------------------- enumeration

def _name_forests(k: int) -> Iterator[tuple[Optional[int], ...]]:
    """Parent vectors of all rooted forests on ``k`` labelled nodes."""
    for parents in itertools.product([None, *range(k)], repeat=k):
        ok = True
        for i in range(k):
            seen, cur = 0, parents[i]
            while cur is not None and ok:
                if cur == i or seen > k:
                    ok = False
                seen += 1
                cur = parents[cur]
            if not ok:
                break
        if ok:
            yield parents


def enumerate_congruent_forests(x: NF, limit: Optional[int] = 100_000,
                                base_of: Optional[Callable[[Name], Optional[str]]] = None
                                ) -> Iterator[Forest]:
    """All forests (up to isomorphism) of terms structurally congruent to ``x``.

    Brute force over parent vectors for the names; each leaf may sit under
    any node whose root path covers its restricted free names.
    """
    names = x.names
    k = len(names)
    types = dict(x.binders)
    if base_of is None:
        def base_of(n):
            ty = types.get(n)
            return ty.base if ty is not None else None
    labels = [NameLabel(n, base_of(n)) for n in names]
    seen: set[str] = set()
    work = 0
    for parents in _name_forests(k):
        paths = []
        for i in range(k):
            p, cur = {names[i]}, parents[i]
            while cur is not None:
                p.add(names[cur])
                cur = parents[cur]
            paths.append(p)
        choices = []
        for a in x.actives:
            need = a.fn & set(names)
            opts = [i for i in range(k) if need <= paths[i]]
            if not need:
                opts.append(None)
            choices.append(opts)
        for place in itertools.product(*choices):
            work += 1
            if limit is not None and work > limit:
                raise EnumerationLimit(f"more than {limit} candidate forests")
            f = _build(labels, parents, x.actives, place)
            key = forest_key(f)
            if key not in seen:
                seen.add(key)
                yield f


def _build(labels, parents, actives, place) -> Forest:
    kids: dict[Optional[int], list] = {}
    for j, a in enumerate(actives):
        kids.setdefault(place[j], []).append(Node(a))

    def node(i: int) -> Node:
        ch = [node(c) for c in range(len(labels)) if parents[c] == i] + kids.get(i, [])
        return Node(labels[i], tuple(ch))

    return tuple(node(i) for i in range(len(labels)) if parents[i] is None) + tuple(kids.get(None, []))


def depth_by_enumeration(x: NF, limit: Optional[int] = 100_000) -> int:
    return min(restriction_height(f) for f in enumerate_congruent_forests(prune(x), limit))


def depth_exact(x: NF, limit: Optional[int] = 200_000) -> int:
    """Least nesting of restrictions over all terms congruent to ``x``.

    Unused restrictions are dropped first. Each group of tied actives must
    live in one tree, so the answer is the maximum over groups of one plus
    the best choice of root name, recursively.
    """
    x = prune(x)
    fns = [a.fn for a in x.actives]
    calls = [0]

    @lru_cache(maxsize=None)
    def go(bound: frozenset, acts: frozenset) -> int:
        calls[0] += 1
        if limit is not None and calls[0] > limit:
            raise EnumerationLimit(f"depth search exceeded {limit} subproblems")
        idx = sorted(acts)
        tied = Tied(bound, [fns[i] for i in idx])
        best = 0
        for comp in tied.components():
            members = frozenset(idx[c] for c in comp)
            used = frozenset().union(*(fns[i] for i in members)) & bound
            if not used:
                continue
            best = max(best, 1 + min(go(used - {n}, members) for n in used))
        return best

    return go(frozenset(x.names), frozenset(range(len(fns))))


def depth(t: Union[Term, NF], limit: Optional[int] = 200_000) -> int:
    return depth_exact(t if isinstance(t, NF) else nf(t), limit)


# ------------------------------------------------------------ rendering

def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def forest_to_dot(f: Forest, title: str = "forest") -> str:
    lines = [f"digraph {title} {{"]
    ids = itertools.count()

    def emit(n: Node) -> str:
        nid = f"n{next(ids)}"
        if n.is_leaf:
            lines.append(f'  {nid} [shape=box, label="{_dot_escape(pretty_nf(n.label))}"];')
        else:
            lines.append(f'  {nid} [shape=ellipse, label="{_dot_escape(str(n.label))}"];')
        for c in n.children:
            lines.append(f"  {nid} -> {emit(c)};")
        return nid

    for n in f:
        emit(n)
    lines.append("}")
    return "\n".join(lines) + "\n"


def forest_to_text(f: Forest, indent: int = 0) -> str:
    out = []
    for n in f:
        label = pretty_nf(n.label) if n.is_leaf else str(n.label)
        out.append("  " * indent + label)
        out.append(forest_to_text(n.children, indent + 1))
    return "\n".join(s for s in out if s)


@dataclass
class Topology:
    """Hypergraph with one hyperedge per active restriction joining its users."""

    names: list[Name]
    actives: list[Seq]
    edges: dict[Name, list[int]]

    def to_dot(self) -> str:
        lines = ["graph topology {"]
        for i, a in enumerate(self.actives):
            lines.append(f'  a{i} [shape=box, label="{_dot_escape(pretty_nf(a))}"];')
        for k, n in enumerate(self.names):
            lines.append(f'  e{k} [shape=square, label="{_dot_escape(n.display)}"];')
            for i in self.edges[n]:
                lines.append(f"  e{k} -- a{i};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def topology(x: NF) -> Topology:
    edges = {n: [i for i, a in enumerate(x.actives) if n in a.fn] for n in x.names}
    return Topology(x.names, list(x.actives), edges)
