"""Compatibility of terms with a hierarchy of base types.

``phi`` builds, for an annotated normal form, the canonical forest that
places each minimal name above everything tied to it. The construction
doubles as a decision procedure: it succeeds exactly when some congruent
presentation has base types strictly increasing along every path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .forest import (
    EnumerationLimit, Forest, NameLabel, Node, _name_forests, forest_nodes,
    is_tcompatible_forest,
)
from .hierarchy import Hierarchy
from .normal_form import NF, Seq, Tied, continuations, nf, pretty_nf
from .terms import MissingAnnotation, Name, Term, Type


@dataclass
class PhiStep:
    depth: int
    names: list[Name]
    minimal: list[Name]
    groups: dict[Name, list[int]]
    uppers: dict[Name, list[Name]]
    rest_names: list[Name]
    rest_actives: list[int]

    def describe(self) -> str:
        def ns(xs):
            return "{" + ", ".join(n.display for n in xs) + "}"
        parts = [f"{'  ' * self.depth}X = {ns(self.names)}, min = {ns(self.minimal)}"]
        for x in self.minimal:
            parts.append(f"{'  ' * self.depth}  {x.display}: actives {self.groups[x]}, "
                         f"names {ns(self.uppers[x])}")
        parts.append(f"{'  ' * self.depth}  rest: names {ns(self.rest_names)}, "
                     f"actives {self.rest_actives}")
        return "\n".join(parts)


@dataclass
class PhiOutcome:
    forest: Forest
    ok: bool
    failure: Optional[str] = None
    steps: list[PhiStep] = field(default_factory=list)

    def to_text(self) -> str:
        from .forest import forest_to_text
        head = "T-compatible" if self.ok else f"not T-compatible: {self.failure}"
        return head + "\n" + "\n".join(s.describe() for s in self.steps) + "\n" + forest_to_text(self.forest)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "failure": self.failure,
            "steps": [s.describe() for s in self.steps],
        }


def _types(x: NF) -> dict[Name, Type]:
    out = {}
    for n, ty in x.binders:
        if ty is None:
            raise MissingAnnotation(f"restriction {n.display} has no type annotation")
        out[n] = ty
    return out


def phi(h: Hierarchy, x: Union[NF, Term]) -> PhiOutcome:
    if not isinstance(x, NF):
        x = nf(x)
    types = _types(x)
    fns = [a.fn for a in x.actives]
    steps: list[PhiStep] = []
    failure: list[Optional[str]] = [None]

    def fail(msg: str) -> None:
        if failure[0] is None:
            failure[0] = msg

    def go(X: list[Name], I: list[int], depth: int) -> Forest:
        if not X:
            return tuple(Node(x.actives[i]) for i in I)
        tied = Tied(X, [fns[i] for i in I])
        mins = [n for n in X if not any(h.lt(types[m].base, types[n].base) for m in X)]
        minset = set(mins)
        groups = {n: [I[k] for k in sorted(tied.tied_to(n))] for n in mins}
        uppers = {n: [y for y in X if y not in minset and any(y in fns[i] for i in groups[n])]
                  for n in mins}
        owner: dict[int, Name] = {}
        for n in mins:
            for i in groups[n]:
                if i in owner:
                    fail(f"active {i} is tied to both {owner[i].display} and {n.display}, "
                         f"which are minimal in the same scope")
                owner.setdefault(i, n)
        above: dict[Name, Name] = {}
        for n in mins:
            for y in uppers[n]:
                if y in above:
                    fail(f"name {y.display} is needed below both {above[y].display} and {n.display}")
                above.setdefault(y, n)
                if not h.lt(types[n].base, types[y].base):
                    fail(f"name {y.display} : {types[y].base} must sit below "
                         f"{n.display} : {types[n].base} but is not above it in the hierarchy")
        rest_names = [y for y in X if y not in minset and y not in above]
        rest = [i for i in I if i not in owner]
        steps.append(PhiStep(depth, list(X), mins, groups, uppers, rest_names, rest))
        trees = tuple(Node(NameLabel(n, types[n].base), go(uppers[n], groups[n], depth + 1))
                      for n in mins)
        return trees + go(rest_names, rest, depth)

    forest = go(x.names, list(range(len(x.actives))), 0)
    return PhiOutcome(forest, failure[0] is None, failure[0], steps)


def is_tcompat(h: Hierarchy, x: Union[NF, Term]) -> bool:
    return phi(h, x).ok


def tshaped_failures(h: Hierarchy, x: Union[NF, Term]) -> list[tuple[NF, str]]:
    """Subterms (top level and every continuation) that are not T-compatible."""
    if not isinstance(x, NF):
        x = nf(x)
    out = []
    for c in continuations(x):
        res = phi(h, c)
        if not res.ok:
            out.append((c, res.failure))
    return out


def is_tshaped(h: Hierarchy, x: Union[NF, Term]) -> bool:
    if not isinstance(x, NF):
        x = nf(x)
    return all(is_tcompat(h, c) for c in continuations(x))


def tcompat_by_enumeration(h: Hierarchy, x: Union[NF, Term], limit: Optional[int] = 1_000_000) -> bool:
    """Brute-force reference: search all name forests with increasing bases."""
    if not isinstance(x, NF):
        x = nf(x)
    types = _types(x)
    names = x.names
    k = len(names)
    work = 0
    for parents in _name_forests(k):
        work += 1
        if limit is not None and work > limit:
            raise EnumerationLimit(f"more than {limit} name forests")
        if not all(p is None or h.lt(types[names[p]].base, types[names[i]].base)
                   for i, p in enumerate(parents)):
            continue
        paths = []
        for i in range(k):
            p, cur = {names[i]}, parents[i]
            while cur is not None:
                p.add(names[cur])
                cur = parents[cur]
            paths.append(p)
        bound = set(names)
        if all(not (a.fn & bound) or any((a.fn & bound) <= p for p in paths) for a in x.actives):
            return True
    return False


# ----------------------------------------------------------------- ins

def ins(h: Hierarchy, f: Forest, path: list[Name], r: Forest) -> Forest:
    """Graft the trees of ``r`` onto ``f`` along ``path`` (a list of name labels).

    A name root goes under the deepest path node with a strictly smaller
    base type; a leaf goes under the deepest path node whose name it uses.
    Roots with no such node stay roots.
    """
    labels = _path_labels(f, path)
    extra: dict[int, list[Node]] = {}
    roots: list[Node] = []
    for n in r:
        target = None
        for k in range(len(labels) - 1, -1, -1):
            lab = labels[k]
            if n.is_leaf:
                hit = lab.name in n.label.fn
            else:
                hit = lab.base is not None and n.label.base is not None and h.lt(lab.base, n.label.base)
            if hit:
                target = k
                break
        if target is None:
            roots.append(n)
        else:
            extra.setdefault(target, []).append(n)
    return _attach(f, path[: len(labels)], 0, extra) + tuple(roots)


def _path_labels(f: Forest, path: list[Name]) -> list[NameLabel]:
    out, level = [], f
    for name in path:
        nxt = next((n for n in level if not n.is_leaf and n.label.name == name), None)
        if nxt is None:
            break
        out.append(nxt.label)
        level = nxt.children
    return out


def _attach(f: Forest, path: list[Name], k: int, extra: dict[int, list[Node]]) -> Forest:
    if k >= len(path):
        return f
    out = []
    for n in f:
        if not n.is_leaf and n.label.name == path[k]:
            kids = _attach(n.children, path, k + 1, extra) + tuple(extra.get(k, ()))
            n = Node(n.label, kids)
        out.append(n)
    return tuple(out)


def path_to_leaf(f: Forest, leaf: Seq) -> Optional[list[Name]]:
    """Names on the root path of the node labelled with this very ``Seq`` object."""
    def go(level: Forest, acc: list[Name]):
        for n in level:
            if n.is_leaf:
                if n.label is leaf:
                    return acc
            else:
                found = go(n.children, acc + [n.label.name])
                if found is not None:
                    return found
        return None
    return go(f, [])


def remove_leaves(f: Forest, leaves: list[Seq]) -> Forest:
    ids = {id(s) for s in leaves}
    out = []
    for n in f:
        if n.is_leaf:
            if id(n.label) in ids:
                continue
            out.append(n)
        else:
            out.append(Node(n.label, remove_leaves(n.children, leaves)))
    return tuple(out)


def forest_is_tcompatible(h: Hierarchy, f: Forest) -> bool:
    return is_tcompatible_forest(h, f)


def leaves_of(f: Forest) -> list[Seq]:
    return [n.label for n in forest_nodes(f) if n.is_leaf]


# ----------------------------------------------------- reduction witness

@dataclass
class Witness:
    """A forest for the successor built by grafting continuations onto the old forest."""

    forest: Forest
    successor: NF
    before: Forest
    sender_path: list[Name]
    receiver_path: list[Name]


def reduction_witness(h: Hierarchy, x: NF, redex) -> Witness:
    """Assemble a forest for ``x`` after ``redex`` from ``phi`` of ``x``.

    The reacting leaves are dropped. The sender continuation is grafted
    along the sender's path, the receiver's non-migrating trees along the
    receiver's path, and the trees that use the message along the sender's
    path, in that order. For typable T-shaped ``x`` the result is a
    T-compatible forest of the successor.
    """
    from .reduction import apply_redex

    acts = tuple(Seq(a.branches, a.replicated) for a in x.actives)
    x = NF(x.binders, acts)
    phi_x = phi(h, x).forest
    s_leaf = acts[redex.sender]
    p_s = path_to_leaf(phi_x, s_leaf) or []
    gone = [] if s_leaf.replicated else [s_leaf]
    p_r: list[Name] = []
    if redex.receiver is not None:
        r_leaf = acts[redex.receiver]
        p_r = path_to_leaf(phi_x, r_leaf) or []
        if not r_leaf.replicated:
            gone.append(r_leaf)
    f = remove_leaves(phi_x, gone)
    f = ins(h, f, p_s, phi(h, redex.s_cont).forest)
    if redex.r_cont is not None:
        trees = phi(h, redex.r_cont).forest
        mig = tuple(t for t in trees if any(redex.msg in s.fn for s in leaves_of((t,))))
        stay = tuple(t for t in trees if t not in mig)
        f = ins(h, f, p_r, stay)
        f = ins(h, f, p_s, mig)
    succ = apply_redex(x, redex)
    return Witness(f, succ, phi_x, p_s, p_r)
