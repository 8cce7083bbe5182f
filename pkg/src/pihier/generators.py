"""Seeded random generators for nets, hierarchies and terms.

The default seed comes from ``PI_HIER_SEED`` (0 when unset), so test runs
are reproducible and can be varied from the shell.
"""
from __future__ import annotations

import os
import random
from typing import Optional, Sequence

from .encodings import ResetNet
from .hierarchy import Hierarchy
from .normal_form import NF, Seq, nf
from .terms import (
    NIL, Branch, Choice, In, Name, Out, Par, Repl, Restrict, Tau, Term, Type, free_name, fresh,
)


def seeded(offset: int = 0) -> random.Random:
    return random.Random(int(os.environ.get("PI_HIER_SEED", "0")) + offset)


def random_reset_net(rng: random.Random, max_places: int = 3, max_transitions: int = 3,
                     max_tokens: int = 2) -> ResetNet:
    n = rng.randint(1, max_places)
    ts = []
    for _ in range(rng.randint(0, max_transitions)):
        u = tuple(rng.choice((-1, 0, 0, 1)) for _ in range(n))
        r = tuple(i for i in range(n) if rng.random() < 0.25)
        ts.append((u, r))
    return ResetNet(n, ts, tuple(rng.randint(0, max_tokens) for _ in range(n)))


def random_hierarchy(rng: random.Random, n: int = 4, prefix: str = "b") -> Hierarchy:
    """A random forest over ``b0 .. b{n-1}``; each node picks an earlier node as parent or none."""
    nodes = [f"{prefix}{i}" for i in range(n)]
    order = nodes[:]
    rng.shuffle(order)
    edges = [(rng.choice(order[:k]), v) for k, v in enumerate(order) if k and rng.random() < 0.7]
    return Hierarchy.from_edges(nodes, edges)


def random_type(rng: random.Random, bases: Sequence[str], depth: int = 2) -> Type:
    payload = random_type(rng, bases, depth - 1) if depth > 1 and rng.random() < 0.5 else None
    return Type(rng.choice(list(bases)), payload)


# ------------------------------------------------------------------ terms

class _TermGen:
    def __init__(self, rng: random.Random, max_depth: int, replicate: float):
        self.rng = rng
        self.max_depth = max_depth
        self.replicate = replicate
        self.binders = 0

    def prefix(self, scope: list[Name]) -> tuple:
        r = self.rng
        k = r.random()
        if k < 0.1:
            return Tau(), None
        if k < 0.55:
            return Out(r.choice(scope), r.choice(scope)), None
        v = fresh(f"v{self.binders}")
        self.binders += 1
        return In(r.choice(scope), v), v

    def seq(self, scope: list[Name], depth: int) -> Term:
        r = self.rng
        branches = []
        for _ in range(1 if r.random() < 0.8 else 2):
            p, v = self.prefix(scope)
            inner = scope + [v] if v is not None else scope
            cont = self.group(inner, depth + 1) if depth < self.max_depth and r.random() < 0.6 else NIL
            branches.append(Branch(p, cont))
        ch = Choice(tuple(branches))
        return Repl(ch) if r.random() < self.replicate else ch

    def group(self, scope: list[Name], depth: int, restrictions: Optional[int] = None,
              actives: Optional[int] = None) -> Term:
        r = self.rng
        k = r.randint(0, 2) if restrictions is None else restrictions
        names = [fresh(f"n{self.binders + i}") for i in range(k)]
        self.binders += k
        inner = scope + names
        m = r.randint(1, 2) if actives is None else actives
        body: Term = NIL
        for i in range(m):
            s = self.seq(inner, depth)
            body = s if i == 0 else Par(body, s)
        for n in reversed(names):
            body = Restrict(n, body)
        return body


def random_plain_term(rng: random.Random, max_restrictions: int = 4, max_actives: int = 5,
                      n_free: int = 2, max_depth: int = 2, replicate: float = 0.15) -> Term:
    """A name-unique unannotated term with at most the given top-level sizes."""
    free = [free_name(c) for c in "abcdefgh"[:n_free]]
    g = _TermGen(rng, max_depth, replicate)
    return g.group(free, 0, rng.randint(0, max_restrictions), rng.randint(1, max_actives))


def random_annotated_term(rng: random.Random, h: Hierarchy, max_restrictions: int = 4,
                          max_actives: int = 5, **kw) -> Term:
    from .inference import annotate
    from .terms import bound_names

    t = random_plain_term(rng, max_restrictions, max_actives, **kw)
    bases = sorted(h.nodes)
    types = {n: random_type(rng, bases) for n in bound_names(t)}
    return annotate(t, types)


def random_env(rng: random.Random, h: Hierarchy, names) -> dict[Name, Type]:
    bases = sorted(h.nodes)
    return {n: random_type(rng, bases) for n in sorted(names, key=lambda n: n.display)}


# ------------------------------------------------------------- congruence

def scramble(t: Term, rng: random.Random) -> Term:
    """A random term congruent to ``t``.

    Parallel components and sum branches are shuffled and regrouped, bound
    names are renamed, and each restriction is placed at a random node of
    the parallel tree that still covers every component using it.
    """
    return _scramble_nf(nf(t), rng)


def _scramble_seq(s: Seq, rng: random.Random, sub: dict[Name, Name]) -> Term:
    branches = []
    for p, cont in s.branches:
        if isinstance(p, In):
            v = fresh(p.var.display)
            sub2 = {**sub, p.var: v}
            p2 = In(sub.get(p.chan, p.chan), v)
        else:
            sub2 = sub
            p2 = Out(sub.get(p.chan, p.chan), sub.get(p.msg, p.msg)) if isinstance(p, Out) else p
        branches.append(Branch(p2, _scramble_nf(cont, rng, sub2)))
    rng.shuffle(branches)
    ch = Choice(tuple(branches))
    return Repl(ch) if s.replicated else ch


def _scramble_nf(x: NF, rng: random.Random, sub: Optional[dict[Name, Name]] = None) -> Term:
    sub = dict(sub or {})
    new = {}
    for n, _ in x.binders:
        new[n] = fresh(n.display)
    sub.update(new)
    items = [(_scramble_seq(a, rng, sub), a.fn) for a in x.actives]
    rng.shuffle(items)
    if rng.random() < 0.2:
        items.append((NIL, frozenset()))
    if not items:
        body: Term = NIL
        for n, ty in reversed(x.binders):
            body = Restrict(new[n], body, ty)
        return body

    # random binary tree over the items; each node records the leaves below it
    nodes = [{"term": t, "fn": fn, "kids": None, "binders": []} for t, fn in items]
    while len(nodes) > 1:
        i = rng.randrange(len(nodes) - 1)
        a, b = nodes[i], nodes[i + 1]
        nodes[i: i + 2] = [{"term": None, "fn": a["fn"] | b["fn"], "kids": (a, b), "binders": []}]
    root = nodes[0]

    def candidates(node, name, acc):
        users = name in node["fn"]
        if node["kids"] is None:
            acc.append(node)
            return
        inside = [k for k in node["kids"] if name in k["fn"]]
        acc.append(node)
        if len(inside) == 1:
            candidates(inside[0], name, acc)
        elif not users:
            for k in node["kids"]:
                candidates(k, name, acc)

    for n, ty in x.binders:
        acc: list = []
        candidates(root, n, acc)
        rng.choice(acc)["binders"].append((new[n], ty))

    def build(node) -> Term:
        t = node["term"] if node["kids"] is None else Par(build(node["kids"][0]), build(node["kids"][1]))
        bs = node["binders"]
        rng.shuffle(bs)
        for n, ty in bs:
            t = Restrict(n, t, ty)
        return t

    return build(root)
