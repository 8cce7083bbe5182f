"""Type and hierarchy inference for unannotated terms.

The procedure has three stages:

1. Every name gets a type variable. Communication forces equations of the
   form ``type(a) = t_a[type(b)]``, which are solved by unification with an
   occurs check.
2. The typing rules turn into order constraints between base-type
   variables: plain atoms ``base(x) < base(y)`` and, for inputs, a choice
   between two sets of atoms.
3. A backtracking search picks one alternative per choice, keeping the
   constraint graph acyclic, and then builds a chain of base types one
   element at a time. Each extension is checked against the forest
   construction so that the final annotation is T-shaped.

Every successful answer is re-checked with the type checker.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .hierarchy import Hierarchy, env_to_json, p_safety_violations
from .normal_form import NF, Tied, continuations, migratable, nf, tied_relation
from .tcompat import tshaped_failures
from .terms import (
    Branch, Choice, In, Name, Nil, Out, Par, Repl, Restrict, Term, Type, free_names,
    restricted_names,
)

DEFAULT_BACKTRACKS = 100_000


class InferenceBudget(RuntimeError):
    pass


@dataclass(frozen=True)
class Atom:
    lo: Name
    hi: Name
    rule: str
    where: str

    def __str__(self) -> str:
        return f"base({self.lo.display}) < base({self.hi.display})"


@dataclass
class Clause:
    """A disjunction of conjunctions of atoms."""

    alternatives: list[list[Atom]]
    rule: str
    where: str

    def __str__(self) -> str:
        alts = [" & ".join(map(str, a)) or "true" for a in self.alternatives]
        return " or ".join(f"({a})" if len(alts) > 1 and " & " in a else a for a in alts)


@dataclass
class Equation:
    chan: Name
    payload: Name
    where: str

    def __str__(self) -> str:
        return f"type({self.chan.display}) = t[type({self.payload.display})]"


@dataclass
class ConstraintSet:
    names: list[Name] = field(default_factory=list)
    equations: list[Equation] = field(default_factory=list)
    clauses: list[Clause] = field(default_factory=list)

    def atom_count(self) -> int:
        return sum(1 for c in self.clauses if len(c.alternatives) == 1)


def generate_constraints(x: Union[NF, Term]) -> ConstraintSet:
    """Collect data-flow equations and order constraints for a term."""
    x = x if isinstance(x, NF) else nf(x)
    cs = ConstraintSet()
    seen: set[Name] = set()

    def note(n: Name) -> None:
        if n not in seen:
            seen.add(n)
            cs.names.append(n)

    def fact(lo: Name, hi: Name, rule: str, where: str) -> None:
        cs.clauses.append(Clause([[Atom(lo, hi, rule, where)]], rule, where))

    def go_nf(p: NF, gamma: frozenset, loc: str) -> None:
        for n, _ in p.binders:
            note(n)
        inner = gamma | set(p.names)
        tied = tied_relation(p)
        for i, a in enumerate(p.actives):
            here = f"{loc}/{i}"
            go_seq(a, inner, here)
            outer = sorted((y for y in a.fn if y in gamma), key=lambda y: y.uid)
            for n in p.names:
                if tied.name_tied(n, i):
                    for y in outer:
                        fact(y, n, "Par", here)

    def go_seq(a, gamma: frozenset, loc: str) -> None:
        for bi, (p, cont) in enumerate(a.branches):
            here = f"{loc}.{bi}" if len(a.branches) > 1 else loc
            if isinstance(p, Out):
                note(p.chan)
                note(p.msg)
                cs.equations.append(Equation(p.chan, p.msg, f"{here} {p.chan.display}<{p.msg.display}>"))
                go_nf(cont, gamma, here)
            elif isinstance(p, In):
                note(p.chan)
                note(p.var)
                cs.equations.append(Equation(p.chan, p.var, f"{here} {p.chan.display}({p.var.display})"))
                go_nf(cont, gamma | {p.var}, here)
                mig = []
                for i in sorted(migratable(p.var, cont)):
                    for y in sorted(cont.actives[i].fn - {p.chan}, key=lambda y: y.uid):
                        if y in gamma:
                            mig.append(Atom(y, p.chan, "In", here))
                if mig:
                    first = [Atom(p.var, p.chan, "In", here)]
                    cs.clauses.append(Clause([mig, first], "In", here))
            else:
                go_nf(cont, gamma, here)

    free = sorted(x.fn, key=lambda n: n.display)
    for n in free:
        note(n)
    go_nf(x, frozenset(free), "top")
    restricted = [n for p in continuations(x) for n in p.names]
    for f in free:
        for y in restricted:
            fact(f, y, "Safe", "top")
    return cs


# ------------------------------------------------------------ unification

class RecursiveType(Exception):
    def __init__(self, names: list[Name], equations: list[str]):
        self.names, self.equations = names, equations
        shown = list(dict.fromkeys(n.display for n in names))
        super().__init__("recursive type through " + ", ".join(shown))


class Dataflow:
    """Union-find over type variables; each class has a base variable and an optional payload."""

    def __init__(self):
        self.parent: list[int] = []
        self.payload: list[Optional[int]] = []
        self.bparent: list[int] = []
        self.base: list[int] = []
        self.bnames: list[list[Name]] = []
        self.bwhy: list[list[str]] = []
        self.var: dict[Name, int] = {}
        self.why_payload: dict[int, str] = {}

    def new(self, name: Optional[Name]) -> int:
        v = len(self.parent)
        self.parent.append(v)
        self.payload.append(None)
        b = len(self.bparent)
        self.bparent.append(b)
        self.bnames.append([name] if name is not None else [])
        self.bwhy.append([])
        self.base.append(b)
        return v

    def of(self, n: Name) -> int:
        if n not in self.var:
            self.var[n] = self.new(n)
        return self.var[n]

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def bfind(self, b: int) -> int:
        while self.bparent[b] != b:
            self.bparent[b] = self.bparent[self.bparent[b]]
            b = self.bparent[b]
        return b

    def base_of(self, n: Name) -> int:
        return self.bfind(self.base[self.find(self.of(n))])

    def same_base(self, a: Name, b: Name) -> bool:
        return self.base_of(a) == self.base_of(b)

    def same_type(self, a: Name, b: Name) -> bool:
        return self.find(self.of(a)) == self.find(self.of(b))

    def payload_of(self, n: Name) -> Optional[int]:
        p = self.payload[self.find(self.of(n))]
        return None if p is None else self.find(p)

    def union_base(self, a: int, b: int, why: str) -> None:
        a, b = self.bfind(a), self.bfind(b)
        if a == b:
            return
        if b < a:
            a, b = b, a
        self.bparent[b] = a
        self.bnames[a] += self.bnames[b]
        self.bwhy[a] += self.bwhy[b] + [why]

    def unify(self, u: int, v: int, why: str) -> None:
        u, v = self.find(u), self.find(v)
        if u == v:
            return
        if v < u:
            u, v = v, u
        self.parent[v] = u
        self.union_base(self.base[u], self.base[v], why)
        pu, pv = self.payload[u], self.payload[v]
        if pu is None:
            self.payload[u] = pv
            if v in self.why_payload:
                self.why_payload[u] = self.why_payload[v]
        elif pv is not None:
            self.unify(pu, pv, why)

    def equate(self, e: Equation) -> None:
        a, b = self.find(self.of(e.chan)), self.of(e.payload)
        if self.payload[a] is None:
            self.payload[a] = b
            self.why_payload[a] = e.where
        else:
            self.unify(self.payload[a], b, e.where)

    def check_acyclic(self) -> None:
        state: dict[int, int] = {}
        for start in {self.find(v) for v in range(len(self.parent))}:
            path = []
            cur: Optional[int] = start
            while cur is not None:
                cur = self.find(cur)
                st = state.get(cur)
                if st == 2:
                    break
                if st == 1:
                    cyc = path[path.index(cur):]
                    names = [n for c in cyc for n, v in self.var.items() if self.find(v) == c]
                    why = [self.why_payload[c] for c in cyc if c in self.why_payload]
                    raise RecursiveType(sorted(set(names), key=lambda n: n.display), why)
                state[cur] = 1
                path.append(cur)
                cur = self.payload[cur]
            for c in path:
                state[c] = 2


# ---------------------------------------------------------------- solving

@dataclass
class InferenceResult:
    status: str  # "ok", "unsat", "inconclusive"
    hierarchy: Optional[Hierarchy] = None
    annotations: dict[Name, Type] = field(default_factory=dict)
    env: dict[Name, Type] = field(default_factory=dict)
    annotated: Optional[Term] = None
    constraints: list[str] = field(default_factory=list)
    core: list[dict] = field(default_factory=list)
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def type_of(self, display: str) -> Type:
        """Type of the first restriction (or free name) printed as ``display``."""
        for n, ty in list(self.annotations.items()) + list(self.env.items()):
            if n.display == display:
                return ty
        raise KeyError(display)

    def to_json(self) -> dict:
        from .syntax import pretty
        return {
            "status": self.status,
            "hierarchy": self.hierarchy.to_json() if self.hierarchy else None,
            "chain": self.hierarchy.chain_order() if self.hierarchy else None,
            "annotations": {n.display: str(t) for n, t in self.annotations.items()},
            "env": env_to_json(self.env),
            "annotated": pretty(self.annotated) if self.annotated is not None else None,
            "constraints": self.constraints,
            "core": self.core,
            "reason": self.reason,
        }


class _Graph:
    def __init__(self):
        self.succ: dict[int, dict[int, int]] = {}

    def reaches(self, a: int, b: int) -> bool:
        if a == b:
            return True
        seen, todo = {a}, [a]
        while todo:
            u = todo.pop()
            for v in self.succ.get(u, ()):
                if v == b:
                    return True
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return False

    def add(self, a: int, b: int) -> None:
        d = self.succ.setdefault(a, {})
        d[b] = d.get(b, 0) + 1

    def remove(self, a: int, b: int) -> None:
        d = self.succ[a]
        d[b] -= 1
        if not d[b]:
            del d[b]

    def path(self, a: int, b: int) -> Optional[list[int]]:
        prev = {a: None}
        q = deque([a])
        while q:
            u = q.popleft()
            for v in self.succ.get(u, ()):
                if v not in prev:
                    prev[v] = u
                    if v == b:
                        out = [b]
                        while prev[out[-1]] is not None:
                            out.append(prev[out[-1]])
                        return out[::-1]
                    q.append(v)
        return None


def _label_classes(u: Dataflow, classes: Iterable[int]) -> dict[int, str]:
    labels: dict[int, str] = {}
    used: set[str] = set()
    for b in sorted(classes, key=lambda b: min((n.uid for n in u.bnames[b]), default=b)):
        names = u.bnames[b]
        stem = "t_" + (min(names, key=lambda n: n.uid).display if names else str(b))
        stem = stem.replace("'", "p")
        lab, k = stem, 1
        while lab in used:
            lab = f"{stem}{k}"
            k += 1
        used.add(lab)
        labels[b] = lab
    return labels


def unify_dataflow(cs: ConstraintSet) -> Dataflow:
    """Solve the data-flow equations; raise RecursiveType if an occurs check fails."""
    u = Dataflow()
    for n in cs.names:
        u.of(n)
    for e in cs.equations:
        u.equate(e)
    u.check_acyclic()
    return u


@dataclass
class OrderSolution:
    status: str  # "ok", "unsat", "inconclusive"
    chain: list = field(default_factory=list)
    cycle: list = field(default_factory=list)
    conflicts: list = field(default_factory=list)


def _edge(a) -> tuple:
    return (a.lo, a.hi) if hasattr(a, "lo") else (a[0], a[1])


def solve_order(clauses: Iterable, base_vars: Iterable, accept=None,
                max_backtracks: Optional[int] = DEFAULT_BACKTRACKS, key=None) -> OrderSolution:
    """Find a chain over ``base_vars`` satisfying every clause.

    A clause is a list of alternatives, each a list of atoms ``(lo, hi)`` (or
    objects with ``lo``/``hi``); ``key`` maps an atom endpoint to its
    variable. The search fixes one alternative per clause while keeping the
    graph acyclic, then lists the variables in topological order, with
    unconstrained variables last. ``accept(rank)`` may reject a partial
    chain; it must only reject prefixes that no completion can repair.
    """
    key = key or (lambda v: v)
    variables = list(dict.fromkeys(base_vars))
    clauses = [list(map(list, c)) for c in clauses]
    facts = [a for c in clauses if len(c) == 1 for a in c[0]]
    choices = [c for c in clauses if len(c) > 1]

    g = _Graph()
    for a in facts:
        lo, hi = map(key, _edge(a))
        if g.reaches(hi, lo):
            path = g.path(hi, lo) if hi != lo else [hi]
            edges = set(zip(path, path[1:]))
            cyc = [a] + [b for b in facts if tuple(map(key, _edge(b))) in edges]
            return OrderSolution("unsat", cycle=cyc)
        g.add(lo, hi)

    budget = [0]

    def tick() -> None:
        budget[0] += 1
        if max_backtracks is not None and budget[0] > max_backtracks:
            raise InferenceBudget()

    constrained = set(g.succ) | {w for d in g.succ.values() for w in d}
    for c in choices:
        for alt in c:
            for a in alt:
                constrained |= set(map(key, _edge(a)))
    order_pref = sorted(variables, key=lambda b: b not in constrained)

    def linearize() -> Optional[list]:
        preds: dict = {b: set() for b in variables}
        for a, d in g.succ.items():
            for b in d:
                preds.setdefault(b, set()).add(a)
        rank: dict = {}
        out: list = []

        def dfs() -> bool:
            if len(out) == len(variables):
                return True
            for b in order_pref:
                if b in rank or not preds[b] <= rank.keys():
                    continue
                tick()
                rank[b] = len(out)
                out.append(b)
                if (accept is None or accept(rank)) and dfs():
                    return True
                out.pop()
                del rank[b]
                if accept is None:
                    break
            return False

        return list(out) if dfs() else None

    conflicts: list = []

    def assign(k: int) -> Optional[list]:
        if k == len(choices):
            return linearize()
        for alt in choices[k]:
            tick()
            added = []
            ok = True
            for a in alt:
                lo, hi = map(key, _edge(a))
                if g.reaches(hi, lo):
                    conflicts.append((k, a))
                    ok = False
                    break
                g.add(lo, hi)
                added.append((lo, hi))
            if ok:
                res = assign(k + 1)
                if res is not None:
                    return res
            for lo, hi in added:
                g.remove(lo, hi)
        return None

    try:
        chain = assign(0)
    except InferenceBudget:
        return OrderSolution("inconclusive", conflicts=conflicts)
    if chain is None:
        return OrderSolution("unsat", conflicts=conflicts)
    return OrderSolution("ok", chain=chain)


def infer(t: Union[Term, str], max_backtracks: int = DEFAULT_BACKTRACKS) -> InferenceResult:
    """Infer a chain hierarchy, annotations and an environment for ``t``."""
    if isinstance(t, str):
        from .syntax import parse
        t = parse(t)
    x = nf(t)
    cs = generate_constraints(x)
    text = [str(e) for e in cs.equations] + [str(c) for c in cs.clauses]
    try:
        u = unify_dataflow(cs)
    except RecursiveType as err:
        core = [{"kind": "recursive", "names": list(dict.fromkeys(n.display for n in err.names)),
                 "equations": err.equations,
                 "text": "occurs check fails on " + "; ".join(err.equations)}]
        return InferenceResult("unsat", constraints=text, core=core, reason=str(err))

    def cls(n: Name) -> int:
        return u.base_of(n)

    classes = sorted({cls(n) for n in cs.names})
    subterms = list(continuations(x))
    fns = [[a.fn for a in p.actives] for p in subterms]

    # a subterm's verdict only depends on the ranks of its own classes
    own = [sorted({cls(n) for n in p.names}) for p in subterms]
    memo: dict = {}

    def partial_ok(rank: dict[int, int]) -> bool:
        for k, p in enumerate(subterms):
            sig = (k, tuple(rank.get(c) for c in own[k]))
            ok = memo.get(sig)
            if ok is None:
                ok = memo[sig] = _pphi(p.names, list(range(len(p.actives))), fns[k], rank, cls)
            if not ok:
                return False
        return True

    sol = solve_order([c.alternatives for c in cs.clauses], classes, accept=partial_ok,
                      max_backtracks=max_backtracks, key=cls)
    if sol.status == "inconclusive":
        return InferenceResult("inconclusive", constraints=text,
                               reason=f"search exceeded {max_backtracks} steps")
    if sol.status == "unsat":
        if sol.cycle:
            return InferenceResult("unsat", constraints=text, core=_core(u, sol.cycle),
                                   reason="order constraints are cyclic")
        choices = [c for c in cs.clauses if len(c.alternatives) > 1]
        core = [{"kind": "choice", "clause": str(choices[k]), "where": choices[k].where,
                 "blocked_by": str(a)} for k, a in sol.conflicts[-4:]]
        why = "no choice of alternatives is acyclic" if sol.conflicts else \
            "no chain makes every subterm T-compatible"
        return InferenceResult("unsat", constraints=text, core=core, reason=why)

    labels = _label_classes(u, classes)
    h = Hierarchy.chain([labels[b] for b in sol.chain])

    def resolve(v: int) -> Type:
        v = u.find(v)
        p = u.payload[v]
        return Type(labels[u.bfind(u.base[v])], resolve(p) if p is not None else None)

    types = {n: resolve(u.of(n)) for n in cs.names}
    annotated = annotate(t, types)
    env = {n: types[n] for n in free_names(t)}
    annotations = {n: types[n] for n in restricted_names(t)}
    res = InferenceResult("ok", h, annotations, env, annotated, text)
    _self_check(res)
    return res


def _core(u: Dataflow, atoms: list[Atom]) -> list[dict]:
    """Explain a cycle among plain atoms: the atoms involved and the forced equalities."""
    seen_edges, chosen = set(), []
    for a in atoms:
        e = (u.base_of(a.lo), u.base_of(a.hi))
        if e not in seen_edges:
            seen_edges.add(e)
            chosen.append(a)
    out = [{"kind": "atom", "lo": a.lo.display, "hi": a.hi.display, "rule": a.rule,
            "where": a.where, "text": str(a)} for a in chosen]
    for b in sorted({b for e in seen_edges for b in e}):
        names = sorted({n.display for n in u.bnames[b]})
        if len(names) > 1:
            out.append({"kind": "equal", "names": names, "because": u.bwhy[b],
                        "text": " = ".join(f"base({n})" for n in names)})
    return out


def _pphi(X: list[Name], I: list[int], fns: list[frozenset], rank: dict[int, int], cls) -> bool:
    """Forest construction under a partially known chain.

    Classes in ``rank`` come first in that order; unranked classes come later.
    Returns False only on a failure that no completion of the chain can fix.
    """
    if not X or not I:
        return True
    ranked = [n for n in X if cls(n) in rank]
    if not ranked:
        return True
    low = min(rank[cls(n)] for n in ranked)
    mins = [n for n in ranked if rank[cls(n)] == low]
    minset = set(mins)
    tied = Tied(X, [fns[i] for i in I])
    owner: dict[int, Name] = {}
    groups = {}
    for n in mins:
        grp = [I[k] for k in sorted(tied.tied_to(n))]
        for i in grp:
            if i in owner:
                return False
            owner[i] = n
        groups[n] = grp
    placed: set[Name] = set()
    for n in mins:
        ys = [y for y in X if y not in minset and any(y in fns[i] for i in groups[n])]
        placed |= set(ys)
        if not _pphi(ys, groups[n], fns, rank, cls):
            return False
    rest = [y for y in X if y not in minset and y not in placed]
    return _pphi(rest, [i for i in I if i not in owner], fns, rank, cls)


def annotate(t: Term, types: dict[Name, Type]) -> Term:
    """Copy ``t`` with every restriction annotated from ``types``."""
    if isinstance(t, Nil):
        return t
    if isinstance(t, Restrict):
        return Restrict(t.name, annotate(t.body, types), types.get(t.name, t.type))
    if isinstance(t, Par):
        return Par(annotate(t.left, types), annotate(t.right, types))
    if isinstance(t, Repl):
        return Repl(annotate(t.body, types))
    return Choice(tuple(Branch(b.prefix, annotate(b.cont, types)) for b in t.branches))


def _self_check(res: InferenceResult) -> None:
    from .typecheck import typecheck_term
    rep = typecheck_term(res.hierarchy, res.env, res.annotated)
    bad = [str(v) for v in rep.violations]
    bad += [why for _, why in tshaped_failures(res.hierarchy, res.annotated)]
    bad += p_safety_violations(res.hierarchy, res.env, res.annotated)
    if bad:
        raise AssertionError("inferred annotation fails its own check: " + "; ".join(bad))
