"""Reduction semantics, bounded state-space exploration and coverability."""
from __future__ import annotations

import json
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from .normal_form import (
    NF, MatchBudget, Seq, binders_in, canonical, free_token, match_seq, nf, pretty_nf, prune,
    rename_nf,
)
from .terms import In, Name, Out, Tau, Term, Type, fresh

DEFAULT_MAX_STATES = 2000
DEFAULT_MAX_DEPTH = 12
DEFAULT_EMBED_BUDGET = 100_000


@dataclass
class Redex:
    """One reduction step from a normal form.

    ``sender`` is the output (or tau) active, ``receiver`` the input active;
    ``rest`` lists the actives left untouched (replicated participants stay).
    ``s_cont`` and ``r_cont`` are the continuations that become active, the
    latter with the message already substituted for ``var``.
    """

    kind: str
    sender: int
    sender_branch: int
    receiver: Optional[int] = None
    receiver_branch: Optional[int] = None
    chan: Optional[Name] = None
    msg: Optional[Name] = None
    var: Optional[Name] = None
    rest: tuple[int, ...] = ()
    s_cont: Optional[NF] = None
    r_cont: Optional[NF] = None

    @property
    def activated(self) -> tuple[tuple[Name, Optional[Type]], ...]:
        out = self.s_cont.binders if self.s_cont is not None else ()
        if self.r_cont is not None:
            out = out + self.r_cont.binders
        return out

    def label(self) -> str:
        if self.kind == "tau":
            return "tau"
        return f"{self.chan.display}<{self.msg.display}>"


def _copy(cont: NF, sub: Mapping[Name, Name], refresh: bool, extra: tuple[Name, ...] = ()) -> NF:
    sub = dict(sub)
    if refresh:
        for b in list(binders_in(cont)) + list(extra):
            if b not in sub:
                sub[b] = fresh(b.display)
    return rename_nf(cont, sub)


def redexes(x: NF) -> list[Redex]:
    outs: dict[Name, list[tuple[int, int]]] = defaultdict(list)
    ins: dict[Name, list[tuple[int, int]]] = defaultdict(list)
    taus: list[tuple[int, int]] = []
    for i, a in enumerate(x.actives):
        for bi, (p, _) in enumerate(a.branches):
            if isinstance(p, Out):
                outs[p.chan].append((i, bi))
            elif isinstance(p, In):
                ins[p.chan].append((i, bi))
            else:
                taus.append((i, bi))
    n = len(x.actives)
    out: list[Redex] = []
    for i, bi in taus:
        s = x.actives[i]
        cont = _copy(s.branches[bi][1], {}, s.replicated)
        rest = tuple(k for k in range(n) if k != i or s.replicated)
        out.append(Redex("tau", i, bi, rest=rest, s_cont=cont))
    for chan, senders in outs.items():
        for i, bi in senders:
            for j, bj in ins.get(chan, ()):
                s, r = x.actives[i], x.actives[j]
                if i == j and not s.replicated:
                    continue
                p_s, s_cont = s.branches[bi]
                p_r, r_cont = r.branches[bj]
                s_new = _copy(s_cont, {}, s.replicated)
                r_new = _copy(r_cont, {p_r.var: p_s.msg}, r.replicated)
                rest = tuple(k for k in range(n)
                             if (k != i or s.replicated) and (k != j or r.replicated))
                out.append(Redex("comm", i, bi, j, bj, chan, p_s.msg, p_r.var, rest, s_new, r_new))
    return out


def apply_redex(x: NF, r: Redex) -> NF:
    binders = x.binders + r.activated
    acts = tuple(x.actives[k] for k in r.rest) + r.s_cont.actives
    if r.r_cont is not None:
        acts = acts + r.r_cont.actives
    return NF(binders, acts)


def successors(x: Union[NF, Term]) -> list[tuple[Redex, NF]]:
    """All one-step successors; activated binders keep their annotations."""
    if not isinstance(x, NF):
        x = nf(x)
    return [(r, apply_redex(x, r)) for r in redexes(x)]


# ------------------------------------------------------------ embedding

class EmbeddingBudget(RuntimeError):
    """The embedding search ran out of budget before reaching a verdict."""


def _unreplicated(s: Seq) -> Seq:
    cache = s.__dict__.get("_unrep")
    if cache is None:
        cache = Seq(s.branches, False)
        s.__dict__["_unrep"] = cache
    return cache


def embeds(q: NF, p: NF, budget: Optional[int] = DEFAULT_EMBED_BUDGET) -> Optional[dict[Name, Name]]:
    """Find a renaming showing ``p`` congruent to ``new XY. (A_1 | ... | A_n | R)``.

    ``q = new X. (A_1 | ... | A_n)``. Restricted names of ``q`` map
    injectively to restricted names of ``p``; free names of ``q`` map to
    themselves when free in ``p``, and otherwise to otherwise unused
    restricted names of ``p`` (alpha-conversion makes that legitimate).
    Annotated restrictions of ``q`` only match equally annotated ones. A
    non-replicated active of ``q`` may also match a copy of a replicated
    active of ``p``. Returns the renaming, or None if there is none; raises
    ``EmbeddingBudget`` when the search is cut short.
    """
    q, p = prune(q), prune(p)
    pbound = set(p.names)
    pfree = p.fn
    qnames = set(q.names) | q.fn

    qtypes, ptypes = dict(q.binders), dict(p.binders)

    def admissible(a: Name, b: Name) -> bool:
        if a in pfree:
            return a == b
        if b not in pbound:
            return False
        # an annotated restriction of the query needs the same annotation
        want = qtypes.get(a)
        return want is None or ptypes[b] == want

    cands: list[list[tuple[int, bool, Seq]]] = []
    for qa in q.actives:
        opts = []
        for j, pa in enumerate(p.actives):
            for copy in ((False, True) if pa.replicated and not qa.replicated else (False,)):
                target = _unreplicated(pa) if copy else pa
                if target.erased == qa.erased and len(qa.fn) == len(target.fn):
                    opts.append((j, copy, target))
        if not opts:
            return None
        cands.append(opts)

    fwd: dict[Name, Name] = {}
    back: dict[Name, Name] = {}
    used: set[int] = set()
    steps = [0]

    def viable(k: int) -> list[tuple[int, bool, Seq]]:
        # names already mapped must land on free names of the target
        qa = q.actives[k]
        out = []
        for j, copy, target in cands[k]:
            if not copy and j in used:
                continue
            tfn = target.fn
            if any(fwd[n] not in tfn for n in qa.fn if n in fwd) \
                    or any(back[n] not in qa.fn for n in tfn if n in back):
                continue
            out.append((j, copy, target))
        return out

    def search(todo: frozenset) -> bool:
        if not todo:
            return True
        steps[0] += 1
        if budget is not None and steps[0] > budget:
            raise EmbeddingBudget(f"embedding search exceeded {budget} steps")
        best, opts = None, None
        for k in sorted(todo):
            v = viable(k)
            if not v:
                return False
            if opts is None or len(v) < len(opts):
                best, opts = k, v
        qa, rest = q.actives[best], todo - {best}
        for j, copy, target in opts:
            if not copy:
                used.add(j)
            for _ in match_seq(qa, target, fwd, back, admissible, steps, budget):
                if search(rest):
                    return True
            if not copy:
                used.discard(j)
        return False

    try:
        found = search(frozenset(range(len(cands))))
    except MatchBudget:
        raise EmbeddingBudget(f"embedding search exceeded {budget} steps") from None
    return {a: b for a, b in fwd.items() if a in qnames} if found else None


# ------------------------------------------------------------ exploration

@dataclass
class StateGraph:
    states: list[NF] = field(default_factory=list)
    keys: list[str] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)
    edges: list[tuple[int, int, str]] = field(default_factory=list)
    exact: bool = True
    reason: Optional[str] = None
    index: dict[str, int] = field(default_factory=dict, repr=False)

    def add(self, x: NF, key: str, d: int) -> int:
        sid = len(self.states)
        self.states.append(x)
        self.keys.append(key)
        self.depth.append(d)
        self.index[key] = sid
        return sid

    def __len__(self) -> int:
        return len(self.states)

    def to_json(self) -> dict:
        return {
            "exact": self.exact,
            "reason": self.reason,
            "states": [{"id": i, "depth": self.depth[i], "term": pretty_nf(s)}
                       for i, s in enumerate(self.states)],
            "edges": [{"from": a, "to": b, "label": l} for a, b, l in self.edges],
        }

    def to_dot(self) -> str:
        lines = ["digraph states {"]
        for i, s in enumerate(self.states):
            label = pretty_nf(s).replace("\\", "\\\\").replace('"', '\\"')
            lines.append(f'  s{i} [shape=box, label="{i}: {label}"];')
        for a, b, l in self.edges:
            lines.append(f'  s{a} -> s{b} [label="{l}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _expand(x: NF) -> list[tuple[str, NF, str]]:
    out = []
    for r, y in successors(x):
        y = prune(y)
        out.append((r.label(), y, canonical(y)))
    return out


def explore(t: Union[Term, NF], max_states: int = DEFAULT_MAX_STATES,
            max_depth: int = DEFAULT_MAX_DEPTH, jobs: int = 1,
            stop: Optional[Callable[[int, NF], bool]] = None) -> StateGraph:
    """Breadth-first exploration up to canonical keys.

    States at ``max_depth`` are not expanded. The graph is ``exact`` when no
    bound cut anything off. ``stop`` is called on each new state and ends
    the search early when it returns True. Results do not depend on ``jobs``:
    each layer is expanded (possibly in parallel) and then merged in order.
    """
    x = prune(t if isinstance(t, NF) else nf(t))
    g = StateGraph()
    g.add(x, canonical(x), 0)
    if stop is not None and stop(0, x):
        g.exact, g.reason = False, "stopped"
        return g
    frontier = [0]
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        for d in range(max_depth + 1):
            if not frontier:
                break
            if d == max_depth:
                if any(successors(g.states[s]) for s in frontier):
                    g.exact, g.reason = False, f"depth bound {max_depth} reached"
                break
            batch = [g.states[s] for s in frontier]
            results = list(pool.map(_expand, batch, chunksize=8)) if pool else [_expand(b) for b in batch]
            nxt = []
            for src, succ in zip(frontier, results):
                for label, y, key in succ:
                    dst = g.index.get(key)
                    if dst is None:
                        if len(g) >= max_states:
                            g.exact, g.reason = False, f"state bound {max_states} reached"
                            continue
                        dst = g.add(y, key, d + 1)
                        nxt.append(dst)
                        if stop is not None and stop(dst, y):
                            g.edges.append((src, dst, label))
                            g.exact, g.reason = False, "stopped"
                            return g
                    g.edges.append((src, dst, label))
            frontier = nxt
    finally:
        if pool:
            pool.shutdown()
    return g


@dataclass
class CoverResult:
    verdict: str  # "covered", "not_coverable" or "not_within_bounds"
    state: Optional[int] = None
    depth: Optional[int] = None
    witness: Optional[NF] = None
    mapping: Optional[dict[Name, Name]] = None
    explored: int = 0
    inconclusive_checks: int = 0

    @property
    def covered(self) -> bool:
        return self.verdict == "covered"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "state": self.state,
            "depth": self.depth,
            "witness": pretty_nf(self.witness) if self.witness is not None else None,
            "mapping": {a.display: b.display for a, b in (self.mapping or {}).items()},
            "explored": self.explored,
            "inconclusive_checks": self.inconclusive_checks,
        }


def cover(t: Union[Term, NF], query: Union[Term, NF], max_states: int = DEFAULT_MAX_STATES,
          max_depth: int = DEFAULT_MAX_DEPTH, jobs: int = 1,
          budget: Optional[int] = DEFAULT_EMBED_BUDGET) -> CoverResult:
    """Search for a reachable state into which ``query`` embeds.

    ``not_coverable`` is only reported when exploration was exhaustive and
    every embedding check was decided.
    """
    q = prune(query if isinstance(query, NF) else nf(query))
    found: dict = {}
    unknown = [0]

    def check(sid: int, y: NF) -> bool:
        try:
            m = embeds(q, y, budget)
        except EmbeddingBudget:
            unknown[0] += 1
            return False
        if m is not None:
            found.update(state=sid, witness=y, mapping=m)
            return True
        return False

    g = explore(t, max_states, max_depth, jobs, stop=check)
    if found:
        return CoverResult("covered", found["state"], g.depth[found["state"]], found["witness"],
                           found["mapping"], len(g), unknown[0])
    verdict = "not_coverable" if g.exact and not unknown[0] else "not_within_bounds"
    return CoverResult(verdict, explored=len(g), inconclusive_checks=unknown[0])


# -------------------------------------------------------- invariance check

@dataclass
class Violation:
    state: int
    kind: str
    detail: str
    term: str


@dataclass
class InvarianceReport:
    violations: list[Violation]
    explored: int
    exact: bool
    reason: Optional[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "explored": self.explored,
            "exact": self.exact,
            "reason": self.reason,
            "violations": [v.__dict__ for v in self.violations],
        }


def check_invariance(h, env: Mapping[Name, Type], t: Union[Term, NF],
                     max_states: int = DEFAULT_MAX_STATES, max_depth: int = DEFAULT_MAX_DEPTH,
                     jobs: int = 1) -> InvarianceReport:
    """Explore ``t`` and re-check typing and T-shapedness at every reachable state."""
    from .tcompat import tshaped_failures
    from .typecheck import typecheck

    g = explore(t, max_states, max_depth, jobs)
    out: list[Violation] = []
    for sid, y in enumerate(g.states):
        rep = typecheck(h, env, y)
        for v in rep.violations:
            out.append(Violation(sid, "typing", str(v), pretty_nf(y)))
        for sub, why in tshaped_failures(h, y):
            out.append(Violation(sid, "tshape", f"{pretty_nf(sub)}: {why}", pretty_nf(y)))
    return InvarianceReport(out, len(g), g.exact, g.reason)
