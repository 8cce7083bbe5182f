"""Normal forms ``new X. (A_1 | ... | A_n)`` and the relations defined on them.

A normal form keeps its active restrictions as an ordered tuple of
(name, annotation) pairs and its active sequential processes as ``Seq``
objects. Continuations under prefixes are normal forms again.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Optional, Union

from .terms import (
    Branch, Choice, In, Name, Nil, Out, Par, Prefix, Repl, Restrict, Tau, Term, Type,
    fresh, par, restrict,
)


@dataclass(frozen=True)
class Seq:
    """A sum of prefixed normal forms, possibly replicated."""

    branches: tuple[tuple[Prefix, "NF"], ...]
    replicated: bool = False
    fn: frozenset = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        out: set[Name] = set()
        for p, cont in self.branches:
            if isinstance(p, In):
                out.add(p.chan)
                out |= cont.fn - {p.var}
            else:
                if isinstance(p, Out):
                    out.add(p.chan)
                    out.add(p.msg)
                out |= cont.fn
        object.__setattr__(self, "fn", frozenset(out))

    @cached_property
    def fn_order(self) -> tuple[Name, ...]:
        return tuple(sorted(self.fn, key=lambda n: n.uid))

    @cached_property
    def erased(self) -> str:
        return _erase_seq(self)

    @cached_property
    def pruned(self) -> "Seq":
        bs = tuple((p, prune(c)) for p, c in self.branches)
        if all(a is b for (_, a), (_, b) in zip(bs, self.branches)):
            return self
        return Seq(bs, self.replicated)


@dataclass(frozen=True)
class NF:
    binders: tuple[tuple[Name, Optional[Type]], ...]
    actives: tuple[Seq, ...]
    fn: frozenset = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        out: set[Name] = set()
        for a in self.actives:
            out |= a.fn
        object.__setattr__(self, "fn", frozenset(out - {n for n, _ in self.binders}))

    @property
    def names(self) -> list[Name]:
        return [n for n, _ in self.binders]

    def annotation(self, x: Name) -> Optional[Type]:
        for n, ty in self.binders:
            if n == x:
                return ty
        raise KeyError(x)

    def is_zero(self) -> bool:
        return not self.binders and not self.actives

    def __str__(self) -> str:
        from .syntax import pretty
        return pretty(to_term(self))


ZERO = NF((), ())


# ------------------------------------------------------------ conversion

def nf(t: Term) -> NF:
    """Normalize a term by pulling active restrictions to the top."""
    if isinstance(t, Nil):
        return ZERO
    if isinstance(t, Restrict):
        inner = nf(t.body)
        return NF(((t.name, t.type),) + inner.binders, inner.actives)
    if isinstance(t, Par):
        left, right = nf(t.left), nf(t.right)
        if right.is_zero():
            return left
        if left.is_zero():
            return right
        return NF(left.binders + right.binders, left.actives + right.actives)
    if isinstance(t, Repl):
        return NF((), (_seq(t.body, True),))
    return NF((), (_seq(t, False),))


def _seq(c: Choice, replicated: bool) -> Seq:
    return Seq(tuple((b.prefix, nf(b.cont)) for b in c.branches), replicated)


def to_term(x: Union[NF, Seq]) -> Term:
    if isinstance(x, Seq):
        body = Choice(tuple(Branch(p, to_term(c)) for p, c in x.branches))
        return Repl(body) if x.replicated else body
    return restrict(list(x.binders), par(*(to_term(a) for a in x.actives)))


def prune(x: NF) -> NF:
    """Drop restrictions that no active process mentions, at every depth."""
    acts = tuple(a.pruned for a in x.actives)
    used = set()
    for a in acts:
        used |= a.fn
    bs = tuple(b for b in x.binders if b[0] in used)
    if len(bs) == len(x.binders) and all(a is b for a, b in zip(acts, x.actives)):
        return x
    return NF(bs, acts)


def compose(*parts: NF) -> NF:
    """Parallel composition of normal forms (binders concatenated)."""
    return NF(sum((p.binders for p in parts), ()), sum((p.actives for p in parts), ()))


# ------------------------------------------------------------ renaming

def rename_nf(x: NF, sub: dict[Name, Name]) -> NF:
    if not sub:
        return x
    return NF(tuple((sub.get(n, n), ty) for n, ty in x.binders),
              tuple(rename_seq(a, sub) for a in x.actives))


def rename_seq(s: Seq, sub: dict[Name, Name]) -> Seq:
    if not sub:
        return s
    out = []
    for p, cont in s.branches:
        if isinstance(p, In):
            p = In(sub.get(p.chan, p.chan), sub.get(p.var, p.var))
        elif isinstance(p, Out):
            p = Out(sub.get(p.chan, p.chan), sub.get(p.msg, p.msg))
        out.append((p, rename_nf(cont, sub)))
    return Seq(tuple(out), s.replicated)


def binders_in(x: Union[NF, Seq]) -> Iterator[Name]:
    """Every binder occurring inside ``x`` (restrictions and input variables)."""
    if isinstance(x, NF):
        for n, _ in x.binders:
            yield n
        for a in x.actives:
            yield from binders_in(a)
    else:
        for p, cont in x.branches:
            if isinstance(p, In):
                yield p.var
            yield from binders_in(cont)


def fresh_copy(s: Seq) -> Seq:
    return rename_seq(s, {b: fresh(b.display) for b in binders_in(s)})


def fresh_nf(x: NF) -> NF:
    return rename_nf(x, {b: fresh(b.display) for b in binders_in(x)})


def all_restrictions(x: Union[NF, Seq]) -> Iterator[tuple[Name, Optional[Type]]]:
    if isinstance(x, NF):
        yield from x.binders
        for a in x.actives:
            yield from all_restrictions(a)
    else:
        for _, cont in x.branches:
            yield from all_restrictions(cont)


def continuations(x: NF) -> Iterator[NF]:
    """``x`` itself and every normal form sitting under a prefix inside it."""
    yield x
    for a in x.actives:
        for _, cont in a.branches:
            yield from continuations(cont)


# ------------------------------------------------------- tied relation

class Tied:
    """Linked / tied relations over the actives of ``new X. (A_1 | ... | A_n)``.

    ``linked(i, j)`` holds when ``A_i`` and ``A_j`` share a name from ``X``;
    ``tied`` is its reflexive-transitive closure.
    """

    def __init__(self, bound: Iterable[Name], fns: list[frozenset]):
        self.bound = frozenset(bound)
        self.fns = fns
        parent = list(range(len(fns)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        first: dict[Name, int] = {}
        for i, f in enumerate(fns):
            for n in f & self.bound:
                if n in first:
                    a, b = find(first[n]), find(i)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
                else:
                    first[n] = i
        self.comp = [find(i) for i in range(len(fns))]

    def linked(self, i: int, j: int) -> bool:
        return bool(self.fns[i] & self.fns[j] & self.bound)

    def tied(self, i: int, j: int) -> bool:
        return self.comp[i] == self.comp[j]

    def name_tied(self, y: Name, i: int) -> bool:
        c = self.comp[i]
        return any(y in f and self.comp[j] == c for j, f in enumerate(self.fns))

    def tied_to(self, y: Name) -> set[int]:
        """Indices of the actives that ``y`` is tied to."""
        comps = {self.comp[j] for j, f in enumerate(self.fns) if y in f}
        return {i for i, c in enumerate(self.comp) if c in comps}

    def components(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for i, c in enumerate(self.comp):
            groups.setdefault(c, []).append(i)
        return list(groups.values())


def tied_relation(x: NF) -> Tied:
    return Tied(x.names, [a.fn for a in x.actives])


def migratable(var: Name, cont: NF) -> set[int]:
    """Actives of the continuation of an input ``a(var)`` that are tied to ``var``."""
    return tied_relation(cont).tied_to(var)


# ---------------------------------------------------------- serialization

def _ann(ty: Optional[Type]) -> str:
    return "" if ty is None else ":" + str(ty)


def _erase_prefix(p: Prefix) -> str:
    return "i" if isinstance(p, In) else "o" if isinstance(p, Out) else "t"


def _erase_seq(s: Seq) -> str:
    bs = sorted(_erase_prefix(p) + _erase_nf(c) for p, c in s.branches)
    return ("!" if s.replicated else "") + "(" + "+".join(bs) + ")"


def _erase_nf(x: NF) -> str:
    if x.is_zero():
        return "0"
    anns = sorted(_ann(ty) for _, ty in x.binders)
    return "n" + ",".join(anns) + "[" + "|".join(sorted(a.erased for a in x.actives)) + "]"


@lru_cache(maxsize=None)
def free_token(n: Name) -> str:
    return f"f{n.uid}"


def seq_key(s: Seq, tok: Optional[dict] = None, level: int = 0, mark: Optional[Name] = None) -> str:
    """Serialization of ``s`` up to alpha-conversion and reordering.

    ``tok`` gives the token printed for each free name (``free_token`` by
    default) and ``mark`` is printed as ``*``. Input variables are printed
    by nesting level and inner binders are numbered as in ``canonical``.
    """
    if tok is None:
        tok = {}
    toks = tuple("*" if n == mark else tok.get(n) or free_token(n) for n in s.fn_order)
    cache = s.__dict__.setdefault("_keys", {})
    hit = cache.get((level, toks))
    if hit is not None:
        return hit
    env = dict(zip(s.fn_order, toks))
    parts = []
    for p, c in s.branches:
        if isinstance(p, In):
            v = f"v{level}"
            parts.append(f"i{env[p.chan]}({v})" + _nf_key(c, {**env, p.var: v}, level + 1))
        elif isinstance(p, Out):
            parts.append(f"o{env[p.chan]}<{env[p.msg]}>" + _nf_key(c, env, level + 1))
        else:
            parts.append("t" + _nf_key(c, env, level + 1))
    out = ("!" if s.replicated else "") + "(" + "+".join(sorted(parts)) + ")"
    cache[(level, toks)] = out
    return out


def _nf_key(x: NF, env: dict, level: int) -> str:
    if x.is_zero():
        return ""
    return ".n[" + _canon(x, env, level) + "]"


def _canon(p: NF, env: dict, level: int) -> str:
    names = p.names
    anns = [_ann(ty) for _, ty in p.binders]
    uses: list[list[int]] = [[] for _ in names]
    index = {n: i for i, n in enumerate(names)}
    for ai, a in enumerate(p.actives):
        for n in a.fn:
            if n in index:
                uses[index[n]].append(ai)
    stem = f"u{level}." if level else "b"
    # cheap start: annotation and the shapes of the actives using the name;
    # refinement below adds the positions for classes that stay tied
    start = [(anns[b], tuple(sorted(p.actives[ai].erased for ai in uses[b])))
             for b in range(len(names))]
    rank = {k: i for i, k in enumerate(sorted(set(start)))}
    color = [rank[k] for k in start]

    def tokens(col: list[int]) -> dict:
        tok = dict(env)
        for n, c in zip(names, col):
            tok[n] = f"{stem}{c}"
        return tok

    def refine(col: list[int]) -> list[int]:
        while True:
            counts: dict[int, int] = {}
            for c in col:
                counts[c] = counts.get(c, 0) + 1
            if len(counts) == len(col):
                return col
            tok = tokens(col)
            keys = []
            for b, n in enumerate(names):
                if counts[col[b]] == 1:
                    keys.append((col[b], ()))
                    continue
                keys.append((col[b], tuple(sorted(seq_key(p.actives[ai], tok, level, n)
                                                  for ai in uses[b]))))
            order = {k: i for i, k in enumerate(sorted(set(keys)))}
            new = [order[k] for k in keys]
            if len(order) == len(counts):
                return new
            col = new

    color = refine(color)
    while len(set(color)) < len(color):
        counts: dict[int, int] = {}
        for c in color:
            counts[c] = counts.get(c, 0) + 1
        tie = min(c for c, k in counts.items() if k > 1)
        members = [b for b, c in enumerate(color) if c == tie]
        width = len(members)
        new = [c * width if c < tie else c * width + width - 1 if c > tie else 0 for c in color]
        for k, b in enumerate(members):
            new[b] = tie * width + k
        color = refine(new)
    tok = tokens(color)
    act = [seq_key(a, tok, level) for a in p.actives]
    head = ",".join(f"{stem}{c}{anns[b]}" for b, c in sorted(enumerate(color), key=lambda t: t[1]))
    return head + "||" + "|".join(sorted(act))


_component_keys: dict = {}


def canonical(x: NF) -> str:
    """A key that is equal for structurally congruent normal forms.

    Equal keys always mean congruent terms. The term is split into tied
    components, each keyed on its own. Binders are numbered by colour
    refinement over the binder/active incidence structure; remaining ties
    are broken by individualizing a whole colour class in presentation
    order. That is exact when the tied binders are interchangeable, which
    covers the symmetric copies produced by replication. Other ties can
    only cost missed identifications, never wrong ones.

    Component keys are memoized on the identity of their actives and
    binders, so successors sharing most of a state are cheap to key.
    """
    x = prune(x)
    types = dict(x.binders)
    keys = []
    for comp in Tied(x.names, [a.fn for a in x.actives]).components():
        acts = sorted((x.actives[i] for i in comp), key=id)
        used = frozenset().union(*(a.fn for a in acts))
        names = tuple(sorted((n for n in used if n in types), key=lambda n: n.uid))
        ck = (tuple(map(id, acts)), tuple(n.uid for n in names))
        hit = _component_keys.get(ck)
        if hit is None:
            if len(_component_keys) > 200_000:
                _component_keys.clear()
            # the stored actives keep their ids from being reused
            hit = (_canon(NF(tuple((n, types[n]) for n in names), tuple(acts)), {}, 0), acts)
            _component_keys[ck] = hit
        keys.append(hit[0])
    return " ; ".join(sorted(keys))


# ------------------------------------------------------------ matching

class MatchBudget(RuntimeError):
    pass


def match_seq(a: Seq, b: Seq, fwd: dict, back: dict, ext_ok=None, steps: Optional[list] = None,
              budget: Optional[int] = None) -> Iterator[list[tuple[Name, Name]]]:
    """Enumerate alpha-equivalences between ``a`` and ``b``.

    Each result lists the new pairs (free name of ``a``, free name of
    ``b``) that extend the injective partial map ``fwd``/``back``. The maps
    are extended in place while a result is being consumed and restored
    afterwards. ``ext_ok(x, y)`` filters new free-name pairs.
    """
    if a.replicated != b.replicated or len(a.branches) != len(b.branches) or a.erased != b.erased:
        return
    st = _Match(fwd, back, ext_ok, steps if steps is not None else [0], budget)
    before = set(fwd)
    for _ in st.branches(list(a.branches), list(b.branches)):
        yield [(x, fwd[x]) for x in fwd if x not in before and x not in st.bound]


class _Match:
    def __init__(self, fwd, back, ext_ok, steps, budget):
        self.fwd, self.back, self.ext_ok = fwd, back, ext_ok
        self.steps, self.budget = steps, budget
        self.bound: set[Name] = set()
        self.bound_b: set[Name] = set()

    def tick(self) -> None:
        self.steps[0] += 1
        if self.budget is not None and self.steps[0] > self.budget:
            raise MatchBudget()

    def pair(self, x: Name, y: Name, undo: list) -> bool:
        if x in self.fwd:
            return self.fwd[x] == y
        if y in self.back:
            return False
        if (x in self.bound) != (y in self.bound_b):
            return False
        if x not in self.bound and self.ext_ok is not None and not self.ext_ok(x, y):
            return False
        self.fwd[x], self.back[y] = y, x
        undo.append(x)
        return True

    def release(self, undo: list) -> None:
        for x in undo:
            del self.back[self.fwd.pop(x)]
        undo.clear()

    def branches(self, xs: list, ys: list) -> Iterator[None]:
        if not xs:
            yield None
            return
        (p, c), rest = xs[0], xs[1:]
        for j, (q, d) in enumerate(ys):
            if type(p) is not type(q) or _erase_nf(c) != _erase_nf(d):
                continue
            self.tick()
            undo: list = []
            ok = True
            if isinstance(p, In):
                ok = self.pair(p.chan, q.chan, undo)
                if ok:
                    self.bound.add(p.var)
                    self.bound_b.add(q.var)
                    ok = self.pair(p.var, q.var, undo)
            elif isinstance(p, Out):
                ok = self.pair(p.chan, q.chan, undo) and self.pair(p.msg, q.msg, undo)
            if ok:
                for _ in self.nf(c, d):
                    yield from self.branches(rest, ys[:j] + ys[j + 1:])
            self.release(undo)

    def nf(self, x: NF, y: NF) -> Iterator[None]:
        if len(x.binders) != len(y.binders) or len(x.actives) != len(y.actives):
            return
        if sorted(_ann(t) for _, t in x.binders) != sorted(_ann(t) for _, t in y.binders):
            return
        ty = dict(y.binders)
        xnames = set(x.names)
        self.bound.update(x.names)
        self.bound_b.update(y.names)
        for _ in self.actives(list(x.actives), list(y.actives)):
            # binders match binders of the same level with the same annotation
            if all(n not in self.fwd or (self.fwd[n] in ty and _ann(t) == _ann(ty[self.fwd[n]]))
                   for n, t in x.binders) \
                    and all(m not in self.back or self.back[m] in xnames for m in ty):
                yield None

    def actives(self, xs: list, ys: list) -> Iterator[None]:
        if not xs:
            yield None
            return
        a, rest = xs[0], xs[1:]
        for j, b in enumerate(ys):
            if a.replicated != b.replicated or a.erased != b.erased:
                continue
            for _ in self.branches(list(a.branches), list(b.branches)):
                yield from self.actives(rest, ys[:j] + ys[j + 1:])


def alpha_equiv_seq(a: Seq, b: Seq) -> Optional[list[tuple[Name, Name]]]:
    """Match two sequential processes; returns the free-name correspondence or None."""
    for pairs in match_seq(a, b, {}, {}):
        return pairs
    return None


def pretty_nf(x: Union[NF, Seq], annotated: bool = True) -> str:
    from .syntax import pretty
    return pretty(to_term(x), annotated=annotated)
