"""Abstract syntax of pi-calculus terms with guarded replication.

Names carry an integer identity and a display string. Equality and hashing
use the identity only, so two binders that print the same are still
different names.
"""
from __future__ import annotations

import itertools
import os
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

# Unique across worker processes: the pid lives in the high bits.
_counter = itertools.count(1)
_counter_pid = os.getpid()
_lock = threading.Lock()


def _next_uid() -> int:
    global _counter, _counter_pid
    with _lock:
        pid = os.getpid()
        if pid != _counter_pid:
            _counter, _counter_pid = itertools.count(1), pid
        return (pid << 40) | next(_counter)


@dataclass(frozen=True, eq=False)
class Name:
    uid: int
    display: str = field(compare=False)

    def __eq__(self, other) -> bool:
        return other.__class__ is Name and other.uid == self.uid

    def __hash__(self) -> int:
        return self.uid

    def __repr__(self) -> str:
        return f"Name({self.display}#{self.uid & 0xFFFFFFFFFF})"

    def __str__(self) -> str:
        return self.display


_free_registry: dict[str, Name] = {}


def free_name(display: str) -> Name:
    """The canonical name for a free identifier; equal displays give equal names."""
    with _lock:
        n = _free_registry.get(display)
    if n is None:
        n = Name(_next_uid(), display)
        with _lock:
            n = _free_registry.setdefault(display, n)
    return n


def fresh(display: str) -> Name:
    return Name(_next_uid(), display)


@dataclass(frozen=True)
class Type:
    """A channel type ``base[payload]`` or a plain base type when payload is None."""

    base: str
    payload: Optional["Type"] = None

    def __str__(self) -> str:
        if self.payload is None:
            return self.base
        return f"{self.base}[{self.payload}]"

    def depth(self) -> int:
        return 0 if self.payload is None else 1 + self.payload.depth()

    def bases(self) -> Iterator[str]:
        t: Optional[Type] = self
        while t is not None:
            yield t.base
            t = t.payload


class MissingAnnotation(ValueError):
    """A restriction needed a type annotation but had none."""


# ---------------------------------------------------------------- prefixes

@dataclass(frozen=True)
class In:
    chan: Name
    var: Name


@dataclass(frozen=True)
class Out:
    chan: Name
    msg: Name


@dataclass(frozen=True)
class Tau:
    pass


Prefix = Union[In, Out, Tau]


def prefix_names(p: Prefix) -> tuple[Name, ...]:
    if isinstance(p, In):
        return (p.chan,)
    if isinstance(p, Out):
        return (p.chan, p.msg)
    return ()


# ------------------------------------------------------------------ terms

@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Restrict:
    name: Name
    body: "Term"
    type: Optional[Type] = None


@dataclass(frozen=True)
class Par:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Branch:
    prefix: Prefix
    cont: "Term"


@dataclass(frozen=True)
class Choice:
    branches: tuple[Branch, ...]


@dataclass(frozen=True)
class Repl:
    body: Choice


Term = Union[Nil, Restrict, Par, Choice, Repl]
NIL = Nil()


def par(*terms: Term) -> Term:
    """Right-nested parallel composition; the empty product is 0."""
    terms = tuple(terms)
    if not terms:
        return NIL
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = Par(t, out)
    return out


def restrict(names: Iterable[Union[Name, tuple[Name, Optional[Type]]]], body: Term) -> Term:
    for item in reversed(list(names)):
        n, ty = item if isinstance(item, tuple) else (item, None)
        body = Restrict(n, body, ty)
    return body


def prefix(p: Prefix, cont: Term = NIL) -> Choice:
    return Choice((Branch(p, cont),))


def is_sequential(t: Term) -> bool:
    return isinstance(t, (Choice, Repl))


# ------------------------------------------------------------ name queries

def free_names(t: Term) -> frozenset[Name]:
    if isinstance(t, Nil):
        return frozenset()
    if isinstance(t, Restrict):
        return free_names(t.body) - {t.name}
    if isinstance(t, Par):
        return free_names(t.left) | free_names(t.right)
    if isinstance(t, Repl):
        return free_names(t.body)
    out: set[Name] = set()
    for b in t.branches:
        cont = free_names(b.cont)
        if isinstance(b.prefix, In):
            cont = cont - {b.prefix.var}
        out |= cont
        out.update(prefix_names(b.prefix))
    return frozenset(out)


def _binders(t: Term, inputs: bool) -> Iterator[Name]:
    if isinstance(t, Restrict):
        yield t.name
        yield from _binders(t.body, inputs)
    elif isinstance(t, Par):
        yield from _binders(t.left, inputs)
        yield from _binders(t.right, inputs)
    elif isinstance(t, Repl):
        yield from _binders(t.body, inputs)
    elif isinstance(t, Choice):
        for b in t.branches:
            if inputs and isinstance(b.prefix, In):
                yield b.prefix.var
            yield from _binders(b.cont, inputs)


def bound_names(t: Term) -> list[Name]:
    """Every binder occurrence, restrictions and input variables alike."""
    return list(_binders(t, True))


def restricted_names(t: Term) -> list[Name]:
    """Names bound by a restriction anywhere in the term, active or not."""
    return list(_binders(t, False))


def restriction_types(t: Term) -> dict[Name, Optional[Type]]:
    out: dict[Name, Optional[Type]] = {}

    def go(u: Term) -> None:
        if isinstance(u, Restrict):
            out[u.name] = u.type
            go(u.body)
        elif isinstance(u, Par):
            go(u.left)
            go(u.right)
        elif isinstance(u, Repl):
            go(u.body)
        elif isinstance(u, Choice):
            for b in u.branches:
                go(b.cont)

    go(t)
    return out


def active_restrictions(t: Term) -> list[tuple[Name, Optional[Type]]]:
    if isinstance(t, Restrict):
        return [(t.name, t.type)] + active_restrictions(t.body)
    if isinstance(t, Par):
        return active_restrictions(t.left) + active_restrictions(t.right)
    return []


def active_sequentials(t: Term) -> list[Term]:
    if isinstance(t, Restrict):
        return active_sequentials(t.body)
    if isinstance(t, Par):
        return active_sequentials(t.left) + active_sequentials(t.right)
    if isinstance(t, Nil):
        return []
    return [t]


def is_name_unique(t: Term) -> bool:
    bs = bound_names(t)
    return len(bs) == len(set(bs)) and not (set(bs) & free_names(t))


# ---------------------------------------------------------- substitution

def rename(t: Term, sub: dict[Name, Name]) -> Term:
    """Apply a name-for-name map everywhere, binders included.

    Callers are responsible for avoiding capture; with name-unique terms and
    fresh targets that is automatic.
    """
    if not sub:
        return t
    get = sub.get
    if isinstance(t, Nil):
        return t
    if isinstance(t, Restrict):
        return Restrict(get(t.name, t.name), rename(t.body, sub), t.type)
    if isinstance(t, Par):
        return Par(rename(t.left, sub), rename(t.right, sub))
    if isinstance(t, Repl):
        return Repl(rename(t.body, sub))
    return Choice(tuple(Branch(_rename_prefix(b.prefix, sub), rename(b.cont, sub))
                        for b in t.branches))


def _rename_prefix(p: Prefix, sub: dict[Name, Name]) -> Prefix:
    if isinstance(p, In):
        return In(sub.get(p.chan, p.chan), sub.get(p.var, p.var))
    if isinstance(p, Out):
        return Out(sub.get(p.chan, p.chan), sub.get(p.msg, p.msg))
    return p


def alpha_rename_fresh(t: Term) -> tuple[Term, dict[Name, Name]]:
    """Give every binder of ``t`` a brand new identity; displays are kept."""
    sub = {b: fresh(b.display) for b in bound_names(t)}
    return rename(t, sub), sub


def substitute(t: Term, sub: dict[Name, Name]) -> Term:
    """Capture-avoiding substitution of free names."""
    fns = free_names(t)
    sub = {k: v for k, v in sub.items() if k in fns and k != v}
    if not sub:
        return t
    targets = set(sub.values())
    clash = [b for b in bound_names(t) if b in targets or b in sub]
    if clash:
        t = rename(t, {b: fresh(b.display) for b in clash})
    return rename(t, sub)


def alpha_eq(t1: Term, t2: Term) -> bool:
    """Syntactic equality up to renaming of bound names."""
    return _alpha(t1, t2, {}, {})


def _alpha(a: Term, b: Term, m1: dict, m2: dict) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Nil):
        return True
    if isinstance(a, Restrict):
        if a.type != b.type:
            return False
        return _alpha(a.body, b.body, {**m1, a.name: b.name}, {**m2, b.name: a.name})
    if isinstance(a, Par):
        return _alpha(a.left, b.left, m1, m2) and _alpha(a.right, b.right, m1, m2)
    if isinstance(a, Repl):
        return _alpha(a.body, b.body, m1, m2)
    if len(a.branches) != len(b.branches):
        return False

    def same(x: Name, y: Name) -> bool:
        return m1.get(x, x) == y and m2.get(y, y) == x

    for ba, bb in zip(a.branches, b.branches):
        pa, pb = ba.prefix, bb.prefix
        if type(pa) is not type(pb):
            return False
        n1, n2 = m1, m2
        if isinstance(pa, Out):
            if not (same(pa.chan, pb.chan) and same(pa.msg, pb.msg)):
                return False
        elif isinstance(pa, In):
            if not same(pa.chan, pb.chan):
                return False
            n1, n2 = {**m1, pa.var: pb.var}, {**m2, pb.var: pa.var}
        if not _alpha(ba.cont, bb.cont, n1, n2):
            return False
    return True


def size(t: Term) -> int:
    if isinstance(t, Nil):
        return 1
    if isinstance(t, Restrict):
        return 1 + size(t.body)
    if isinstance(t, Par):
        return 1 + size(t.left) + size(t.right)
    if isinstance(t, Repl):
        return 1 + size(t.body)
    return 1 + sum(1 + size(b.cont) for b in t.branches)
