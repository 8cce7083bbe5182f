"""Concrete syntax: tokenizer, recursive-descent parser and pretty-printer.

Grammar (``+`` binds tighter than ``|``, prefixes tighter than ``+``, and
``new`` extends as far right as possible)::

    P  ::= 0 | new x[:TY]. P | P | P | M | !M | (P)
    M  ::= G (+ G)*          G ::= PI [. P]
    PI ::= x(y) | x<y> | tau | x?() | x!()
    TY ::= ident | ident[TY]

``x?().P`` reads as ``x(u).P`` and ``x!().P`` as ``new u. x<u>.P`` for a
fresh ``u``. Inside a sum the dummy restriction is hoisted to the front of
the sum.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    NIL, Branch, Choice, In, Name, Nil, Out, Par, Repl, Restrict, Tau, Term, Type,
    free_name, free_names, fresh,
)

log = logging.getLogger(__name__)

IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_TOKEN_RE = re.compile(
    rf"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<nin>\?\(\s*\))
  | (?P<nout>!\(\s*\))
  | (?P<ident>{IDENT})
  | (?P<zero>0)
  | (?P<sym>[.|+!()<>:\[\]])
    """,
    re.VERBOSE,
)
KEYWORDS = {"new", "tau"}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg, self.line, self.col = msg, line, col


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind in ("ident", "zero", "sym", "nin", "nout"):
            text = m.group()
            if kind == "ident" and text in KEYWORDS:
                kind = text
            elif kind == "sym":
                kind = text
            out.append(Token(kind, text, line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class ParseInfo:
    """Side information recorded while parsing."""

    free: dict[str, Name] = field(default_factory=dict)
    # display -> binders that were introduced with that display, in order
    binders: dict[str, list[Name]] = field(default_factory=dict)

    @property
    def renamed(self) -> dict[str, list[Name]]:
        return {k: v for k, v in self.binders.items() if len(v) > 1}


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.scope: list[tuple[str, Name]] = []
        self.info = ParseInfo()

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"expected {kind!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind: str) -> bool:
        if self.tok.kind == kind:
            self.i += 1
            return True
        return False

    def lookup(self, display: str) -> Name:
        for d, n in reversed(self.scope):
            if d == display:
                return n
        n = free_name(display)
        if display not in self.info.free:
            self.info.free[display] = n
            log.debug("name %r is free", display)
        return n

    def bind(self, display: str) -> Name:
        n = fresh(display)
        self.info.binders.setdefault(display, []).append(n)
        return n

    # -- grammar
    def parse_top(self) -> Term:
        t = self.par()
        if self.tok.kind != "eof":
            self.error("unexpected token")
        return t

    def par(self) -> Term:
        parts = [self.sum()]
        while self.accept("|"):
            parts.append(self.sum())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Par(p, out)
        return out

    def sum(self) -> Term:
        if self.is_guard_start():
            return self.guards()
        t = self.unit()
        if self.tok.kind == "+":
            if not isinstance(t, Choice):
                self.error("only guarded terms may be summed", self.tok)
            more = self.guards(first=None)
            return _join_sums(t, more)
        return t

    def is_guard_start(self) -> bool:
        k = self.tok.kind
        return k == "tau" or (k == "ident" and self.peek().kind in ("(", "<", "nin", "nout"))

    def guards(self, first: Optional[bool] = True) -> Term:
        """Parse ``G (+ G)*``; hoisted dummy restrictions wrap the result."""
        dummies: list[Name] = []
        branches: list[Branch] = []
        if first is None:
            self.expect("+")
        while True:
            if not self.is_guard_start():
                self.error("expected a prefix")
            br, dummy = self.guard()
            branches.append(br)
            if dummy is not None:
                dummies.append(dummy)
            if not self.accept("+"):
                break
        out: Term = Choice(tuple(branches))
        for d in reversed(dummies):
            out = Restrict(d, out)
        return out

    def guard(self) -> tuple[Branch, Optional[Name]]:
        tok = self.tok
        if self.accept("tau"):
            return Branch(Tau(), self.cont()), None
        chan = self.lookup(self.expect("ident").text)
        if self.accept("("):
            var = self.bind(self.expect("ident").text)
            self.expect(")")
            self.scope.append((var.display, var))
            try:
                cont = self.cont()
            finally:
                self.scope.pop()
            return Branch(In(chan, var), cont), None
        if self.accept("<"):
            msg = self.lookup(self.expect("ident").text)
            self.expect(">")
            return Branch(Out(chan, msg), self.cont()), None
        if self.accept("nin"):
            return Branch(In(chan, self.bind("_")), self.cont()), None
        if self.accept("nout"):
            dummy = self.bind("_")
            return Branch(Out(chan, dummy), self.cont()), dummy
        self.error("malformed prefix", tok)

    def cont(self) -> Term:
        if self.accept("."):
            return self.unit()
        return NIL

    def unit(self) -> Term:
        tok = self.tok
        if self.accept("zero"):
            return NIL
        if self.accept("new"):
            disp = self.expect("ident").text
            ty = self.type_expr() if self.accept(":") else None
            self.expect(".")
            n = self.bind(disp)
            self.scope.append((disp, n))
            try:
                body = self.par()
            finally:
                self.scope.pop()
            return Restrict(n, body, ty)
        if self.accept("!"):
            bang = self.tok
            if self.tok.kind == "(":
                self.i += 1
                body = self.par()
                self.expect(")")
            elif self.is_guard_start():
                body = self.guards()
            else:
                self.error("replication must guard a sum of prefixes")
            if isinstance(body, Restrict):
                self.error("nullary output cannot start a replicated sum", bang)
            if not isinstance(body, Choice):
                self.error("replication of a non-guarded process", bang)
            return Repl(body)
        if self.accept("("):
            t = self.par()
            self.expect(")")
            return t
        if self.is_guard_start():
            br, dummy = self.guard()
            out: Term = Choice((br,))
            return Restrict(dummy, out) if dummy is not None else out
        self.error("expected a process", tok)

    def type_expr(self) -> Type:
        base = self.expect("ident").text
        if self.accept("["):
            inner = self.type_expr()
            self.expect("]")
            return Type(base, inner)
        return Type(base)


def _join_sums(left: Term, right: Term) -> Term:
    """Merge two sums, keeping any hoisted restrictions outermost."""
    lnames, rnames = [], []
    while isinstance(left, Restrict):
        lnames.append((left.name, left.type))
        left = left.body
    while isinstance(right, Restrict):
        rnames.append((right.name, right.type))
        right = right.body
    out: Term = Choice(left.branches + right.branches)
    for n, ty in reversed(lnames + rnames):
        out = Restrict(n, out, ty)
    return out


def parse(src: str) -> Term:
    """Parse a process; free identifiers become shared free names."""
    return _Parser(src).parse_top()


def parse_with_info(src: str) -> tuple[Term, ParseInfo]:
    p = _Parser(src)
    t = p.parse_top()
    return t, p.info


def parse_type(src: str) -> Type:
    p = _Parser(src)
    ty = p.type_expr()
    if p.tok.kind != "eof":
        p.error("unexpected token after type")
    return ty


# ------------------------------------------------------------ printing

def display_names(t: Term) -> dict[Name, str]:
    """Assign distinct printable identifiers to every name in ``t``."""
    from .terms import bound_names
    used: set[str] = set()
    out: dict[Name, str] = {}

    def pick(n: Name) -> None:
        if n in out:
            return
        base = n.display if re.fullmatch(IDENT, n.display) and n.display not in KEYWORDS else "x"
        cand, k = base, 1
        while cand in used:
            cand = f"{base}{k}"
            k += 1
        used.add(cand)
        out[n] = cand

    for n in sorted(free_names(t), key=lambda n: n.display):
        pick(n)
    for n in bound_names(t):
        pick(n)
    return out


def pretty(t: Term, annotated: bool = True, names: Optional[dict[Name, str]] = None) -> str:
    """Render ``t`` so that parsing the result gives an alpha-equivalent term."""
    nm = names if names is not None else display_names(t)
    return _pp(t, 0, True, nm, annotated)


def _nm(n: Name, nm: dict[Name, str]) -> str:
    return nm.get(n, n.display)


def _pp(t: Term, level: int, tail: bool, nm: dict, ann: bool) -> str:
    # level 0: anything; 1: no bare "|"; 2: a unit (no bare "|" or "+")
    if isinstance(t, Nil):
        return "0"
    if isinstance(t, Par):
        parts = _flatten_par(t)
        s = " | ".join(_pp(p, 1, tail and i == len(parts) - 1, nm, ann) for i, p in enumerate(parts))
        return s if level == 0 else f"({s})"
    if isinstance(t, Restrict):
        sugar = _nullary_out(t, ann)
        if sugar is not None:
            chan, cont = sugar
            s = f"{_nm(chan, nm)}!()" + _pp_cont(cont, tail, nm, ann)
            return s
        ty = f":{t.type}" if (ann and t.type is not None) else ""
        s = f"new {_nm(t.name, nm)}{ty}. " + _pp(t.body, 0, True, nm, ann)
        return s if tail else f"({s})"
    if isinstance(t, Repl):
        body = t.body
        if len(body.branches) == 1:
            s = "!" + _pp_branch(body.branches[0], tail or level == 2, nm, ann)
        else:
            s = "!(" + _pp(body, 1, True, nm, ann) + ")"
        # a following "+" would otherwise be swallowed by the replicated sum
        return s if tail or level < 2 else f"({s})"
    bs = t.branches
    if len(bs) == 1:
        return _pp_branch(bs[0], tail, nm, ann)
    s = " + ".join(_pp_branch(b, tail and i == len(bs) - 1, nm, ann) for i, b in enumerate(bs))
    return s if level <= 1 else f"({s})"


def _pp_branch(b: Branch, tail: bool, nm: dict, ann: bool) -> str:
    p = b.prefix
    if isinstance(p, Tau):
        head = "tau"
    elif isinstance(p, Out):
        head = f"{_nm(p.chan, nm)}<{_nm(p.msg, nm)}>"
    elif p.var in free_names(b.cont):
        head = f"{_nm(p.chan, nm)}({_nm(p.var, nm)})"
    else:
        head = f"{_nm(p.chan, nm)}?()"
    return head + _pp_cont(b.cont, tail, nm, ann)


def _pp_cont(cont: Term, tail: bool, nm: dict, ann: bool) -> str:
    if isinstance(cont, Nil):
        return ""
    return "." + _pp(cont, 2, tail, nm, ann)


def _nullary_out(t: Restrict, ann: bool):
    if ann and t.type is not None:
        return None
    body = t.body
    if isinstance(body, Choice) and len(body.branches) == 1:
        b = body.branches[0]
        if isinstance(b.prefix, Out) and b.prefix.msg == t.name and b.prefix.chan != t.name \
                and t.name not in free_names(b.cont):
            return b.prefix.chan, b.cont
    return None


def _flatten_par(t: Term) -> list[Term]:
    if isinstance(t, Par):
        return _flatten_par(t.left) + _flatten_par(t.right)
    return [t]
