"""Type checking of annotated terms against a hierarchy.

Judgements are checked over normal forms. Violations are collected rather
than raised, so one run reports every failed side condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .hierarchy import Hierarchy, HierarchyError
from .normal_form import NF, Seq, migratable, nf, pretty_nf, tied_relation
from .terms import In, MissingAnnotation, Name, Out, Term, Type

SPAN_WIDTH = 70


@dataclass
class TypingViolation:
    rule: str
    location: str
    constraint: str
    span: str = ""

    def __str__(self) -> str:
        return f"[{self.rule}] at {self.location}: {self.constraint}"

    def to_json(self) -> dict:
        return {"rule": self.rule, "location": self.location, "span": self.span,
                "constraint": self.constraint}


@dataclass
class TypingReport:
    violations: list[TypingViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}

    def to_text(self) -> str:
        if self.ok:
            return "well typed"
        return "\n".join(str(v) + (f"\n    in: {v.span}" if v.span else "") for v in self.violations)


def _span(x: Union[NF, Seq]) -> str:
    s = pretty_nf(x)
    return s if len(s) <= SPAN_WIDTH else s[: SPAN_WIDTH - 3] + "..."


class _Checker:
    def __init__(self, h: Hierarchy):
        self.h = h
        self.report = TypingReport()

    def add(self, rule: str, loc: str, constraint: str, where: Union[NF, Seq]) -> None:
        self.report.violations.append(TypingViolation(rule, loc, constraint, _span(where)))

    def lt(self, a: str, b: str) -> bool:
        try:
            return self.h.lt(a, b)
        except HierarchyError:
            return False

    def known(self, ty: Type, what: str, loc: str, where) -> None:
        for b in ty.bases():
            if b not in self.h:
                self.add("Base", loc, f"base type {b} of {what} is not in the hierarchy", where)

    def nf(self, x: NF, gamma: dict[Name, Type], loc: str) -> None:
        inner = dict(gamma)
        for n, ty in x.binders:
            if ty is None:
                raise MissingAnnotation(f"restriction {n.display} has no type annotation")
            self.known(ty, n.display, loc, x)
            inner[n] = ty
        tied = tied_relation(x)
        for i, a in enumerate(x.actives):
            here = f"{loc}/{i}"
            self.seq(a, inner, here)
            outer = sorted((y for y in a.fn if y in gamma), key=lambda y: y.display)
            for n, ty in x.binders:
                if not tied.name_tied(n, i):
                    continue
                for y in outer:
                    if not self.lt(gamma[y].base, ty.base):
                        self.add("Par", here,
                                 f"base({y.display}) = {gamma[y].base} must be below "
                                 f"base({n.display}) = {ty.base}, since {n.display} is tied "
                                 f"to this component", a)

    def seq(self, a: Seq, gamma: dict[Name, Type], loc: str) -> None:
        for bi, (p, cont) in enumerate(a.branches):
            here = f"{loc}.{bi}" if len(a.branches) > 1 else loc
            if isinstance(p, Out):
                ta, tb = gamma.get(p.chan), gamma.get(p.msg)
                if ta is None or tb is None:
                    missing = p.chan if ta is None else p.msg
                    self.add("Out", here, f"{missing.display} has no type", a)
                elif ta.payload is None:
                    self.add("Out", here, f"{p.chan.display} : {ta} is not a channel", a)
                elif ta.payload != tb:
                    self.add("Out", here, f"{p.chan.display} : {ta} carries {ta.payload}, "
                             f"but {p.msg.display} : {tb}", a)
                self.nf(cont, gamma, here + f"/{p.chan.display}<{p.msg.display}>")
            elif isinstance(p, In):
                ta = gamma.get(p.chan)
                if ta is None:
                    self.add("In", here, f"{p.chan.display} has no type", a)
                    continue
                if ta.payload is None:
                    self.add("In", here, f"{p.chan.display} : {ta} is not a channel", a)
                    continue
                tx = ta.payload
                self.nf(cont, {**gamma, p.var: tx}, here + f"/{p.chan.display}({p.var.display})")
                if self.lt(tx.base, ta.base):
                    continue
                bad = []
                for i in sorted(migratable(p.var, cont)):
                    for y in cont.actives[i].fn - {p.chan}:
                        if y in gamma and not self.lt(gamma[y].base, ta.base):
                            bad.append(f"base({y.display}) = {gamma[y].base}")
                if bad:
                    self.add("In", here,
                             f"base({p.var.display}) = {tx.base} is not below {ta.base}, and the "
                             f"migrating continuation uses {', '.join(sorted(set(bad)))} "
                             f"not below {ta.base}", a)
            else:
                self.nf(cont, gamma, here + "/tau")


def typecheck(h: Hierarchy, env: Mapping[Name, Type], x: Union[NF, Term]) -> TypingReport:
    """Check ``env |- x`` and report every violated side condition."""
    if not isinstance(x, NF):
        x = nf(x)
    c = _Checker(h)
    for n in sorted(x.fn, key=lambda n: n.display):
        if n not in env:
            c.add("Env", "top", f"free name {n.display} has no type", x)
        else:
            c.known(env[n], n.display, "top", x)
    c.nf(x, dict(env), "top")
    return c.report


def typecheck_term(h: Hierarchy, env: Mapping[Name, Type], t: Term) -> TypingReport:
    return typecheck(h, env, nf(t))


def well_typed(h: Hierarchy, env: Mapping[Name, Type], x: Union[NF, Term]) -> bool:
    return typecheck(h, env, x).ok
