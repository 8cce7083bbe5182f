"""Hierarchies of base types: finite forests ordered by strict ancestry."""
from __future__ import annotations

import json
import re
from typing import Iterable, Mapping, Optional

from .terms import Name, Term, Type, free_names, restriction_types


class HierarchyError(ValueError):
    pass


class Hierarchy:
    """A forest over base-type labels; ``lt(a, b)`` iff ``a`` is a proper ancestor of ``b``."""

    def __init__(self, parent: Mapping[str, Optional[str]]):
        self.parent: dict[str, Optional[str]] = dict(parent)
        for n, p in self.parent.items():
            if p is not None and p not in self.parent:
                raise HierarchyError(f"unknown parent {p!r} of {n!r}")
        self._anc: dict[str, frozenset[str]] = {}
        for n in self.parent:
            seen, cur = [], self.parent[n]
            while cur is not None:
                if cur == n or cur in seen:
                    raise HierarchyError(f"cycle through {n!r}")
                seen.append(cur)
                cur = self.parent[cur]
            self._anc[n] = frozenset(seen)

    # -- construction
    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> "Hierarchy":
        parent: dict[str, Optional[str]] = {n: None for n in nodes}
        for p, c in edges:
            parent.setdefault(p, None)
            if parent.get(c) not in (None, p):
                raise HierarchyError(f"{c!r} has two parents: {parent[c]!r} and {p!r}")
            parent[c] = p
        return cls(parent)

    @classmethod
    def chain(cls, labels: Iterable[str]) -> "Hierarchy":
        labels = list(labels)
        if len(set(labels)) != len(labels):
            raise HierarchyError("repeated label in chain")
        return cls({b: (labels[i - 1] if i else None) for i, b in enumerate(labels)})

    @classmethod
    def discrete(cls, labels: Iterable[str]) -> "Hierarchy":
        return cls({b: None for b in labels})

    @classmethod
    def parse(cls, text: str) -> "Hierarchy":
        """Read ``parent < child`` lines (chains ``a < b < c`` allowed) and lone nodes."""
        nodes: list[str] = []
        edges: list[tuple[str, str]] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = re.split(r"//|#", raw, maxsplit=1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split("<")]
            if not all(re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", p) for p in parts):
                raise HierarchyError(f"line {lineno}: cannot read {raw.strip()!r}")
            nodes.extend(parts)
            edges.extend(zip(parts, parts[1:]))
        return cls.from_edges(nodes, edges)

    @classmethod
    def from_json(cls, data) -> "Hierarchy":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.from_edges(data.get("nodes", []), [tuple(e) for e in data.get("edges", [])])

    @classmethod
    def load(cls, path: str) -> "Hierarchy":
        with open(path) as fh:
            text = fh.read()
        if path.endswith(".json") or text.lstrip().startswith("{"):
            return cls.from_json(text)
        return cls.parse(text)

    # -- queries
    @property
    def nodes(self) -> list[str]:
        return list(self.parent)

    def __contains__(self, b: str) -> bool:
        return b in self.parent

    def children(self, b: Optional[str]) -> list[str]:
        return [n for n, p in self.parent.items() if p == b]

    def roots(self) -> list[str]:
        return self.children(None)

    def _check(self, b: str) -> None:
        if b not in self.parent:
            raise HierarchyError(f"base type {b!r} is not in the hierarchy")

    def lt(self, a: str, b: str) -> bool:
        self._check(a)
        self._check(b)
        return a in self._anc[b]

    def leq(self, a: str, b: str) -> bool:
        return a == b or self.lt(a, b)

    def lt_set(self, bases: Iterable[str], b: str) -> bool:
        """True iff every element of ``bases`` is strictly below ``b`` (vacuous when empty)."""
        return all(self.lt(a, b) for a in bases)

    def is_chain(self) -> bool:
        return len(self.roots()) <= 1 and all(len(self.children(n)) <= 1 for n in self.parent)

    def chain_order(self) -> list[str]:
        if not self.is_chain():
            raise HierarchyError("hierarchy is not a chain")
        out, cur = [], self.roots()
        while cur:
            out.append(cur[0])
            cur = self.children(cur[0])
        return out

    def edges(self) -> list[tuple[str, str]]:
        return [(p, c) for c, p in self.parent.items() if p is not None]

    def to_text(self) -> str:
        lines = [f"{p} < {c}" for p, c in self.edges()]
        lines += [n for n, p in self.parent.items() if p is None and not self.children(n)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"nodes": self.nodes, "edges": [list(e) for e in self.edges()]}

    def __eq__(self, other) -> bool:
        return isinstance(other, Hierarchy) and self.parent == other.parent

    def __repr__(self) -> str:
        return f"Hierarchy({self.to_text().strip()!r})"


def min_T(h: Hierarchy, entries: Iterable[tuple[Name, Type]]) -> list[tuple[Name, Type]]:
    """Entries whose base type has nothing strictly below it within ``entries``."""
    entries = list(entries)
    bases = {ty.base for _, ty in entries}
    return [(x, ty) for x, ty in entries if not any(h.lt(b, ty.base) for b in bases)]


def p_safety_violations(h: Hierarchy, env: Mapping[Name, Type], t: Term) -> list[str]:
    """Reasons why ``env`` is not safe for ``t``; empty when it is.

    Every free name must be typed, and its base type must be strictly below
    the base of every restriction annotation in the term.
    """
    out = []
    anns = restriction_types(t)
    for x in sorted(free_names(t), key=lambda n: n.display):
        if x not in env:
            out.append(f"free name {x.display} has no type")
            continue
        for y, ty in anns.items():
            if ty is None:
                out.append(f"restriction {y.display} is not annotated")
            elif not h.lt(env[x].base, ty.base):
                out.append(f"base({x.display}) = {env[x].base} is not below "
                           f"base({y.display}) = {ty.base}")
    return out


def p_safe(h: Hierarchy, env: Mapping[Name, Type], t: Term) -> bool:
    return not p_safety_violations(h, env, t)


def parse_env(text: str) -> dict[Name, Type]:
    """Read ``name : TYPE`` pairs separated by commas, semicolons or newlines."""
    from .syntax import parse_type
    from .terms import free_name
    env: dict[Name, Type] = {}
    for item in re.split(r"[,;\n]", text):
        item = re.split(r"//|#", item, maxsplit=1)[0].strip()
        if not item:
            continue
        if ":" not in item:
            raise ValueError(f"expected 'name : type', got {item!r}")
        n, ty = item.split(":", 1)
        env[free_name(n.strip())] = parse_type(ty.strip())
    return env


def env_to_json(env: Mapping[Name, Type]) -> dict[str, str]:
    return {n.display: str(ty) for n, ty in env.items()}
