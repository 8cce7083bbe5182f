"""Encodings of reset nets and Minsky machines, and the bundled example corpus."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence, Union

from .hierarchy import Hierarchy
from .normal_form import NF
from .syntax import parse
from .terms import In, Name, Out, Term, Type, free_name

UNIT = "unit"


# ------------------------------------------------------------ reset nets

@dataclass
class ResetNet:
    """Places ``0..places-1``; each transition adds ``update[i]`` tokens and then empties ``reset``."""

    places: int
    transitions: list[tuple[tuple[int, ...], tuple[int, ...]]]
    initial: tuple[int, ...]

    def __post_init__(self):
        self.transitions = [(tuple(u), tuple(r)) for u, r in self.transitions]
        self.initial = tuple(self.initial)
        if len(self.initial) != self.places:
            raise ValueError("initial marking has the wrong length")
        for u, r in self.transitions:
            if len(u) != self.places or any(not 0 <= i < self.places for i in r):
                raise ValueError("malformed transition")

    @classmethod
    def from_json(cls, data: Union[str, dict]) -> "ResetNet":
        if isinstance(data, str):
            data = json.loads(data)
        ts = [(t["update"], t.get("reset", [])) for t in data["transitions"]]
        return cls(int(data["places"]), ts, data.get("initial", [0] * int(data["places"])))

    def to_json(self) -> dict:
        return {"places": self.places,
                "transitions": [{"update": list(u), "reset": list(r)} for u, r in self.transitions],
                "initial": list(self.initial)}

    def fire(self, marking: Sequence[int], k: int) -> Optional[tuple[int, ...]]:
        u, r = self.transitions[k]
        m = [a + b for a, b in zip(marking, u)]
        if any(v < 0 for v in m):
            return None
        for i in r:
            m[i] = 0
        return tuple(m)


@dataclass
class EncodedNet:
    term: Term
    hierarchy: Hierarchy
    env: dict[Name, Type]
    source: str


def _n(kind: str, i: int) -> str:
    return f"{kind}_{i + 1}"


def _signal(chan: str, k: list[int], cont: Optional[str] = None) -> str:
    """``chan!().cont`` with the dummy restriction typed as ``unit``."""
    k[0] += 1
    head = f"new u{k[0]}:{UNIT}. {chan}<u{k[0]}>"
    return head if cont is None else f"{head}.{cont}"


def counter_source(i: int, k: list[int], annotated: bool = True) -> str:
    inc, dec, rst, p, tr = _n("inc", i), _n("dec", i), _n("rst", i), _n("p", i), f"t'_{i + 1}"
    token = _signal("t", k) if annotated else "t!()"
    fresh = f"new r{i + 1}:{tr}[{UNIT}]. {p}<r{i + 1}>" if annotated else f"new r{i + 1}. {p}<r{i + 1}>"
    return (f"!{p}(t).( {inc}?().(({token}) | {p}<t>)\n"
            f"       + {dec}?().t?().{p}<t>\n"
            f"       + {rst}?().({fresh}))")


def transition_source(u: Sequence[int], reset: Sequence[int], k: list[int]) -> str:
    steps = []
    for j, v in enumerate(u):
        steps += [_n("dec", j)] * max(0, -v)
    for j, v in enumerate(u):
        steps += [_n("inc", j)] * max(0, v)
    steps += [_n("rst", j) for j in reset]
    steps.append("valid")
    body: Optional[str] = None
    for chan in reversed(steps):
        body = _signal(chan, k, body)
    return f"!valid?().{body}"


def reset_net_chain(places: int) -> list[str]:
    chain = ["valid"]
    for i in range(places):
        chain += [_n("inc", i), _n("dec", i), _n("rst", i), _n("t", i), _n("p", i)]
    chain += [f"t'_{i + 1}" for i in range(places)]
    return chain + [UNIT]


def encode_reset_net(net: ResetNet, marking: Optional[Sequence[int]] = None) -> EncodedNet:
    """Encode a reset net with the given marking (default: the initial one).

    Each place owns a private token channel ``t_i``; its tokens are pending
    nullary signals on it. A transition is a replicated process that grabs
    the global ``valid`` lock, performs its decrements, increments and
    resets one at a time, and releases the lock.
    """
    m = tuple(net.initial if marking is None else marking)
    k = [0]
    parts = [f"({_signal('valid', k)})"]
    for i in range(net.places):
        tokens = [f"({_signal(f't{i + 1}', k)})" for _ in range(m[i])]
        inner = " | ".join([f"{_n('p', i)}<t{i + 1}>"] + tokens)
        parts.append(f"(new t{i + 1}:t'_{i + 1}[{UNIT}]. ({inner}))")
    for i in range(net.places):
        parts.append(f"({counter_source(i, k)})")
    for u, r in net.transitions:
        parts.append(f"({transition_source(u, r, k)})")
    src = "\n| ".join(parts)
    env: dict[Name, Type] = {free_name("valid"): Type("valid", Type(UNIT))}
    for i in range(net.places):
        for kind in ("inc", "dec", "rst"):
            env[free_name(_n(kind, i))] = Type(_n(kind, i), Type(UNIT))
        env[free_name(_n("p", i))] = Type(_n("p", i), Type(f"t'_{i + 1}", Type(UNIT)))
    return EncodedNet(parse(src), Hierarchy.chain(reset_net_chain(net.places)), env, src)


# -------------------------------------------------------- Minsky machines

@dataclass
class MinskyMachine:
    """Counters and labels are numbered from 1. ``("inc", i, j)`` or ``("dec", i, j, z)``."""

    counters: int
    instructions: list[tuple]
    entry: int = 1

    def __post_init__(self):
        # label len+1 is the halting label
        self.instructions = [tuple(i) for i in self.instructions]
        top = len(self.instructions) + 1
        if not 1 <= self.entry <= top:
            raise ValueError("entry label out of range")
        for ins in self.instructions:
            if ins[0] == "inc" and len(ins) == 3:
                targets = ins[2:]
            elif ins[0] == "dec" and len(ins) == 4:
                targets = ins[2:]
            else:
                raise ValueError(f"malformed instruction {ins!r}")
            if not 1 <= ins[1] <= self.counters:
                raise ValueError(f"counter index out of range in {ins!r}")
            if any(not 1 <= j <= top for j in targets):
                raise ValueError(f"jump target out of range in {ins!r}")

    @classmethod
    def from_json(cls, data: Union[str, dict]) -> "MinskyMachine":
        if isinstance(data, str):
            data = json.loads(data)
        ins = []
        for it in data["instructions"]:
            if isinstance(it, dict):
                if it["op"] == "inc":
                    ins.append(("inc", it["counter"], it["next"]))
                else:
                    ins.append(("dec", it["counter"], it["next"], it["zero"]))
            else:
                ins.append(tuple(it))
        return cls(int(data["counters"]), ins, int(data.get("entry", 1)))

    def to_json(self) -> dict:
        return {"counters": self.counters, "instructions": [list(i) for i in self.instructions],
                "entry": self.entry}

    def run(self, steps: int, registers: Optional[Sequence[int]] = None) -> list[tuple[int, tuple[int, ...]]]:
        """Deterministic run: a list of (label, registers) configurations."""
        label, regs = self.entry, list(registers or [0] * self.counters)
        out = [(label, tuple(regs))]
        for _ in range(steps):
            if not 1 <= label <= len(self.instructions):
                break
            ins = self.instructions[label - 1]
            i = ins[1] - 1
            if ins[0] == "inc":
                regs[i] += 1
                label = ins[2]
            elif regs[i] > 0:
                regs[i] -= 1
                label = ins[2]
            else:
                label = ins[3]
            out.append((label, tuple(regs)))
        return out


def _minsky_program(mm: MinskyMachine) -> list[str]:
    out = []
    for m, ins in enumerate(mm.instructions, 1):
        i = ins[1] - 1
        if ins[0] == "inc":
            out.append(f"!l{m}?().{_n('inc', i)}!().l{ins[2]}!()")
        else:
            out.append(f"!l{m}?().({_n('dec', i)}!().l{ins[2]}!() + {_n('rst', i)}!().l{ins[3]}!())")
    return out


def minsky_config_source(mm: MinskyMachine, label: int, registers: Sequence[int]) -> str:
    parts = []
    for i in range(mm.counters):
        toks = [f"{_n('p', i)}<t{i + 1}>"] + [f"t{i + 1}!()"] * registers[i]
        parts.append(f"(new t{i + 1}. ({' | '.join(toks)}))")
    parts.append(f"l{label}!()")
    parts += [f"({counter_source(i, [0], annotated=False)})" for i in range(mm.counters)]
    parts += [f"({p})" for p in _minsky_program(mm)]
    return "\n| ".join(parts)


def encode_minsky(mm: MinskyMachine, label: Optional[int] = None,
                  registers: Optional[Sequence[int]] = None) -> Term:
    """Encode a configuration (default: entry label, all counters zero).

    The counters run as reset-net places: a decrement on an empty counter
    blocks that counter forever instead of jumping.
    """
    label = mm.entry if label is None else label
    regs = tuple(registers) if registers is not None else (0,) * mm.counters
    return parse(minsky_config_source(mm, label, regs))


def deadlocked_counters(x: NF) -> list[Name]:
    """Token channels on which a counter waits for a token that nobody can send."""
    senders = set()
    for a in x.actives:
        for p, _ in a.branches:
            if isinstance(p, Out):
                senders.add(p.chan)
    out = []
    bound = set(x.names)
    for a in x.actives:
        if a.replicated or len(a.branches) != 1:
            continue
        p, cont = a.branches[0]
        if isinstance(p, In) and p.chan in bound and p.chan not in senders:
            if any(isinstance(q, Out) and q.msg == p.chan for b in cont.actives for q, _ in b.branches):
                out.append(p.chan)
    return out


# ---------------------------------------------------------------- corpus

@dataclass
class CorpusEntry:
    name: str
    file: str
    kind: str = "term"  # "term" or "query"
    typable: Optional[bool] = None
    hierarchical: Optional[bool] = None
    depth_bounded: Optional[bool] = None
    note: str = ""
    query_for: Optional[str] = None
    coverable: Optional[bool] = None

    @property
    def source(self) -> str:
        return resources.files("pihier").joinpath("data", self.file).read_text()

    def term(self) -> Term:
        return parse(self.source)


CORPUS = [
    CorpusEntry("client_server", "client_server.pi", typable=True, hierarchical=True,
                depth_bounded=True, note="server, clients and a mailbox generator"),
    CorpusEntry("counter", "counter.pi", typable=True, hierarchical=True, depth_bounded=True,
                note="a resettable counter with two tokens"),
    CorpusEntry("ring", "ring.pi", typable=False, hierarchical=False, depth_bounded=False,
                note="a ring of slaves that keeps growing"),
    CorpusEntry("fig_forest", "fig_forest.pi", typable=True, hierarchical=True, depth_bounded=True,
                note="three receivers and a message"),
    CorpusEntry("depth_nested", "depth_nested.pi", typable=True, hierarchical=True, depth_bounded=True,
                note="nesting 3, depth 2"),
    CorpusEntry("depth_flat", "depth_flat.pi", typable=True, hierarchical=True, depth_bounded=True,
                note="nesting 2, depth 2"),
    CorpusEntry("recursive_types", "recursive_types.pi", typable=False, hierarchical=False,
                depth_bounded=True,
                note="depth-bounded but not hierarchical; needs a recursive channel type"),
    CorpusEntry("forwarder", "forwarder.pi", typable=True, hierarchical=True, depth_bounded=True,
                note="replicated forwarder creating fresh names"),
    CorpusEntry("migration", "migration.pi", typable=False,
                note="tied continuation components; untypable since e and x share a base"),
    CorpusEntry("query_one_message", "query_one_message.pi", kind="query",
                query_for="client_server", coverable=True),
    CorpusEntry("query_two_messages", "query_two_messages.pi", kind="query",
                query_for="client_server", coverable=False),
    CorpusEntry("query_shared_secret", "query_shared_secret.pi", kind="query",
                query_for="client_server", coverable=False),
]


def corpus(kind: Optional[str] = "term") -> list[CorpusEntry]:
    return [e for e in CORPUS if kind is None or e.kind == kind]


def corpus_entry(name: str) -> CorpusEntry:
    for e in CORPUS:
        if e.name == name:
            return e
    raise KeyError(name)


def data_text(file: str) -> str:
    return resources.files("pihier").joinpath("data", file).read_text()
