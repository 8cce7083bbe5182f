"""Coverability queries on a typed system, then counter machine encodings.

Run with ``python demos/03_coverability_and_encodings.py``.
"""
from pihier import MinskyMachine, corpus_entry, cover, encode_minsky, encode_reset_net, explore
from pihier.encodings import ResetNet, deadlocked_counters

system = corpus_entry("client_server").term()
for q in ("query_one_message", "query_two_messages", "query_shared_secret"):
    res = cover(system, corpus_entry(q).term(), max_states=500)
    print(f"{q:22s} -> {res.verdict} after {res.explored} states")

# A reset net: the encoding is typed by a fixed chain of base types.
# Transition 0 moves a token from place 0 to place 1; transition 1 also resets place 0.
net = ResetNet(places=2, transitions=[((-1, 1), ()), ((1, 0), (0,))], initial=(1, 0))
enc = encode_reset_net(net)
print("\nreset net hierarchy:", " < ".join(enc.hierarchy.chain_order()))

# A Minsky machine: decrementing an empty counter deadlocks that counter.
mm = MinskyMachine(1, [("inc", 1, 2), ("dec", 1, 3, 3), ("dec", 1, 4, 4)])
g = explore(encode_minsky(mm), max_depth=12)
stuck = [i for i, s in enumerate(g.states) if deadlocked_counters(s)]
print(f"\nMinsky machine: {len(g)} states, deadlocked counter first seen in state {stuck[0] if stuck else None}")
