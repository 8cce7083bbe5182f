"""Infer a hierarchy for a small client/server system and check it.

Run with ``python demos/01_client_server.py``.
"""
from pihier import corpus_entry, explore, infer, pretty, typecheck
from pihier.forest import depth_exact

term = corpus_entry("client_server").term()
print("term:\n ", pretty(term))

res = infer(term)
print("\nstatus:", res.status)
print("hierarchy:", " < ".join(res.hierarchy.chain_order()))
for name in ("s", "c", "m", "d"):
    print(f"  {name} : {res.type_of(name)}")

print("\nannotated:\n ", pretty(res.annotated))
print("type check:", typecheck(res.hierarchy, res.env, res.annotated).ok)

# The typing bounds the nesting of restrictions along every run.
g = explore(res.annotated, max_states=200, max_depth=8)
print(f"\nexplored {len(g)} states; max depth {max(depth_exact(s) for s in g.states)}")
