"""A ring of growing length has no hierarchy, and its depth keeps growing.

Run with ``python demos/02_ring_needs_unbounded_depth.py``.
"""
from pihier import corpus_entry, explore, infer, pretty
from pihier.forest import depth_exact

term = corpus_entry("ring").term()
print("term:\n ", pretty(term))

res = infer(term)
print("\nstatus:", res.status)
print("unsatisfiable core:")
for c in res.core:
    print("  ", c["text"])

for bound in (4, 12, 20, 40):
    g = explore(term, max_states=2000, max_depth=bound)
    print(f"depth bound {bound:2d}: {len(g):4d} states, "
          f"max nesting depth {max(depth_exact(s) for s in g.states)}")
