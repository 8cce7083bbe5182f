"""Shared samplers for the property suites."""
import random

from pihier import infer
from pihier.generators import random_annotated_term, random_env, random_hierarchy, random_plain_term
from pihier.terms import free_names


def typed_sample(seed: int, tries: int = 200):
    """A well-typed (hierarchy, env, term) triple obtained through inference."""
    rng = random.Random(seed)
    for _ in range(tries):
        t = random_plain_term(rng, max_restrictions=4, max_actives=4)
        r = infer(t)
        if r.ok:
            return r.hierarchy, dict(r.env), r.annotated
    raise RuntimeError("no typable sample found")


def any_sample(seed: int):
    """A typed sample or a random annotation, with even odds."""
    rng = random.Random(seed)
    if rng.random() < 0.5:
        return typed_sample(seed)
    h = random_hierarchy(rng, n=4)
    t = random_annotated_term(rng, h, max_restrictions=4, max_actives=4)
    return h, random_env(rng, h, free_names(t)), t
