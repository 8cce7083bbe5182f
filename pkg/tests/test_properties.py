"""Randomized metatheory checks: weakening, congruence and substitution."""
import random

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from pihier import canonical, nf, parse, pretty, typecheck
from pihier.generators import random_plain_term, random_type, scramble
from pihier.normal_form import prune
from pihier.reduction import embeds
from pihier.tcompat import is_tcompat, is_tshaped
from pihier.terms import free_name, free_names, fresh, substitute

from properties import any_sample, typed_sample

TRIALS = settings(max_examples=500, deadline=None, derandomize=True,
                  suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(min_value=0, max_value=2**31)


@TRIALS
@given(seeds)
def test_weakening(seed):
    # adding a binding for a name that does not occur changes nothing, both ways
    h, env, t = any_sample(seed)
    rng = random.Random(seed + 1)
    z = fresh("z")
    wider = {**env, z: random_type(rng, sorted(h.nodes) or ["w"])}
    assert typecheck(h, env, t).ok == typecheck(h, wider, t).ok


@TRIALS
@given(seeds)
def test_typability_is_invariant_under_congruence(seed):
    h, env, t = any_sample(seed)
    s = scramble(t, random.Random(seed))
    assert canonical(nf(s)) == canonical(nf(t))
    assert typecheck(h, env, t).ok == typecheck(h, env, s).ok
    assert is_tcompat(h, t) == is_tcompat(h, s)
    assert is_tshaped(h, t) == is_tshaped(h, s)


@TRIALS
@given(seeds)
def test_substitution_preserves_typing(seed):
    h, env, t = typed_sample(seed)
    rng = random.Random(seed)
    fns = sorted(free_names(t), key=lambda n: n.display)
    if not fns:
        # closed terms: substitution is the identity
        assert typecheck(h, env, substitute(t, {})).ok
        return
    x = rng.choice(fns)
    same = [a for a in fns if a != x and env[a] == env[x]]
    a = rng.choice(same) if same and rng.random() < 0.5 else free_name(f"a{seed}")
    gamma = {**env, a: env[x]}
    assert typecheck(h, gamma, t).ok
    assert typecheck(h, gamma, substitute(t, {x: a})).ok


@settings(max_examples=200, deadline=None, derandomize=True)
@given(seeds)
def test_pretty_round_trip(seed):
    t = random_plain_term(random.Random(seed))
    assert canonical(nf(parse(pretty(t)))) == canonical(nf(t))


@settings(max_examples=200, deadline=None, derandomize=True)
@given(seeds)
def test_term_embeds_into_its_scrambles(seed):
    rng = random.Random(seed)
    t = random_plain_term(rng)
    s = scramble(t, rng)
    assert embeds(prune(nf(t)), prune(nf(s))) is not None
