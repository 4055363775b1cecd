"""Random homogeneous normal forms for the property-based suites.

Monomial pools are enumerated per weight (standard words of derived
generators), and a random form is a small integer combination of pool
elements of a single weight.
"""

from opealg import NormalForm
from opealg.expr import factor_key, mono_weight


def factors_up_to(alg, max_weight):
    out = []
    for g in range(len(alg.generators)):
        w = alg.gen_weight_by_index(g)
        for j in range(0, max_weight - w + 1):
            out.append((g, j))
    return out


def monomials_of_weight(alg, weight, _cache={}):
    """All standard monomials of the given weight, identity excluded."""
    key = (id(alg), weight)
    hit = _cache.get(key)
    if hit is not None:
        return hit
    factors = factors_up_to(alg, weight)

    def rec(min_key, rem):
        if rem == 0:
            yield ()
            return
        for f in factors:
            fw = alg.gen_weight_by_index(f[0]) + f[1]
            if fw > rem or factor_key(f) < min_key:
                continue
            for rest in rec(factor_key(f), rem - fw):
                yield (f,) + rest

    pool = [m for m in rec((-1, 0), weight) if m]
    assert all(mono_weight(alg, m) == weight for m in pool)
    _cache[key] = pool
    return pool


def random_homogeneous_nf(alg, rng, weight, max_terms=2):
    pool = monomials_of_weight(alg, weight)
    if not pool:
        raise ValueError(f"no monomials of weight {weight}")
    n = rng.randint(1, min(max_terms, len(pool)))
    monos = rng.sample(pool, n)
    terms = {}
    for m in monos:
        coeff = 0
        while coeff == 0:
            coeff = rng.randint(-3, 3)
        terms[m] = alg.ring.const(coeff)
    return NormalForm(alg, terms)


def random_weight(rng, choices, weights):
    return rng.choices(choices, weights=weights, k=1)[0]
