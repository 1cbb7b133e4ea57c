"""
Spatial built-ins: distance, close and orientation difference over coord/orientation facts
"""

import math

from bdd import FALSE, TRUE, conj, disj


def distance(a, b):
    """Euclidean distance between two (x, y) pixel positions"""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def orientation_diff(o1, o2):
    # plain |o1 - o2|, no wrap-around at 360
    return abs(o1 - o2)


def coord_facts(narrative, entity, t):
    return [f for f in narrative.fluents(t, "coord") if f.atom.args == (entity,)]


def close_prob(a, b, threshold, t, narrative):
    """Probability that close(a, b, threshold)=true at t

    Sum over coord-fact pairs closer than the threshold of P(ca)·P(cb);
    0 when either entity has no coord fact at t.
    """
    total = 0.0
    for ca in coord_facts(narrative, a, t):
        for cb in coord_facts(narrative, b, t):
            if distance(ca.atom.value, cb.atom.value) < threshold:
                total += ca.prob * cb.prob
    return total


def close_formula(coords_a, coords_b, threshold, holds, literal):
    """Formula for close=holds between two entities' coord facts

    close=false needs both positions present and at least `threshold` apart.
    `literal` maps a fact to its formula.
    """
    if not coords_a or not coords_b:
        return FALSE
    proofs = []
    for ca in coords_a:
        for cb in coords_b:
            if (distance(ca.atom.value, cb.atom.value) < threshold) == holds:
                proof = conj(literal(ca), literal(cb))
                if proof is TRUE:
                    return TRUE
                proofs.append(proof)
    return disj(*proofs)
