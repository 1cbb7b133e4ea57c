"""
Rule-body grounding at one frame
Turns initiatedAt/terminatedAt rules into formulas over the frame's facts
"""

import operator
from collections import defaultdict

from bdd import FALSE, TRUE, Const, Var, conj, disj, neg
from errors import ProbECError
from event_model import FluentAtom
from rule_dsl import AbsDiff, Compare, Constant, HappensAt, HoldsAt, NegFact, NegGoal, Pair, Variable
from spatial import close_formula, distance, orientation_diff

_UNBOUND = object()


def same_value(a, b):
    # True == 1 in Python; booleans only match booleans
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    return a == b


def unify(pattern, value, subst):
    """Extend subst so that pattern matches value, or None"""
    if isinstance(pattern, Variable):
        bound = subst.get(pattern.name, _UNBOUND)
        if bound is _UNBOUND:
            extended = dict(subst)
            extended[pattern.name] = value
            return extended
        return subst if same_value(bound, value) else None
    if isinstance(pattern, Constant):
        return subst if same_value(pattern.value, value) else None
    if isinstance(pattern, Pair):
        if not isinstance(value, tuple) or len(value) != 2:
            return None
        subst = unify(pattern.x, value[0], subst)
        return None if subst is None else unify(pattern.y, value[1], subst)
    raise TypeError(f"cannot unify {pattern!r}")


def unify_args(patterns, values, subst):
    if len(patterns) != len(values):
        return None
    for pattern, value in zip(patterns, values):
        subst = unify(pattern, value, subst)
        if subst is None:
            return None
    return subst


def ground(pattern, subst):
    if isinstance(pattern, Variable):
        return subst[pattern.name]
    if isinstance(pattern, Constant):
        return pattern.value
    if isinstance(pattern, Pair):
        return (ground(pattern.x, subst), ground(pattern.y, subst))
    if isinstance(pattern, AbsDiff):
        return orientation_diff(ground(pattern.left, subst), ground(pattern.right, subst))
    raise TypeError(f"cannot ground {pattern!r}")


def is_bound(pattern, subst):
    return not isinstance(pattern, Variable) or pattern.name in subst


_COMPARE = {
    "<": operator.lt,
    "=<": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "=": same_value,
    "\\=": lambda a, b: not same_value(a, b),
}


class FrameGrounder:
    """Grounds rules against a narrative

    Derived fluents in rule bodies are looked up through `resolver`, which
    provides `candidates(functor, t)` and `formula(atom, t)`.
    """

    def __init__(self, rules, narrative, resolver):
        self.rules = rules
        self.narrative = narrative
        self.resolver = resolver
        self._vars = {}
        self._coords = {}

    def fact_formula(self, fact):
        if fact.prob >= 1.0:
            return TRUE
        if fact.prob <= 0.0:
            return FALSE
        var = self._vars.get(fact.body)
        if var is None:
            var = Var(self.narrative.index(fact), fact.prob, fact.body_text())
            self._vars[fact.body] = var
        return var

    def coords(self, t):
        table = self._coords.get(t)
        if table is None:
            table = defaultdict(list)
            for fact in self.narrative.fluents(t, "coord"):
                if len(fact.atom.args) == 1:
                    table[fact.atom.args[0]].append(fact)
            self._coords[t] = table
        return table

    # ---- body solving -----------------------------------------------------

    def solve(self, literals, t, subst, formula=TRUE):
        """Yield (substitution, formula) for every way the literals hold at t"""
        if not literals:
            yield subst, formula
            return
        first, rest = literals[0], literals[1:]
        for extended, part in self._literal(first, t, subst):
            combined = conj(formula, part)
            if combined is FALSE:
                continue
            yield from self.solve(rest, t, extended, combined)

    def _literal(self, lit, t, subst):
        if isinstance(lit, HappensAt):
            return self._happens(lit, t, subst)
        if isinstance(lit, HoldsAt):
            functor = lit.term.functor
            if functor == "close":
                return self._close(lit, t, subst)
            if functor == "distance":
                return self._distance(lit, t, subst)
            if functor in self.rules.derived:
                return self._derived(lit, t, subst)
            return self._input_fluent(lit, t, subst)
        if isinstance(lit, Compare):
            return self._compare(lit, subst)
        if isinstance(lit, (NegFact, NegGoal)):
            return self._negation(lit, t, subst)
        raise TypeError(f"unknown literal {lit!r}")

    def event_formula(self, atom, t):
        """Formula for the ground input event atom being detected at t"""
        return disj(*(self.fact_formula(f) for f in self.narrative.events(t, atom.functor) if f.atom == atom))

    def _happens(self, lit, t, subst):
        for fact in self.narrative.events(t, lit.term.functor):
            extended = unify_args(lit.term.args, fact.atom.args, subst)
            if extended is None:
                continue
            formula = self.fact_formula(fact)
            if formula is not FALSE:
                yield extended, formula

    def _input_fluent(self, lit, t, subst):
        for fact in self.narrative.fluents(t, lit.term.functor):
            extended = unify_args(lit.term.args, fact.atom.args, subst)
            if extended is None:
                continue
            extended = unify(lit.value, fact.atom.value, extended)
            if extended is None:
                continue
            formula = self.fact_formula(fact)
            if formula is not FALSE:
                yield extended, formula

    def _derived(self, lit, t, subst):
        for atom in self.resolver.candidates(lit.term.functor, t):
            extended = unify_args(lit.term.args, atom.args, subst)
            if extended is None:
                continue
            extended = unify(lit.value, atom.value, extended)
            if extended is None:
                continue
            formula = self.resolver.formula(atom, t)
            if formula is not FALSE:
                yield extended, formula

    def _entities(self, pattern, subst, table):
        if is_bound(pattern, subst):
            return [ground(pattern, subst)]
        return sorted(table, key=str)

    def _close(self, lit, t, subst):
        a_pattern, b_pattern, limit = lit.term.args
        if not is_bound(limit, subst):
            raise ProbECError(f"close threshold {limit} is unbound at line {lit.line}")
        threshold = ground(limit, subst)
        table = self.coords(t)

        if is_bound(lit.value, subst):
            wanted = [ground(lit.value, subst)]
        else:
            wanted = [True, False]

        for a in self._entities(a_pattern, subst, table):
            for b in self._entities(b_pattern, subst, table):
                if a == b:
                    continue
                pair_subst = unify(a_pattern, a, subst)
                pair_subst = None if pair_subst is None else unify(b_pattern, b, pair_subst)
                if pair_subst is None:
                    continue
                for holds in wanted:
                    if not isinstance(holds, bool):
                        continue
                    extended = unify(lit.value, holds, pair_subst)
                    formula = close_formula(table.get(a, ()), table.get(b, ()), threshold, holds, self.fact_formula)
                    if formula is not FALSE:
                        yield extended, formula

    def _distance(self, lit, t, subst):
        a_pattern, b_pattern = lit.term.args
        table = self.coords(t)
        for a in self._entities(a_pattern, subst, table):
            for b in self._entities(b_pattern, subst, table):
                if a == b:
                    continue
                pair_subst = unify(a_pattern, a, subst)
                pair_subst = None if pair_subst is None else unify(b_pattern, b, pair_subst)
                if pair_subst is None:
                    continue
                for ca in table.get(a, ()):
                    for cb in table.get(b, ()):
                        extended = unify(lit.value, distance(ca.atom.value, cb.atom.value), pair_subst)
                        if extended is None:
                            continue
                        formula = conj(self.fact_formula(ca), self.fact_formula(cb))
                        if formula is not FALSE:
                            yield extended, formula

    def _compare(self, lit, subst):
        try:
            holds = _COMPARE[lit.op](ground(lit.left, subst), ground(lit.right, subst))
        except TypeError:
            holds = False
        if holds:
            yield subst, TRUE

    def _negation(self, lit, t, subst):
        formula = negation(formula for _, formula in self._literal(lit.literal, t, subst))
        if formula is not FALSE:
            yield subst, formula

    # ---- rule-level ---------------------------------------------------------

    def head_atom(self, head, subst):
        args = tuple(ground(arg, subst) for arg in head.term.args)
        return FluentAtom(head.term.functor, args, ground(head.value, subst))

    def initiations(self, t, functor=None):
        """Initiation formula per fluent atom initiated at t"""
        found = {}
        functors = self.rules.dependency_order if functor is None else (functor,)
        for name in functors:
            for rule in self.rules.initiation_rules(name):
                for subst, formula in self.solve(rule.ordered_body, t, {}):
                    found.setdefault(self.head_atom(rule.head, subst), []).append(formula)
        return exclusive_values({atom: disj(*formulas) for atom, formulas in found.items()})

    def terminations(self, atom, t):
        proofs = []
        for rule in self.rules.termination_rules(atom.functor):
            subst = unify_args(rule.head.term.args, atom.args, {})
            if subst is not None:
                subst = unify(rule.head.value, atom.value, subst)
            if subst is None:
                continue
            proofs.extend(formula for _, formula in self.solve(rule.ordered_body, t, subst))
        return disj(*proofs)

    def breaks(self, atom, t, initiations):
        """Termination of atom at t, or initiation of another value of the same fluent"""
        others = [
            formula
            for other, formula in initiations.items()
            if other.key == atom.key and not same_value(other.value, atom.value)
        ]
        return disj(self.terminations(atom, t), *others)


def negation(proofs):
    """Negation as failure: TRUE for an absent or unprovable target, else the complement of its proofs"""
    return neg(disj(*proofs))


def value_rank(value):
    """Sort key for the values of one fluent: booleans, then numbers, then the rest by text"""
    if isinstance(value, bool):
        return (0, int(value), "")
    if isinstance(value, (int, float)):
        return (1, value, "")
    return (2, 0, str(value))


def exclusive_values(initiations):
    """Initiation formulas in which at most one value per fluent starts at a frame

    When several values of the same fluent are initiated together the lowest
    value_rank wins; every other value only starts where no lower one does.
    """
    by_key = defaultdict(list)
    for atom in initiations:
        by_key[atom.key].append(atom)

    result = dict(initiations)
    for atoms in by_key.values():
        if len(atoms) < 2:
            continue
        lower = []
        for atom in sorted(atoms, key=lambda a: value_rank(a.value)):
            formula = initiations[atom]
            if lower:
                exclusive = conj(formula, neg(disj(*lower)))
                if exclusive is FALSE:
                    del result[atom]
                else:
                    result[atom] = exclusive
            lower.append(formula)
    return result


def truth(formula):
    """Value of a variable-free formula"""
    if isinstance(formula, Const):
        return formula.value
    raise ProbECError(f"formula {formula} still depends on probabilistic facts")
