"""
Probabilistic Event Calculus
Per-frame recurrence P(t+1) = P(A) + P(¬A ∧ ¬C)·P(t), an exact whole-history
BDD mode and the cross-check between them
"""

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from bdd import (
    ENUMERATION_LIMIT,
    FALSE,
    TRUE,
    BddManager,
    Var,
    compile,
    conj,
    disj,
    enumerate_worlds,
    neg,
    variables,
)
from errors import TooManyVars
from grounding import FrameGrounder, negation

logger = logging.getLogger(__name__)


def negate1(pattern, t, narrative):
    """Probability that an input event is not detected at t"""
    grounder = FrameGrounder(None, narrative, None)
    return compile(negation([grounder.event_formula(pattern, t)])).probability()


def negate2(p):
    """Probability that a goal with success probability p is not inferable"""
    return 1.0 - p


@dataclass(frozen=True)
class TimepointEvents:
    atom: object
    frame: int
    initiation: object = FALSE
    termination: object = FALSE


def step(prev, events, manager=None):
    """Holding probability at frame+1 from the one at frame"""
    initiation, termination = events.initiation, events.termination
    if initiation is FALSE and termination is FALSE:
        return prev
    if manager is None:
        manager = BddManager(variables(disj(initiation, termination)))
    else:
        for var in variables(disj(initiation, termination)):
            manager.add_var(var)

    a = manager.build(initiation)
    either = manager.disjoin(a, manager.build(termination))
    # not A and not C is the negation of A or C
    return manager.probability(a) + negate2(manager.probability(either)) * prev


@dataclass(frozen=True)
class RecognitionTrace:
    atom: object
    probs: np.ndarray = field(compare=False, repr=False)

    def at(self, t):
        return float(self.probs[t])

    def recognitions(self, threshold):
        return filter_recognitions(self, threshold)


def filter_recognitions(trace, threshold):
    """Frames whose probability is strictly above threshold"""
    return {int(t) for t in np.flatnonzero(trace.probs > threshold)}


class _ProbabilityResolver:
    """Derived fluents as auxiliary variables carrying their current probability"""

    def __init__(self, probs, first_id):
        self._probs = probs
        self._next_id = first_id
        self._aux = {}
        self._folded = {}
        self._by_functor = defaultdict(list)
        for atom in sorted(probs, key=str):
            if probs[atom] > 0.0:
                self._by_functor[atom.functor].append(atom)

    def candidates(self, functor, t):
        return self._by_functor.get(functor, [])

    def formula(self, atom, t):
        p = self._probs.get(atom, 0.0)
        if p <= 0.0:
            return FALSE
        if p >= 1.0:
            return TRUE
        var = self._aux.get(atom)
        if var is None:
            var = Var(self._next_id, p, f"{atom}@{t}")
            self._next_id += 1
            self._aux[atom] = var
            self._folded[var.id] = atom
        return var

    def folded_atoms(self, formula):
        """Derived atoms whose auxiliary variables occur in formula"""
        if not self._folded:
            return frozenset()
        return frozenset(self._folded[v.id] for v in variables(formula) if v.id in self._folded)


class ProbabilisticRecognizer:
    def __init__(self, rules, narrative):
        self.rules = rules
        self.narrative = narrative
        self.stats = {"frames": 0, "bdd_steps": 0, "atoms": 0}
        # (atom, frame) -> derived atoms folded into that step
        self.folded = {}

    def initial_probs(self):
        return {
            fact.atom: fact.prob
            for fact in self.narrative.initially()
            if fact.functor in self.rules.derived and fact.prob > 0.0
        }

    def run(self):
        started = time.time()
        size = self.narrative.horizon + 1
        history = {}
        current = self.initial_probs()

        for t in self.narrative.frames():
            for atom, p in current.items():
                if atom not in history:
                    history[atom] = np.zeros(size)
                history[atom][t] = p
            if t == self.narrative.horizon:
                break

            resolver = _ProbabilityResolver(current, len(self.narrative))
            grounder = FrameGrounder(self.rules, self.narrative, resolver)
            initiations = grounder.initiations(t)

            following = {}
            for atom in set(current) | set(initiations):
                prev = current.get(atom, 0.0)
                termination = FALSE
                # with P(t) = 0 the break cannot matter; at frame 0 it never applies
                if t > 0 and prev > 0.0:
                    termination = grounder.breaks(atom, t, initiations)
                events = TimepointEvents(atom, t, initiations.get(atom, FALSE), termination)
                if events.initiation is not FALSE or events.termination is not FALSE:
                    self.stats["bdd_steps"] += 1
                    folded = resolver.folded_atoms(disj(events.initiation, events.termination))
                    if folded:
                        self.folded[(atom, t)] = folded
                value = step(prev, events)
                if value > 0.0:
                    following[atom] = value
                elif atom not in history:
                    history[atom] = np.zeros(size)
            current = following
            self.stats["frames"] += 1

        self.stats["atoms"] = len(history)
        logger.info(
            "probabilistic scan: %d frames, %d fluent atoms, %d BDD steps, %.3fs",
            size, len(history), self.stats["bdd_steps"], time.time() - started,
        )
        return {atom: RecognitionTrace(atom, probs) for atom, probs in history.items()}


def recognize(rules, narrative):
    """Probability trace over frames 0..horizon for every derived fluent atom seen"""
    return ProbabilisticRecognizer(rules, narrative).run()


class ExactEvaluator:
    """Whole-history holdsAt formulas over fact-level variables

    holdsAt(F=V, t) = initially ∧ no break in (0, t)
                    ∨ OR over Ts < t of A(Ts) ∧ no break in (Ts, t)
    Derived fluents in bodies are expanded to their own formulas.
    """

    def __init__(self, rules, narrative):
        self.rules = rules
        self.narrative = narrative
        self._grounder = FrameGrounder(rules, narrative, self)
        self._initiations = {}
        self._next_frame = 0
        self._breaks = {}
        self._not_broken = {}
        self._holds = {}
        self._candidates = {}
        self._initially = {
            fact.atom: self._grounder.fact_formula(fact)
            for fact in narrative.initially()
            if fact.functor in rules.derived
        }

    def initiations(self, t):
        # frames are grounded in ascending order so recursion stays one frame deep
        while self._next_frame <= t:
            self._initiations[self._next_frame] = self._grounder.initiations(self._next_frame)
            self._next_frame += 1
        return self._initiations[t]

    def breaks_at(self, atom, u):
        key = (atom, u)
        formula = self._breaks.get(key)
        if formula is None:
            formula = self._grounder.breaks(atom, u, self.initiations(u))
            self._breaks[key] = formula
        return formula

    def _not_broken_at(self, atom, u):
        key = (atom, u)
        formula = self._not_broken.get(key)
        if formula is None:
            formula = neg(self.breaks_at(atom, u))
            self._not_broken[key] = formula
        return formula

    def step_events(self, atom, u):
        """Initiation or break of atom at u, derived literals expanded; breaks never apply at frame 0"""
        broken = self.breaks_at(atom, u) if u >= 1 else FALSE
        return disj(self.initiations(u).get(atom, FALSE), broken)

    def holds_formula(self, atom, t):
        key = (atom, t)
        cached = self._holds.get(key)
        if cached is not None:
            return cached

        proofs = []
        survive = TRUE
        for ts in range(t - 1, -1, -1):
            initiation = self.initiations(ts).get(atom)
            if initiation is not None:
                proofs.append(conj(initiation, survive))
            if ts >= 1:
                survive = conj(self._not_broken_at(atom, ts), survive)
        if atom in self._initially:
            proofs.append(conj(self._initially[atom], survive))

        formula = disj(*proofs)
        self._holds[key] = formula
        return formula

    def atoms(self, up_to=None):
        """Every derived atom initiated before up_to, or initially given"""
        last = self.narrative.horizon if up_to is None else up_to
        seen = set(self._initially)
        for ts in range(0, last):
            seen.update(self.initiations(ts))
        return sorted(seen, key=str)

    # resolver protocol

    def candidates(self, functor, t):
        key = (functor, t)
        found = self._candidates.get(key)
        if found is None:
            found = [atom for atom in self.atoms(t) if atom.functor == functor]
            self._candidates[key] = found
        return found

    def formula(self, atom, t):
        return self.holds_formula(atom, t)


def recognize_exact_bdd(rules, narrative, fluent, t, max_vars=ENUMERATION_LIMIT, evaluator=None):
    """P(holdsAt(fluent, t)) from one BDD over the whole history"""
    evaluator = evaluator or ExactEvaluator(rules, narrative)
    formula = evaluator.holds_formula(fluent, t)
    count = len(variables(formula))
    if max_vars is not None and count > max_vars:
        raise TooManyVars(count, max_vars)
    return compile(formula).probability()


def _support(formula):
    return frozenset(v.id for v in variables(formula))


def correlated_from(recognizer, evaluator):
    """First frame at which each atom's recurrence may part from the exact value

    A step is exact while the derived atoms folded into it have disjoint
    supports and its expanded initiation and break formulas share no fact with
    the atom's own history. Only steps with folded atoms can fail this; a
    flagged atom stays flagged, and so does every step that folds it in later.
    """
    flagged = {}
    steps = sorted(recognizer.folded, key=lambda step: (step[1], str(step[0])))
    for atom, u in steps:
        folded = recognizer.folded[(atom, u)]
        if atom in flagged:
            continue
        if any(flagged.get(dep, u + 1) <= u for dep in folded):
            flagged[atom] = u + 1
            continue
        seen = frozenset()
        overlapping = False
        for dep in sorted(folded, key=str):
            support = _support(evaluator.holds_formula(dep, u))
            if seen & support:
                overlapping = True
                break
            seen |= support
        history = _support(evaluator.holds_formula(atom, u))
        if overlapping or history & _support(evaluator.step_events(atom, u)):
            logger.debug("%s: frame %d step shares facts with its history", atom, u)
            flagged[atom] = u + 1
    return flagged


def cross_check(rules, narrative, tolerance=1e-9, max_vars=ENUMERATION_LIMIT, max_bdd_vars=300):
    """Compare incremental, exact-BDD and enumerated probabilities per (atom, frame)

    Frames from which an atom's recurrence steps correlate with its own history
    (see correlated_from) are counted as skipped_correlated instead of compared.
    Returns a summary dict; `mismatches` lists (atom, frame, values).
    """
    started = time.time()
    recognizer = ProbabilisticRecognizer(rules, narrative)
    traces = recognizer.run()
    evaluator = ExactEvaluator(rules, narrative)
    correlated = correlated_from(recognizer, evaluator)
    summary = {
        "atoms": len(traces),
        "checked_bdd": 0,
        "checked_enumeration": 0,
        "skipped_bdd": 0,
        "skipped_enumeration": 0,
        "skipped_correlated": 0,
        "correlated_from": {str(atom): correlated[atom] for atom in sorted(correlated, key=str)},
        "max_error": 0.0,
        "mismatches": [],
    }

    for atom in sorted(traces, key=str):
        trace = traces[atom]
        last = correlated.get(atom, narrative.horizon + 1)
        summary["skipped_correlated"] += narrative.horizon + 1 - last
        formulas = [evaluator.holds_formula(atom, t) for t in range(last)]
        enumerated = {}
        try:
            values = enumerate_worlds(formulas, max_vars)
            enumerated = {t: float(v) for t, v in enumerate(values)}
        except TooManyVars:
            for t, formula in enumerate(formulas):
                if len(variables(formula)) <= max_vars:
                    enumerated[t] = float(enumerate_worlds([formula], max_vars)[0])

        for t, formula in enumerate(formulas):
            incremental = trace.at(t)
            values = {"incremental": incremental}
            if len(variables(formula)) <= max_bdd_vars:
                values["bdd"] = compile(formula).probability()
                summary["checked_bdd"] += 1
            else:
                summary["skipped_bdd"] += 1
            if t in enumerated:
                values["enumeration"] = enumerated[t]
                summary["checked_enumeration"] += 1
            else:
                summary["skipped_enumeration"] += 1

            error = max(abs(v - incremental) for v in values.values())
            summary["max_error"] = max(summary["max_error"], error)
            if error > tolerance:
                summary["mismatches"].append((atom, t, values))

    summary["duration"] = time.time() - started
    logger.info(
        "cross-check: %d atoms, max error %.3g, %d mismatches",
        summary["atoms"], summary["max_error"], len(summary["mismatches"]),
    )
    return summary
