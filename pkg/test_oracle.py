"""
Incremental recurrence vs whole-history BDD vs possible-worlds enumeration
"""

import time

import pytest

from event_model import FluentAtom, index_narrative
from fact_io import parse_facts, read_facts
from prob_engine import (
    ExactEvaluator,
    ProbabilisticRecognizer,
    correlated_from,
    cross_check,
    recognize_exact_bdd,
)

# a is active next to b at frames 1 and 2; b counts as a person only through
# one uncertain detection at frame 0, so both meeting initiations share it
SHARED_PERSON = """
0.5::happensAt(active(b),0).
happensAt(active(a),1).
happensAt(active(a),2).
holdsAt(coord(a)=(0,0),1).
holdsAt(coord(b)=(5,0),1).
holdsAt(coord(a)=(0,0),2).
holdsAt(coord(b)=(5,0),2).
holdsAt(coord(a)=(0,0),3).
holdsAt(coord(b)=(5,0),3).
"""

MEETING = FluentAtom("meeting", ("a", "b"))
LEAVING = FluentAtom("leaving_object", ("sarah", "bag"))


class TestOracleEquivalence:
    def test_random_narratives(self, oracle_rules, narrative_factory):
        started = time.time()
        checked = 0
        for seed in range(1000):
            narrative = narrative_factory(seed, entities=3, frames=6, max_probabilistic=10)
            summary = cross_check(oracle_rules, narrative, tolerance=1e-9)
            assert summary["mismatches"] == [], (seed, summary["mismatches"][:1])
            assert summary["max_error"] < 1e-9
            assert summary["skipped_enumeration"] == 0
            assert summary["skipped_correlated"] == 0
            checked += summary["checked_enumeration"]
        assert checked > 0
        assert time.time() - started < 60

    def test_larger_entity_count(self, oracle_rules, narrative_factory):
        for seed in range(50):
            narrative = narrative_factory(10_000 + seed, entities=4, frames=8, max_probabilistic=12)
            summary = cross_check(oracle_rules, narrative)
            assert summary["mismatches"] == [], seed

    def test_bundled_rules_with_crisp_person(self, suitcase_path, activity_rules):
        narrative = index_narrative(read_facts(suitcase_path))
        summary = cross_check(activity_rules, narrative)
        assert summary["mismatches"] == []
        assert summary["checked_bdd"] > 0


class TestFoldedDerivedFluents:
    def test_repeated_initiation_through_shared_person(self, activity_rules):
        narrative = index_narrative(parse_facts(SHARED_PERSON))
        recognizer = ProbabilisticRecognizer(activity_rules, narrative)
        trace = recognizer.run()[MEETING]
        evaluator = ExactEvaluator(activity_rules, narrative)

        assert correlated_from(recognizer, evaluator) == {MEETING: 3}
        assert trace.at(2) == pytest.approx(0.5)
        assert recognize_exact_bdd(activity_rules, narrative, MEETING, 2, evaluator=evaluator) == pytest.approx(0.5)
        # the second initiation adds nothing: it rests on the same detection of b
        assert recognize_exact_bdd(activity_rules, narrative, MEETING, 3, evaluator=evaluator) == pytest.approx(0.5)
        assert trace.at(3) == pytest.approx(0.75)

    def test_cross_check_skips_correlated_frames(self, activity_rules):
        narrative = index_narrative(parse_facts(SHARED_PERSON))
        summary = cross_check(activity_rules, narrative)
        assert summary["mismatches"] == []
        assert summary["skipped_correlated"] == 1
        assert summary["correlated_from"] == {str(MEETING): 3}
        assert summary["checked_bdd"] > 0

    def test_single_initiation_with_uncertain_person(self, suitcase_path, activity_rules):
        facts = [
            fact.with_prob(0.7) if fact.functor == "walking" else fact
            for fact in read_facts(suitcase_path)
        ]
        narrative = index_narrative(facts)
        summary = cross_check(activity_rules, narrative)
        assert summary["mismatches"] == []
        assert summary["skipped_correlated"] == 0
        assert str(LEAVING) not in summary["correlated_from"]

    def test_random_narratives_bundled_rules(self, activity_rules, narrative_factory):
        checked = 0
        for seed in range(200):
            narrative = narrative_factory(20_000 + seed, entities=3, frames=6, max_probabilistic=10)
            summary = cross_check(activity_rules, narrative)
            assert summary["mismatches"] == [], (seed, summary["mismatches"][:1])
            checked += summary["checked_bdd"]
        assert checked > 0
