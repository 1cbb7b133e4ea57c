import numpy as np
import pytest

from crisp_engine import CrispState, crisp_holds_stream, crisp_initiated, crisp_recognize
from errors import CrispInputError
from event_model import EventAtom, FactKind, FluentAtom, ProbFact, index_narrative
from grounding import FrameGrounder, truth
from noise_lab import filter_for_crisp
from rule_dsl import parse_rules

ALARM_RULES = """
initiatedAt(alarm(P)=true, T) :- happensAt(abrupt(P), T).
terminatedAt(alarm(P)=true, T) :- happensAt(inactive(P), T).
"""

ALARM = FluentAtom("alarm", ("x",))


def event(functor, entity, t, prob=1.0):
    return ProbFact(FactKind.HAPPENS, EventAtom(functor, (entity,)), t, prob)


def fluent(functor, entity, value, t, prob=1.0):
    return ProbFact(FactKind.HOLDS, FluentAtom(functor, (entity,), value), t, prob)


def alarm_narrative(inits, terms, horizon=40):
    facts = [event("abrupt", "x", t) for t in inits]
    facts += [event("inactive", "x", t) for t in terms]
    facts.append(event("walking", "x", horizon))
    return index_narrative(facts)


def pair_frame(sta1, sta2, orientation1, orientation2, gap=10, t=5):
    return index_narrative([
        event(sta1, "p1", t),
        event(sta2, "p2", t),
        fluent("coord", "p1", (100, 100), t),
        fluent("coord", "p2", (100 + gap, 100), t),
        fluent("orientation", "p1", orientation1, t),
        fluent("orientation", "p2", orientation2, t),
    ])


class TestIntervals:
    @pytest.fixture
    def rules(self):
        return parse_rules(ALARM_RULES)

    def test_single_initiation(self, rules):
        narrative = alarm_narrative([20], [30])
        assert crisp_holds_stream(ALARM, rules, narrative) == set(range(21, 31))

    def test_repeated_initiation(self, rules):
        narrative = alarm_narrative([10, 20], [30])
        assert crisp_holds_stream(ALARM, rules, narrative) == set(range(11, 31))

    def test_first_termination_wins(self, rules):
        narrative = alarm_narrative([10, 20], [25, 30])
        assert crisp_holds_stream(ALARM, rules, narrative) == set(range(11, 26))

    def test_initially_seeds_frame_zero(self, rules):
        init = ProbFact(FactKind.INITIALLY, ALARM)
        narrative = index_narrative([init, event("inactive", "x", 0), event("inactive", "x", 4), event("walking", "x", 8)])
        # a termination at frame 0 cannot break the initial value
        assert crisp_holds_stream(ALARM, rules, narrative) == {0, 1, 2, 3, 4}

    def test_same_frame_initiation_and_termination(self, rules):
        narrative = alarm_narrative([10, 15], [15])
        assert crisp_holds_stream(ALARM, rules, narrative) == set(range(11, 41))

    def test_probabilistic_input_rejected(self, rules):
        narrative = index_narrative([event("abrupt", "x", 1, 0.4)])
        with pytest.raises(CrispInputError):
            crisp_recognize(rules, narrative)

    def test_zero_probability_rejected(self, rules):
        narrative = index_narrative([event("abrupt", "x", 1), event("inactive", "x", 3, 0.0)])
        with pytest.raises(CrispInputError, match="probability 1"):
            crisp_recognize(rules, narrative)

    def test_filtered_zero_probability_accepted(self, rules):
        narrative = index_narrative([event("abrupt", "x", 1), event("inactive", "x", 3, 0.0), event("walking", "x", 5)])
        assert crisp_holds_stream(ALARM, rules, filter_for_crisp(narrative, 0.5)) == {2, 3, 4, 5}


class TestInitiation:
    def test_moving_within_orientation(self, activity_rules):
        narrative = pair_frame("walking", "walking", 100, 60)
        state = CrispState(5)
        assert crisp_initiated(FluentAtom("moving", ("p1", "p2")), 5, activity_rules, narrative, state)

    def test_moving_orientation_too_far(self, activity_rules):
        narrative = pair_frame("walking", "walking", 100, 160)
        assert not crisp_initiated(FluentAtom("moving", ("p1", "p2")), 5, activity_rules, narrative, CrispState(5))

    def test_fighting_blocked_by_inactive(self, activity_rules):
        narrative = pair_frame("abrupt", "inactive", 0, 0, gap=40)
        assert not crisp_initiated(FluentAtom("fighting", ("p1", "p2")), 5, activity_rules, narrative, CrispState(5))

    def test_fighting_without_inactive(self, activity_rules):
        narrative = pair_frame("abrupt", "walking", 0, 0, gap=40)
        assert crisp_initiated(FluentAtom("fighting", ("p1", "p2")), 5, activity_rules, narrative, CrispState(5))

    def test_meeting_needs_person(self, activity_rules):
        narrative = pair_frame("active", "inactive", 0, 0)
        meeting = FluentAtom("meeting", ("p1", "p2"))
        assert not crisp_initiated(meeting, 5, activity_rules, narrative, CrispState(5))
        person = CrispState(5, {FluentAtom("person", ("p2",))})
        assert crisp_initiated(meeting, 5, activity_rules, narrative, person)


def axiom_holds(rules, narrative):
    """holdsAt straight from the axioms: an earlier initiation with no break in between"""
    grounder = FrameGrounder(rules, narrative, CrispState())
    frames = list(narrative.frames())
    initiations = {t: grounder.initiations(t) for t in frames}
    started = {t: {a for a, f in initiations[t].items() if truth(f)} for t in frames}
    initial = {f.atom for f in narrative.initially() if f.prob == 1.0 and f.functor in rules.derived}
    atoms = initial.union(*started.values())

    def unbroken(atom, first, last):
        return not any(truth(grounder.breaks(atom, u, initiations[u])) for u in range(first, last))

    result = {}
    for atom in atoms:
        frames_held = set()
        for t in frames:
            from_initiation = any(atom in started[ts] and unbroken(atom, ts + 1, t) for ts in range(t))
            from_initially = atom in initial and unbroken(atom, 1, t)
            if from_initiation or from_initially:
                frames_held.add(t)
        if frames_held:
            result[atom] = frames_held
    return result


class TestAxiomOracle:
    def test_forward_scan_matches_axioms(self, oracle_rules, narrative_factory):
        for seed in range(150):
            narrative = narrative_factory(seed, entities=3, frames=7, crisp=True)
            assert crisp_recognize(oracle_rules, narrative) == axiom_holds(oracle_rules, narrative), seed

    def test_single_value_per_fluent(self, oracle_rules, narrative_factory):
        for seed in range(50):
            narrative = narrative_factory(seed, crisp=True)
            holds = crisp_recognize(oracle_rules, narrative)
            for t in narrative.frames():
                moods = [atom for atom, frames in holds.items() if atom.functor == "mood" and t in frames]
                assert len({atom.key for atom in moods}) == len(moods)


MOOD_RULES = """
initiatedAt(mood(P)=1, T) :- happensAt(inactive(P), T).
initiatedAt(mood(P)=2, T) :- happensAt(abrupt(P), T).
terminatedAt(mood(P)=2, T) :- happensAt(disappear(P), T).
"""


def mood(value):
    return FluentAtom("mood", ("x",), value)


class TestCompetingValues:
    @pytest.fixture
    def rules(self):
        return parse_rules(MOOD_RULES)

    def test_lower_value_wins_same_frame(self, rules):
        narrative = index_narrative([event("inactive", "x", 1), event("abrupt", "x", 1), event("walking", "x", 3)])
        holds = crisp_recognize(rules, narrative)
        assert holds[mood(1)] == {2, 3}
        assert mood(2) not in holds

    def test_initiated_value_replaces_held_one(self, rules):
        narrative = index_narrative([
            event("abrupt", "x", 1),
            event("inactive", "x", 4),
            event("abrupt", "x", 4),
            event("walking", "x", 6),
        ])
        holds = crisp_recognize(rules, narrative)
        assert holds[mood(2)] == {2, 3, 4}
        assert holds[mood(1)] == {5, 6}

    def test_one_value_per_frame(self, rules):
        rng = np.random.default_rng(11)
        for _ in range(20):
            facts = [
                event(sta, "x", t)
                for t in range(8)
                for sta in ("inactive", "abrupt", "disappear")
                if rng.random() < 0.4
            ]
            facts.append(event("walking", "x", 8))
            holds = crisp_recognize(rules, index_narrative(facts))
            frames_one = holds.get(mood(1), set())
            frames_two = holds.get(mood(2), set())
            assert not frames_one & frames_two
            assert holds == axiom_holds(rules, index_narrative(facts))
