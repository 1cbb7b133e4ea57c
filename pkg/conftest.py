"""
Shared pytest fixtures: fixture paths, rule sets and a random narrative factory
"""

from pathlib import Path

import numpy as np
import pytest

from event_model import EventAtom, FactKind, FluentAtom, ProbFact, index_narrative
from rule_dsl import builtin_activity_rules, parse_rules

FIXTURES = Path(__file__).with_name("fixtures")

# Rules whose bodies only consult input facts and built-ins, plus a
# multi-valued fluent; the incremental recurrence is exact for these.
ORACLE_RULES = """
initiatedAt(moving(P1, P2)=true, T) :-
    happensAt(walking(P1), T),
    happensAt(walking(P2), T),
    holdsAt(close(P1, P2, 34)=true, T),
    holdsAt(orientation(P1)=O1, T),
    holdsAt(orientation(P2)=O2, T),
    abs(O1 - O2) < 45.

terminatedAt(moving(P1, P2)=true, T) :-
    happensAt(walking(P1), T),
    holdsAt(close(P1, P2, 34)=false, T).

terminatedAt(moving(P1, P2)=true, T) :-
    happensAt(disappear(P1), T).

initiatedAt(fighting(P1, P2)=true, T) :-
    happensAt(abrupt(P1), T),
    holdsAt(close(P1, P2, 44)=true, T),
    not happensAt(inactive(P2), T).

terminatedAt(fighting(P1, P2)=true, T) :-
    happensAt(running(P1), T),
    holdsAt(close(P1, P2, 44)=false, T).

initiatedAt(mood(P)=1, T) :-
    happensAt(inactive(P), T).

initiatedAt(mood(P)=2, T) :-
    happensAt(active(P), T).

terminatedAt(mood(P)=2, T) :-
    happensAt(disappear(P), T).
"""

STA_CHOICES = ("walking", "running", "active", "inactive", "abrupt")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def mike_sarah_path():
    return FIXTURES / "mike_sarah.facts"


@pytest.fixture
def suitcase_path():
    return FIXTURES / "suitcase.facts"


@pytest.fixture(scope="session")
def activity_rules():
    return builtin_activity_rules()


@pytest.fixture(scope="session")
def oracle_rules():
    return parse_rules(ORACLE_RULES, source="<oracle>")


def random_narrative(rng, entities=3, frames=6, max_probabilistic=10, crisp=False, initially=True):
    """A small narrative over entities e0.. with STA, tracking, coord and orientation facts

    At most `max_probabilistic` facts get a probability strictly inside (0, 1);
    with crisp=True every fact is certain and about a tenth of them are left out.
    """
    names = [f"e{i}" for i in range(entities)]
    facts = []
    for t in range(frames):
        for name in names:
            if rng.random() < 0.75:
                sta = STA_CHOICES[rng.integers(len(STA_CHOICES))]
                facts.append(ProbFact(FactKind.HAPPENS, EventAtom(sta, (name,)), t))
            for tracking in ("appear", "disappear"):
                if rng.random() < 0.1:
                    facts.append(ProbFact(FactKind.HAPPENS, EventAtom(tracking, (name,)), t))
            if rng.random() < 0.9:
                position = (int(rng.integers(0, 60)), int(rng.integers(0, 60)))
                facts.append(ProbFact(FactKind.HOLDS, FluentAtom("coord", (name,), position), t))
                orientation = int(rng.choice([0, 30, 90, 120]))
                facts.append(ProbFact(FactKind.HOLDS, FluentAtom("orientation", (name,), orientation), t))
    if initially:
        facts.append(ProbFact(FactKind.INITIALLY, FluentAtom("mood", (names[0],), 1)))

    if crisp:
        facts = [fact for fact in facts if rng.random() >= 0.1]
        return index_narrative(facts)

    order = rng.permutation(len(facts))
    budget = max_probabilistic
    for index in order:
        fact = facts[index]
        if budget > 0 and rng.random() < 0.5:
            facts[index] = fact.with_prob(round(float(rng.uniform(0.05, 0.95)), 3))
            budget -= 1
    return index_narrative(facts)


@pytest.fixture
def narrative_factory():
    def make(seed, **kwargs):
        return random_narrative(np.random.default_rng(seed), **kwargs)
    return make
