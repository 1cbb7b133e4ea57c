"""
Crisp Event Calculus
Forward scan of a crisp narrative with inertia and negation as failure
"""

import logging
import time
from collections import defaultdict

from bdd import FALSE, TRUE
from errors import CrispInputError
from grounding import FrameGrounder, truth

logger = logging.getLogger(__name__)


class CrispState:
    """Fluent atoms holding at one frame; also resolves holdsAt body literals"""

    def __init__(self, frame=0, holding=()):
        self.frame = frame
        self.holding = frozenset(holding)
        self._by_functor = defaultdict(list)
        for atom in sorted(self.holding, key=str):
            self._by_functor[atom.functor].append(atom)

    def holds(self, atom):
        return atom in self.holding

    def values(self, functor, args):
        return {a.value for a in self._by_functor.get(functor, ()) if a.args == args}

    def candidates(self, functor, t):
        return self._by_functor.get(functor, [])

    def formula(self, atom, t):
        return TRUE if atom in self.holding else FALSE


def require_crisp(narrative):
    # a 0.0 fact is still a probability; filter_for_crisp drops it
    for fact in narrative:
        if fact.prob != 1.0:
            raise CrispInputError(fact)


def crisp_initiated(fluent, t, rules, narrative, state):
    """Whether some initiatedAt rule for fluent fires at t given the holding state"""
    require_crisp(narrative)
    grounder = FrameGrounder(rules, narrative, state)
    initiations = grounder.initiations(t, functor=fluent.functor)
    return truth(initiations.get(fluent, FALSE))


def crisp_recognize(rules, narrative):
    """Frames at which each derived fluent atom holds"""
    require_crisp(narrative)
    started = time.time()

    state = CrispState(0, (
        fact.atom
        for fact in narrative.initially()
        if fact.prob == 1.0 and fact.functor in rules.derived
    ))
    frames = defaultdict(set)

    for t in narrative.frames():
        for atom in state.holding:
            frames[atom].add(t)
        if t == narrative.horizon:
            break

        grounder = FrameGrounder(rules, narrative, state)
        initiations = grounder.initiations(t)
        started_now = {atom for atom, formula in initiations.items() if truth(formula)}

        # breaks need Ts < Tf, so nothing holding at frame 0 can be broken there
        if t == 0:
            survivors = set(state.holding)
        else:
            survivors = {
                atom for atom in state.holding
                if not truth(grounder.breaks(atom, t, initiations))
            }
        state = CrispState(t + 1, started_now | survivors)

    logger.info(
        "crisp scan: %d frames, %d fluent atoms, %.3fs",
        narrative.horizon + 1, len(frames), time.time() - started,
    )
    return dict(frames)


def crisp_holds_stream(fluent, rules, narrative):
    """{T : holdsAt(fluent, T)}"""
    return crisp_recognize(rules, narrative).get(fluent, set())
