"""
Event model for activity recognition
Timepoints, entities, event and fluent atoms, probabilistic facts and narratives
"""

from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum

from errors import DuplicateFact, InvalidProbability

STA_FUNCTORS = frozenset({"walking", "running", "active", "inactive", "abrupt"})
TRACKING_FUNCTORS = frozenset({"appear", "disappear"})
SPATIAL_FLUENTS = frozenset({"coord", "orientation"})


class FactKind(Enum):
    HAPPENS = "happensAt"
    HOLDS = "holdsAt"
    INITIALLY = "initially"


def format_arg(arg):
    if isinstance(arg, bool):
        return "true" if arg else "false"
    return str(arg)


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return "(" + ",".join(str(v) for v in value) + ")"
    return str(value)


def format_term(functor, args):
    if not args:
        return functor
    return f"{functor}({','.join(format_arg(a) for a in args)})"


@dataclass(frozen=True)
class EventAtom:
    functor: str
    args: tuple = ()

    def __str__(self):
        return format_term(self.functor, self.args)


@dataclass(frozen=True)
class FluentAtom:
    functor: str
    args: tuple = ()
    value: object = True

    @property
    def key(self):
        """The fluent term without its value"""
        return (self.functor, self.args)

    def with_value(self, value):
        return replace(self, value=value)

    def __str__(self):
        return f"{format_term(self.functor, self.args)}={format_value(self.value)}"


@dataclass(frozen=True)
class ProbFact:
    kind: FactKind
    atom: object
    time: int = None
    prob: float = 1.0

    def __post_init__(self):
        if isinstance(self.prob, bool) or not 0.0 <= self.prob <= 1.0:
            raise InvalidProbability(self.prob, self.body_text())
        if self.kind is FactKind.INITIALLY:
            if self.time is not None:
                raise ValueError("initially facts carry no timepoint")
        elif self.time is None or self.time < 0:
            raise ValueError(f"{self.kind.value} fact needs a non-negative frame")
        if self.kind is FactKind.HAPPENS and not isinstance(self.atom, EventAtom):
            raise TypeError("happensAt facts take an EventAtom")
        if self.kind is not FactKind.HAPPENS and not isinstance(self.atom, FluentAtom):
            raise TypeError(f"{self.kind.value} facts take a FluentAtom")

    @property
    def body(self):
        return (self.kind, self.atom, self.time)

    @property
    def functor(self):
        return self.atom.functor

    @property
    def is_crisp(self):
        return self.prob in (0.0, 1.0)

    def with_prob(self, prob):
        return replace(self, prob=prob)

    def body_text(self):
        if self.kind is FactKind.INITIALLY:
            return f"initially({self.atom})"
        return f"{self.kind.value}({self.atom},{self.time})"

    def __str__(self):
        if self.prob == 1.0:
            return self.body_text()
        return f"{self.prob!r}::{self.body_text()}"


class Narrative:
    """Temporally sorted facts of one trace, indexed by frame and by (frame, functor)

    Built by index_narrative; immutable afterwards.
    """

    def __init__(self, facts):
        self._facts = tuple(facts)
        self.horizon = max((f.time for f in self._facts if f.time is not None), default=0)

        self._by_time = defaultdict(list)
        self._by_functor = defaultdict(list)
        self._initially = []
        self._index = {}
        for position, fact in enumerate(self._facts):
            self._index[fact.body] = position
            if fact.kind is FactKind.INITIALLY:
                self._initially.append(fact)
                continue
            self._by_time[fact.time].append(fact)
            self._by_functor[(fact.time, fact.kind, fact.functor)].append(fact)

        self.entities = frozenset(
            arg
            for fact in self._facts
            for arg in fact.atom.args
            if isinstance(arg, str)
        )

    @property
    def facts(self):
        return self._facts

    def __len__(self):
        return len(self._facts)

    def __iter__(self):
        return iter(self._facts)

    def frames(self):
        return range(self.horizon + 1)

    def at(self, t):
        return tuple(self._by_time.get(t, ()))

    def events(self, t, functor):
        return self._by_functor.get((t, FactKind.HAPPENS, functor), ())

    def fluents(self, t, functor):
        return self._by_functor.get((t, FactKind.HOLDS, functor), ())

    def initially(self, functor=None):
        if functor is None:
            return tuple(self._initially)
        return tuple(f for f in self._initially if f.functor == functor)

    def index(self, fact):
        """Position of a fact in the sorted table; used as its variable id"""
        return self._index[fact.body]

    def is_crisp(self):
        return all(f.is_crisp for f in self._facts)

    def probabilistic_facts(self):
        return [f for f in self._facts if not f.is_crisp]


def _normalized(fact):
    atom = fact.atom
    if (
        fact.kind is not FactKind.HAPPENS
        and atom.functor == "orientation"
        and isinstance(atom.value, int)
        and not isinstance(atom.value, bool)
    ):
        return replace(fact, atom=atom.with_value(atom.value % 360))
    return fact


def index_narrative(facts):
    """Sort, normalise and index facts; duplicate bodies are rejected"""
    seen = set()
    normalized = []
    for fact in facts:
        if not 0.0 <= fact.prob <= 1.0:
            raise InvalidProbability(fact.prob, fact.body_text())
        fact = _normalized(fact)
        if fact.body in seen:
            raise DuplicateFact(fact.body_text())
        seen.add(fact.body)
        normalized.append(fact)

    # initially facts sort before frame 0; the sort is stable within a frame
    normalized.sort(key=lambda f: -1 if f.time is None else f.time)
    return Narrative(normalized)
