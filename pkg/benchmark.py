"""
Synthetic surveillance scene with frame-level ground truth
Each 300-frame episode stages moving, meeting, fighting and leaving_object once
"""

from pathlib import Path

from eval_harness import canonical
from event_model import EventAtom, FactKind, FluentAtom, ProbFact, index_narrative
from fact_io import emit_annotation, emit_facts

EPISODE_LENGTH = 300


class SceneBuilder:
    def __init__(self):
        self.facts = []
        self.truth = set()

    def event(self, functor, entity, t):
        self.facts.append(ProbFact(FactKind.HAPPENS, EventAtom(functor, (entity,)), t))

    def place(self, entity, t, position, orientation, sta=None):
        """Coord and orientation of an entity at t, plus its STA if any"""
        if sta is not None:
            self.event(sta, entity, t)
        self.facts.append(ProbFact(FactKind.HOLDS, FluentAtom("coord", (entity,), tuple(position)), t))
        self.facts.append(ProbFact(FactKind.HOLDS, FluentAtom("orientation", (entity,), orientation), t))

    def annotate(self, functor, a, b, frames):
        atom = canonical(FluentAtom(functor, (a, b), True))
        self.truth.update((atom, t) for t in frames)


def _moving_episode(scene, base, ann, bob):
    scene.event("appear", ann, base + 1)
    scene.event("appear", bob, base + 1)
    for k in range(1, 61):
        t = base + k
        scene.place(ann, t, (100 + 2 * k, 50), 0, "walking")
        scene.place(bob, t, (100 + 2 * k, 62), 0, "walking")
    # they split up; 42 px apart at k = 63
    for k in range(61, 70):
        t, j = base + k, k - 60
        scene.place(ann, t, (100 + 2 * k, 50 - 5 * j), 270, "walking")
        scene.place(bob, t, (100 + 2 * k, 62 + 5 * j), 90, "walking")
    scene.event("disappear", ann, base + 70)
    scene.event("disappear", bob, base + 70)
    scene.annotate("moving", ann, bob, range(base + 2, base + 64))


def _meeting_episode(scene, base, cat, dan):
    scene.event("appear", cat, base + 101)
    scene.event("appear", dan, base + 101)
    for k in range(1, 11):
        t = base + 100 + k
        scene.place(cat, t, (300, 30 + 2 * k), 90, "walking")
        scene.place(dan, t, (300, 90 - 2 * k), 270, "walking")
    for k in range(11, 61):
        t = base + 100 + k
        scene.place(cat, t, (300, 50), 90, "active")
        scene.place(dan, t, (300, 70), 270, "inactive")
    # dan walks off: 24 px at j = 1, 28 px at j = 2
    for j in range(1, 21):
        t = base + 160 + j
        scene.place(cat, t, (300, 50), 90, "inactive")
        scene.place(dan, t, (300, 70 + 4 * j), 90, "walking")
    scene.event("disappear", cat, base + 181)
    scene.event("disappear", dan, base + 181)
    scene.annotate("meeting", cat, dan, range(base + 112, base + 163))


def _fighting_episode(scene, base, eve, fred):
    scene.event("appear", eve, base + 201)
    scene.event("appear", fred, base + 201)
    for k in range(1, 11):
        t = base + 200 + k
        scene.place(eve, t, (500, 50 + k), 90, "walking")
        scene.place(fred, t, (500, 80 - k), 270, "walking")
    for k in range(11, 41):
        t = base + 200 + k
        scene.place(eve, t, (500, 60), 90, "abrupt")
        scene.place(fred, t, (500, 70), 270, "abrupt")
    # fred runs off: 46 px at j = 6
    for j in range(1, 16):
        t = base + 240 + j
        scene.place(eve, t, (500, 60), 90, "inactive")
        scene.place(fred, t, (500, 70 + 6 * j), 90, "running")
    scene.event("disappear", eve, base + 256)
    scene.event("disappear", fred, base + 256)
    scene.annotate("fighting", eve, fred, range(base + 212, base + 247))


def _leaving_object_episode(scene, base, gil, bag):
    scene.event("appear", gil, base + 261)
    for k in range(1, 11):
        scene.place(gil, base + 260 + k, (700 + 2 * k, 50), 0, "walking")
    scene.event("appear", bag, base + 271)
    scene.place(bag, base + 271, (720, 60), 0, "inactive")
    scene.place(gil, base + 271, (722, 50), 0, "walking")
    for j in range(1, 24):
        t = base + 271 + j
        scene.place(gil, t, (722 + 3 * j, 50), 0, "walking")
        if j < 20:
            scene.place(bag, t, (720, 60), 0, "inactive")
    scene.event("disappear", bag, base + 291)
    scene.event("disappear", gil, base + 295)
    scene.annotate("leaving_object", gil, bag, range(base + 272, base + 292))


def synthetic_scene(episodes=1):
    """(clean narrative, ground truth) for a run of episodes"""
    scene = SceneBuilder()
    for e in range(episodes):
        base = e * EPISODE_LENGTH
        _moving_episode(scene, base, f"ann{e}", f"bob{e}")
        _meeting_episode(scene, base, f"cat{e}", f"dan{e}")
        _fighting_episode(scene, base, f"eve{e}", f"fred{e}")
        _leaving_object_episode(scene, base, f"gil{e}", f"bag{e}")
    return index_narrative(scene.facts), scene.truth


def write_benchmark(directory, episodes=1):
    """Write benchmark.facts and benchmark.truth; returns both paths"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    narrative, truth = synthetic_scene(episodes)
    facts_path = directory / "benchmark.facts"
    truth_path = directory / "benchmark.truth"
    facts_path.write_text(emit_facts(narrative), encoding="utf-8")
    truth_path.write_text(emit_annotation(truth), encoding="utf-8")
    return facts_path, truth_path
