"""
Noise injection and crisp-input filtering
Attaches Gamma-driven probabilities to a clean narrative and adds spurious walkers
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from errors import ProbECError
from event_model import (
    STA_FUNCTORS,
    EventAtom,
    FactKind,
    FluentAtom,
    ProbFact,
    index_narrative,
)

logger = logging.getLogger(__name__)

GAMMA_SHAPE = 2.0
SPURIOUS_PREFIX = "ghost"
SPURIOUS_OFFSET = 10
SWEEP_GAMMA_MEANS = tuple(float(m) for m in np.arange(1, 17) * 0.5)


class NoiseLevel(Enum):
    SMOOTH = "smooth"
    INTERMEDIATE = "intermediate"
    STRONG = "strong"


@dataclass(frozen=True)
class NoiseConfig:
    level: NoiseLevel
    gamma_mean: float
    spurious_fraction: float = 0.5
    seed: int = 0
    spawn_key: tuple = ()

    def __post_init__(self):
        if not isinstance(self.level, NoiseLevel):
            object.__setattr__(self, "level", NoiseLevel(self.level))
        if not self.gamma_mean > 0:
            raise ProbECError(f"gamma mean must be positive, got {self.gamma_mean}")
        if not 0.0 <= self.spurious_fraction <= 1.0:
            raise ProbECError(f"spurious fraction must lie in [0, 1], got {self.spurious_fraction}")

    def rng(self):
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.spawn_key))


def noise_spawn_key(level_index, mean_index, run, common_random_numbers=False):
    """SeedSequence child key of one noisy dataset

    Every (level, gamma mean, run) gets its own independent draws, so a fact
    erased at one mean may be present at the next. With common random numbers
    all means of a (level, run) share one child and only the Gamma scale moves.
    """
    if common_random_numbers:
        return (level_index, run)
    return (level_index, mean_index, run)


def gamma_probs(draws, gamma_mean):
    """p = exp(-x) with x = draw·mean/shape, i.e. x ~ Gamma(shape, mean/shape)"""
    return np.exp(-draws * (gamma_mean / GAMMA_SHAPE))


def _is_sta(fact):
    return fact.kind is FactKind.HAPPENS and fact.functor in STA_FUNCTORS


def _is_spatial(fact):
    return fact.kind is FactKind.HOLDS and fact.functor in ("coord", "orientation")


def _spurious_ids(narrative, count):
    ids = []
    j = 0
    while len(ids) < count:
        candidate = f"{SPURIOUS_PREFIX}{j}"
        if candidate not in narrative.entities:
            ids.append(candidate)
        j += 1
    return ids


def inject(narrative, cfg):
    """Noisy copy of a crisp narrative

    Draws come from cfg.rng() in a fixed order: Gamma draws, then the spurious
    frame permutation, then ghost offsets.
    """
    rng = cfg.rng()
    facts = list(narrative)

    # unit-scale Gamma draws, one per fact, scaled by the mean below
    draws = rng.gamma(GAMMA_SHAPE, 1.0, size=len(facts))
    probs = gamma_probs(draws, cfg.gamma_mean)

    walking_frames = sorted({
        f.time for f in facts
        if _is_sta(f) and f.functor == "walking"
    })
    order = rng.permutation(len(walking_frames))
    offsets = rng.integers(-SPURIOUS_OFFSET, SPURIOUS_OFFSET + 1, size=(len(walking_frames), 2))

    noisy = []
    first_walker = {}
    for fact, p in zip(facts, probs):
        if _is_sta(fact):
            fact = fact.with_prob(float(p))
            if fact.functor == "walking":
                first_walker.setdefault(fact.time, fact)
        elif cfg.level is not NoiseLevel.SMOOTH and _is_spatial(fact):
            fact = fact.with_prob(float(p))
        noisy.append(fact)

    spurious = []
    if cfg.level is NoiseLevel.STRONG and walking_frames:
        count = int(round(cfg.spurious_fraction * len(walking_frames)))
        chosen = order[:count]
        ghost_ids = _spurious_ids(narrative, count)
        for ghost, index, offset in zip(ghost_ids, chosen, offsets[:count]):
            t = walking_frames[index]
            spurious.extend(_spurious_walker(narrative, first_walker[t], ghost, offset))

    logger.debug(
        "noise %s mean=%s: %d facts, %d spurious",
        cfg.level.value, cfg.gamma_mean, len(noisy), len(spurious),
    )
    return index_narrative(noisy + spurious)


def _spurious_walker(narrative, walker, ghost, offset):
    """Walking, coord and orientation facts for a ghost next to a real walker"""
    t = walker.time
    prob = 1.0 - walker.prob
    anchor = walker.atom.args[0] if walker.atom.args else None

    facts = [ProbFact(FactKind.HAPPENS, EventAtom("walking", (ghost,)), t, prob)]
    for fact in narrative.fluents(t, "coord"):
        if fact.atom.args == (anchor,):
            x, y = fact.atom.value
            position = (int(x + offset[0]), int(y + offset[1]))
            facts.append(ProbFact(FactKind.HOLDS, FluentAtom("coord", (ghost,), position), t, prob))
            break
    for fact in narrative.fluents(t, "orientation"):
        if fact.atom.args == (anchor,):
            facts.append(ProbFact(FactKind.HOLDS, FluentAtom("orientation", (ghost,), fact.atom.value), t, prob))
            break
    return facts


def filter_for_crisp(narrative, threshold):
    """Keep facts above the threshold, made crisp"""
    kept = [fact.with_prob(1.0) for fact in narrative if fact.prob > threshold]
    return index_narrative(kept)


_SPURIOUS_ID = re.compile(rf"^{SPURIOUS_PREFIX}\d+$")


def is_spurious(fact):
    return any(isinstance(a, str) and _SPURIOUS_ID.match(a) for a in fact.atom.args)


def occurrence_counts(narrative, gamma_means, seed=0, runs=5, threshold=0.5,
                      level=NoiseLevel.STRONG, spurious_fraction=0.5, common_random_numbers=False):
    """Above-threshold STA counts per gamma mean, real and spurious, one row per run"""
    level = NoiseLevel(level)
    rows = []
    for run in range(runs):
        for mean_index, mean in enumerate(gamma_means):
            key = noise_spawn_key(0, mean_index, run, common_random_numbers)
            cfg = NoiseConfig(level, float(mean), spurious_fraction, seed, spawn_key=key)
            noisy = inject(narrative, cfg)
            real = walking = spurious = 0
            for fact in noisy:
                if not _is_sta(fact) or fact.prob <= threshold:
                    continue
                if is_spurious(fact):
                    spurious += 1
                else:
                    real += 1
                    walking += fact.functor == "walking"
            rows.append({
                "gamma_mean": float(mean),
                "run": run,
                "real_above": real,
                "walking_above": walking,
                "spurious_above": spurious,
            })
    return pd.DataFrame(rows)
