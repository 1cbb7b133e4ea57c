"""
Evaluation harness
Frame-level precision/recall/F-measure and noise sweeps comparing the crisp
engine on filtered input with the probabilistic engine on noisy input
"""

import json
import logging
import time
from dataclasses import dataclass
from datetime import datetime
from multiprocessing import Pool
from pathlib import Path

import pandas as pd

from crisp_engine import crisp_recognize
from noise_lab import NoiseConfig, NoiseLevel, filter_for_crisp, inject, noise_spawn_key
from prob_engine import recognize

logger = logging.getLogger(__name__)

SYMMETRIC_ACTIVITIES = frozenset({"meeting", "moving", "fighting"})
LTA_FUNCTORS = ("fighting", "leaving_object", "meeting", "moving")

SWEEP_COLUMNS = [
    "engine", "level", "gamma_mean", "threshold", "activity", "run",
    "tp", "fp", "fn", "precision", "recall", "fmeasure",
]
SUMMARY_KEYS = ["engine", "level", "gamma_mean", "threshold", "activity"]


def canonical(atom):
    """Unordered entity pair for symmetric activities"""
    if atom.functor in SYMMETRIC_ACTIVITIES and len(atom.args) == 2:
        a, b = atom.args
        if str(b) < str(a):
            return type(atom)(atom.functor, (b, a), atom.value)
    return atom


def canonicalize(items):
    return {(canonical(atom), int(t)) for atom, t in items}


@dataclass(frozen=True)
class Metrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self):
        total = self.tp + self.fp
        return self.tp / total if total else 0.0

    @property
    def recall(self):
        total = self.tp + self.fn
        return self.tp / total if total else 0.0

    @property
    def fmeasure(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @classmethod
    def from_sets(cls, recognized, truth):
        return cls(
            tp=len(recognized & truth),
            fp=len(recognized - truth),
            fn=len(truth - recognized),
        )

    def as_dict(self):
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "fmeasure": self.fmeasure,
        }


def score(recognized, truth):
    """Frame-level counts over (fluent atom, frame) pairs"""
    return Metrics.from_sets(canonicalize(recognized), canonicalize(truth))


def score_by_activity(recognized, truth, activities=None):
    recognized = canonicalize(recognized)
    truth = canonicalize(truth)
    if activities is None:
        activities = sorted({atom.functor for atom, _ in recognized | truth})
    return {
        functor: Metrics.from_sets(
            {item for item in recognized if item[0].functor == functor},
            {item for item in truth if item[0].functor == functor},
        )
        for functor in activities
    }


def macro_fmeasure(by_activity):
    if not by_activity:
        return 0.0
    return sum(m.fmeasure for m in by_activity.values()) / len(by_activity)


def recognitions_from_traces(traces, threshold):
    return {
        (atom, t)
        for atom, trace in traces.items()
        for t in trace.recognitions(threshold)
    }


def recognitions_from_crisp(holds):
    return {(atom, t) for atom, frames in holds.items() for t in frames}


def metrics_frame(by_activity, **labels):
    rows = [
        {**labels, "activity": functor, **metrics.as_dict()}
        for functor, metrics in sorted(by_activity.items())
    ]
    return pd.DataFrame(rows)


# ---- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    level: NoiseLevel
    level_index: int
    gamma_mean: float
    mean_index: int
    run: int


def _point_rows(point, clean, truth, rules, thresholds, seed, spurious_fraction, activities, common_random_numbers):
    cfg = NoiseConfig(
        point.level, point.gamma_mean, spurious_fraction, seed,
        spawn_key=noise_spawn_key(point.level_index, point.mean_index, point.run, common_random_numbers),
    )
    noisy = inject(clean, cfg)
    labels = {"level": point.level.value, "gamma_mean": point.gamma_mean, "run": point.run}
    rows = []

    traces = recognize(rules, noisy)
    for threshold in thresholds:
        found = recognitions_from_traces(traces, threshold)
        for functor, metrics in score_by_activity(found, truth, activities).items():
            rows.append({"engine": "prob", "threshold": threshold, "activity": functor,
                         **labels, **metrics.as_dict()})

    for threshold in thresholds:
        holds = crisp_recognize(rules, filter_for_crisp(noisy, threshold))
        found = recognitions_from_crisp(holds)
        for functor, metrics in score_by_activity(found, truth, activities).items():
            rows.append({"engine": "crisp", "threshold": threshold, "activity": functor,
                         **labels, **metrics.as_dict()})

    logger.debug("sweep point %s mean=%s run=%d done", point.level.value, point.gamma_mean, point.run)
    return rows


def _run_point(task):
    return _point_rows(*task)


@dataclass(frozen=True)
class SweepResult:
    runs: pd.DataFrame
    summary: pd.DataFrame

    def to_csv(self, out, summary=True):
        frame = self.summary if summary else self.runs
        return frame.to_csv(out, index=False, float_format="%.10g", lineterminator="\n")

    def fmeasure(self, engine, gamma_mean, threshold, activity=None):
        """Mean F-measure at one point; macro over activities when activity is None"""
        frame = self.summary
        selected = frame[
            (frame.engine == engine)
            & (frame.gamma_mean == gamma_mean)
            & (frame.threshold == threshold)
        ]
        if activity is not None:
            selected = selected[selected.activity == activity]
        return float(selected.fmeasure_mean.mean())


def summarize(runs):
    grouped = runs.groupby(SUMMARY_KEYS, sort=True)
    summary = grouped.agg(
        fmeasure_mean=("fmeasure", "mean"),
        fmeasure_std=("fmeasure", lambda s: s.std(ddof=0)),
        precision_mean=("precision", "mean"),
        recall_mean=("recall", "mean"),
        runs=("run", "count"),
    )
    return summary.reset_index()


def sweep(clean, truth, rules, levels, gamma_means, thresholds, runs=5, seed=0,
          spurious_fraction=0.5, activities=None, workers=1, common_random_numbers=False):
    """Score both engines at every (level, gamma mean, threshold, run)

    Each (level, gamma mean, run) point gets its own child seed, so results do
    not depend on worker count or scheduling. common_random_numbers shares one
    child across the gamma means of a (level, run) pair.
    """
    started = time.time()
    levels = [NoiseLevel(level) for level in levels]
    if activities is None:
        activities = sorted({canonical(atom).functor for atom, _ in truth})
    thresholds = [float(t) for t in thresholds]

    points = [
        SweepPoint(level, index, float(mean), mean_index, run)
        for index, level in enumerate(levels)
        for mean_index, mean in enumerate(gamma_means)
        for run in range(runs)
    ]
    tasks = [
        (point, clean, truth, rules, thresholds, seed, spurious_fraction, activities, common_random_numbers)
        for point in points
    ]
    logger.info("sweep: %d points, %d thresholds, workers=%d", len(points), len(thresholds), workers)

    if workers > 1:
        with Pool(processes=workers) as pool:
            chunks = pool.map(_run_point, tasks)
    else:
        chunks = [_run_point(task) for task in tasks]

    rows = [row for chunk in chunks for row in chunk]
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    frame = frame.sort_values(
        ["engine", "level", "gamma_mean", "threshold", "activity", "run"], kind="mergesort"
    ).reset_index(drop=True)

    result = SweepResult(frame, summarize(frame))
    logger.info("sweep finished in %.2fs", time.time() - started)
    return result


def write_report(report_dir, kind, payload):
    """JSON run report named PROBEC_<KIND>_REPORT_<timestamp>.json"""
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    path = report_dir / f"PROBEC_{kind.upper()}_REPORT_{timestamp}.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"kind": kind, "generated": datetime.now().isoformat(), **payload}, f, indent=2, default=str)
    logger.info("report written to %s", path)
    return path
