"""
Command-line entry point for the Prob-EC engine
Subcommands: recognize, noise, filter, eval, sweep, validate, benchmark, occurrences
"""

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from enum import Enum
from pathlib import Path

from benchmark import synthetic_scene, write_benchmark
from config import load_config
from crisp_engine import crisp_recognize
from errors import ProbECError, UsageError, ValidationMismatch
from eval_harness import (
    metrics_frame,
    recognitions_from_crisp,
    recognitions_from_traces,
    score_by_activity,
    sweep,
    write_report,
)
from event_model import index_narrative
from fact_io import (
    emit_facts,
    read_annotation,
    read_facts,
    read_recognitions_csv,
    write_recognitions_csv,
    write_trace_csv,
)
from noise_lab import SWEEP_GAMMA_MEANS, NoiseConfig, NoiseLevel, filter_for_crisp, inject, occurrence_counts
from prob_engine import cross_check, recognize
from rule_dsl import load_rules

logger = logging.getLogger("probec")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Command(Enum):
    RECOGNIZE = "recognize"
    NOISE = "noise"
    FILTER = "filter"
    EVAL = "eval"
    SWEEP = "sweep"
    VALIDATE = "validate"
    BENCHMARK = "benchmark"
    OCCURRENCES = "occurrences"


def parse_values(text):
    """'0.5:8.0:0.5' (inclusive range) or '0.3,0.5,0.7'"""
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return tuple(round(start + i * step, 10) for i in range(count))
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step or a comma list, got {text!r}") from None


def parse_levels(text):
    try:
        return tuple(NoiseLevel(part.strip()) for part in text.split(",") if part.strip())
    except ValueError:
        choices = ", ".join(level.value for level in NoiseLevel)
        raise argparse.ArgumentTypeError(f"levels must be among {choices}, got {text!r}") from None


class ProbECArgumentParser(argparse.ArgumentParser):
    """Reports malformed arguments as UsageError instead of exiting with status 2"""

    def error(self, message):
        raise UsageError(message, self.prog)


def build_parser():
    parser = ProbECArgumentParser(prog="probec", description="Crisp and probabilistic Event Calculus activity recognition")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (env PROBEC_LOG_LEVEL)")
    parser.add_argument("--report-dir", default=None, help="write a JSON run report here (sweep, validate)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(Command.RECOGNIZE.value, help="recognize long-term activities")
    p.add_argument("--facts", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--engine", choices=("crisp", "prob"), default="prob")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--recognitions", action="store_true", help="prob engine: emit thresholded frames instead of the trace")
    p.add_argument("--out", default=None)

    p = sub.add_parser(Command.NOISE.value, help="attach Gamma-driven probabilities to a clean narrative")
    p.add_argument("--facts", required=True)
    p.add_argument("--level", type=NoiseLevel, choices=list(NoiseLevel), required=True)
    p.add_argument("--gamma-mean", type=float, required=True)
    p.add_argument("--spurious-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser(Command.FILTER.value, help="keep facts above a threshold, made crisp")
    p.add_argument("--facts", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser(Command.EVAL.value, help="score recognitions (or a thresholded trace) against an annotation")
    p.add_argument("--recognized", required=True, help="recognitions CSV, or a trace CSV")
    p.add_argument("--truth", required=True)
    p.add_argument("--threshold", type=float, default=None, help="applied when --recognized is a trace CSV")
    p.add_argument("--out", default=None)

    p = sub.add_parser(Command.SWEEP.value, help="noise sweep over both engines")
    p.add_argument("--facts", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--levels", type=parse_levels, default=(NoiseLevel.SMOOTH,))
    p.add_argument("--means", type=parse_values, default=SWEEP_GAMMA_MEANS)
    p.add_argument("--thresholds", type=parse_values, default=(0.3, 0.5, 0.7))
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spurious-fraction", type=float, default=0.5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--common-random-numbers", action="store_true",
                   help="share noise draws across gamma means (env PROBEC_COMMON_RANDOM_NUMBERS)")
    p.add_argument("--raw", action="store_true", help="emit one row per run instead of the aggregate")
    p.add_argument("--out", default=None)

    p = sub.add_parser(Command.VALIDATE.value, help="cross-check incremental, exact BDD and enumerated probabilities")
    p.add_argument("--facts", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--max-vars", type=int, default=25)

    p = sub.add_parser(Command.BENCHMARK.value, help="write the synthetic scene and its ground truth")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--episodes", type=int, default=1)

    p = sub.add_parser(Command.OCCURRENCES.value, help="above-threshold STA counts per gamma mean")
    p.add_argument("--facts", default=None, help="clean narrative; the synthetic scene when omitted")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--level", type=NoiseLevel, choices=list(NoiseLevel), default=NoiseLevel.STRONG)
    p.add_argument("--means", type=parse_values, default=SWEEP_GAMMA_MEANS)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--spurious-fraction", type=float, default=0.5)
    p.add_argument("--common-random-numbers", action="store_true",
                   help="share noise draws across gamma means (env PROBEC_COMMON_RANDOM_NUMBERS)")
    p.add_argument("--out", default=None)

    return parser


class ProbECCli:
    """Dispatches subcommands"""

    def __init__(self, config, stdout=None):
        self.config = config
        self.stdout = stdout if stdout is not None else sys.stdout
        self.handlers = {
            Command.RECOGNIZE.value: self.recognize_command,
            Command.NOISE.value: self.noise_command,
            Command.FILTER.value: self.filter_command,
            Command.EVAL.value: self.eval_command,
            Command.SWEEP.value: self.sweep_command,
            Command.VALIDATE.value: self.validate_command,
            Command.BENCHMARK.value: self.benchmark_command,
            Command.OCCURRENCES.value: self.occurrences_command,
        }

    def execute(self, args):
        """Run one subcommand; ProbECError propagates to the caller"""
        started = time.time()
        logger.info("executing %s", args.command)
        result = self.handlers[args.command](args)
        logger.info("%s finished in %.3fs", args.command, time.time() - started)
        return result

    # ---- helpers ----------------------------------------------------------

    @contextmanager
    def output(self, path):
        if path is None:
            yield self.stdout
            return
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f

    def rules(self, path):
        return load_rules(path or self.config.rules_path, self.config.thresholds)

    def threshold(self, value):
        threshold = self.config.recognition_threshold if value is None else value
        if not 0 < threshold < 1:
            raise ProbECError(f"threshold must lie in (0, 1), got {threshold}")
        return threshold

    def common_random_numbers(self, args):
        return args.common_random_numbers or self.config.common_random_numbers

    @staticmethod
    def narrative(path):
        return index_narrative(read_facts(path))

    def report(self, kind, payload):
        if self.config.report_dir is not None:
            return write_report(self.config.report_dir, kind, payload)
        return None

    # ---- commands ---------------------------------------------------------

    def recognize_command(self, args):
        narrative = self.narrative(args.facts)
        rules = self.rules(args.rules)
        with self.output(args.out) as out:
            if args.engine == "crisp":
                holds = crisp_recognize(rules, narrative)
                write_recognitions_csv(recognitions_from_crisp(holds), out)
            elif args.recognitions:
                traces = recognize(rules, narrative)
                write_recognitions_csv(recognitions_from_traces(traces, self.threshold(args.threshold)), out)
            else:
                write_trace_csv(recognize(rules, narrative), out)
        return 0

    def noise_command(self, args):
        narrative = self.narrative(args.facts)
        cfg = NoiseConfig(args.level, args.gamma_mean, args.spurious_fraction, args.seed)
        with self.output(args.out) as out:
            out.write(emit_facts(inject(narrative, cfg)))
        return 0

    def filter_command(self, args):
        narrative = self.narrative(args.facts)
        if not 0 <= args.threshold < 1:
            raise ProbECError(f"threshold must lie in [0, 1), got {args.threshold}")
        with self.output(args.out) as out:
            out.write(emit_facts(filter_for_crisp(narrative, args.threshold)))
        return 0

    def eval_command(self, args):
        recognized = read_recognitions_csv(args.recognized, self.threshold(args.threshold))
        truth = read_annotation(args.truth)
        table = metrics_frame(score_by_activity(recognized, truth))
        with self.output(args.out) as out:
            table.to_csv(out, index=False, float_format="%.10g", lineterminator="\n")
        return 0

    def sweep_command(self, args):
        clean = self.narrative(args.facts)
        truth = read_annotation(args.truth)
        started = time.time()
        result = sweep(
            clean, truth, self.rules(args.rules),
            levels=args.levels,
            gamma_means=args.means,
            thresholds=args.thresholds,
            runs=args.runs,
            seed=args.seed,
            spurious_fraction=args.spurious_fraction,
            workers=args.workers,
            common_random_numbers=self.common_random_numbers(args),
        )
        with self.output(args.out) as out:
            result.to_csv(out, summary=not args.raw)
        self.report("sweep", {
            "command": Command.SWEEP.value,
            "parameters": {
                "facts": args.facts,
                "truth": args.truth,
                "levels": [level.value for level in args.levels],
                "means": list(args.means),
                "thresholds": list(args.thresholds),
                "runs": args.runs,
                "seed": args.seed,
                "workers": args.workers,
                "common_random_numbers": self.common_random_numbers(args),
            },
            "duration_seconds": time.time() - started,
            "summary": result.summary.to_dict(orient="records"),
        })
        return 0

    def validate_command(self, args):
        narrative = self.narrative(args.facts)
        summary = cross_check(self.rules(args.rules), narrative, tolerance=args.tolerance, max_vars=args.max_vars)
        mismatches = summary["mismatches"]
        with self.output(None) as out:
            for key in (
                "atoms", "checked_bdd", "checked_enumeration",
                "skipped_bdd", "skipped_enumeration", "skipped_correlated",
            ):
                out.write(f"{key}: {summary[key]}\n")
            out.write(f"max_error: {summary['max_error']:.3g}\n")
            out.write(f"mismatches: {len(mismatches)}\n")
        self.report("validate", {
            "command": Command.VALIDATE.value,
            "parameters": {"facts": args.facts, "tolerance": args.tolerance, "max_vars": args.max_vars},
            "duration_seconds": summary["duration"],
            "summary": {
                **{k: v for k, v in summary.items() if k != "mismatches"},
                "mismatches": [
                    {"atom": str(atom), "frame": t, "values": values}
                    for atom, t, values in mismatches
                ],
            },
        })
        if mismatches:
            raise ValidationMismatch(mismatches)
        return 0

    def benchmark_command(self, args):
        facts_path, truth_path = write_benchmark(args.out_dir, args.episodes)
        self.stdout.write(f"{facts_path}\n{truth_path}\n")
        return 0

    def occurrences_command(self, args):
        if args.facts is None:
            narrative, _ = synthetic_scene(args.episodes)
        else:
            narrative = self.narrative(args.facts)
        table = occurrence_counts(
            narrative, args.means, seed=args.seed, runs=args.runs, threshold=args.threshold,
            level=args.level, spurious_fraction=args.spurious_fraction,
            common_random_numbers=self.common_random_numbers(args),
        )
        with self.output(args.out) as out:
            table.to_csv(out, index=False, float_format="%.10g", lineterminator="\n")
        return 0


def configure_logging(level):
    numeric = logging.getLevelName(str(level).upper())
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=numeric, format=LOG_FORMAT, force=True)


def run(argv=None, environ=None, stdout=None, stderr=None):
    """Parse argv, run the subcommand and return the process exit code"""
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        logger.error("%s", exc)
        stderr.write(f"probec: {exc}\n")
        return exc.exit_code
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)

    try:
        config = load_config(environ)
        configure_logging(args.log_level or config.log_level)
        if args.report_dir is not None:
            config = replace(config, report_dir=Path(args.report_dir))
        return ProbECCli(config, stdout).execute(args)
    except ProbECError as exc:
        logger.error("%s failed: %s", args.command, exc)
        stderr.write(f"probec {args.command}: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        logger.error("%s failed: %s", args.command, exc)
        stderr.write(f"probec {args.command}: {exc}\n")
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
