"""
Runtime configuration for the Prob-EC engine
Values come from environment variables with built-in defaults
"""

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from errors import ProbECError

BUNDLED_RULES_PATH = Path(__file__).with_name("activity_rules.pl")


@dataclass(frozen=True)
class ActivityThresholds:
    """Distance (pixels) and orientation (degrees) thresholds of the activity rules"""

    leaving_object_close: float = 30
    meeting_close: float = 25
    moving_close: float = 34
    moving_orientation: float = 45
    fighting_close: float = 44

    @classmethod
    def from_env(cls, environ=None):
        environ = os.environ if environ is None else environ
        values = {}
        for spec in fields(cls):
            raw = environ.get(f"PROBEC_{spec.name.upper()}")
            if raw is not None:
                values[spec.name] = _number(raw, f"PROBEC_{spec.name.upper()}")
        return cls(**values)

    def close_for(self, functor):
        """Close threshold used by the rules of one activity, None if it has none"""
        return {
            "leaving_object": self.leaving_object_close,
            "meeting": self.meeting_close,
            "moving": self.moving_close,
            "fighting": self.fighting_close,
        }.get(functor)


@dataclass(frozen=True)
class ProbECConfig:
    rules_path: Path = BUNDLED_RULES_PATH
    recognition_threshold: float = 0.5
    log_level: str = "WARNING"
    report_dir: Path = None
    common_random_numbers: bool = False
    thresholds: ActivityThresholds = field(default_factory=ActivityThresholds)

    @property
    def uses_bundled_rules(self):
        return self.rules_path == BUNDLED_RULES_PATH


def _number(raw, name):
    try:
        value = float(raw)
    except ValueError:
        raise ProbECError(f"{name} must be a number, got {raw!r}") from None
    return int(value) if value.is_integer() else value


def _flag(raw, name):
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise ProbECError(f"{name} must be a boolean (1/0, true/false), got {raw!r}")


def load_config(environ=None):
    """Build the configuration from the environment"""
    environ = os.environ if environ is None else environ

    threshold = _number(environ.get("PROBEC_THRESHOLD", "0.5"), "PROBEC_THRESHOLD")
    if not 0 < threshold < 1:
        raise ProbECError(f"PROBEC_THRESHOLD must lie in (0, 1), got {threshold}")

    return ProbECConfig(
        rules_path=Path(environ.get("PROBEC_RULES", str(BUNDLED_RULES_PATH))),
        recognition_threshold=float(threshold),
        log_level=environ.get("PROBEC_LOG_LEVEL", "WARNING").upper(),
        report_dir=Path(environ["PROBEC_REPORT_DIR"]) if environ.get("PROBEC_REPORT_DIR") else None,
        common_random_numbers=_flag(environ.get("PROBEC_COMMON_RANDOM_NUMBERS", "0"), "PROBEC_COMMON_RANDOM_NUMBERS"),
        thresholds=ActivityThresholds.from_env(environ),
    )
