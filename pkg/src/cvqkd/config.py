"""Experiment configuration: defaults, validation, JSON round-trip.

The master seed falls back to the CVQKD_SEED environment variable so batch
runs can be re-seeded without editing config files.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_SEED = 20260816

THRESHOLD_UNIT_CHOICES = ("outcome", "alpha", "alpha_received")


def _default_seed() -> int:
    raw = os.environ.get("CVQKD_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"CVQKD_SEED must be an integer, got {raw!r}", field="seed") from None
    if value < 0:
        raise ConfigError("CVQKD_SEED must be non-negative", field="seed")
    return value


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one simulated key exchange needs, in one serializable place.

    threshold is either the string "auto" (solve for the break-even point and
    use it) or a number in the convention named by threshold_units:
    "outcome" means measured-variable units, "alpha" means multiples of the
    sent amplitude, "alpha_received" means multiples of the amplitude
    surviving the channel.
    """

    alpha: float = 0.6
    eta: float = 0.79
    excess_noise: float = 0.0
    threshold: float | str = "auto"
    threshold_units: str = "outcome"
    n_events: int = 100_000
    event_duration: float = 5e-4
    dead_time_fraction: float = 0.0
    seed: int = field(default_factory=_default_seed)
    simulate_eve: bool = False
    cascade_passes: int = 5
    cascade_block: int | None = None
    cascade_recovery_passes: int = 2
    safety_margin: int = 0

    def __post_init__(self):
        def bad(message, name):
            raise ConfigError(message, field=name)

        if not isinstance(self.alpha, (int, float)) or not self.alpha > 0:
            bad(f"alpha must be a positive number, got {self.alpha!r}", "alpha")
        if not isinstance(self.eta, (int, float)) or not 0 < self.eta <= 1:
            bad(f"eta must be in (0, 1], got {self.eta!r}", "eta")
        if not isinstance(self.excess_noise, (int, float)) or self.excess_noise < 0:
            bad(f"excess_noise must be >= 0, got {self.excess_noise!r}", "excess_noise")
        if isinstance(self.threshold, str):
            if self.threshold != "auto":
                bad(f'threshold must be a number or "auto", got {self.threshold!r}', "threshold")
        elif not isinstance(self.threshold, (int, float)) or self.threshold < 0 or not math.isfinite(self.threshold):
            bad(f"threshold must be finite and >= 0, got {self.threshold!r}", "threshold")
        if self.threshold_units not in THRESHOLD_UNIT_CHOICES:
            bad(
                f"threshold_units must be one of {THRESHOLD_UNIT_CHOICES}, got {self.threshold_units!r}",
                "threshold_units",
            )
        if not isinstance(self.n_events, int) or self.n_events < 1:
            bad(f"n_events must be a positive integer, got {self.n_events!r}", "n_events")
        if not isinstance(self.event_duration, (int, float)) or not self.event_duration > 0:
            bad(f"event_duration must be positive, got {self.event_duration!r}", "event_duration")
        if (
            not isinstance(self.dead_time_fraction, (int, float))
            or not 0 <= self.dead_time_fraction < 1
        ):
            bad(
                f"dead_time_fraction must be in [0, 1), got {self.dead_time_fraction!r}",
                "dead_time_fraction",
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            bad(f"seed must be a non-negative integer, got {self.seed!r}", "seed")
        if not isinstance(self.simulate_eve, bool):
            bad(f"simulate_eve must be a boolean, got {self.simulate_eve!r}", "simulate_eve")
        if not isinstance(self.cascade_passes, int) or self.cascade_passes < 1:
            bad(f"cascade_passes must be >= 1, got {self.cascade_passes!r}", "cascade_passes")
        if self.cascade_block is not None and (
            not isinstance(self.cascade_block, int) or self.cascade_block < 2
        ):
            bad(f"cascade_block must be null or an integer >= 2, got {self.cascade_block!r}", "cascade_block")
        if not isinstance(self.cascade_recovery_passes, int) or self.cascade_recovery_passes < 0:
            bad(
                f"cascade_recovery_passes must be >= 0, got {self.cascade_recovery_passes!r}",
                "cascade_recovery_passes",
            )
        if not isinstance(self.safety_margin, int) or self.safety_margin < 0:
            bad(f"safety_margin must be a non-negative integer, got {self.safety_margin!r}", "safety_margin")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


_FIELD_NAMES = {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    if not isinstance(payload, dict):
        raise ConfigError(f"top level must be an object, got {type(payload).__name__}")
    unknown = sorted(set(payload) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown fields: {', '.join(unknown)}", field=unknown[0])
    # booleans pass isinstance(int) checks; reject them where ints are expected
    for name in ("n_events", "seed", "cascade_passes", "cascade_recovery_passes", "safety_margin", "cascade_block"):
        if isinstance(payload.get(name), bool):
            raise ConfigError(f"{name} must be an integer, not a boolean", field=name)
    return ExperimentConfig(**payload)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return parse_config(text)
