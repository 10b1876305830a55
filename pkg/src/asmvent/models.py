"""Bundled controller models, timing configuration, and asset access.

The four controller levels live under ``assets/models`` together with
the timer library. ``load`` parses a level and binds its static duration
functions from a :class:`ControllerConfig`; the PCV phase durations are
derived from the respiratory rate and the I:E ratio, everything else is
configured directly, all in integer milliseconds.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Dict, Optional

from .errors import ConfigError
from .resolver import parse
from .syntax import Machine

LEVELS = (0, 1, 2, 3)


def asset_text(relpath: str) -> str:
    node = resources.files("asmvent.assets")
    for part in relpath.split("/"):
        node = node.joinpath(part)
    if not node.is_file():
        raise FileNotFoundError(f"no bundled asset '{relpath}'")
    return node.read_text(encoding="utf-8")


@dataclass(frozen=True)
class ControllerConfig:
    respiratory_rate: float  # breaths per minute
    ie_ratio: tuple  # (inspiratory, expiratory) parts
    inspiration_dur_pcv: int  # ms, derived from rate and ratio
    expiration_dur_pcv: int  # ms, derived
    min_insp_time_psv: int
    max_insp_time_psv: int
    min_exp_time_psv: int
    apnea_lag: int
    trigger_window_delay: int
    in_pause_dur: int
    ex_pause_dur: int
    rm_dur: int

    def static_values(self) -> Dict[str, int]:
        return {
            "inspirationDurPCV": self.inspiration_dur_pcv,
            "expirationDurPCV": self.expiration_dur_pcv,
            "minInspTimePSV": self.min_insp_time_psv,
            "maxInspTimePSV": self.max_insp_time_psv,
            "minExpTimePSV": self.min_exp_time_psv,
            "apneaLag": self.apnea_lag,
            "triggerWindowDelay": self.trigger_window_delay,
            "inPauseDur": self.in_pause_dur,
            "exPauseDur": self.ex_pause_dur,
            "rmDur": self.rm_dur,
        }


def make_config(respiratory_rate: float, ie_ratio: tuple, **durations: int) -> ControllerConfig:
    """Build a config, deriving the PCV phase durations from RR and I:E."""
    if respiratory_rate <= 0:
        raise ConfigError("respiratoryRate must be > 0")
    insp_part, exp_part = ie_ratio
    if insp_part <= 0 or exp_part <= 0:
        raise ConfigError("both parts of the I:E ratio must be > 0")
    cycle_ms = round(60000.0 / respiratory_rate)
    insp_ms = round(cycle_ms * insp_part / (insp_part + exp_part))
    exp_ms = cycle_ms - insp_ms
    cfg = ControllerConfig(
        respiratory_rate=respiratory_rate,
        ie_ratio=(insp_part, exp_part),
        inspiration_dur_pcv=insp_ms,
        expiration_dur_pcv=exp_ms,
        min_insp_time_psv=durations["minInspTimePSV"],
        max_insp_time_psv=durations["maxInspTimePSV"],
        min_exp_time_psv=durations["minExpTimePSV"],
        apnea_lag=durations["apneaLag"],
        trigger_window_delay=durations["triggerWindowDelay"],
        in_pause_dur=durations["inPauseDur"],
        ex_pause_dur=durations["exPauseDur"],
        rm_dur=durations["rmDur"],
    )
    for name, value in cfg.static_values().items():
        if value <= 0:
            raise ConfigError(f"duration '{name}' must be > 0, got {value}")
    return cfg


def parse_key_values(text: str, what: str) -> Dict[str, str]:
    """Parse a plain ``key = value`` file ('#' starts a comment)."""
    out: Dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{what}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{what}:{lineno}: expected 'key = value'")
        if key in out:
            raise ConfigError(f"{what}:{lineno}: duplicate key '{key}'")
        out[key] = value
    return out


def parse_config_text(text: str, what: str = "config") -> ControllerConfig:
    pairs = parse_key_values(text, what)
    try:
        rate = float(pairs.pop("respiratoryRate"))
        ie_text = pairs.pop("ieRatio")
        durations = {key: int(value) for key, value in pairs.items()}
    except KeyError as exc:
        raise ConfigError(f"{what}: missing key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    parts = ie_text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{what}: ieRatio must look like '1:2'")
    try:
        ie = (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    required = {
        "minInspTimePSV", "maxInspTimePSV", "minExpTimePSV", "apneaLag",
        "triggerWindowDelay", "inPauseDur", "exPauseDur", "rmDur",
    }
    missing = required - durations.keys()
    if missing:
        raise ConfigError(f"{what}: missing keys {sorted(missing)}")
    extra = durations.keys() - required
    if extra:
        raise ConfigError(f"{what}: unknown keys {sorted(extra)}")
    return make_config(rate, ie, **durations)


def parse_config_file(path: str) -> ControllerConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), what=path)


def default_config() -> ControllerConfig:
    return parse_config_text(asset_text("models/default.config"), "default.config")


def fast_timers_config() -> ControllerConfig:
    """Whole-second timings for the 1 s test clock; pinned by the test suites."""
    return parse_config_text(asset_text("models/fast_timers.config"), "fast_timers.config")


def bind_statics(machine: Machine, config: ControllerConfig) -> Machine:
    values = config.static_values()
    for decl in machine.functions_of_kind("static"):
        if decl.name in machine.static_values:
            continue
        if decl.name not in values:
            raise ConfigError(f"no configured value for static '{decl.name}'")
        machine.static_values[decl.name] = values[decl.name]
    return machine


def load(level: int, config: Optional[ControllerConfig] = None) -> Machine:
    """Load a bundled controller level with its statics bound."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level}")
    name = f"MVMController{level:02d}"
    machine = parse(asset_text(f"models/{name}.asm"), origin=f"<bundled>/{name}.asm")
    return bind_statics(machine, config or default_config())


def load_time_library() -> Machine:
    return parse(asset_text("models/TimeLibrary.asm"), origin="<bundled>/TimeLibrary.asm")
