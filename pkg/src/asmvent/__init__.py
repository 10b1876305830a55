"""Executable ASM workbench for the MVM ventilator controller."""
from .syntax import Machine, MachineState, Trace, UpdateSet
from .resolver import parse, parse_file
from .interpreter import eval_rule, initial_state, run, step
from .models import ControllerConfig, default_config, fast_timers_config, load

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig",
    "Machine",
    "MachineState",
    "Trace",
    "UpdateSet",
    "default_config",
    "eval_rule",
    "fast_timers_config",
    "initial_state",
    "load",
    "parse",
    "parse_file",
    "run",
    "step",
    "__version__",
]
