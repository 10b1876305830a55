"""Validation scenarios: set / step / check scripts.

Syntax, one command per line (``//`` comments):

    set <monitored> := <value>;
    step
    check <location> = <value>;

Monitored values persist between steps until overwritten by a later set.
Unset monitored functions default to false / the first enum literal / 0.
The clock advances 1 s per step on machines with timers; a scenario that
sets ``mCurrTimeSecs`` itself takes the clock over from that point on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from .errors import AsmError, ModelSyntaxError, SetOnControlled, UnresolvedSymbol
from .interpreter import initial_state, step
from .syntax import CLOCK_FUNCTION, Binary, Expr, Machine, Name, Unary, Value, format_value


@dataclass(frozen=True)
class SetCmd:
    location: str
    value: Value
    line: int


@dataclass(frozen=True)
class StepCmd:
    line: int


@dataclass(frozen=True)
class CheckCmd:
    location: str
    value: Value
    line: int


Command = Union[SetCmd, StepCmd, CheckCmd]


@dataclass
class Scenario:
    commands: List[Command]

    def __len__(self) -> int:
        return len(self.commands)


@dataclass
class Pass:
    steps: int
    checks: int

    @property
    def passed(self) -> bool:
        return True


@dataclass
class FailedCheck:
    index: int  # command index within the scenario
    location: str
    expected: Value
    actual: Value

    @property
    def passed(self) -> bool:
        return False


def _parse_value(token: str, line: int) -> Value:
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    if token.replace("_", "").isalnum() and not token[0].isdigit():
        return token  # enum literal
    raise ModelSyntaxError(f"bad value {token!r}", line, 1)


def parse_scenario(text: str) -> Scenario:
    commands: List[Command] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if line == "step" or line == "step;":
            commands.append(StepCmd(lineno))
            continue
        if line.startswith("set "):
            body = line[4:].strip()
            if not body.endswith(";") or ":=" not in body:
                raise ModelSyntaxError("expected 'set <name> := <value>;'", lineno, 1)
            name, value = (part.strip() for part in body[:-1].split(":=", 1))
            commands.append(SetCmd(name, _parse_value(value, lineno), lineno))
            continue
        if line.startswith("check "):
            body = line[6:].strip()
            if not body.endswith(";") or "=" not in body:
                raise ModelSyntaxError("expected 'check <name> = <value>;'", lineno, 1)
            name, value = (part.strip() for part in body[:-1].split("=", 1))
            commands.append(CheckCmd(name, _parse_value(value, lineno), lineno))
            continue
        raise ModelSyntaxError(f"unknown command {line.split()[0]!r}", lineno, 1)
    return Scenario(commands)


def default_env(machine: Machine) -> Dict[str, Value]:
    env: Dict[str, Value] = {}
    for f in machine.monitored_inputs():
        if f.codomain == "Boolean":
            env[f.name] = False
        elif f.codomain in machine.domains:
            env[f.name] = machine.domains[f.codomain][0]
        else:
            env[f.name] = 0
    return env


def run_scenario(machine: Machine, scenario: Scenario) -> Union[Pass, FailedCheck]:
    env = default_env(machine)
    manual_clock = False
    state = initial_state(machine)
    steps = checks = 0
    for index, cmd in enumerate(scenario.commands):
        if isinstance(cmd, SetCmd):
            decl = machine.functions.get(cmd.location)
            if decl is None:
                raise UnresolvedSymbol(f"set of undeclared function '{cmd.location}'")
            if decl.kind != "monitored":
                raise SetOnControlled(cmd.location)
            if machine.uses_time and cmd.location == CLOCK_FUNCTION:
                manual_clock = True
            env[cmd.location] = cmd.value
        elif isinstance(cmd, StepCmd):
            step_env = dict(env)
            if machine.uses_time and not manual_clock:
                step_env[CLOCK_FUNCTION] = steps + 1
            state = step(machine, state, step_env)
            steps += 1
        else:
            checks += 1
            actual = _read_location(machine, state, env, cmd.location)
            if actual != cmd.value or type(actual) is not type(cmd.value):
                return FailedCheck(index, cmd.location, cmd.value, actual)
    return Pass(steps, checks)


def _read_location(machine: Machine, state, env, location: str) -> Value:
    decl = machine.functions.get(location)
    if decl is None:
        raise UnresolvedSymbol(f"check of undeclared function '{location}'")
    if decl.kind == "controlled":
        return state.controlled[location]
    if decl.kind == "monitored":
        return env[location]
    raise UnresolvedSymbol(f"check target '{location}' must be monitored or controlled")


def load_bundled(name: str) -> Scenario:
    from .models import asset_text
    return parse_scenario(asset_text(f"scenarios/{name}"))


# -- counterexample export ---------------------------------------------------

def _first_controlled_atom(machine: Machine, expr: Expr) -> Optional[str]:
    if isinstance(expr, Name):
        decl = machine.functions.get(expr.ident)
        if decl is not None and decl.kind == "controlled":
            return expr.ident
        return None
    if isinstance(expr, Unary):
        return _first_controlled_atom(machine, expr.operand)
    if isinstance(expr, Binary):
        return (_first_controlled_atom(machine, expr.left)
                or _first_controlled_atom(machine, expr.right))
    return None


def _different_value(machine: Machine, location: str, reached: Value) -> Value:
    codomain = machine.functions[location].codomain
    if codomain == "Boolean":
        return not reached
    for literal in machine.domains[codomain]:
        if literal != reached:
            return literal
    return reached


def counterexample_to_scenario(machine: Machine, cex) -> str:
    """Scenario text whose deliberately failing check replays the violation.

    The check at the violating step asserts, for the first controlled
    location the property mentions, a value other than the one reached:
    what safety required. Running the scenario therefore reproduces
    FailedCheck exactly at the recorded step.
    """
    lines = [f"// counterexample for: {cex.property.text}"]
    if cex.abstract_only:
        lines.append("// abstract-only: no clock schedule realises this path")
    previous = default_env(machine)
    for env in cex.input_envs:
        for name, value in env.items():
            if name == CLOCK_FUNCTION:
                clock = int(value) if float(value).is_integer() else value
                lines.append(f"set {CLOCK_FUNCTION} := {clock};")
            elif previous.get(name) != value or type(previous.get(name)) is not type(value):
                lines.append(f"set {name} := {format_value(value)};")
                previous[name] = value
        lines.append("step")
    target = _first_controlled_atom(machine, cex.property.p)
    if target is None and cex.property.q is not None:
        target = _first_controlled_atom(machine, cex.property.q)
    if target is not None:
        reached = cex.controlled_path[-1][target]
        required = _different_value(machine, target, reached)
        lines.append(f"check {target} = {format_value(required)};")
    return "\n".join(lines) + "\n"
