"""Execution semantics: rules to update sets, steps, runs.

A step evaluates the main rule against the current state plus a fresh
monitored environment, rejects inconsistent update sets, and commits the
updates; untouched controlled locations persist. The timer library needs
no special cases here: ``r_reset_timer`` and ``expired`` execute from
their own definitions, and only ``duration($t)`` and the per-step
``clockMillis`` mirror are wired in.

Monitored clock convention: providers supply ``mCurrTimeSecs`` in
seconds (int or float); environments are normalised to millisecond
instants before evaluation.
"""
from __future__ import annotations

import random
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

from .errors import (
    AsmError,
    ClockRegression,
    InconsistentUpdateSet,
    MissingMonitoredInput,
    StepError,
    TypeMismatch,
    UnresolvedSymbol,
)
from .syntax import (
    App,
    Binary,
    Call,
    CLOCK_FUNCTION,
    CLOCK_MIRROR,
    Const,
    Expr,
    If,
    Machine,
    MachineState,
    Name,
    Par,
    Rule,
    Skip,
    Trace,
    Unary,
    Update,
    UpdateSet,
    Value,
    timer_location,
)

Tracer = Callable[[str, object], None]
InputProvider = Union[
    Callable[[int, MachineState], Dict[str, Value]],
    Sequence[Dict[str, Value]],
]


def initial_state(machine: Machine) -> MachineState:
    """State after default init: declared inits plus zeroed library locations."""
    controlled: Dict[str, Value] = dict(machine.init)
    for f in machine.functions_of_kind("controlled"):
        if f.timer_indexed:
            for t in machine.timers:
                controlled[timer_location(f.name, t)] = 0
        elif f.name not in controlled:
            # library-owned plain locations (the clock mirror) start at 0
            controlled[f.name] = 0
    return MachineState(controlled=controlled, monitored_env={}, clock=0)


# -- expression evaluation ----------------------------------------------

def eval_expr(machine: Machine, state: MachineState, expr: Expr,
              binding: Optional[Dict[str, str]] = None) -> Value:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Name):
        ident = expr.ident
        if ident.startswith("$"):
            if not binding or ident not in binding:
                raise UnresolvedSymbol(f"unbound variable '{ident}'")
            return binding[ident]
        if ident in machine.literal_domain:
            return ident
        decl = machine.functions.get(ident)
        if decl is None:
            raise UnresolvedSymbol(f"unknown name '{ident}'")
        if decl.kind == "monitored":
            if ident not in state.monitored_env:
                raise MissingMonitoredInput(ident)
            return state.monitored_env[ident]
        if decl.kind == "controlled":
            return state.controlled[ident]
        if decl.kind == "static":
            try:
                return machine.static_value(ident)
            except KeyError as exc:
                raise UnresolvedSymbol(str(exc)) from exc
        # derived
        return eval_expr(machine, state, machine.derived_defs[ident].body, binding)
    if isinstance(expr, App):
        timer = _resolve_timer(expr.arg, binding)
        decl = machine.functions.get(expr.func)
        if decl is None and expr.func == "duration":
            return machine.timer_duration(timer)
        if decl is None or not decl.timer_indexed:
            raise UnresolvedSymbol(f"unknown timer-indexed function '{expr.func}'")
        if decl.kind == "controlled":
            return state.controlled[timer_location(expr.func, timer)]
        if decl.kind == "derived":
            d = machine.derived_defs[expr.func]
            return eval_expr(machine, state, d.body, {d.param: timer})
        raise TypeMismatch(f"'{expr.func}' cannot be read with a timer argument")
    if isinstance(expr, Unary):
        return not _as_bool(eval_expr(machine, state, expr.operand, binding))
    if isinstance(expr, Binary):
        op = expr.op
        if op == "and":
            return (_as_bool(eval_expr(machine, state, expr.left, binding))
                    and _as_bool(eval_expr(machine, state, expr.right, binding)))
        if op == "or":
            return (_as_bool(eval_expr(machine, state, expr.left, binding))
                    or _as_bool(eval_expr(machine, state, expr.right, binding)))
        left = eval_expr(machine, state, expr.left, binding)
        right = eval_expr(machine, state, expr.right, binding)
        if op == "=":
            return _values_equal(left, right)
        if op == "!=":
            return not _values_equal(left, right)
        if op in ("<", "<=", ">", ">=", "+", "-", "*"):
            if isinstance(left, bool) or isinstance(right, bool) \
                    or not isinstance(left, int) or not isinstance(right, int):
                raise TypeMismatch(f"'{op}' needs numeric operands")
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            if op == ">=":
                return left >= right
            if op == "+":
                return left + right
            if op == "-":
                return left - right
            return left * right
    raise AssertionError(f"unknown expression node {expr!r}")


def _values_equal(left: Value, right: Value) -> bool:
    if isinstance(left, bool) != isinstance(right, bool):
        raise TypeMismatch(f"cannot compare {left!r} with {right!r}")
    return left == right


def _as_bool(v: Value) -> bool:
    if not isinstance(v, bool):
        raise TypeMismatch(f"expected a boolean, got {v!r}")
    return v


def _resolve_timer(arg: str, binding: Optional[Dict[str, str]]) -> str:
    if arg.startswith("$"):
        if not binding or arg not in binding:
            raise UnresolvedSymbol(f"unbound variable '{arg}'")
        return binding[arg]
    return arg


# -- rule evaluation ------------------------------------------------------

def eval_rule(machine: Machine, state: MachineState, rule: Rule,
              binding: Optional[Dict[str, str]] = None,
              tracer: Optional[Tracer] = None) -> UpdateSet:
    """Evaluate a rule to its update set; contradictions set ``clash``."""
    out = UpdateSet()
    _fire(machine, state, rule, binding, out, tracer)
    return out


def _fire(machine: Machine, state: MachineState, rule: Rule,
          binding: Optional[Dict[str, str]], out: UpdateSet,
          tracer: Optional[Tracer]) -> None:
    if isinstance(rule, Skip):
        return
    if isinstance(rule, Update):
        if isinstance(rule.target, App):
            timer = _resolve_timer(rule.target.arg, binding)
            loc = timer_location(rule.target.func, timer)
        else:
            loc = rule.target.ident
        out.add(loc, eval_expr(machine, state, rule.value, binding))
        return
    if isinstance(rule, Par):
        for sub in rule.rules:
            _fire(machine, state, sub, binding, out, tracer)
        return
    if isinstance(rule, If):
        taken = _as_bool(eval_expr(machine, state, rule.cond, binding))
        if tracer is not None:
            tracer("branch", (id(rule), taken))
        if taken:
            _fire(machine, state, rule.then, binding, out, tracer)
        elif rule.orelse is not None:
            _fire(machine, state, rule.orelse, binding, out, tracer)
        return
    if isinstance(rule, Call):
        decl = machine.rules[rule.rule]
        if tracer is not None:
            tracer("rule", rule.rule)
        sub_binding = None
        if decl.param is not None:
            sub_binding = {decl.param: _resolve_timer(rule.arg, binding)}
        _fire(machine, state, decl.body, sub_binding, out, tracer)
        return
    raise AssertionError(f"unknown rule node {rule!r}")


# -- stepping --------------------------------------------------------------

def normalize_env(machine: Machine, env: Dict[str, Value],
                  previous_clock: int) -> Dict[str, Value]:
    """Validate a monitored environment and convert the clock to ms."""
    out: Dict[str, Value] = {}
    for name, value in env.items():
        decl = machine.functions.get(name)
        if decl is None or decl.kind != "monitored":
            raise UnresolvedSymbol(f"'{name}' is not a monitored function")
        if machine.uses_time and name == CLOCK_FUNCTION:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeMismatch(f"clock value {value!r} is not a number")
            out[name] = int(round(value * 1000))
            continue
        codomain = decl.codomain
        if codomain == "Boolean":
            if not isinstance(value, bool):
                raise TypeMismatch(f"'{name}': {value!r} is not a Boolean")
        elif codomain in ("Integer", "Duration", "Instant"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeMismatch(f"'{name}': {value!r} is not numeric")
        else:
            if machine.literal_domain.get(value) != codomain:  # type: ignore[arg-type]
                raise TypeMismatch(f"'{name}': {value!r} is not in {codomain}")
        out[name] = value
    if machine.uses_time:
        if CLOCK_FUNCTION not in out:
            raise MissingMonitoredInput(CLOCK_FUNCTION)
        if out[CLOCK_FUNCTION] < previous_clock:
            raise ClockRegression(
                f"clock went from {previous_clock} ms to {out[CLOCK_FUNCTION]} ms")
    return out


def step(machine: Machine, state: MachineState, monitored_env: Dict[str, Value],
         tracer: Optional[Tracer] = None) -> MachineState:
    """One machine step under the given monitored environment."""
    if machine.main_rule is None:
        raise UnresolvedSymbol(f"'{machine.name}' is a module and cannot be stepped")
    env = normalize_env(machine, monitored_env, state.clock)
    clock = env.get(CLOCK_FUNCTION, state.clock) if machine.uses_time else state.clock
    eval_state = MachineState(controlled=state.controlled, monitored_env=env,
                              clock=clock)  # type: ignore[arg-type]
    updates = eval_rule(machine, eval_state, machine.rules[machine.main_rule].body,
                        tracer=tracer)
    if updates.clash is not None:
        raise InconsistentUpdateSet(*updates.clash)
    controlled = dict(state.controlled)
    controlled.update(updates.updates)
    if machine.uses_time:
        # the r_update_clock mirror fires implicitly on every step
        controlled[CLOCK_MIRROR] = clock
    return MachineState(controlled=controlled, monitored_env=env, clock=clock)


def run(machine: Machine, input_provider: InputProvider, n_steps: int,
        tracer: Optional[Tracer] = None) -> Trace:
    """Run ``n_steps`` steps; deterministic given machine and inputs."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if callable(input_provider):
        provider = input_provider
    else:
        envs = list(input_provider)

        def provider(i: int, _state: MachineState, _envs=envs) -> Dict[str, Value]:
            return _envs[i]

    states = [initial_state(machine)]
    inputs: List[Dict[str, Value]] = []
    for i in range(n_steps):
        env = dict(provider(i, states[-1]))
        try:
            states.append(step(machine, states[-1], env, tracer=tracer))
        except AsmError as exc:
            raise StepError(i, exc) from exc
        inputs.append(env)
    return Trace(states=states, inputs=inputs)


# -- input providers -------------------------------------------------------

def random_provider(machine: Machine, seed: int,
                    clock_step_s: int = 1) -> Callable[[int, MachineState], Dict[str, Value]]:
    """Uniform random inputs; the clock starts at 1 s and advances each step."""
    rng = random.Random(seed)
    inputs = machine.monitored_inputs()

    def provide(i: int, _state: MachineState) -> Dict[str, Value]:
        env: Dict[str, Value] = {}
        for f in inputs:
            if f.codomain == "Boolean":
                env[f.name] = rng.random() < 0.5
            elif f.codomain in machine.domains:
                env[f.name] = rng.choice(machine.domains[f.codomain])
            else:
                env[f.name] = 0
        if machine.uses_time:
            env[CLOCK_FUNCTION] = (i + 1) * clock_step_s
        return env

    return provide


def held_env_provider(machine: Machine,
                      defaults: Optional[Dict[str, Value]] = None,
                      clock_step_s: int = 1) -> "HeldEnvProvider":
    return HeldEnvProvider(machine, defaults, clock_step_s)


class HeldEnvProvider:
    """Inputs persist between steps until overwritten; clock auto-advances."""

    def __init__(self, machine: Machine, defaults: Optional[Dict[str, Value]],
                 clock_step_s: int = 1):
        self.machine = machine
        self.env: Dict[str, Value] = {}
        for f in machine.monitored_inputs():
            if f.codomain == "Boolean":
                self.env[f.name] = False
            elif f.codomain in machine.domains:
                self.env[f.name] = machine.domains[f.codomain][0]
            else:
                self.env[f.name] = 0
        if defaults:
            self.env.update(defaults)
        self.clock_step_s = clock_step_s

    def set(self, name: str, value: Value) -> None:
        self.env[name] = value

    def __call__(self, i: int, _state: MachineState) -> Dict[str, Value]:
        env = dict(self.env)
        if self.machine.uses_time and CLOCK_FUNCTION not in env:
            env[CLOCK_FUNCTION] = (i + 1) * self.clock_step_s
        return env
