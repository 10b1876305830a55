"""Independent oracles for the interpreter tests.

``naive_update_set`` re-implements rule firing from scratch as a plain
recursive enumeration over the rule tree, collecting raw (location,
value) pairs and only then looking for contradictions. It deliberately
shares no code with asmvent.interpreter so the two can check each other.
"""
from __future__ import annotations

import random

from asmvent.resolver import parse
from asmvent.syntax import (
    App,
    Binary,
    Call,
    Const,
    If,
    Machine,
    MachineState,
    Name,
    Par,
    Skip,
    Unary,
    Update,
)


def naive_eval(machine: Machine, state: MachineState, expr, env=None):
    env = env or {}
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Name):
        n = expr.ident
        if n in env:
            return env[n]
        if n in machine.literal_domain:
            return n
        kind = machine.functions[n].kind
        if kind == "monitored":
            return state.monitored_env[n]
        if kind == "controlled":
            return state.controlled[n]
        if kind == "static":
            return machine.static_values[n]
        d = machine.derived_defs[n]
        return naive_eval(machine, state, d.body, env)
    if isinstance(expr, App):
        timer = env.get(expr.arg, expr.arg)
        if expr.func == "duration" and expr.func not in machine.functions:
            return machine.static_values[machine.timers[timer].duration_static]
        decl = machine.functions[expr.func]
        if decl.kind == "controlled":
            return state.controlled[f"{expr.func}({timer})"]
        d = machine.derived_defs[expr.func]
        return naive_eval(machine, state, d.body, {d.param: timer})
    if isinstance(expr, Unary):
        return not naive_eval(machine, state, expr.operand, env)
    assert isinstance(expr, Binary)
    a = naive_eval(machine, state, expr.left, env)
    if expr.op == "and":
        return bool(a) and bool(naive_eval(machine, state, expr.right, env))
    if expr.op == "or":
        return bool(a) or bool(naive_eval(machine, state, expr.right, env))
    b = naive_eval(machine, state, expr.right, env)
    return {
        "=": lambda: a == b,
        "!=": lambda: a != b,
        "<": lambda: a < b,
        "<=": lambda: a <= b,
        ">": lambda: a > b,
        ">=": lambda: a >= b,
        "+": lambda: a + b,
        "-": lambda: a - b,
        "*": lambda: a * b,
    }[expr.op]()


def naive_pairs(machine: Machine, state: MachineState, rule, env=None):
    """All (location, value) assignments produced by firing ``rule``."""
    env = env or {}
    if isinstance(rule, Skip):
        return []
    if isinstance(rule, Update):
        if isinstance(rule.target, App):
            timer = env.get(rule.target.arg, rule.target.arg)
            loc = f"{rule.target.func}({timer})"
        else:
            loc = rule.target.ident
        return [(loc, naive_eval(machine, state, rule.value, env))]
    if isinstance(rule, Par):
        out = []
        for sub in rule.rules:
            out.extend(naive_pairs(machine, state, sub, env))
        return out
    if isinstance(rule, If):
        if naive_eval(machine, state, rule.cond, env):
            return naive_pairs(machine, state, rule.then, env)
        if rule.orelse is not None:
            return naive_pairs(machine, state, rule.orelse, env)
        return []
    assert isinstance(rule, Call)
    decl = machine.rules[rule.rule]
    sub_env = {}
    if decl.param is not None:
        sub_env = {decl.param: env.get(rule.arg, rule.arg)}
    return naive_pairs(machine, state, decl.body, sub_env)


def naive_update_set(machine: Machine, state: MachineState, rule):
    """Returns (updates-dict, clash-or-None) from the raw pair list."""
    pairs = naive_pairs(machine, state, rule)
    updates = {}
    clash = None
    for loc, value in pairs:
        if loc in updates and updates[loc] != value and clash is None:
            clash = (loc, updates[loc], value)
        elif loc not in updates:
            updates[loc] = value
    return updates, clash


def naive_step(machine: Machine, state: MachineState, env):
    """Successor controlled assignment, or the string 'clash'."""
    eval_state = MachineState(controlled=state.controlled, monitored_env=env,
                              clock=state.clock)
    body = machine.rules[machine.main_rule].body
    updates, clash = naive_update_set(machine, eval_state, body)
    if clash is not None:
        return "clash"
    new = dict(state.controlled)
    new.update(updates)
    return new


# --- random machine generation --------------------------------------------

class RandomMachineSource:
    """Generates small well-typed machine sources over boolean locations."""

    def __init__(self, rng: random.Random, n_controlled=3, n_monitored=3,
                 with_enum=False, allow_clash=True):
        self.rng = rng
        self.controlled = [f"c{i}" for i in range(1, n_controlled + 1)]
        self.monitored = [f"m{i}" for i in range(1, n_monitored + 1)]
        self.with_enum = with_enum
        self.allow_clash = allow_clash
        self.enum_literals = ("RED", "GREEN", "BLUE")

    def expr(self, depth: int) -> str:
        r = self.rng.random()
        if depth <= 0 or r < 0.3:
            pool = self.controlled + self.monitored + ["true", "false"]
            return self.rng.choice(pool)
        if r < 0.45:
            return f"not {self.expr(depth - 1)}"
        if r < 0.6 and self.with_enum:
            lit = self.rng.choice(self.enum_literals)
            return f"mode = {lit}"
        op = self.rng.choice(["and", "or", "=", "!="])
        left, right = self.expr(depth - 1), self.expr(depth - 1)
        if op in ("=", "!="):
            return f"(({left}) {op} ({right}))"
        return f"({left} {op} {right})"

    def rule(self, depth: int, macros) -> str:
        r = self.rng.random()
        if depth <= 0 or r < 0.35:
            loc = self.rng.choice(self.controlled)
            value = self.rng.choice(["true", "false", self.rng.choice(self.monitored)])
            return f"{loc} := {value}"
        if r < 0.45 and macros:
            return f"{self.rng.choice(macros)}[]"
        if r < 0.55:
            return "skip"
        if r < 0.8:
            body = [self.rule(depth - 1, macros)
                    for _ in range(self.rng.randint(2, 3))]
            return "par " + " ".join(body) + " endpar"
        orelse = ""
        if self.rng.random() < 0.5:
            orelse = f" else {self.rule(depth - 1, macros)}"
        return f"if {self.expr(2)} then {self.rule(depth - 1, macros)}{orelse} endif"

    def source(self, name="RandM") -> str:
        lines = [f"asm {name}", "signature:"]
        if self.with_enum:
            lines.append("    enum domain Color = { RED | GREEN | BLUE }")
            lines.append("    monitored mode : Color")
        for m in self.monitored:
            lines.append(f"    monitored {m} : Boolean")
        for c in self.controlled:
            lines.append(f"    controlled {c} : Boolean")
        lines.append("definitions:")
        macros = []
        for i in range(self.rng.randint(0, 2)):
            rule_name = f"r_m{i}"
            lines.append(f"    rule {rule_name} = {self.rule(2, macros)}")
            macros.append(rule_name)
        lines.append(f"    main rule r_Main = {self.rule(3, macros)}")
        lines.append("default init s0:")
        for c in self.controlled:
            lines.append(f"    function {c} = {self.rng.choice(['true', 'false'])}")
        return "\n".join(lines) + "\n"


def random_machine(rng: random.Random, **kwargs) -> Machine:
    return parse(RandomMachineSource(rng, **kwargs).source())


def random_env(rng: random.Random, machine: Machine):
    env = {}
    for f in machine.monitored_inputs():
        if f.codomain == "Boolean":
            env[f.name] = rng.random() < 0.5
        else:
            env[f.name] = rng.choice(machine.domains[f.codomain])
    return env
