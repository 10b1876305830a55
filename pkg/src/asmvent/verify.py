"""Explicit-state reachability and invariant checking.

Two finite input abstractions:

- ``free_boolean``: every ``expired(t)`` atom becomes an unconstrained
  boolean input and timer state drops out of the state vector. Sound
  over-approximation of any clock, so spurious counterexamples are
  possible; every counterexample is therefore concretised by a
  clock-feasibility replay and flagged ``abstract_only`` when no clock
  schedule realises it.
- ``bounded_clock(tick, horizon)``: the concrete machine driven by a
  clock that advances one tick per step up to the horizon; timer starts
  and the clock are part of the explored state.

Successors are enumerated as disjoint input cubes (see engine.expand),
which is observationally the full Cartesian product per step.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .engine import compile_program, expand, get_backend, zero_completion
from .errors import StateSpaceBudgetExceeded, UnknownAtom, UnresolvedSymbol
from .interpreter import eval_rule, initial_state, run
from .parser import ModelSyntaxError, Parser, tokenize
from .syntax import (
    Binary,
    CLOCK_FUNCTION,
    Const,
    Expr,
    Machine,
    MachineState,
    Name,
    Trace,
    Unary,
    Value,
    timer_location,
)

DEFAULT_STATE_BUDGET = 10 ** 6


@dataclass(frozen=True)
class AbstractionConfig:
    timer_mode: str  # "freeBoolean" | "boundedClock"
    tick: int = 1000  # ms, boundedClock only
    horizon: int = 20000  # ms, boundedClock only
    state_budget: int = DEFAULT_STATE_BUDGET


def free_boolean(state_budget: int = DEFAULT_STATE_BUDGET) -> AbstractionConfig:
    return AbstractionConfig("freeBoolean", state_budget=state_budget)


def bounded_clock(tick_ms: int, horizon_ms: int,
                  state_budget: int = DEFAULT_STATE_BUDGET) -> AbstractionConfig:
    return AbstractionConfig("boundedClock", tick=tick_ms, horizon=horizon_ms,
                             state_budget=state_budget)


Node = Tuple[Tuple[int, ...], int]  # (state vector, clock ms)


@dataclass
class TransitionSystem:
    machine: Machine
    abstraction: AbstractionConfig
    program: object
    nodes: List[Node]
    index: Dict[Node, int]
    edges: List[Dict[int, Tuple[int, ...]]]  # node -> successor -> min cube
    parents: List[Optional[Tuple[int, Tuple[int, ...]]]]  # BFS tree

    @property
    def n_states(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(out) for out in self.edges)

    def controlled_at(self, i: int) -> Dict[str, Value]:
        decoded = self.program.decode_state(self.nodes[i][0])
        if self.abstraction.timer_mode == "boundedClock":
            return decoded
        return decoded

    def visible_at(self, i: int) -> Dict[str, Value]:
        """Controller-visible controlled valuation (timer state stripped)."""
        prog = self.program
        vec = self.nodes[i][0]
        out: Dict[str, Value] = {}
        for j in range(prog.n_visible):
            values = prog.loc_values[j]
            out[prog.state_locs[j]] = int(vec[j]) if values is None else values[vec[j]]
        return out

    def path_to(self, i: int) -> Tuple[List[int], List[Tuple[int, ...]]]:
        """BFS-tree path from the initial node: (node ids, cubes taken)."""
        ids: List[int] = [i]
        cubes: List[Tuple[int, ...]] = []
        while self.parents[ids[0]] is not None:
            parent, cube = self.parents[ids[0]]  # type: ignore[misc]
            ids.insert(0, parent)
            cubes.insert(0, cube)
        return ids, cubes


def build_ts(machine: Machine, abstraction: AbstractionConfig,
             backend: Optional[str] = None) -> TransitionSystem:
    """BFS-complete reachable transition system under the abstraction."""
    bounded = abstraction.timer_mode == "boundedClock"
    prog = compile_program(machine, "concrete" if bounded else "free")
    kernel = get_backend(backend)
    init_vec = prog.encode_state(initial_state(machine).controlled)
    init: Node = (init_vec, 0)
    nodes: List[Node] = [init]
    index: Dict[Node, int] = {init: 0}
    edges: List[Dict[int, Tuple[int, ...]]] = [{}]
    parents: List[Optional[Tuple[int, Tuple[int, ...]]]] = [None]
    frontier = [0]
    while frontier:
        next_frontier: List[int] = []
        for node_id in frontier:
            vec, clock = nodes[node_id]
            step_clock = clock + abstraction.tick if bounded else 0
            if bounded and step_clock > abstraction.horizon:
                continue
            for cube, succ_vec in expand(prog, vec, clock=step_clock, kernel=kernel):
                succ: Node = (succ_vec, step_clock if bounded else 0)
                succ_id = index.get(succ)
                if succ_id is None:
                    succ_id = len(nodes)
                    if succ_id >= abstraction.state_budget:
                        raise StateSpaceBudgetExceeded(abstraction.state_budget)
                    nodes.append(succ)
                    index[succ] = succ_id
                    edges.append({})
                    parents.append((node_id, cube))
                    next_frontier.append(succ_id)
                out = edges[node_id]
                if succ_id not in out or cube < out[succ_id]:
                    out[succ_id] = cube
        frontier = next_frontier
    return TransitionSystem(machine, abstraction, prog, nodes, index, edges, parents)


# -- properties --------------------------------------------------------------

@dataclass(frozen=True)
class InvariantProperty:
    form: str  # "always" | "always_implies" | "never"
    p: Expr
    q: Optional[Expr] = None
    text: str = ""

    def holds_on(self, controlled: Dict[str, Value], machine: Machine) -> bool:
        state = MachineState(controlled=controlled, monitored_env={}, clock=0)
        p = _eval_prop(machine, state, self.p)
        if self.form == "never":
            return not p
        if self.form == "always":
            return p
        q = _eval_prop(machine, state, self.q)
        return (not p) or q


def _eval_prop(machine: Machine, state: MachineState, expr: Expr) -> bool:
    from .interpreter import eval_expr
    return bool(eval_expr(machine, state, expr))


def parse_property(text: str, machine: Machine) -> InvariantProperty:
    """Parse ``g(...)`` / ``not f(...)`` / ``g(p implies q)`` properties."""
    parser = _PropertyParser(tokenize(text.strip()), machine)
    return parser.parse(text.strip())


class _PropertyParser(Parser):
    def __init__(self, tokens, machine: Machine):
        super().__init__(tokens)
        self.machine = machine

    def parse(self, original: str) -> InvariantProperty:
        if self.at("not"):
            self.advance()
            self._expect_ident("f")
            body = self._parens()
            self.expect("EOF")
            return InvariantProperty("never", body, text=original)
        self._expect_ident("g")
        self.expect("(")
        left = self.parse_expr()  # stop before a top-level 'implies'
        if self.at("IDENT") and self.cur.value == "implies":
            self.advance()
            right = self.parse_implies()
            self.expect(")")
            self.expect("EOF")
            self._check_atoms(left)
            self._check_atoms(right)
            return InvariantProperty("always_implies", left, right, text=original)
        self.expect(")")
        self.expect("EOF")
        self._check_atoms(left)
        return InvariantProperty("always", left, text=original)

    def _expect_ident(self, name: str) -> None:
        if not (self.at("IDENT") and self.cur.value == name):
            self.fail(f"'{name}'")
        self.advance()

    def _parens(self) -> Expr:
        self.expect("(")
        body = self.parse_implies()
        self.expect(")")
        self._check_atoms(body)
        return body

    def parse_implies(self) -> Expr:
        left = self.parse_expr()
        if self.at("IDENT") and self.cur.value == "implies":
            self.advance()
            right = self.parse_implies()
            return Binary("or", Unary("not", left), right)
        return left

    def parse_factor(self) -> Expr:
        # allow a parenthesised implication anywhere an atom may appear
        if self.at("("):
            self.advance()
            inner = self.parse_implies()
            self.expect(")")
            return inner
        return super().parse_factor()

    def _check_atoms(self, expr: Expr) -> None:
        if isinstance(expr, Name):
            ident = expr.ident
            if ident in self.machine.literal_domain:
                return
            decl = self.machine.functions.get(ident)
            if decl is None:
                raise UnknownAtom(f"'{ident}' is not declared")
            if decl.kind != "controlled" or decl.timer_indexed:
                raise UnknownAtom(
                    f"property atoms must be controlled locations; '{ident}' "
                    f"is {decl.kind}")
            return
        if isinstance(expr, Unary):
            self._check_atoms(expr.operand)
        elif isinstance(expr, Binary):
            self._check_atoms(expr.left)
            self._check_atoms(expr.right)
        elif not isinstance(expr, Const):
            raise UnknownAtom(f"unsupported atom {expr!r}")


def parse_property_file(text: str, machine: Machine) -> List[InvariantProperty]:
    props = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        props.append(parse_property(line, machine))
    return props


# -- invariant checking -------------------------------------------------------

@dataclass
class Verified:
    property: InvariantProperty
    n_states: int
    n_edges: int
    seconds: float


@dataclass
class Counterexample:
    property: InvariantProperty
    violated_at: int  # step index of the violating state
    controlled_path: List[Dict[str, Value]]
    input_envs: List[Dict[str, Value]]  # concrete envs (clock in seconds)
    abstract_only: bool
    trace: Optional[Trace]  # concrete replay, when feasible


CheckResult = object  # Verified | Counterexample


def check_invariant(machine: Machine, prop: InvariantProperty,
                    abstraction: AbstractionConfig,
                    backend: Optional[str] = None,
                    ts: Optional[TransitionSystem] = None) -> CheckResult:
    started = time.perf_counter()
    if ts is None:
        ts = build_ts(machine, abstraction, backend=backend)
    for i in range(ts.n_states):  # BFS discovery order: first hit is shortest
        if not prop.holds_on(ts.visible_at(i), machine):
            return _counterexample(machine, ts, i, prop)
    return Verified(prop, ts.n_states, ts.n_edges, time.perf_counter() - started)


def _counterexample(machine: Machine, ts: TransitionSystem, node_id: int,
                    prop: InvariantProperty) -> Counterexample:
    ids, cubes = ts.path_to(node_id)
    controlled_path = [ts.visible_at(i) for i in ids]
    prog = ts.program
    if ts.abstraction.timer_mode == "boundedClock":
        envs = []
        for depth, cube in enumerate(cubes):
            env = prog.decode_atoms(zero_completion(cube))
            if machine.uses_time:
                env[CLOCK_FUNCTION] = (depth + 1) * ts.abstraction.tick / 1000.0
            envs.append(env)
        trace = run(machine, envs, len(envs))
        return Counterexample(prop, len(ids) - 1, controlled_path, envs, False, trace)
    envs, feasible = _concretize_clock(machine, prog, cubes)
    trace = None
    if feasible:
        trace = run(machine, envs, len(envs))
    return Counterexample(prop, len(ids) - 1, controlled_path, envs,
                          not feasible, trace)


def _concretize_clock(machine: Machine, prog, cubes) -> Tuple[List[Dict[str, Value]], bool]:
    """Greedy minimal clock schedule realising the expired-atom pattern."""
    timers = list(machine.timers)
    n_mon = len(machine.monitored_inputs())
    starts = {t: 0 for t in timers}
    state = initial_state(machine)
    clock = 0
    envs: List[Dict[str, Value]] = []
    feasible = True
    for cube in cubes:
        env = prog.decode_atoms(zero_completion(cube))
        for name in list(env):
            if name.startswith("expired("):
                del env[name]
        if not machine.uses_time:
            envs.append(env)
            continue
        lower, upper = clock, None
        for k, t in enumerate(timers):
            want = cube[n_mon + k]
            if want < 0:
                continue
            deadline = starts[t] + machine.timer_duration(t)
            if want == 1:
                lower = max(lower, deadline)
            else:
                upper = deadline - 1 if upper is None else min(upper, deadline - 1)
        if upper is not None and lower > upper:
            feasible = False
            env[CLOCK_FUNCTION] = clock / 1000.0
            envs.append(env)
            continue
        clock = lower
        env[CLOCK_FUNCTION] = clock / 1000.0
        envs.append(env)
        # replay the step to track timer resets
        eval_state = MachineState(state.controlled,
                                  dict(env, **{CLOCK_FUNCTION: clock}), clock)
        us = eval_rule(machine, eval_state,
                       machine.rules[machine.main_rule].body)
        new_controlled = dict(state.controlled)
        new_controlled.update(us.updates)
        for t in timers:
            loc = timer_location("start", t)
            if loc in us.updates:
                starts[t] = int(us.updates[loc])
        state = MachineState(new_controlled, {}, clock)
    return envs, feasible


def replay_reproduces(machine: Machine, cex: Counterexample) -> bool:
    """Replay the concrete inputs and re-check the violation at the step."""
    if cex.trace is None:
        return False
    final = cex.trace.states[cex.violated_at]
    visible = {loc: final.controlled[loc]
               for loc in cex.controlled_path[-1]}
    return (visible == cex.controlled_path[-1]
            and not cex.property.holds_on(visible, machine))
