"""Integer-coded step programs for the fast state-space kernels.

A machine's main rule (macros and derived functions inlined) compiles to
flat int arrays that a kernel evaluates against an integer state vector
and an atom (input) vector. Two compilation modes:

- concrete: the state carries every controlled location including timer
  starts; ``expired`` computes from the clock passed per step.
- free: timers are abstracted away; each ``expired(t)`` becomes one more
  free boolean atom and timer-start locations leave the state vector.

Kernels must evaluate with the same short-circuit order as the tree
walker so that all backends branch identically on unassigned atoms.
"""
from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..errors import UnsupportedConstruct
from ..syntax import (
    App,
    Binary,
    Call,
    CLOCK_FUNCTION,
    Const,
    Expr,
    If,
    Machine,
    Name,
    Par,
    Rule,
    Skip,
    Unary,
    Update,
    Value,
)

OP_SKIP = 0
OP_UPDATE = 1
OP_PAR = 2
OP_IF = 3
OP_CONST = 10
OP_LOC = 11
OP_ATOM = 12
OP_CLOCK = 13
OP_EXPIRED = 14
OP_NOT = 20
OP_AND = 21
OP_OR = 22
OP_EQ = 23
OP_NEQ = 24
OP_LT = 25
OP_LE = 26
OP_GT = 27
OP_GE = 28
OP_ADD = 29
OP_SUB = 30
OP_MUL = 31

STATUS_OK = 0
STATUS_CLASH = 1
STATUS_NEED_ATOM = 2


@dataclass
class Program:
    machine: Machine
    mode: str  # "concrete" | "free"
    state_locs: Tuple[str, ...]
    loc_values: Tuple[Optional[Tuple[Value, ...]], ...]  # None = raw integer
    n_visible: int  # leading locations that make up the abstract/visible state
    atom_names: Tuple[str, ...]
    atom_sizes: array  # 'i'; finite domain size per atom
    atom_values: Tuple[Optional[Tuple[Value, ...]], ...]
    kind: array = field(repr=False, default_factory=lambda: array("i"))
    a: array = field(repr=False, default_factory=lambda: array("i"))
    b: array = field(repr=False, default_factory=lambda: array("i"))
    c: array = field(repr=False, default_factory=lambda: array("i"))
    child_list: array = field(repr=False, default_factory=lambda: array("i"))
    timer_start_loc: array = field(repr=False, default_factory=lambda: array("i"))
    timer_duration: array = field(repr=False, default_factory=lambda: array("q"))
    root: int = -1

    @property
    def n_locs(self) -> int:
        return len(self.state_locs)

    @property
    def n_atoms(self) -> int:
        return len(self.atom_names)

    # -- encoding helpers ---------------------------------------------------

    def encode_value(self, values: Optional[Tuple[Value, ...]], v: Value) -> int:
        if values is None:
            return int(v)
        for i, candidate in enumerate(values):
            if candidate == v and type(candidate) is type(v):
                return i
        raise ValueError(f"{v!r} not in {values}")

    def encode_state(self, controlled: Dict[str, Value]) -> Tuple[int, ...]:
        return tuple(
            self.encode_value(self.loc_values[i], controlled[loc])
            for i, loc in enumerate(self.state_locs)
        )

    def decode_state(self, vec: Sequence[int]) -> Dict[str, Value]:
        out: Dict[str, Value] = {}
        for i, loc in enumerate(self.state_locs):
            values = self.loc_values[i]
            out[loc] = int(vec[i]) if values is None else values[vec[i]]
        return out

    def encode_atoms(self, env: Dict[str, Value]) -> Tuple[int, ...]:
        vec = []
        for i, name in enumerate(self.atom_names):
            if name not in env:
                vec.append(-1)
            else:
                vec.append(self.encode_value(self.atom_values[i], env[name]))
        return tuple(vec)

    def decode_atoms(self, vec: Sequence[int]) -> Dict[str, Value]:
        out: Dict[str, Value] = {}
        for i, name in enumerate(self.atom_names):
            if vec[i] >= 0:
                values = self.atom_values[i]
                out[name] = int(vec[i]) if values is None else values[vec[i]]
        return out


class _Compiler:
    def __init__(self, machine: Machine, mode: str):
        self.machine = machine
        self.mode = mode
        self.prog = self._build_skeleton()

    def _domain_values(self, codomain: str) -> Optional[Tuple[Value, ...]]:
        if codomain == "Boolean":
            return (False, True)
        if codomain in self.machine.domains:
            return self.machine.domains[codomain]
        return None

    def _build_skeleton(self) -> Program:
        m = self.machine
        locs: List[str] = []
        loc_values: List[Optional[Tuple[Value, ...]]] = []
        for f in m.functions_of_kind("controlled"):
            if f.timer_indexed or f.name == "clockMillis":
                continue
            locs.append(f.name)
            loc_values.append(self._domain_values(f.codomain))
        n_visible = len(locs)
        timer_names = list(m.timers)
        timer_start_loc = array("i")
        timer_duration = array("q")
        if self.mode == "concrete":
            start_funcs = [f.name for f in m.functions_of_kind("controlled")
                           if f.timer_indexed]
            for t in timer_names:
                for func in start_funcs:
                    if func == "start":
                        timer_start_loc.append(len(locs))
                    locs.append(f"{func}({t})")
                    loc_values.append(None)
                timer_duration.append(m.timer_duration(t))
        atom_names: List[str] = []
        atom_sizes = array("i")
        atom_values: List[Optional[Tuple[Value, ...]]] = []
        for f in m.monitored_inputs():
            values = self._domain_values(f.codomain)
            if values is None:
                raise UnsupportedConstruct(
                    f"monitored '{f.name}' has an infinite domain; kernels need "
                    "finite inputs")
            atom_names.append(f.name)
            atom_sizes.append(len(values))
            atom_values.append(values)
        if self.mode == "free":
            for t in timer_names:
                atom_names.append(f"expired({t})")
                atom_sizes.append(2)
                atom_values.append((False, True))
        self.timer_index = {t: i for i, t in enumerate(timer_names)}
        self.loc_index = {loc: i for i, loc in enumerate(locs)}
        self.atom_index = {name: i for i, name in enumerate(atom_names)}
        return Program(
            machine=m,
            mode=self.mode,
            state_locs=tuple(locs),
            loc_values=tuple(loc_values),
            n_visible=n_visible,
            atom_names=tuple(atom_names),
            atom_sizes=atom_sizes,
            atom_values=tuple(atom_values),
            timer_start_loc=timer_start_loc,
            timer_duration=timer_duration,
        )

    # -- node emission -----------------------------------------------------

    def emit(self, kind: int, a: int = 0, b: int = 0, c: int = 0) -> int:
        p = self.prog
        p.kind.append(kind)
        p.a.append(a)
        p.b.append(b)
        p.c.append(c)
        return len(p.kind) - 1

    def compile(self) -> Program:
        m = self.machine
        if m.main_rule is None:
            raise UnsupportedConstruct(f"'{m.name}' has no main rule")
        self.prog.root = self.compile_rule(m.rules[m.main_rule].body, {})
        return self.prog

    def compile_rule(self, rule: Rule, binding: Dict[str, str]) -> int:
        if isinstance(rule, Skip):
            return self.emit(OP_SKIP)
        if isinstance(rule, Update):
            if isinstance(rule.target, App):
                timer = binding.get(rule.target.arg, rule.target.arg)
                loc = f"{rule.target.func}({timer})"
                if self.mode == "free":
                    return self.emit(OP_SKIP)  # timer state is abstracted away
            else:
                loc = rule.target.ident
            if loc not in self.loc_index:
                return self.emit(OP_SKIP)
            value = self.compile_expr(rule.value, binding)
            return self.emit(OP_UPDATE, self.loc_index[loc], value)
        if isinstance(rule, Par):
            children = [self.compile_rule(sub, binding) for sub in rule.rules]
            start = len(self.prog.child_list)
            self.prog.child_list.extend(children)
            return self.emit(OP_PAR, start, len(children))
        if isinstance(rule, If):
            cond = self.compile_expr(rule.cond, binding)
            then = self.compile_rule(rule.then, binding)
            orelse = -1
            if rule.orelse is not None:
                orelse = self.compile_rule(rule.orelse, binding)
            return self.emit(OP_IF, cond, then, orelse)
        if isinstance(rule, Call):
            decl = self.machine.rules[rule.rule]
            sub_binding: Dict[str, str] = {}
            if decl.param is not None:
                sub_binding = {decl.param: binding.get(rule.arg, rule.arg)}
            return self.compile_rule(decl.body, sub_binding)
        raise AssertionError(rule)

    def compile_expr(self, expr: Expr, binding: Dict[str, str]) -> int:
        m = self.machine
        if isinstance(expr, Const):
            return self.emit(OP_CONST, int(expr.value))
        if isinstance(expr, Name):
            ident = expr.ident
            if ident in binding:
                raise UnsupportedConstruct("timer variables cannot be read as values")
            if ident in m.literal_domain:
                domain = m.domains[m.literal_domain[ident]]
                return self.emit(OP_CONST, domain.index(ident))
            decl = m.functions[ident]
            if decl.kind == "monitored":
                if m.uses_time and ident == CLOCK_FUNCTION:
                    if self.mode == "free":
                        raise UnsupportedConstruct(
                            "raw clock reads do not survive the free-boolean "
                            "abstraction")
                    return self.emit(OP_CLOCK)
                return self.emit(OP_ATOM, self.atom_index[ident])
            if decl.kind == "controlled":
                if ident not in self.loc_index:
                    raise UnsupportedConstruct(
                        f"'{ident}' is not part of the kernel state")
                return self.emit(OP_LOC, self.loc_index[ident])
            if decl.kind == "static":
                value = m.static_value(ident)
                encoded = (m.domains[decl.codomain].index(value)
                           if decl.codomain in m.domains else int(value))
                return self.emit(OP_CONST, encoded)
            d = m.derived_defs[ident]
            return self.compile_expr(d.body, binding)
        if isinstance(expr, App):
            timer = binding.get(expr.arg, expr.arg)
            if expr.func == "expired" and "expired" in m.functions \
                    and m.functions["expired"].origin:
                tidx = self.timer_index[timer]
                if self.mode == "free":
                    base = len(m.monitored_inputs())
                    return self.emit(OP_ATOM, base + tidx)
                return self.emit(OP_EXPIRED, tidx)
            if expr.func == "duration" and expr.func not in m.functions:
                return self.emit(OP_CONST, m.timer_duration(timer))
            decl = m.functions[expr.func]
            if decl.kind == "controlled":
                loc = f"{expr.func}({timer})"
                if loc not in self.loc_index:
                    raise UnsupportedConstruct(
                        f"'{loc}' is not part of the kernel state")
                return self.emit(OP_LOC, self.loc_index[loc])
            d = m.derived_defs[expr.func]
            return self.compile_expr(d.body, {d.param: timer})
        if isinstance(expr, Unary):
            return self.emit(OP_NOT, self.compile_expr(expr.operand, binding))
        assert isinstance(expr, Binary)
        ops = {"and": OP_AND, "or": OP_OR, "=": OP_EQ, "!=": OP_NEQ,
               "<": OP_LT, "<=": OP_LE, ">": OP_GT, ">=": OP_GE,
               "+": OP_ADD, "-": OP_SUB, "*": OP_MUL}
        left = self.compile_expr(expr.left, binding)
        right = self.compile_expr(expr.right, binding)
        return self.emit(ops[expr.op], left, right)


def compile_program(machine: Machine, mode: str = "concrete") -> Program:
    if mode not in ("concrete", "free"):
        raise ValueError(f"unknown mode {mode!r}")
    return _Compiler(machine, mode).compile()
