"""AST node types and the machine/state data model.

Values are plain Python: booleans for Boolean, ints (milliseconds) for
Integer/Duration/Instant, and the literal name string for enum values.
Enum literal names are globally unique within a machine, so the string
alone identifies the value; the owning domain is looked up through
``Machine.literal_domain``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple, Union

Value = Union[bool, int, str]

BUILTIN_DOMAINS = ("Boolean", "Integer", "Duration", "Instant")

# Interface name of the monitored clock: providers supply it in seconds,
# the runtime stores milliseconds.
CLOCK_FUNCTION = "mCurrTimeSecs"
CLOCK_MIRROR = "clockMillis"
TIME_LIBRARY = "TimeLibrary"
RESET_TIMER_RULE = "r_reset_timer"


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Name:
    """Unapplied identifier: location, static, derived, enum literal or $var."""
    ident: str


@dataclass(frozen=True)
class App:
    """Application of a timer-indexed symbol: start($t), expired(timerX), ..."""
    func: str
    arg: str  # timer name or a $-variable


@dataclass(frozen=True)
class Unary:
    op: str  # "not"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # and or = != < <= > >= + - *
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Name, App, Unary, Binary]


# --- rules -----------------------------------------------------------------

@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Update:
    target: Union[Name, App]
    value: Expr


@dataclass(frozen=True)
class Par:
    rules: Tuple["Rule", ...]


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Rule"
    orelse: Optional["Rule"] = None


@dataclass(frozen=True)
class Call:
    rule: str
    arg: Optional[str] = None  # timer name or $-variable for r_reset_timer


Rule = Union[Skip, Update, Par, If, Call]


# --- declarations ----------------------------------------------------------

@dataclass
class FunctionDecl:
    name: str
    kind: str  # monitored | controlled | derived | static
    codomain: str
    timer_indexed: bool = False
    origin: str = ""  # "" = declared by the machine itself, else module name
    line: int = 0


@dataclass
class TimerDecl:
    name: str
    duration_static: str
    origin: str = ""
    line: int = 0


@dataclass
class RuleDecl:
    name: str
    body: Rule
    param: Optional[str] = None
    origin: str = ""
    line: int = 0


@dataclass
class DerivedDef:
    name: str
    body: Expr
    param: Optional[str] = None
    origin: str = ""


@dataclass
class Machine:
    """A parsed and resolved machine (or module, when main_rule is None)."""

    name: str
    is_module: bool = False
    domains: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    functions: Dict[str, FunctionDecl] = field(default_factory=dict)
    timers: Dict[str, TimerDecl] = field(default_factory=dict)
    rules: Dict[str, RuleDecl] = field(default_factory=dict)
    derived_defs: Dict[str, DerivedDef] = field(default_factory=dict)
    static_values: Dict[str, Value] = field(default_factory=dict)
    init: Dict[str, Value] = field(default_factory=dict)
    main_rule: Optional[str] = None
    imports: Tuple[str, ...] = ()
    literal_domain: Dict[str, str] = field(default_factory=dict)
    source_path: Optional[str] = None
    shadowed: Tuple[str, ...] = ()

    @property
    def uses_time(self) -> bool:
        return TIME_LIBRARY in self.imports

    def functions_of_kind(self, kind: str, own_only: bool = False) -> List[FunctionDecl]:
        return [
            f
            for f in self.functions.values()
            if f.kind == kind and not (own_only and f.origin)
        ]

    def monitored_inputs(self) -> List[FunctionDecl]:
        """Monitored functions an input provider must cover (clock excluded)."""
        return [
            f
            for f in self.functions_of_kind("monitored")
            if not (self.uses_time and f.name == CLOCK_FUNCTION)
        ]

    def controlled_locations(self) -> List[str]:
        """All controlled locations: declared ones plus per-timer starts."""
        locs: List[str] = []
        for f in self.functions_of_kind("controlled"):
            if f.timer_indexed:
                locs.extend(timer_location(f.name, t) for t in self.timers)
            else:
                locs.append(f.name)
        return locs

    def location_codomain(self, loc: str) -> str:
        name = loc.split("(", 1)[0]
        return self.functions[name].codomain

    def domain_values(self, codomain: str) -> Tuple[Value, ...]:
        if codomain == "Boolean":
            return (False, True)
        if codomain in self.domains:
            return self.domains[codomain]
        raise KeyError(f"domain '{codomain}' is not finite")

    def static_value(self, name: str) -> Value:
        if name not in self.static_values:
            raise KeyError(f"static function '{name}' has no bound value")
        return self.static_values[name]

    def timer_duration(self, timer: str) -> int:
        return int(self.static_value(self.timers[timer].duration_static))


def timer_location(func: str, timer: str) -> str:
    return f"{func}({timer})"


@dataclass(frozen=True)
class MachineState:
    """Total assignment of controlled locations plus the step's inputs."""

    controlled: Dict[str, Value]
    monitored_env: Dict[str, Value] = field(default_factory=dict)
    clock: int = 0  # milliseconds

    def get(self, loc: str) -> Value:
        return self.controlled[loc]


@dataclass
class UpdateSet:
    """Set of (location, value) pairs fired by one step.

    A location carries two pairs exactly when the step was contradictory;
    the first such contradiction is kept in ``clash``. As a set of pairs
    the value is order-insensitive: permuting par branches yields an
    equal update set.
    """

    values_by_loc: Dict[str, List[Value]] = field(default_factory=dict)
    clash: Optional[Tuple[str, Value, Value]] = None

    @property
    def consistent(self) -> bool:
        return self.clash is None

    @property
    def updates(self) -> Dict[str, Value]:
        """First value per location; the applicable map when consistent."""
        return {loc: vals[0] for loc, vals in self.values_by_loc.items()}

    def add(self, loc: str, value: Value) -> None:
        vals = self.values_by_loc.setdefault(loc, [])
        for v in vals:
            if v == value and type(v) is type(value):
                return
        vals.append(value)
        if len(vals) == 2 and self.clash is None:
            self.clash = (loc, vals[0], vals[1])

    def pairs(self) -> frozenset:
        return frozenset(
            (loc, v) for loc, vals in self.values_by_loc.items() for v in vals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UpdateSet):
            return NotImplemented
        return self.pairs() == other.pairs() and (self.clash is None) == (other.clash is None)


@dataclass
class Trace:
    states: List[MachineState]
    inputs: List[Dict[str, Value]]

    def __post_init__(self) -> None:
        assert len(self.inputs) == len(self.states) - 1

    def __len__(self) -> int:
        return len(self.states)


def apply_updates(state: MachineState, updates: Dict[str, Value], env: Dict[str, Value], clock: int) -> MachineState:
    controlled = dict(state.controlled)
    controlled.update(updates)
    return MachineState(controlled=controlled, monitored_env=dict(env), clock=clock)


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def parse_value_token(token: str) -> Optional[Value]:
    """Interpret a bare scenario/config token: boolean, integer or literal."""
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        return None
