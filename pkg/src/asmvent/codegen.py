"""C++ source generation: controller class, pin bindings, runtime loop.

The translation realises simultaneous ASM updates with double buffering:
every controlled location is a two-slot array, rule procedures read slot
0 and write slot 1, and ``fireUpdateSet`` commits slot 1 to slot 0 after
each main-rule call. Timer starts are buffered the same way, so a reset
becomes visible in the step after it fires, exactly as interpreted.

The generated implementation derives its clock from the monitored
``mCurrTimeSecs`` (seconds, possibly fractional); the hardware unit
feeds that from ``millis()``, and the generated unit tests drive it as a
plain monitored variable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import IncompletePinConfig, PinConfigError, UnsupportedConstruct
from .syntax import (
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
)

PIN_MODES = ("DIGITALIN", "DIGITALOUT", "ANALOGIN", "ANALOGOUT")


@dataclass(frozen=True)
class SourceBundle:
    declaration_unit: str
    implementation_unit: str
    unit_names: Tuple[str, str]


@dataclass
class PinBinding:
    mode: str
    function: str
    pin: str
    invert: bool = False


@dataclass
class PinConfig:
    arduino_version: str
    step_time: int
    bindings: List[PinBinding]

    def to_json(self) -> str:
        doc = {
            "arduinoVersion": self.arduino_version,
            "stepTime": self.step_time,
            "bindings": [
                dict(
                    [("mode", b.mode), ("function", b.function), ("pin", b.pin)]
                    + ([("invert", True)] if b.invert else [])
                )
                for b in self.bindings
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


@dataclass(frozen=True)
class RuntimeBundle:
    hardware_unit: str
    loop_unit: str
    unit_names: Tuple[str, str]


# -- helpers -------------------------------------------------------------

def _own_controlled(machine: Machine) -> List[str]:
    return [f.name for f in machine.functions_of_kind("controlled")
            if not f.timer_indexed and f.name != "clockMillis"]


def _cpp_type(machine: Machine, codomain: str) -> str:
    if codomain == "Boolean":
        return "bool"
    if codomain in machine.domains:
        return codomain
    return "long"


def _cpp_value(machine: Machine, codomain: str, value) -> str:
    if codomain == "Boolean":
        return "true" if value else "false"
    if codomain in machine.domains:
        return str(value)
    return str(int(value))


class _ExprWriter:
    def __init__(self, machine: Machine):
        self.machine = machine

    def write(self, expr: Expr, binding: Dict[str, str]) -> str:
        m = self.machine
        if isinstance(expr, Const):
            if isinstance(expr.value, bool):
                return "true" if expr.value else "false"
            return str(expr.value)
        if isinstance(expr, Name):
            ident = expr.ident
            if ident in m.literal_domain:
                return ident
            decl = m.functions[ident]
            if decl.kind == "monitored":
                if m.uses_time and ident == CLOCK_FUNCTION:
                    return "currTimeMillis()"
                return ident
            if decl.kind == "controlled":
                return f"{ident}[0]"
            if decl.kind == "static":
                return ident
            d = m.derived_defs[ident]
            return f"({self.write(d.body, binding)})"
        if isinstance(expr, App):
            timer = binding.get(expr.arg, expr.arg)
            if expr.func == "expired" and m.functions.get("expired") is not None \
                    and m.functions["expired"].origin:
                return f"expired({timer})"
            if expr.func == "duration" and "duration" not in m.functions:
                return f"timerDuration[{timer}]"
            decl = m.functions[expr.func]
            if decl.kind == "controlled":
                return f"timerStart[{timer}][0]"
            d = m.derived_defs[expr.func]
            return f"({self.write(d.body, {d.param: timer})})"
        if isinstance(expr, Unary):
            return f"!{self.write(expr.operand, binding)}"
        assert isinstance(expr, Binary)
        ops = {"and": "&&", "or": "||", "=": "==", "!=": "!=", "<": "<",
               "<=": "<=", ">": ">", ">=": ">=", "+": "+", "-": "-", "*": "*"}
        left = self.write(expr.left, binding)
        right = self.write(expr.right, binding)
        return f"({left} {ops[expr.op]} {right})"


class _RuleWriter:
    def __init__(self, machine: Machine):
        self.machine = machine
        self.exprs = _ExprWriter(machine)

    def write(self, rule: Rule, indent: int, binding: Dict[str, str]) -> List[str]:
        pad = "    " * indent
        if isinstance(rule, Skip):
            return []
        if isinstance(rule, Update):
            if isinstance(rule.target, App):
                timer = binding.get(rule.target.arg, rule.target.arg)
                target = f"timerStart[{timer}][1]"
            else:
                target = f"{rule.target.ident}[1]"
            return [f"{pad}{target} = {self.exprs.write(rule.value, binding)};"]
        if isinstance(rule, Par):
            lines: List[str] = []
            for sub in rule.rules:
                lines.extend(self.write(sub, indent, binding))
            return lines
        if isinstance(rule, Call):
            decl = self.machine.rules[rule.rule]
            if decl.param is not None:
                timer = binding.get(rule.arg, rule.arg)
                return [f"{pad}{rule.rule}({timer});"]
            return [f"{pad}{rule.rule}();"]
        assert isinstance(rule, If)
        lines = [f"{pad}if ({self.exprs.write(rule.cond, binding)}){{"]
        lines.extend(self.write(rule.then, indent + 1, binding))
        orelse = rule.orelse
        while isinstance(orelse, If):
            cond = self.exprs.write(orelse.cond, binding)
            lines.append(f"{pad}}} else if ({cond}){{")
            lines.extend(self.write(orelse.then, indent + 1, binding))
            orelse = orelse.orelse
        if orelse is not None:
            lines.append(f"{pad}}} else {{")
            lines.extend(self.write(orelse, indent + 1, binding))
        lines.append(f"{pad}}}")
        return lines


def _validate(machine: Machine) -> None:
    if machine.main_rule is None:
        raise UnsupportedConstruct(f"'{machine.name}' has no main rule to translate")
    for f in machine.functions.values():
        if f.timer_indexed and f.origin == "" :
            raise UnsupportedConstruct(
                f"timer-indexed function '{f.name}' outside the timer library")
    for decl in machine.functions_of_kind("static"):
        if decl.name not in machine.static_values:
            raise UnsupportedConstruct(
                f"static '{decl.name}' has no bound value; bind a configuration "
                "before generating code")


# -- public operations ----------------------------------------------------

def generate_source(machine: Machine) -> SourceBundle:
    """Deterministic header + implementation pair for the machine."""
    _validate(machine)
    m = machine
    name = m.name
    guard = f"{name.upper()}_H"
    timers = list(m.timers)
    controlled = _own_controlled(m)
    writer = _RuleWriter(m)
    src = m.source_path or f"{name}.asm"

    hdr: List[str] = [
        f"// Generated from {src}; do not edit by hand.",
        f"#ifndef {guard}",
        f"#define {guard}",
        "",
    ]
    for domain, literals in m.domains.items():
        hdr.append(f"enum {domain} {{ {', '.join(literals)} }};")
    if timers:
        hdr.append(f"enum {name}Timer {{ {', '.join(timers)}, {name.upper()}_TIMER_COUNT }};")
    hdr += ["", f"class {name} {{", "public:"]
    hdr.append("    // monitored functions (inputs)")
    for f in m.monitored_inputs():
        hdr.append(f"    {_cpp_type(m, f.codomain)} {f.name};")
    if m.uses_time:
        hdr.append(f"    double {CLOCK_FUNCTION};  // seconds; may be fractional")
    hdr.append("")
    hdr.append("    // controlled functions, double-buffered: [0] current, [1] next")
    for loc in controlled:
        hdr.append(f"    {_cpp_type(m, m.functions[loc].codomain)} {loc}[2];")
    if timers:
        hdr.append(f"    unsigned long timerStart[{name.upper()}_TIMER_COUNT][2];")
        hdr.append(f"    static const unsigned long timerDuration[{name.upper()}_TIMER_COUNT];")
    statics = [f for f in m.functions_of_kind("static")
               if f.name not in {m.timers[t].duration_static for t in timers}]
    for f in statics:
        value = _cpp_value(m, f.codomain, m.static_value(f.name))
        hdr.append(f"    static const {_cpp_type(m, f.codomain)} {f.name} = {value};")
    hdr += [
        "",
        f"    {name}();",
        "    void initControlledWithMonitored();",
        "    void fireUpdateSet();",
        "    void getInputs();   // defined by the hardware unit",
        "    void setOutputs();  // defined by the hardware unit",
    ]
    if m.uses_time:
        hdr.append("    unsigned long currTimeMillis();")
        hdr.append(f"    bool expired({name}Timer t);")
        hdr.append(f"    void r_reset_timer({name}Timer t);")
    for r in m.rules.values():
        if not r.origin:
            hdr.append(f"    void {r.name}();")
    hdr += ["};", "", f"#endif  // {guard}", ""]

    imp: List[str] = [
        f"// Generated from {src}; do not edit by hand.",
        f'#include "{name}.h"',
        "",
    ]
    if timers:
        durations = ", ".join(f"{m.timer_duration(t)}UL" for t in timers)
        imp.append(
            f"const unsigned long {name}::timerDuration[{name.upper()}_TIMER_COUNT] "
            f"= {{ {durations} }};")
        imp.append("")
    imp += [f"{name}::{name}(){{", "    initControlledWithMonitored();", "}", ""]
    imp.append(f"void {name}::initControlledWithMonitored(){{")
    for loc in controlled:
        value = _cpp_value(m, m.functions[loc].codomain, m.init[loc])
        imp.append(f"    {loc}[0] = {value}; {loc}[1] = {value};")
    if timers:
        imp.append(f"    for (int t = 0; t < {name.upper()}_TIMER_COUNT; ++t){{")
        imp.append("        timerStart[t][0] = 0UL; timerStart[t][1] = 0UL;")
        imp.append("    }")
    imp += ["}", ""]
    imp.append(f"void {name}::fireUpdateSet(){{")
    for loc in controlled:
        imp.append(f"    {loc}[0] = {loc}[1];")
    if timers:
        imp.append(f"    for (int t = 0; t < {name.upper()}_TIMER_COUNT; ++t)")
        imp.append("        timerStart[t][0] = timerStart[t][1];")
    imp += ["}", ""]
    if m.uses_time:
        imp += [
            "#ifndef ASMVENT_HW_TIME",
            f"unsigned long {name}::currTimeMillis(){{",
            f"    return (unsigned long)({CLOCK_FUNCTION} * 1000.0 + 0.5);",
            "}",
            "#endif",
            "",
            f"bool {name}::expired({name}Timer t){{",
            "    return currTimeMillis() - timerStart[t][0] >= timerDuration[t];",
            "}",
            "",
            f"void {name}::r_reset_timer({name}Timer t){{",
            "    timerStart[t][1] = currTimeMillis();",
            "}",
            "",
        ]
    for r in m.rules.values():
        if r.origin:
            continue
        imp.append(f"// rule {r.name} ({src}:{r.line})")
        imp.append(f"void {name}::{r.name}(){{")
        body = writer.write(r.body, 1, {})
        imp.extend(body if body else ["    ;"])
        imp += ["}", ""]
    return SourceBundle(
        declaration_unit="\n".join(hdr),
        implementation_unit="\n".join(imp),
        unit_names=(f"{name}.h", f"{name}.cpp"),
    )


def generate_pin_config(machine: Machine) -> PinConfig:
    """Skeleton binding list with empty pins for the user to complete."""
    _validate(machine)
    bindings = [PinBinding("DIGITALIN", f.name, "")
                for f in machine.monitored_inputs()]
    bindings += [PinBinding("DIGITALOUT", loc, "")
                 for loc in _own_controlled(machine)]
    return PinConfig(arduino_version="UNO", step_time=0, bindings=bindings)


def parse_pin_config(text: str, machine: Optional[Machine] = None) -> PinConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PinConfigError(f"invalid JSON: {exc}") from exc
    for key in ("arduinoVersion", "stepTime", "bindings"):
        if key not in doc:
            raise PinConfigError(f"missing field '{key}'")
    bindings = []
    for entry in doc["bindings"]:
        for key in ("mode", "function", "pin"):
            if key not in entry:
                raise PinConfigError(f"binding missing field '{key}'")
        if entry["mode"] not in PIN_MODES:
            raise PinConfigError(f"unknown mode {entry['mode']!r}")
        bindings.append(PinBinding(entry["mode"], entry["function"], entry["pin"],
                                   bool(entry.get("invert", False))))
    config = PinConfig(doc["arduinoVersion"], int(doc["stepTime"]), bindings)
    if machine is not None:
        validate_pin_config(machine, config)
    return config


def validate_pin_config(machine: Machine, config: PinConfig) -> None:
    seen_pins: Dict[str, str] = {}
    for b in config.bindings:
        decl = machine.functions.get(b.function)
        if decl is None or decl.timer_indexed or decl.kind not in ("monitored", "controlled"):
            raise PinConfigError(f"'{b.function}' is not a bindable function")
        if decl.kind == "monitored" and not b.mode.endswith("IN"):
            raise PinConfigError(f"monitored '{b.function}' needs an input mode")
        if decl.kind == "controlled" and not b.mode.endswith("OUT"):
            raise PinConfigError(f"controlled '{b.function}' needs an output mode")
        if b.pin:
            if b.pin in seen_pins:
                raise PinConfigError(
                    f"pin {b.pin} bound to both '{seen_pins[b.pin]}' and '{b.function}'")
            seen_pins[b.pin] = b.function


def _pin_token(pin: str) -> str:
    # "D8" -> 8 for digitalWrite/pinMode; analog names (A5) stay symbolic
    if pin.startswith("D") and pin[1:].isdigit():
        return pin[1:]
    return pin


def _domain_pair(machine: Machine, codomain: str) -> Tuple[str, str]:
    literals = machine.domains[codomain]
    if len(literals) != 2:
        raise PinConfigError(
            f"enum domain {codomain} has {len(literals)} literals; only "
            "booleans and two-literal enums fit a digital pin")
    return literals[0], literals[1]


def generate_runtime(machine: Machine, config: PinConfig) -> RuntimeBundle:
    """Hardware read/write unit and the cyclic execution sketch."""
    _validate(machine)
    validate_pin_config(machine, config)
    name = machine.name
    incomplete = [b.function for b in config.bindings if not b.pin]
    if incomplete:
        raise IncompletePinConfig(
            f"bindings without pins: {', '.join(incomplete)}")

    hw: List[str] = [f'#include "{name}.h"', ""]
    hw.append(f"void {name}::getInputs(){{")
    for b in config.bindings:
        if not b.mode.endswith("IN"):
            continue
        decl = machine.functions[b.function]
        pin = _pin_token(b.pin)
        level = "LOW" if b.invert else "HIGH"
        if b.mode == "ANALOGIN":
            read = f"(analogRead({pin}) > 512)"
        else:
            read = f"(digitalRead({pin}) == {level})"
        if decl.codomain == "Boolean":
            hw.append(f"    {b.function} = {read};")
        else:
            low, high = _domain_pair(machine, decl.codomain)
            hw.append(f"    {b.function} = {read} ? {high} : {low};")
    if machine.uses_time:
        hw.append(f"    {CLOCK_FUNCTION} = millis() / 1000.0;")
    hw += ["}", ""]
    hw.append(f"void {name}::setOutputs(){{")
    for b in config.bindings:
        if not b.mode.endswith("OUT"):
            continue
        decl = machine.functions[b.function]
        pin = _pin_token(b.pin)
        fn = b.function
        hw.append(f"    if ({fn}[0] != {fn}[1]){{")
        if b.mode == "ANALOGOUT":
            on, off = ("0", "255") if b.invert else ("255", "0")
            write = "analogWrite"
        else:
            on, off = ("LOW", "HIGH") if b.invert else ("HIGH", "LOW")
            write = "digitalWrite"
        if decl.codomain == "Boolean":
            cond, high_branch, low_branch = f"{fn}[1]", on, off
        else:
            # first literal drives the low level, mirroring the valve wiring
            first, _second = _domain_pair(machine, decl.codomain)
            cond, high_branch, low_branch = f"{fn}[1] == {first}", off, on
        hw.append(f"        if ({cond})")
        hw.append(f"            {write}({pin}, {high_branch});")
        hw.append("        else")
        hw.append(f"            {write}({pin}, {low_branch});")
        hw.append("    }")
    hw += ["}", ""]

    ino: List[str] = [f'#include "{name}.h"', ""]
    ino.append("void setup(){")
    for b in config.bindings:
        mode = "INPUT" if b.mode.endswith("IN") else "OUTPUT"
        ino.append(f"    pinMode({_pin_token(b.pin)}, {mode});")
    ino += ["}", ""]
    instance = name.lower()
    ino.append(f"{name} {instance};")
    ino += [
        "",
        "void loop(){",
        f"    {instance}.getInputs();",
        f"    {instance}.r_Main();",
        f"    {instance}.setOutputs();",
        f"    {instance}.fireUpdateSet();",
    ]
    if config.step_time > 0:
        ino.append(f"    delay({config.step_time});")
    ino += ["}", ""]
    return RuntimeBundle(
        hardware_unit="\n".join(hw),
        loop_unit="\n".join(ino),
        unit_names=(f"{name}_hw.cpp", f"{name}.ino"),
    )


def driver_source(machine: Machine) -> str:
    """Conformance harness: reads one input line per step from stdin and
    prints the controlled slot-0 values after each fireUpdateSet."""
    _validate(machine)
    m = machine
    name = m.name
    instance = name.lower()
    inputs = m.monitored_inputs()
    controlled = _own_controlled(m)
    lines: List[str] = [
        f'#include "{name}.h"',
        "#include <cstdio>",
        "",
        "int main(){",
        f"    {name} {instance};",
        f"    {instance}.initControlledWithMonitored();",
        f"    long v[{max(1, len(inputs))}];",
        "    double clockSecs;",
        "    for (;;){",
    ]
    reads = ["%ld"] * len(inputs) + (["%lf"] if m.uses_time else [])
    addrs = [f"&v[{i}]" for i in range(len(inputs))] + (["&clockSecs"] if m.uses_time else [])
    n_fields = len(reads)
    lines.append(
        f'        if (scanf("{" ".join(reads)}", {", ".join(addrs)}) != {n_fields}) break;')
    for i, f in enumerate(inputs):
        if f.codomain == "Boolean":
            lines.append(f"        {instance}.{f.name} = (v[{i}] != 0);")
        elif f.codomain in m.domains:
            lines.append(f"        {instance}.{f.name} = ({f.codomain}) v[{i}];")
        else:
            lines.append(f"        {instance}.{f.name} = v[{i}];")
    if m.uses_time:
        lines.append(f"        {instance}.{CLOCK_FUNCTION} = clockSecs;")
    lines += [
        f"        {instance}.r_Main();",
        f"        {instance}.fireUpdateSet();",
    ]
    prints = " ".join(["%d"] * len(controlled))
    args = ", ".join(f"(int){instance}.{loc}[0]" for loc in controlled)
    lines.append(f'        printf("{prints}\\n", {args});')
    lines += ["    }", "    return 0;", "}", ""]
    return "\n".join(lines)
