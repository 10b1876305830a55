"""Random trace generation, unit-test emission, and rule coverage.

Traces drive every monitored function uniformly at random (booleans fair,
enums uniform over literals) with the clock advancing a fixed whole
number of seconds per step, mirroring the test harness convention that
time is just another monitored variable. The emitted suite is a
standalone Catch2-style C++ file: each test constructs the controller,
and per step sets the monitored members, runs the main rule, fires the
update set and REQUIREs every controlled slot-0 value.

Coverage is measured on the model: fraction of declared rules fired and
of if-branch arms taken during an interpreted replay of the traces.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from .errors import TraceMachineMismatch
from .interpreter import initial_state, random_provider, run, step
from .syntax import (
    Call,
    CLOCK_FUNCTION,
    If,
    Machine,
    Par,
    Rule,
    Trace,
    Update,
    Value,
)

DEFAULT_SEED = 42


@dataclass(frozen=True)
class TestSuiteSpec:
    __test__ = False  # keep pytest from collecting the imported name

    n_tests: int = 50
    n_steps: int = 50
    seed: int = DEFAULT_SEED
    clock_step_s: int = 1

    def __post_init__(self):
        if self.n_tests <= 0 or self.n_steps < 0:
            raise ValueError("need n_tests > 0 and n_steps >= 0")
        if self.clock_step_s <= 0:
            raise ValueError("clock_step_s must be a positive whole second count")


@dataclass
class CoverageReport:
    rule_coverage: float
    branch_coverage: float
    fired_rules: Tuple[str, ...]
    missed_rules: Tuple[str, ...]
    taken_arms: int
    total_arms: int


def generate_traces(machine: Machine, spec: TestSuiteSpec) -> List[Trace]:
    """Deterministic random suite: one trace per test, seeded per index."""
    traces = []
    for i in range(spec.n_tests):
        provider = random_provider(machine, seed=spec.seed * 1_000_003 + i,
                                   clock_step_s=spec.clock_step_s)
        traces.append(run(machine, provider, spec.n_steps))
    return traces


def _own_controlled(machine: Machine) -> List[str]:
    return [f.name for f in machine.functions_of_kind("controlled")
            if not f.timer_indexed and f.name != "clockMillis"]


def _check_traces(traces: List[Trace], machine: Machine) -> None:
    expected = set(_own_controlled(machine))
    for t in traces:
        got = set(t.states[0].controlled)
        if not expected <= got:
            raise TraceMachineMismatch(
                f"trace controls {sorted(got)} but the machine declares "
                f"{sorted(expected)}")
        for env in t.inputs:
            for name in env:
                if name not in machine.functions:
                    raise TraceMachineMismatch(f"trace input '{name}' not declared")


def _cpp_literal(machine: Machine, name: str, value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def emit_tests(traces: List[Trace], machine: Machine) -> str:
    """Standalone Catch2-style suite asserting every step of every trace."""
    _check_traces(traces, machine)
    name = machine.name
    instance = name.lower()
    controlled = _own_controlled(machine)
    lines: List[str] = [
        f"// Generated random test suite for {name}.",
        '#include "asmvent_test_support.hpp"',
        f'#include "{name}.h"',
        "",
    ]
    for index, trace in enumerate(traces):
        test = f"random_test_{index}"
        lines.append(f'TEST_CASE( "{test}", "{test}" ){{')
        lines.append("    // instance of the SUT")
        lines.append(f"    {name} {instance};")
        lines.append("    // init controlled with monitored term")
        lines.append(f"    {instance}.initControlledWithMonitored();")
        lines.append("    // check controlled variables")
        for loc in controlled:
            value = _cpp_literal(machine, loc, trace.states[0].controlled[loc])
            lines.append(f"    REQUIRE({instance}.{loc}[0] == {value});")
        for step_no, env in enumerate(trace.inputs):
            lines.append("    // set monitored variables")
            for fname, value in env.items():
                if fname == CLOCK_FUNCTION:
                    clock = int(value) if float(value).is_integer() else value
                    lines.append(f"    {instance}.{CLOCK_FUNCTION} = {clock};")
                else:
                    lines.append(
                        f"    {instance}.{fname} = "
                        f"{_cpp_literal(machine, fname, value)};")
            lines.append("    // call main rule")
            lines.append(f"    {instance}.r_Main();")
            lines.append(f"    {instance}.fireUpdateSet();")
            lines.append("    // check controlled variables")
            after = trace.states[step_no + 1].controlled
            for loc in controlled:
                value = _cpp_literal(machine, loc, after[loc])
                lines.append(f"    REQUIRE({instance}.{loc}[0] == {value});")
        lines.append("}")
        lines.append("")
    return "\n".join(lines)


TEST_SUPPORT_HEADER = """\
// Minimal standalone implementation of the Catch2 TEST_CASE/REQUIRE
// surface, so generated suites build without any external dependency.
#pragma once
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace asmvent_test {
struct Case {
    const char* name;
    void (*fn)();
};
inline std::vector<Case>& registry() {
    static std::vector<Case> cases;
    return cases;
}
struct Registrar {
    Registrar(const char* name, void (*fn)()) { registry().push_back({name, fn}); }
};
inline int failures = 0;
inline const char* current = "";
}  // namespace asmvent_test

#define ASMVENT_CONCAT2(a, b) a##b
#define ASMVENT_CONCAT(a, b) ASMVENT_CONCAT2(a, b)

#define TEST_CASE(name, tag) \\
    static void ASMVENT_CONCAT(asmvent_case_, __LINE__)(); \\
    static asmvent_test::Registrar ASMVENT_CONCAT(asmvent_reg_, __LINE__)( \\
        name, &ASMVENT_CONCAT(asmvent_case_, __LINE__)); \\
    static void ASMVENT_CONCAT(asmvent_case_, __LINE__)()

#define REQUIRE(expr) \\
    do { \\
        if (!(expr)) { \\
            std::printf("FAILED %s at %s:%d: %s\\n", asmvent_test::current, \\
                        __FILE__, __LINE__, #expr); \\
            asmvent_test::failures++; \\
            return; \\
        } \\
    } while (0)

int main() {
    for (const auto& c : asmvent_test::registry()) {
        asmvent_test::current = c.name;
        c.fn();
    }
    std::printf("%zu test cases, %d failures\\n",
                asmvent_test::registry().size(), asmvent_test::failures);
    return asmvent_test::failures == 0 ? 0 : 1;
}
"""


def test_support_header() -> str:
    return TEST_SUPPORT_HEADER


# -- coverage ------------------------------------------------------------

def _collect_ifs(rule: Rule, out: List[int]) -> None:
    if isinstance(rule, Par):
        for sub in rule.rules:
            _collect_ifs(sub, out)
    elif isinstance(rule, If):
        out.append(id(rule))
        _collect_ifs(rule.then, out)
        if rule.orelse is not None:
            _collect_ifs(rule.orelse, out)


def measure_coverage(traces: List[Trace], machine: Machine) -> CoverageReport:
    """Replay traces through the interpreter, counting rules and branch arms."""
    _check_traces(traces, machine)
    own_rules = [r.name for r in machine.rules.values() if not r.origin]
    all_ifs: List[int] = []
    for rname in own_rules:
        _collect_ifs(machine.rules[rname].body, all_ifs)
    fired: Set[str] = set()
    arms: Set[Tuple[int, bool]] = set()
    known_ifs = set(all_ifs)

    def tracer(kind: str, payload) -> None:
        if kind == "rule":
            fired.add(payload)
        else:
            node_id, taken = payload
            if node_id in known_ifs:
                arms.add((node_id, taken))

    stepped = False
    for trace in traces:
        state = initial_state(machine)
        for env in trace.inputs:
            state = step(machine, state, env, tracer=tracer)
            stepped = True
    if stepped and machine.main_rule in own_rules:
        fired.add(machine.main_rule)
    fired &= set(own_rules)
    missed = tuple(r for r in own_rules if r not in fired)
    total_arms = 2 * len(all_ifs)
    return CoverageReport(
        rule_coverage=len(fired) / len(own_rules) if own_rules else 1.0,
        branch_coverage=len(arms) / total_arms if total_arms else 1.0,
        fired_rules=tuple(r for r in own_rules if r in fired),
        missed_rules=missed,
        taken_arms=len(arms),
        total_arms=total_arms,
    )
