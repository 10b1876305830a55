"""Shared helpers: compile generated C++ and compare runs step by step."""
from __future__ import annotations

import shutil
import subprocess
from pathlib import Path

from asmvent.codegen import driver_source, generate_source
from asmvent.syntax import CLOCK_FUNCTION, Machine, Trace

CXX = shutil.which("g++") or shutil.which("clang++")


def own_controlled(machine: Machine):
    return [f.name for f in machine.functions_of_kind("controlled")
            if not f.timer_indexed and f.name != "clockMillis"]


def encode_value(machine: Machine, name: str, value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        domain = machine.functions[name].codomain
        return str(machine.domains[domain].index(value))
    return str(value)


def compile_driver(machine: Machine, build_dir: Path) -> Path:
    build_dir = Path(build_dir)
    bundle = generate_source(machine)
    (build_dir / bundle.unit_names[0]).write_text(bundle.declaration_unit)
    (build_dir / bundle.unit_names[1]).write_text(bundle.implementation_unit)
    (build_dir / "driver.cpp").write_text(driver_source(machine))
    exe = build_dir / "driver"
    result = subprocess.run(
        [CXX, "-std=c++14", "-O1", "-o", str(exe),
         str(build_dir / bundle.unit_names[1]), str(build_dir / "driver.cpp")],
        capture_output=True, text=True)
    if result.returncode != 0:
        raise RuntimeError(f"compilation failed:\n{result.stderr}")
    return exe


def driver_input(machine: Machine, trace: Trace) -> str:
    names = [f.name for f in machine.monitored_inputs()]
    lines = []
    for env in trace.inputs:
        fields = [encode_value(machine, n, env[n]) for n in names]
        if machine.uses_time:
            fields.append(str(env[CLOCK_FUNCTION]))
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def expected_output(machine: Machine, trace: Trace):
    controlled = own_controlled(machine)
    rows = []
    for state in trace.states[1:]:
        rows.append([encode_value(machine, loc, state.controlled[loc])
                     for loc in controlled])
    return rows


def run_conformance(machine: Machine, exe: Path, trace: Trace) -> bool:
    """True iff the compiled run matches the interpreted trace everywhere."""
    result = subprocess.run([str(exe)], input=driver_input(machine, trace),
                            capture_output=True, text=True, timeout=60)
    if result.returncode != 0:
        return False
    got = [line.split() for line in result.stdout.strip().splitlines()]
    return got == expected_output(machine, trace)
