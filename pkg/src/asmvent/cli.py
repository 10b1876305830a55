"""Command-line entry point.

Exit codes: 0 success, 1 verification/scenario/conformance failure,
2 usage error.
"""
from __future__ import annotations

import json
import os
import sys
from typing import Optional

import click

from . import __version__
from .analysis import export_state_graph, lint as lint_machine, pretty_print, stats as machine_stats
from .errors import AsmError
from .interpreter import initial_state, random_provider, run
from .models import (
    default_config,
    fast_timers_config,
    load,
    parse_config_file,
)
from .resolver import parse_file
from .scenario import counterexample_to_scenario, parse_scenario, run_scenario
from .syntax import CLOCK_FUNCTION, format_value
from .verify import (
    Counterexample,
    Verified,
    bounded_clock,
    check_invariant,
    free_boolean,
    parse_property_file,
)


def _state_budget() -> int:
    raw = os.environ.get("ASMVENT_STATE_BUDGET")
    return int(raw) if raw else 10 ** 6


def _load_model(model: str, config: Optional[str], fast_timers: bool):
    cfg = None
    if config:
        cfg = parse_config_file(config)
    elif fast_timers:
        cfg = fast_timers_config()
    if model in ("0", "1", "2", "3"):
        return load(int(model), cfg or default_config())
    machine = parse_file(model)
    if cfg is not None:
        from .models import bind_statics
        bind_statics(machine, cfg)
    return machine


def _abstraction(spec: str):
    if spec == "freeBoolean":
        return free_boolean(state_budget=_state_budget())
    if spec.startswith("boundedClock:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise click.UsageError("use boundedClock:<tick_ms>:<horizon_ms>")
        return bounded_clock(int(parts[1]), int(parts[2]),
                             state_budget=_state_budget())
    raise click.UsageError(f"unknown abstraction '{spec}'")


model_option = click.option(
    "--model", "-m", required=True,
    help="bundled level (0-3) or path to a .asm file")
config_option = click.option(
    "--config", type=click.Path(exists=True), default=None,
    help="key=value timing configuration file")
fast_option = click.option(
    "--fast-timers", is_flag=True,
    help="use the bundled whole-second test timing")


@click.group()
@click.version_option(__version__)
def main():
    """Model, validate, verify, test, and compile the ventilator controller."""


@main.command("parse")
@model_option
@config_option
@fast_option
@click.option("--pretty", is_flag=True, help="print the canonical source text")
def parse_cmd(model, config, fast_timers, pretty):
    """Parse and resolve a model, reporting its signature."""
    machine = _load_model(model, config, fast_timers)
    if pretty:
        click.echo(pretty_print(machine), nl=False)
        return
    s = machine_stats(machine)
    click.echo(f"{machine.name}: parsed OK "
               f"(monitored={s.n_monitored} controlled={s.n_controlled} "
               f"derived={s.n_derived} static={s.n_static} rules={s.n_rule_declarations})")


@main.command("stats")
@model_option
@config_option
@fast_option
def stats_cmd(model, config, fast_timers):
    """Model dimensions by function kind and rule count."""
    machine = _load_model(model, config, fast_timers)
    s = machine_stats(machine)
    click.echo(f"model:                 {machine.name}")
    click.echo(f"monitored functions:   {s.n_monitored}")
    click.echo(f"controlled functions:  {s.n_controlled}")
    click.echo(f"derived functions:     {s.n_derived}")
    click.echo(f"static functions:      {s.n_static}")
    click.echo(f"rule declarations:     {s.n_rule_declarations}")
    click.echo(f"rules incl. nested:    {s.n_rules_including_nested}")


@main.command("lint")
@model_option
@config_option
@fast_option
def lint_cmd(model, config, fast_timers):
    """Minimality report: declared-but-unreachable names."""
    report = lint_machine(_load_model(model, config, fast_timers))
    if not report.unused_declarations and not report.shadowed_names:
        click.echo("clean: every declaration is reachable from the main rule")
        return
    for name in report.unused_declarations:
        click.echo(f"unused: {name}")
    for name in report.shadowed_names:
        click.echo(f"shadows an imported declaration: {name}")


@main.command("viz")
@model_option
@config_option
@fast_option
@click.option("--out", "-o", type=click.Path(), default=None, help="output DOT file")
def viz_cmd(model, config, fast_timers, out):
    """Export the mode-transition graph as DOT."""
    graph = export_state_graph(_load_model(model, config, fast_timers))
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(graph.text)
        click.echo(f"wrote {out} ({len(graph.nodes)} nodes, {len(graph.edges)} edges)")
    else:
        click.echo(graph.text, nl=False)


def _interactive_provider(machine):
    def provide(i, _state):
        click.echo(f"-- inputs for step {i + 1} --", err=True)
        env = {}
        for f in machine.monitored_inputs():
            if f.codomain == "Boolean":
                env[f.name] = click.confirm(f"  {f.name}?", default=False, err=True)
            elif f.codomain in machine.domains:
                literals = machine.domains[f.codomain]
                value = click.prompt(f"  {f.name}", default=literals[0],
                                     type=click.Choice(literals), err=True)
                env[f.name] = value
            else:
                env[f.name] = click.prompt(f"  {f.name}", type=int, err=True)
        if machine.uses_time:
            env[CLOCK_FUNCTION] = click.prompt(f"  {CLOCK_FUNCTION} (s)",
                                               default=i + 1, type=float, err=True)
        return env

    return provide


def _run_for_cli(machine, mode, steps, seed):
    if mode == "interactive":
        provider = _interactive_provider(machine)
    else:
        provider = random_provider(machine, seed=seed)
    return run(machine, provider, steps)


@main.command("sim")
@model_option
@config_option
@fast_option
@click.option("--mode", type=click.Choice(["random", "interactive"]), default="random")
@click.option("--steps", "-n", default=10, show_default=True)
@click.option("--seed", default=42, show_default=True)
def sim_cmd(model, config, fast_timers, mode, steps, seed):
    """Simulate: random or interactive inputs, one state line per step."""
    machine = _load_model(model, config, fast_timers)
    trace = _run_for_cli(machine, mode, steps, seed)
    for i, state in enumerate(trace.states):
        values = " ".join(
            f"{loc}={format_value(v)}" for loc, v in state.controlled.items()
            if not loc.startswith("start(") and loc != "clockMillis")
        click.echo(f"step {i:3d}: {values}")


ANIMATE_COLUMNS = ("state", "phase", "iValve", "oValve", "stopVentilation")


@main.command("animate")
@model_option
@config_option
@fast_option
@click.option("--mode", type=click.Choice(["random", "interactive"]), default="random")
@click.option("--steps", "-n", default=10, show_default=True)
@click.option("--seed", default=42, show_default=True)
def animate_cmd(model, config, fast_timers, mode, steps, seed):
    """Tabular animation of the controller's mode, phase and valves."""
    machine = _load_model(model, config, fast_timers)
    trace = _run_for_cli(machine, mode, steps, seed)
    columns = [c for c in ANIMATE_COLUMNS if c in machine.functions]
    if not columns:
        columns = [f.name for f in machine.functions_of_kind("controlled")
                   if not f.timer_indexed][:6]
    widths = {c: max(len(c), max((len(format_value(s.controlled[c]))
                                  for s in trace.states), default=0))
              for c in columns}
    header = "step  " + "  ".join(c.ljust(widths[c]) for c in columns)
    click.echo(header)
    click.echo("-" * len(header))
    for i, state in enumerate(trace.states):
        row = "  ".join(format_value(state.controlled[c]).ljust(widths[c])
                        for c in columns)
        click.echo(f"{i:4d}  {row}")


@main.command("check")
@model_option
@config_option
@fast_option
@click.option("--props", required=True, type=click.Path(exists=True),
              help="property file: one g(...)/not f(...) per line")
@click.option("--abstraction", default="freeBoolean", show_default=True)
@click.option("--export-cex", type=click.Path(), default=None,
              help="directory for counterexample scenarios")
def check_cmd(model, config, fast_timers, props, abstraction, export_cex):
    """Check safety properties; exit 1 on any counterexample."""
    machine = _load_model(model, config, fast_timers)
    abstr = _abstraction(abstraction)
    with open(props, encoding="utf-8") as fh:
        properties = parse_property_file(fh.read(), machine)
    failed = 0
    for index, prop in enumerate(properties):
        result = check_invariant(machine, prop, abstr)
        if isinstance(result, Verified):
            click.echo(f"VERIFIED  {prop.text}  "
                       f"[{result.n_states} states, {result.seconds:.2f}s]")
            continue
        failed += 1
        tag = " (abstract-only)" if result.abstract_only else ""
        click.echo(f"VIOLATED  {prop.text}  at step {result.violated_at}{tag}")
        for loc, value in result.controlled_path[-1].items():
            click.echo(f"    {loc} = {format_value(value)}")
        if export_cex:
            os.makedirs(export_cex, exist_ok=True)
            path = os.path.join(export_cex, f"cex_{index}.avalla")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(counterexample_to_scenario(machine, result))
            click.echo(f"    scenario written to {path}")
    sys.exit(1 if failed else 0)


@main.command("refine")
@click.option("--from-model", "abstract", required=True,
              help="abstract side: level or .asm path")
@click.option("--to-model", "refined", required=True,
              help="refined side: level or .asm path")
@config_option
@fast_option
@click.option("--glue", default="default",
              help="'default' (bundled level pairs) or a glue file path")
@click.option("--abstraction", default="freeBoolean", show_default=True)
def refine_cmd(abstract, refined, config, fast_timers, glue, abstraction):
    """Check stuttering refinement; exit 1 when refuted."""
    from .refinement import check_refinement, default_glues, parse_glue, GlueMap
    am = _load_model(abstract, config, fast_timers)
    rm = _load_model(refined, config, fast_timers)
    if glue == "default":
        if abstract in "0123" and refined in "0123":
            pair = (int(abstract), int(refined))
            glues = default_glues()
            glue_map = glues.get(pair, GlueMap(("state",)))
        else:
            raise click.UsageError("--glue default needs bundled levels")
    else:
        with open(glue, encoding="utf-8") as fh:
            _, _, glue_map = parse_glue(fh.read(), what=glue)
    result = check_refinement(am, rm, glue_map, _abstraction(abstraction))
    click.echo(f"{result.verdict}: {am.name} -> {rm.name} over "
               f"{{{', '.join(glue_map.linked)}}} "
               f"[{result.n_abstract_states}x{result.n_refined_states} states, "
               f"{result.seconds:.2f}s]")
    if result.witness is not None:
        w = result.witness
        click.echo(f"  witness: {len(w.input_envs)} steps, collapsed projections:")
        for proj in w.projections:
            click.echo("    " + ", ".join(f"{k}={format_value(v)}" for k, v in proj))
    sys.exit(0 if result.verified else 1)


@main.command("scenario")
@model_option
@config_option
@fast_option
@click.argument("scenario_file", type=click.Path(exists=True))
def scenario_cmd(model, config, fast_timers, scenario_file):
    """Run a set/step/check scenario; exit 1 on a failed check."""
    machine = _load_model(model, config, fast_timers)
    with open(scenario_file, encoding="utf-8") as fh:
        scn = parse_scenario(fh.read())
    result = run_scenario(machine, scn)
    if result.passed:
        click.echo(f"PASS: {result.steps} steps, {result.checks} checks")
        sys.exit(0)
    click.echo(f"FAILED at command {result.index}: {result.location} "
               f"expected {format_value(result.expected)}, "
               f"got {format_value(result.actual)}")
    sys.exit(1)


@main.command("testgen")
@model_option
@config_option
@click.option("--fast-timers/--no-fast-timers", default=True, show_default=True,
              help="use the pinned whole-second test timing")
@click.option("--tests", default=50, show_default=True)
@click.option("--steps", default=50, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", "-o", required=True, type=click.Path(),
              help="output directory for the generated suite")
def testgen_cmd(model, config, fast_timers, tests, steps, seed, out):
    """Generate a random unit-test suite and report model coverage."""
    from .codegen import generate_source
    from .testgen import TestSuiteSpec, emit_tests, generate_traces, measure_coverage, test_support_header
    machine = _load_model(model, config, fast_timers)
    spec = TestSuiteSpec(n_tests=tests, n_steps=steps, seed=seed)
    traces = generate_traces(machine, spec)
    os.makedirs(out, exist_ok=True)
    bundle = generate_source(machine)
    for name, text in (
            (bundle.unit_names[0], bundle.declaration_unit),
            (bundle.unit_names[1], bundle.implementation_unit),
            ("asmvent_test_support.hpp", test_support_header()),
            (f"test_{machine.name.lower()}.cpp", emit_tests(traces, machine))):
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    report = measure_coverage(traces, machine)
    click.echo(f"wrote suite to {out} ({tests} tests x {steps} steps, seed {seed})")
    click.echo(f"rule coverage:   {report.rule_coverage:.1%}")
    click.echo(f"branch coverage: {report.branch_coverage:.1%}")
    if report.missed_rules:
        click.echo(f"missed rules: {', '.join(report.missed_rules)}")


@main.command("codegen")
@model_option
@config_option
@fast_option
@click.option("--what", type=click.Choice(["source", "pinconfig", "runtime"]),
              default="source", show_default=True)
@click.option("--pins", type=click.Path(exists=True), default=None,
              help="completed pin-binding JSON (for --what runtime)")
@click.option("--out", "-o", required=True, type=click.Path(),
              help="output directory")
def codegen_cmd(model, config, fast_timers, what, pins, out):
    """Emit controller C++, the pin-binding skeleton, or the runtime units."""
    from .codegen import (
        generate_pin_config,
        generate_runtime,
        generate_source,
        parse_pin_config,
    )
    machine = _load_model(model, config, fast_timers)
    os.makedirs(out, exist_ok=True)
    if what == "source":
        bundle = generate_source(machine)
        files = dict(zip(bundle.unit_names,
                         (bundle.declaration_unit, bundle.implementation_unit)))
    elif what == "pinconfig":
        files = {f"{machine.name}.a2c": generate_pin_config(machine).to_json()}
    else:
        if not pins:
            raise click.UsageError("--what runtime needs --pins <file.a2c>")
        with open(pins, encoding="utf-8") as fh:
            pin_config = parse_pin_config(fh.read(), machine)
        bundle = generate_runtime(machine, pin_config)
        files = dict(zip(bundle.unit_names, (bundle.hardware_unit, bundle.loop_unit)))
    for name, text in files.items():
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {os.path.join(out, name)}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--runs-dir", default="runs", show_default=True,
              help="directory for persisted session logs")
@click.option("--panel-dir", default=None, type=click.Path(exists=True),
              help="serve the operator panel from this directory at /panel")
def serve_cmd(host, port, runs_dir, panel_dir):
    """Serve the closed-loop session API (and the operator panel's backend)."""
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(runs_dir=runs_dir, panel_dir=panel_dir),
                host=host, port=port)


def cli_main():
    # click handles usage errors itself (exit 2); our own errors exit 1
    try:
        main()
    except AsmError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    cli_main()
