"""Command-line interface behavior and exit codes."""
import os

import pytest
from click.testing import CliRunner

from asmvent.cli import main
from asmvent.models import asset_text

PROPS_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "asmvent",
                         "assets", "properties")
SCN = os.path.join(os.path.dirname(__file__), "..", "src", "asmvent",
                   "assets", "scenarios", "pcv_start.avalla")


@pytest.fixture()
def runner():
    return CliRunner()


def test_stats_matches_published_row(runner):
    result = runner.invoke(main, ["stats", "-m", "3"])
    assert result.exit_code == 0
    assert "monitored functions:   11" in result.output
    assert "rule declarations:     27" in result.output


def test_parse_reports_signature(runner):
    result = runner.invoke(main, ["parse", "-m", "0"])
    assert result.exit_code == 0
    assert "MVMController00: parsed OK" in result.output


def test_parse_pretty_round_trip(runner, tmp_path):
    result = runner.invoke(main, ["parse", "-m", "1", "--pretty"])
    assert result.exit_code == 0
    model = tmp_path / "copy.asm"
    model.write_text(result.output)
    again = runner.invoke(main, ["parse", "-m", str(model), "--fast-timers"])
    assert again.exit_code == 0


def test_lint_clean_on_bundled(runner):
    result = runner.invoke(main, ["lint", "-m", "2"])
    assert result.exit_code == 0
    assert "clean" in result.output


def test_viz_writes_dot(runner, tmp_path):
    out = tmp_path / "graph.dot"
    result = runner.invoke(main, ["viz", "-m", "0", "-o", str(out)])
    assert result.exit_code == 0
    text = out.read_text()
    assert text.startswith("digraph MVMController00")
    assert '"PCV_STATE" -> "PSV_STATE"' in text


def test_sim_and_animate_run(runner):
    sim = runner.invoke(main, ["sim", "-m", "1", "-n", "5", "--seed", "2"])
    assert sim.exit_code == 0
    assert "state=STARTUP" in sim.output
    animate = runner.invoke(main, ["animate", "-m", "1", "-n", "5", "--seed", "2"])
    assert animate.exit_code == 0
    assert animate.output.splitlines()[0].split() == [
        "step", "state", "phase", "iValve", "oValve", "stopVentilation"]


def test_check_passes_level1(runner):
    props = os.path.join(PROPS_DIR, "core_safety.prop")
    result = runner.invoke(main, ["check", "-m", "1", "--props", props])
    assert result.exit_code == 0
    assert result.output.count("VERIFIED") == 2


def test_check_fails_level2_with_counterexample(runner, tmp_path):
    props = os.path.join(PROPS_DIR, "core_safety.prop")
    result = runner.invoke(main, ["check", "-m", "2", "--props", props,
                                  "--export-cex", str(tmp_path)])
    assert result.exit_code == 1
    assert "VIOLATED" in result.output
    exported = list(tmp_path.glob("*.avalla"))
    assert exported
    replay = runner.invoke(main, ["scenario", "-m", "2", str(exported[0])])
    assert replay.exit_code == 1  # the deliberate failing check reproduces it


def test_refine_chain(runner):
    for pair in (("0", "1"), ("1", "2"), ("2", "3")):
        result = runner.invoke(main, ["refine", "--from-model", pair[0],
                                      "--to-model", pair[1]])
        assert result.exit_code == 0, result.output
        assert "Verified" in result.output


def test_scenario_pass_and_exit_codes(runner):
    result = runner.invoke(main, ["scenario", "-m", "1", SCN])
    assert result.exit_code == 0
    assert "PASS" in result.output


def test_usage_error_exit_code(runner):
    result = runner.invoke(main, ["scenario", "-m", "1"])  # missing argument
    assert result.exit_code == 2
    result = runner.invoke(main, ["check", "-m", "1"])  # missing --props
    assert result.exit_code == 2


def test_testgen_writes_suite(runner, tmp_path):
    result = runner.invoke(main, ["testgen", "-m", "3", "--tests", "2",
                                  "--steps", "5", "-o", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "MVMController03.cpp").exists()
    assert (tmp_path / "test_mvmcontroller03.cpp").exists()
    assert (tmp_path / "asmvent_test_support.hpp").exists()
    assert "rule coverage" in result.output


def test_codegen_source_and_pinconfig(runner, tmp_path):
    result = runner.invoke(main, ["codegen", "-m", "3", "--what", "source",
                                  "-o", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "MVMController03.h").exists()

    result = runner.invoke(main, ["codegen", "-m", "3", "--what", "pinconfig",
                                  "-o", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "MVMController03.a2c").exists()

    pins = tmp_path / "pins.a2c"
    pins.write_text(asset_text("pins/MVMController03.a2c"))
    result = runner.invoke(main, ["codegen", "-m", "3", "--what", "runtime",
                                  "--pins", str(pins), "-o", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "MVMController03_hw.cpp").exists()
    assert (tmp_path / "MVMController03.ino").exists()
