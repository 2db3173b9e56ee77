"""End-to-end exercises of every subcommand through CliRunner.

Exit-code contract under test: 0 clean, 1 the model or its runs are
bad, 2 the invocation or input file is bad.
"""

import json

import pytest
from click.testing import CliRunner

from ccskit import dsl
from ccskit.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


def test_version(runner):
    result = invoke(runner, "--version")
    assert result.exit_code == 0
    assert "version" in result.stdout


# -- check ------------------------------------------------------------------


def test_check_clean_model_json(runner, corpus_dir):
    result = invoke(runner, "check", corpus_dir / "watertank.ccs")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["system"] == "watertank"
    assert payload["status"] == "ok"
    assert payload["controllers"] == [{"name": "wlctrl", "reactivity": "0.05"}]
    assert payload["plant"] == {"name": "tank", "controllability": "0.2"}
    assert payload["scheduling"] == {"cost": "0.05", "bound": "0.2"}
    assert payload["warnings"] == []
    assert "variables" not in payload


def test_check_vars_flag(runner, corpus_dir):
    result = invoke(runner, "check", corpus_dir / "watertank.ccs", "--vars")
    payload = json.loads(result.stdout)
    tables = payload["variables"]
    assert set(tables) == {"system", "wlctrl", "tank"}
    assert tables["wlctrl"]["bv"] == ["fin", "tau_1", "wlm"]
    assert tables["tank"]["bv"] == ["t", "wl"]
    for triple in tables.values():
        assert set(triple) == {"fv", "bv", "mbv"}
        assert all(v == sorted(v) for v in triple.values())


def test_check_text_format(runner, corpus_dir):
    result = invoke(
        runner, "check", corpus_dir / "two_tanks.ccs", "--format", "text"
    )
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "ok two_tanks"
    assert any("wlctrl1" in line for line in lines)
    assert any("scheduling cost 0.07 <= bound 0.15" in line for line in lines)


def test_check_interference_is_exit_1(runner, corpus_dir):
    result = invoke(runner, "check", corpus_dir / "bad_shared_output.ccs")
    assert result.exit_code == 1
    assert "rejected (InterferenceError)" in result.stderr
    assert "fin" in result.stderr


def test_check_unschedulable_is_exit_1(runner, corpus_dir):
    result = invoke(runner, "check", corpus_dir / "two_tanks_slow.ccs")
    assert result.exit_code == 1
    assert "ReactivityExceedsControllability" in result.stderr


def test_check_missing_file_is_exit_2(runner, tmp_path):
    result = invoke(runner, "check", tmp_path / "nope.ccs")
    assert result.exit_code == 2


def test_check_parse_error_is_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.ccs"
    bad.write_text("controller oops {\n  program: ?(;\n}\n")
    result = invoke(runner, "check", bad)
    assert result.exit_code == 2
    assert "parse error" in result.stderr


def test_check_cost_model_file(runner, corpus_dir, tmp_path):
    split = tmp_path / "split.json"
    split.write_text(json.dumps({"wlctrl1": "ecu0", "wlctrl2": "ecu1"}))
    result = invoke(
        runner, "check", corpus_dir / "two_tanks.ccs", "--cost-model", split
    )
    payload = json.loads(result.stdout)
    assert payload["scheduling"]["cost"] == "0.05"  # max, not sum


# -- compose ----------------------------------------------------------------


def test_compose_matches_golden_and_reloads(runner, corpus_dir, golden_dir, tmp_path):
    out = tmp_path / "flat.ccs"
    result = invoke(runner, "compose", corpus_dir / "two_tanks.ccs", "-o", out)
    assert result.exit_code == 0
    assert out.read_text() == (golden_dir / "two_tanks_composed.ccs").read_text()
    flat = dsl.load_file(out)
    assert [rc.name for rc in flat.controller.choices] == ["wlctrl1", "wlctrl2"]
    assert "scheduling cost 0.07 <= bound 0.15" in result.stdout


def test_compose_rejects_bad_model(runner, corpus_dir, tmp_path):
    out = tmp_path / "flat.ccs"
    result = invoke(
        runner, "compose", corpus_dir / "bad_shared_output.ccs", "-o", out
    )
    assert result.exit_code == 1
    assert not out.exists()


# -- obligations ------------------------------------------------------------


def test_obligations_auto_single_pair(runner, corpus_dir):
    result = invoke(runner, "obligations", corpus_dir / "watertank.ccs")
    assert result.exit_code == 0
    entries = json.loads(result.stdout)
    assert len(entries) == 15
    assert all(e["id"].startswith("thm1.") for e in entries)
    assert sum(e["id"].startswith("thm1.step.") for e in entries) == 8


def test_obligations_auto_multi_atom(runner, corpus_dir):
    result = invoke(runner, "obligations", corpus_dir / "two_tanks.ccs")
    entries = json.loads(result.stdout)
    assert all(e["id"].startswith("thm4.") for e in entries)


def test_obligations_explicit_theorems(runner, corpus_dir):
    ctrl = invoke(
        runner, "obligations", corpus_dir / "two_tanks.ccs", "--theorem", "controllers"
    )
    assert len(json.loads(ctrl.stdout)) == 15
    assert all(e["id"].startswith("thm2.") for e in json.loads(ctrl.stdout))
    plants = invoke(
        runner, "obligations", corpus_dir / "two_tanks.ccs", "--theorem", "plants"
    )
    assert len(json.loads(plants.stdout)) == 10
    assert all(e["id"].startswith("thm3.") for e in json.loads(plants.stdout))


def test_obligations_wrong_shape_is_exit_2(runner, corpus_dir):
    result = invoke(
        runner, "obligations", corpus_dir / "watertank.ccs", "--theorem", "controllers"
    )
    assert result.exit_code == 2
    assert "exactly two controllers" in result.stderr


def test_obligations_to_file(runner, corpus_dir, tmp_path):
    out = tmp_path / "obs.json"
    result = invoke(runner, "obligations", corpus_dir / "watertank.ccs", "-o", out)
    assert result.exit_code == 0
    assert "wrote 15 obligations to" in result.stdout
    assert len(json.loads(out.read_text())) == 15


def test_obligations_text_format(runner, corpus_dir):
    result = invoke(
        runner, "obligations", corpus_dir / "watertank.ccs", "--format", "text"
    )
    lines = result.stdout.splitlines()
    assert lines[-1] == "15 obligations"
    assert any("thm1.step.3" in line and "[fv-bv-separation]" in line for line in lines)


# -- export-kyx -------------------------------------------------------------


def test_export_kyx_writes_one_file_per_obligation(runner, corpus_dir, tmp_path):
    obs_path = tmp_path / "obs.json"
    invoke(runner, "obligations", corpus_dir / "watertank.ccs", "-o", obs_path)
    out_dir = tmp_path / "kyx"
    result = invoke(runner, "export-kyx", obs_path, "-o", out_dir)
    assert result.exit_code == 0
    files = sorted(p.name for p in out_dir.iterdir())
    assert len(files) == 15
    assert "thm1.step.4.kyx" in files
    body = (out_dir / "thm1.base.kyx").read_text()
    assert "Problem" in body and body.rstrip().endswith("End.")


def test_export_kyx_rejects_non_array(runner, tmp_path):
    bad = tmp_path / "obs.json"
    bad.write_text('{"id": "thm1.base"}')
    result = invoke(runner, "export-kyx", bad, "-o", tmp_path / "kyx")
    assert result.exit_code == 2
    assert "expected a JSON array" in result.stderr


def test_export_kyx_rejects_malformed_entry(runner, tmp_path):
    bad = tmp_path / "obs.json"
    bad.write_text('[{"id": "thm1.base"}]')
    result = invoke(runner, "export-kyx", bad, "-o", tmp_path / "kyx")
    assert result.exit_code == 2
    assert "bad obligation entry" in result.stderr


# -- simulate ---------------------------------------------------------------


def test_simulate_uses_init_convention(runner, corpus_dir):
    result = invoke(
        runner,
        "simulate", corpus_dir / "watertank.ccs",
        "--schedules", 5, "--seed", 3, "--horizon", 10,
    )
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["runs"] == 5
    assert payload["runs_with_violations"] == 0
    assert all(v == 0 for v in payload["violations"].values())


def test_simulate_missing_init_is_exit_2(runner, corpus_dir, tmp_path):
    model = tmp_path / "orphan.ccs"
    model.write_text((corpus_dir / "watertank.ccs").read_text())
    result = invoke(runner, "simulate", model)
    assert result.exit_code == 2
    assert "orphan.init.json does not exist" in result.stderr


def test_simulate_violations_are_exit_1(runner, corpus_dir):
    result = invoke(
        runner,
        "simulate", corpus_dir / "watertank_late_ctrl.ccs",
        "--schedules", 5, "--seed", 3, "--horizon", 10,
    )
    assert result.exit_code == 1
    payload = json.loads(result.stdout)
    assert payload["violations"]["G[tank]"] > 0


def test_simulate_output_files(runner, corpus_dir, tmp_path):
    trace_path = tmp_path / "run0.csv"
    summary_path = tmp_path / "batch.json"
    result = invoke(
        runner,
        "simulate", corpus_dir / "watertank.ccs",
        "--schedules", 3, "--seed", 1, "--horizon", 5,
        "--out", trace_path, "--out", summary_path,
    )
    assert result.exit_code == 0
    assert result.stdout == ""  # summary went to the file, not the console
    header = trace_path.read_text().splitlines()[0]
    assert header == "time,event,fin,fout,t,tau_1,wl,wlm"
    assert json.loads(summary_path.read_text())["runs"] == 3


def test_simulate_odd_output_suffix_is_exit_2(runner, corpus_dir, tmp_path):
    result = invoke(
        runner,
        "simulate", corpus_dir / "watertank.ccs",
        "--out", tmp_path / "trace.txt",
    )
    assert result.exit_code == 2
    assert "cannot tell what to write to" in result.stderr


def test_simulate_strategy_choice_is_enforced(runner, corpus_dir):
    result = invoke(
        runner, "simulate", corpus_dir / "watertank.ccs", "--strategy", "eager"
    )
    assert result.exit_code == 2
