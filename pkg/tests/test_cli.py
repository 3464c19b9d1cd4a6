from __future__ import annotations

import json
from pathlib import Path

import pytest

from blockrepair import canonical
from blockrepair.cli import EXIT_EXHAUSTED, EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK, EXIT_POLICY, load_config, build_parser, main
from blockrepair.forge import BUNDLE_FILES
from blockrepair.ir import serialize_project
from blockrepair.samples import sample_path
from conftest import score_project


def _sample(name: str) -> str:
    return str(sample_path(name))


@pytest.fixture(scope="module")
def race_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("race")
    assert main(["forge", _sample("race_min"), "--out", str(out), "--seed", "0"]) == EXIT_OK
    return out


def _digests(d: Path) -> dict[str, str]:
    return {str(p.relative_to(d)): canonical.digest(p.read_bytes()) for p in sorted(d.rglob("*")) if p.is_file()}


# --- validate ----------------------------------------------------------------------


def test_validate_exit_codes(tmp_path, capsys):
    assert main(["validate", _sample("arcade_full"), "--require-complexity"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["passes"] is True
    assert main(["validate", _sample("flappy_min"), "--require-complexity"]) == EXIT_POLICY
    assert main(["validate", _sample("flappy_min")]) == EXIT_OK
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["validate", str(bad)]) == EXIT_INPUT
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_INPUT


# --- forge -------------------------------------------------------------------------


def test_forge_writes_seven_files(race_bundle):
    assert sorted(p.name for p in race_bundle.iterdir()) == sorted(BUNDLE_FILES)


def test_forge_without_sites_exhausts(tmp_path):
    gold = tmp_path / "g.json"
    gold.write_bytes(serialize_project(score_project()))
    assert main(["forge", str(gold), "--out", str(tmp_path / "b"), "--pattern", "clone_mgmt_error"]) == EXIT_EXHAUSTED


def test_forge_rejects_unknown_pattern(tmp_path):
    assert main(["forge", _sample("race_min"), "--out", str(tmp_path), "--pattern", "nope"]) == EXIT_INPUT


def test_forge_same_seed_same_digests(race_bundle, tmp_path):
    assert main(["forge", _sample("race_min"), "--out", str(tmp_path), "--seed", "0"]) == EXIT_OK
    assert _digests(tmp_path) == _digests(race_bundle)


def test_forge_require_complexity(tmp_path):
    assert main(["forge", _sample("race_min"), "--out", str(tmp_path), "--require-complexity"]) == EXIT_POLICY


# --- run ---------------------------------------------------------------------------


def test_run_gold_and_buggy(race_bundle, capsys):
    suite = str(race_bundle / "testsuite.json")
    assert main(["run", str(race_bundle / "gold.json"), suite]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["pass_rate"] >= 0.9
    assert main(["run", str(race_bundle / "buggy.json"), suite]) == EXIT_NEGATIVE
    assert json.loads(capsys.readouterr().out)["pass_rate"] <= 0.1


def test_run_suite_for_other_project(race_bundle, tmp_path, capsys):
    other = tmp_path / "other.json"
    other.write_bytes(serialize_project(score_project()))
    assert main(["run", str(other), str(race_bundle / "testsuite.json")]) == EXIT_INPUT
    assert "UnknownSignal" in capsys.readouterr().err


def test_run_writes_traces(race_bundle, tmp_path):
    assert main(["run", str(race_bundle / "gold.json"), str(race_bundle / "testsuite.json"), "--traces", str(tmp_path), "-R", "2"]) == EXIT_OK
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files and all(f.endswith(".trace.jsonl") for f in files)
    assert any(".r2." in f for f in files)


# --- gen-scenarios / synth-tests / apply ------------------------------------------------


def test_gen_scenarios_and_synth(race_bundle, tmp_path):
    scen = tmp_path / "scen.json"
    assert main(["gen-scenarios", str(race_bundle / "gold.json"), "--out", str(scen)]) == EXIT_OK
    assert [s["id"] for s in json.loads(scen.read_text())["scenarios"]] == ["idle", "inject:setup"]
    suite = tmp_path / "suite.json"
    args = ["synth-tests", str(race_bundle / "gold.json"), str(race_bundle / "buggy.json"), "--scenarios", str(scen), "--out", str(suite)]
    assert main(args) == EXIT_OK
    assert json.loads(suite.read_text())["assertions"]


def test_synth_gold_against_itself_is_policy_failure(race_bundle):
    g = str(race_bundle / "gold.json")
    assert main(["synth-tests", g, g]) == EXIT_POLICY


def test_apply_inverse_restores_gold(race_bundle, tmp_path):
    out = tmp_path / "fixed.json"
    inv = tmp_path / "inv.json"
    args = ["apply", str(race_bundle / "buggy.json"), str(race_bundle / "inverse.patch.json"), "--out", str(out), "--inverse-out", str(inv)]
    assert main(args) == EXIT_OK
    assert out.read_bytes() == (race_bundle / "gold.json").read_bytes()
    assert inv.read_bytes() == (race_bundle / "forward.patch.json").read_bytes()


def test_apply_inapplicable_patch(race_bundle):
    assert main(["apply", str(race_bundle / "gold.json"), str(race_bundle / "inverse.patch.json")]) == EXIT_INPUT


# --- score / report -----------------------------------------------------------------


def test_score_examples(race_bundle, tmp_path, capsys):
    b = str(race_bundle)
    assert main(["score", b, "--patch", str(race_bundle / "inverse.patch.json")]) == EXIT_OK
    s = json.loads(capsys.readouterr().out)
    assert (s["functional_success"], s["d_edit"], s["drift"]) == (True, 0, 0.0)
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert main(["score", b, "--patch", str(empty)]) == EXIT_NEGATIVE
    assert json.loads(capsys.readouterr().out)["functional_success"] is False
    bad = tmp_path / "bad.json"
    bad.write_text("nope")
    assert main(["score", b, "--patch", str(bad)]) == EXIT_NEGATIVE
    s = json.loads(capsys.readouterr().out)
    assert (s["functional_success"], s["failure_reason"]) == (False, "schema")


def test_score_answer(race_bundle, tmp_path, capsys):
    gt = json.loads((race_bundle / "bugspec.json").read_text())["ground_truth"]
    ans = tmp_path / "ans.json"
    ans.write_text(json.dumps({"trigger": "when the green flag is clicked", "mechanism": gt["mechanism"], "outcome": "", "predicate": gt["outcome"]}))
    assert main(["score", str(race_bundle), "--answer", str(ans)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["u_acc_joint"] is True


def _write_scores(d: Path, race_bundle: Path, tmp_path: Path) -> None:
    d.mkdir()
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    patches = [race_bundle / "inverse.patch.json", empty, race_bundle / "forward.patch.json"]
    for i, patch in enumerate(patches):
        main(["score", str(race_bundle), "--patch", str(patch), "--out", str(d / f"s{i}.json")])


def test_report_one_in_three(race_bundle, tmp_path, capsys):
    d = tmp_path / "scores"
    _write_scores(d, race_bundle, tmp_path)
    capsys.readouterr()
    assert main(["report", str(d), "--out", str(tmp_path / "summary.json")]) == EXIT_OK
    table = capsys.readouterr().out
    assert "33%" in table
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_repair"] == 3 and summary["success_rate"] == pytest.approx(1 / 3)


def test_report_empty_dir(tmp_path, capsys):
    assert main(["report", str(tmp_path)]) == EXIT_POLICY
    assert "no scores" in capsys.readouterr().err


def test_report_mixed_groups(race_bundle, tmp_path, capsys):
    d = tmp_path / "scores"
    _write_scores(d, race_bundle, tmp_path)
    gt = json.loads((race_bundle / "bugspec.json").read_text())["ground_truth"]
    ans = tmp_path / "ans.json"
    wrong = "clone_mgmt_error" if gt["mechanism"] != "clone_mgmt_error" else "missing_init"
    ans.write_text(json.dumps({"trigger": "green_flag", "mechanism": wrong, "outcome": "", "predicate": gt["outcome"]}))
    main(["score", str(race_bundle), "--answer", str(ans), "--out", str(d / "u0.json")])
    capsys.readouterr()
    assert main(["report", str(d), "--out", str(tmp_path / "summary.json")]) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_repair"] == 3 and summary["n_understanding"] == 1
    assert summary["M-Acc"] == 0.0 and summary["T-F1"] == 1.0


# --- configuration ------------------------------------------------------------------


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"R": 7, "K": 3, "H": 500}))
    args = build_parser().parse_args(["run", "p", "t", "--config", str(cfg_file), "-R", "9"])
    cfg = load_config(args, {"BLOCKREPAIR_K": "4"})
    assert (cfg.R, cfg.K, cfg.H) == (9, 4, 500)


def test_config_digest_tracks_values():
    p = build_parser()
    a = load_config(p.parse_args(["run", "p", "t"]), {})
    b = load_config(p.parse_args(["run", "p", "t", "--seed", "1"]), {})
    assert a.digest() != b.digest()
    assert a.digest() == load_config(p.parse_args(["run", "p", "t"]), {}).digest()


def test_bad_config_value_is_input_error(tmp_path):
    assert main(["gen-scenarios", _sample("race_min"), "--ticks", "0"]) == EXIT_INPUT
