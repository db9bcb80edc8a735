from __future__ import annotations

import json
import runpy
import sys
from pathlib import Path

import pytest

import evercommit.cli as cli


def _json_out(capsys: pytest.CaptureFixture[str]) -> dict:
    return json.loads(capsys.readouterr().out)


def test_cli_help_exits_zero(capsys: pytest.CaptureFixture[str]) -> None:
    # argparse help exits via SystemExit(0)
    with pytest.raises(SystemExit) as e:
        cli.main(["--help"])
    assert int(e.value.code or 0) == 0
    out = capsys.readouterr().out
    assert "Certified-everlasting" in out


def test_cli_game_help_lists_games(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as e:
        cli.main(["game", "--help"])
    assert int(e.value.code or 0) == 0
    out = capsys.readouterr().out
    assert "everhide" in out
    assert "sum-binding" in out


def test_make_instance_then_bound(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["make-instance", "--out", str(tmp_path)]) == 0
    written = _json_out(capsys)["written"]
    assert sorted(w["name"] for w in written) == ["frustrated", "ghz"]
    assert (tmp_path / "ghz.json").is_file()

    assert cli.main(["bound", "--instance", str(tmp_path / "frustrated.json")]) == 0
    assert capsys.readouterr().out.strip() == "0.853553"
    assert cli.main(["bound", "--instance", str(tmp_path / "ghz.json"), "--out", str(tmp_path / "b.json")]) == 0
    assert capsys.readouterr().out.strip() == "1.000000"
    rep = json.loads((tmp_path / "b.json").read_text(encoding="utf-8"))
    assert rep["bound"] == 1.0
    assert rep["config"]["instance_sha256"]


def test_bound_accepts_bundled_names(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["bound", "--instance", "frustrated"]) == 0
    assert capsys.readouterr().out.strip() == "0.853553"


def test_run_honest_ghz(tmp_path: Path, instance_files: dict[str, Path], capsys: pytest.CaptureFixture[str]) -> None:
    out_file = tmp_path / "run.json"
    rc = cli.main(
        ["run", "--instance", str(instance_files["ghz"]), "--preset", "small", "--seed", "11", "--out", str(out_file)]
    )
    assert rc == 0
    out = _json_out(capsys)
    assert out["verifier_out"] is True
    assert out["config"]["seed"] == 11
    assert out["config"]["params"]["mu"] == 8
    assert len(out["config"]["instance_sha256"]) == 64
    assert json.loads(out_file.read_text(encoding="utf-8")) == out


def test_run_fixed_challenge_and_rounds(instance_files: dict[str, Path], capsys: pytest.CaptureFixture[str]) -> None:
    rc = cli.main(
        [
            "run", "--instance", str(instance_files["ghz"]), "--preset", "small", "--seed", "3",
            "--verifier", "fixed-challenge", "--challenge", "3", "--rounds", "2",
        ]
    )
    assert rc == 0
    out = _json_out(capsys)
    assert out["rounds"] == 2
    assert all(t["c"] == 3 for t in out["transcripts"])


def test_run_decommit_liar_exits_one(instance_files: dict[str, Path], capsys: pytest.CaptureFixture[str]) -> None:
    rc = cli.main(["run", "--instance", str(instance_files["ghz"]), "--preset", "small", "--seed", "5", "--cheater", "decommit-liar"])
    assert rc == 1
    assert _json_out(capsys)["verifier_out"] is False


def test_game_otcd_report(capsys: pytest.CaptureFixture[str]) -> None:
    rc = cli.main(["game", "otcd", "--strategy", "honest-delete", "--trials", "100", "--seed", "9", "--preset", "small"])
    assert rc == 0
    out = _json_out(capsys)
    for key in ("advantage", "ci95", "trials", "cert_accept_rate"):
        assert key in out
    assert out["config"]["strategy"] == "honest-delete"
    assert out["config"]["seed"] == 9


def test_game_strategy_options_are_forwarded(capsys: pytest.CaptureFixture[str]) -> None:
    rc = cli.main(
        ["game", "otcd", "--strategy", "partial-measure", "--fraction", "0.25", "--trials", "100", "--seed", "2", "--preset", "small"]
    )
    assert rc == 0
    out = _json_out(capsys)
    assert out["config"]["strategy_options"] == {"fraction": 0.25}
    assert out["strategy_options"] == {"fraction": 0.25}


def test_game_everhide_hybrid(capsys: pytest.CaptureFixture[str]) -> None:
    rc = cli.main(["game", "everhide", "--mode", "hyb2", "--trials", "100", "--seed", "4", "--preset", "small"])
    assert rc == 0
    out = _json_out(capsys)
    assert out["mode"] == "hyb2"
    assert "r_query_rate" in out


def test_game_protocol_estimators(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["game", "completeness", "--instance", "ghz", "--trials", "100", "--seed", "1", "--preset", "small"]) == 0
    assert _json_out(capsys)["rate"] == 1.0

    assert cli.main(["game", "soundness", "--instance", "frustrated", "--trials", "100", "--seed", "1", "--preset", "small"]) == 0
    assert _json_out(capsys)["soundness_bound"] == pytest.approx(0.853553, abs=1e-6)

    assert cli.main(["game", "mask-hiding", "--instance", "ghz", "--copies", "50", "--seed", "1"]) == 0
    assert _json_out(capsys)["frobenius_distance"] >= 0.0


def test_game_binding_audit(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["game", "binding", "--commits", "5", "--seed", "1", "--preset", "small"]) == 0
    out = _json_out(capsys)
    assert out["unique_openings"] == 5
    assert out["config"]["command"] == "game"


def test_seed_from_environment(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]) -> None:
    monkeypatch.setenv("EVERCOMMIT_SEED", "77")
    assert cli.main(["game", "unpre", "--trials", "100", "--seed", "5", "--preset", "small"]) == 0
    assert _json_out(capsys)["config"]["seed"] == 77


def test_zero_seed_is_derived_and_reported(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]) -> None:
    monkeypatch.delenv("EVERCOMMIT_SEED", raising=False)
    assert cli.main(["game", "chide", "--trials", "100", "--preset", "small"]) == 0
    captured = capsys.readouterr()
    seed = json.loads(captured.out)["config"]["seed"]
    assert seed != 0
    assert f"[seed] derived seed {seed}" in captured.err


def test_python_m_evercommit_help_executes___main__(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]) -> None:
    # Execute evercommit as a module within the same process so coverage sees __main__.py.
    monkeypatch.setattr(sys, "argv", ["evercommit", "--help"])
    with pytest.raises(SystemExit) as e:
        runpy.run_module("evercommit", run_name="__main__")
    assert int(e.value.code or 0) == 0
    assert "evercommit" in capsys.readouterr().out
