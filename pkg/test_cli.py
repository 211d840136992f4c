#!/usr/bin/env python3
"""End-to-end tests for the run.py subcommands"""

import json
import os

import pytest

import run
from algorithms.eval_harness import GameResult, write_game_results
from config.bc_config import START_UP_TRIM_FRAMES, STORE_ENV_VAR
from modules.match_store import MatchStore


def _generate(tmp_path, name: str, *extra) -> str:
    path = str(tmp_path / name)
    assert run.run(["generate", path, "--frames", "200", *extra]) == 0
    return path


def _store_with_match(tmp_path):
    store = tmp_path / "store"
    store.mkdir()
    a = _generate(store, "a_g1.farp", "--player", "a", "--match", "g1")
    b = _generate(store, "b_g1.farp", "--player", "b", "--match", "g1", "--profile", "rl_like")
    return str(store), [a, b]


def test_generate_reports_frames(tmp_path, capsys):
    path = _generate(tmp_path, "r.farp", "--profile", "il_like")
    out = json.loads(capsys.readouterr().out)
    assert out == {'frames': 200, 'path': path, 'profile': "il_like"}
    assert os.path.getsize(path) > 200 * 33


def test_sample_single_anchor(tmp_path, capsys):
    path = _generate(tmp_path, "r.farp")
    capsys.readouterr()
    assert run.run(["sample", path, "-t", "30", "--lambda", "1.0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1
    sample = json.loads(lines[0])
    assert sample['frame_indices'] == list(range(16, 31))
    assert sample['t'] == 30
    assert set(sample) == {'channels', 'frame_indices', 't', 'target'}


def test_sample_all_anchors(tmp_path, capsys):
    path = _generate(tmp_path, "r.farp")
    capsys.readouterr()
    assert run.run(["sample", path, "--all", "--stride", "10"]) == 0
    anchors = [json.loads(line)['t'] for line in capsys.readouterr().out.splitlines()]
    assert anchors == list(range(0, 198, 10))


def test_sample_needs_anchor(tmp_path):
    path = _generate(tmp_path, "r.farp")
    assert run.run(["sample", path]) == 1


def test_compare_with_itself(tmp_path, capsys):
    path = _generate(tmp_path, "r.farp")
    capsys.readouterr()
    assert run.run(["compare", path, path, "--order", "1"]) == 0
    assert capsys.readouterr().out.strip() == "0.0"


def test_pure_commands_are_deterministic(tmp_path, capsys):
    a = _generate(tmp_path, "a.farp")
    b = _generate(tmp_path, "b.farp", "--profile", "rl_like")
    capsys.readouterr()
    outputs = []
    for _ in range(2):
        assert run.run(["compare", a, b]) == 0
        assert run.run(["analyze", b, "--order", "3"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    assert float(outputs[0].splitlines()[0]) > 0


def test_usage_errors(capsys):
    assert run.run([]) == 2
    assert run.run(["sample", "--bogus"]) == 2
    assert run.run(["analyze", "x.farp", "--order", "4"]) == 2


def test_missing_and_corrupt_replays(tmp_path):
    assert run.run(["analyze", str(tmp_path / "absent.farp")]) == 1
    corrupt = tmp_path / "corrupt.farp"
    corrupt.write_bytes(b"NOPE" + bytes(40))
    assert run.run(["compare", str(corrupt), str(corrupt)]) == 1


def test_analyze_writes_outputs(tmp_path, capsys):
    path = _generate(tmp_path, "r.farp")
    capsys.readouterr()
    heat, svg, hist = (str(tmp_path / n) for n in ("heat.csv", "heat.svg", "hist.csv"))
    outline = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "example_outline.txt")
    assert run.run(["analyze", path, "--heatmap", heat, "--svg", svg, "--outline", outline, "--hist", hist]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary['frames'] == 200
    assert summary['samples'] == 200
    assert summary['in_bounds'] == 200
    for p in (heat, svg, hist):
        assert os.path.exists(p)
    with open(svg, encoding='utf-8') as f:
        assert f.read().count('<polyline') == 2


def test_store_workflow(tmp_path, capsys):
    store, paths = _store_with_match(tmp_path)
    capsys.readouterr()
    assert run.run(["ingest", *paths, "--store", store, "--played-at", "2023-05-01T12:00:00Z"]) == 0
    assert json.loads(capsys.readouterr().out) == {'matches': 1, 'results': 2}

    assert run.run(["stats", "--store", store, "--rank", "kd_ratio"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",")[0] == "player_id"
    assert sorted(line.split(",")[0] for line in lines[1:]) == ["a", "b"]

    # the same match cannot be ingested twice
    assert run.run(["ingest", *paths, "--store", store]) == 1

    out_dir = tmp_path / "report"
    assert run.run(["report", "--store", store, "--out", str(out_dir)]) == 0
    written = capsys.readouterr().out.splitlines()
    for name in ("players.csv", "matches.csv", "heatmap_a_g1.csv", "heatmap_b_g1.svg",
                 "pairwise_w1_order1.csv", "camera_order3.csv"):
        assert str(out_dir / name) in written
        assert (out_dir / name).exists()


def test_ingest_start_up_trim(tmp_path, capsys):
    store = tmp_path / "store"
    store.mkdir()
    paths = [_generate(store, f"{p}_g1.farp", "--player", p, "--match", "g1", "--frames", "700") for p in "ab"]
    assert run.run(["ingest", *paths, "--store", str(store / "s1"), "--trim-start"]) == 0
    assert MatchStore(str(store / "s1")).get_match("g1").duration_s == pytest.approx((700 - START_UP_TRIM_FRAMES) / 35)
    assert run.run(["ingest", *paths, "--store", str(store / "s2"), "--trim-start", "650"]) == 0
    assert MatchStore(str(store / "s2")).get_match("g1").duration_s == pytest.approx(50 / 35)
    assert run.run(["ingest", *paths, "--store", str(store / "s3"), "--trim-start", "700"]) == 1


def test_store_from_environment(tmp_path, capsys, monkeypatch):
    store, paths = _store_with_match(tmp_path)
    monkeypatch.setenv(STORE_ENV_VAR, store)
    assert run.run(["ingest", *paths]) == 0
    capsys.readouterr()
    assert run.run(["stats"]) == 0
    assert capsys.readouterr().out.startswith("player_id,")


def test_stats_without_store(monkeypatch):
    monkeypatch.delenv(STORE_ENV_VAR, raising=False)
    assert run.run(["stats"]) == 1


def test_train_demo(tmp_path, capsys):
    checkpoint = str(tmp_path / "policy.bcpt")
    assert run.run(["train-demo", "--steps", "20", "--checkpoint", checkpoint]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result['steps'] == 20
    assert len(result['loss_curve']) == 20
    assert result['plain_mse'] is False
    assert 0.0 <= result['sign_agreement'] <= 1.0
    assert os.path.exists(checkpoint)


def test_evaluate(tmp_path, capsys):
    strong = write_game_results([GameResult(11, 1462, 11.2)] * 3, str(tmp_path / "strong.jsonl"))
    weak = write_game_results([GameResult(5.1, 762, 8.7)] * 3, str(tmp_path / "weak.jsonl"))
    out = str(tmp_path / "summary.csv")
    assert run.run(["evaluate", weak, strong, "--out", out]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "name,mean_kills,mean_damage,mean_deaths,n_games"
    assert [line.split(",")[0] for line in lines[1:]] == ["strong", "weak"]
    assert os.path.exists(out)


def test_config_override(tmp_path, capsys):
    path = _generate(tmp_path, "r.farp")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"sampler": {"sequence_length": 3, "skip_exponent": 1.0}}), encoding='utf-8')
    capsys.readouterr()
    assert run.run(["--config", str(config), "sample", path, "-t", "30"]) == 0
    assert json.loads(capsys.readouterr().out)['frame_indices'] == [28, 29, 30]


@pytest.mark.parametrize("content", ['{"sampler": {"frames": 3}}', "not json"])
def test_bad_config(tmp_path, content):
    path = _generate(tmp_path, "r.farp")
    config = tmp_path / "config.json"
    config.write_text(content, encoding='utf-8')
    assert run.run(["--config", str(config), "sample", path, "-t", "30"]) == 1


def test_train_demo_full_run(capsys):
    assert run.run(["--seed", "7", "train-demo"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result['steps'] == 500
    assert result['seed'] == 7
    assert result['loss_ratio'] < 0.1
