'''
Tests

@author:     Fleet Computer Team

@license:

This Source Code Form is subject to the terms of the Mozilla Public
License, v. 2.0. If a copy of the MPL was not distributed with this
file, You can obtain one at http://mozilla.org/MPL/2.0/.

@contact:    fleetsim@example.org
'''
import csv
import json
import os

import pytest

from FleetCore.Apps.CropScouting import gen_field
from FleetCore.ExecutionContext import save_context
from FleetCore.FleetError import ConfigError
from FleetRunner.FleetRunner import main
from FleetRunner.MissionConfig import MissionConfig

REWARD = {"weights": [1.0, 0.5, 0.0], "t_u": 3.0, "t_v": 9}


@pytest.fixture(autouse=True)
def no_machine_config(tmpdir, monkeypatch):
    monkeypatch.setenv("HOME", str(tmpdir.mkdir("home")))
    monkeypatch.delenv("FLEETSIM_THREADS", raising=False)


def crop_config(tmpdir, **overrides):
    obj = {
        "app": "crop",
        "agents": 2,
        "goals": [{"metric": "accuracy", "comparator": ">=", "target": 0.0}],
        "field": {"width": 6, "height": 6, "count": 1},
        "shaping": {"epochs": 2, "candidates": 8, "retrain_episodes": 2},
        "online_learning": {"bo_epochs": 2, "candidates": 8},
        "reward": REWARD,
    }
    obj.update(overrides)
    obj = dict((k, v) for k, v in obj.items() if v is not None)
    path = os.path.join(str(tmpdir), "mission.json")
    with open(path, 'w') as f:
        json.dump(obj, f)
    return path


def camera_config(tmpdir, **overrides):
    obj = {
        "app": "camera",
        "goals": [{"metric": "accuracy", "comparator": ">=", "target": 0.5}],
        "camera": {"cameras": 4, "targets": 6, "days": 2, "epochs": 2, "candidates": 8},
    }
    obj.update(overrides)
    path = os.path.join(str(tmpdir), "camera.json")
    with open(path, 'w') as f:
        json.dump(obj, f)
    return path


def out(tmpdir, name="out"):
    return os.path.join(str(tmpdir), name)


def read(path):
    with open(path) as f:
        return f.read()


def test_shape_writes_bundle(tmpdir):
    config = crop_config(tmpdir, reward=None)
    assert main(["--shape", "--config", config, "--out", out(tmpdir)]) == 0
    for name in ("shaping_result.json", "loss_history.csv", "sa_table.json", "manifest.json"):
        assert os.path.exists(os.path.join(out(tmpdir), name))

    manifest = json.loads(read(os.path.join(out(tmpdir), "manifest.json")))
    assert manifest["sa_table"] == "sa_table.json"
    assert manifest["goals_met"]


def test_shape_unreachable_goal(tmpdir):
    config = crop_config(tmpdir, reward=None, goals=[{"metric": "accuracy", "comparator": ">=", "target": 1.01}])
    assert main(["--shape", "--config", config, "--out", out(tmpdir)]) == 3
    assert os.path.exists(os.path.join(out(tmpdir), "shaping_result.json"))


def test_missing_context_file(tmpdir, capsys):
    config = crop_config(tmpdir, contexts={"runtime": ["nowhere.json"]})
    assert main(["--run", "--config", config, "--out", out(tmpdir)]) == 2
    assert capsys.readouterr().err.startswith("Error: ")


def test_run_from_shaping_manifest(tmpdir):
    config = crop_config(tmpdir, reward=None)
    assert main(["--shape", "--config", config, "--out", out(tmpdir, "shaped")]) == 0

    config = crop_config(tmpdir, reward=None, reward_file=os.path.join("shaped", "manifest.json"))
    assert main(["--run", "--config", config, "--out", out(tmpdir)]) == 0
    assert os.path.exists(os.path.join(out(tmpdir), "mission_trace.csv"))


def test_run_is_deterministic(tmpdir):
    field = gen_field(6, 6, 2, 4)
    save_context(field, os.path.join(str(tmpdir), "field.json"))
    config = crop_config(tmpdir, contexts={"runtime": ["field.json"]})

    for name in ("a", "b"):
        assert main(["--run", "--config", config, "--seed", "7", "--agents", "4", "--out", out(tmpdir, name)]) == 0
    trace = read(os.path.join(out(tmpdir, "a"), "mission_trace.csv"))
    assert trace == read(os.path.join(out(tmpdir, "b"), "mission_trace.csv"))
    assert read(os.path.join(out(tmpdir, "a"), "eval_report.json")) == \
        read(os.path.join(out(tmpdir, "b"), "eval_report.json"))

    agents = set(int(row[0]) for row in list(csv.reader(trace.splitlines()))[1:])
    assert agents == set(range(4))


def test_run_baselines(tmpdir):
    config = crop_config(tmpdir, reward=None)
    assert main(["--run", "--baseline", "automated", "--config", config, "--out", out(tmpdir, "auto")]) == 0
    assert sorted(n for n in os.listdir(out(tmpdir, "auto")) if not n.startswith(".")) == ["eval_report.json"]

    assert main(["--run", "--baseline", "classic", "--config", config, "--out", out(tmpdir, "classic")]) == 0
    assert os.path.exists(os.path.join(out(tmpdir, "classic"), "mission_trace.csv"))

    with pytest.raises(SystemExit):
        main(["--shape", "--baseline", "classic", "--config", config, "--out", out(tmpdir)])


def test_run_needs_reward(tmpdir, capsys):
    config = crop_config(tmpdir, reward=None)
    assert main(["--run", "--config", config, "--out", out(tmpdir)]) == 2
    assert "reward" in capsys.readouterr().err


def test_run_with_cluster(tmpdir):
    config = crop_config(tmpdir)
    assert main(["--run", "--cluster", "--config", config, "--out", out(tmpdir)]) == 0
    for name in ("scheduler_trace.csv", "energy_trace.csv"):
        assert os.path.exists(os.path.join(out(tmpdir), name))


def test_campaign(tmpdir):
    config = crop_config(tmpdir)
    assert main(["--campaign", "--missions", "2", "--online", "--config", config, "--out", out(tmpdir, "on")]) == 0
    for name in ("eval_report_0.json", "eval_report_1.json", "campaign_summary.csv"):
        assert os.path.exists(os.path.join(out(tmpdir, "on"), name))
    history = json.loads(read(os.path.join(out(tmpdir, "on"), "usefulness_history.json")))
    assert len(history) == 2

    assert main(["--campaign", "--missions", "2", "--no-online", "--config", config, "--out",
                 out(tmpdir, "off")]) == 0
    flat = json.loads(read(os.path.join(out(tmpdir, "off"), "usefulness_history.json")))
    assert [h["mission"] for h in flat] == [0, 1]
    for h in flat:
        assert h["usefulness"] == {"models": [{"subset": [], "usefulness": 1.0}]}
        assert h["weights"] == [[1.0], [1.0]]
        assert h["reward"] == REWARD

    assert main(["--campaign", "--missions", "2", "--no-online", "--config", config, "--out",
                 out(tmpdir, "again")]) == 0
    assert read(os.path.join(out(tmpdir, "off"), "campaign_summary.csv")) == \
        read(os.path.join(out(tmpdir, "again"), "campaign_summary.csv"))


def test_campaign_output_is_byte_identical(tmpdir):
    config = crop_config(tmpdir)
    args = ["--campaign", "--missions", "3", "--online", "--cluster", "--seed", "11", "--config", config, "--out"]
    assert main(args + [out(tmpdir, "first")]) == 0
    assert main(args + [out(tmpdir, "second")]) == 0

    names = sorted(n for n in os.listdir(out(tmpdir, "first")) if not n.startswith("."))
    assert names == sorted(n for n in os.listdir(out(tmpdir, "second")) if not n.startswith("."))
    assert "scheduler_trace.csv" in names
    for name in names:
        with open(os.path.join(out(tmpdir, "first"), name), 'rb') as f:
            first = f.read()
        with open(os.path.join(out(tmpdir, "second"), name), 'rb') as f:
            assert f.read() == first, name


def test_bench_single_seed(tmpdir):
    config = crop_config(tmpdir)
    assert main(["--bench", "--seeds", "1", "--config", config, "--out", out(tmpdir)]) == 0
    rows = list(csv.reader(read(os.path.join(out(tmpdir), "bench.csv")).splitlines()))
    assert len(rows) == 3
    assert rows[1][1:] == rows[2][1:]
    assert "nan" not in read(os.path.join(out(tmpdir), "bench.csv"))


def test_camera_commands(tmpdir):
    config = camera_config(tmpdir)
    assert main(["--run", "--config", config, "--out", out(tmpdir, "run")]) == 0
    report = json.loads(read(os.path.join(out(tmpdir, "run"), "eval_report.json")))
    assert report["metrics"]["accuracy"] == 1.0
    assert report["metrics"]["throughput"] == 1.0

    assert main(["--campaign", "--config", config, "--out", out(tmpdir, "campaign")]) == 0
    rows = list(csv.reader(read(os.path.join(out(tmpdir, "campaign"), "camera_campaign.csv")).splitlines()))
    assert rows[0][:3] == ["day", "retrained_accuracy", "frozen_accuracy"]
    assert len(rows) == 2

    config = camera_config(tmpdir, camera={"cameras": 4, "targets": 6, "days": 2, "epochs": 2, "candidates": 8,
                                           "history_days": 0})
    assert main(["--campaign", "--config", config, "--out", out(tmpdir, "no-history")]) == 2
    config = camera_config(tmpdir)

    assert main(["--bench", "--seeds", "2", "--config", config, "--out", out(tmpdir, "bench")]) == 0
    rows = list(csv.reader(read(os.path.join(out(tmpdir, "bench"), "camera_bench.csv")).splitlines()))
    assert [r[0] for r in rows[1:]] == ["0", "1", "mean"]


def test_camera_goals_must_be_camera_metrics(tmpdir, capsys):
    config = camera_config(tmpdir, goals=[{"metric": "coverage", "comparator": ">=", "target": 0.5}])
    assert main(["--run", "--config", config, "--out", out(tmpdir)]) == 2
    assert capsys.readouterr().err.startswith("Error: ")


def test_outdir_from_machine_config(tmpdir):
    target = out(tmpdir, "from-conf")
    with open(os.path.join(str(tmpdir), "home", ".fleetsimconf"), 'w') as f:
        f.write("[Main]\noutdir = %s\n" % target)
    config = crop_config(tmpdir)
    assert main(["--run", "--baseline", "automated", "--config", config]) == 0
    assert os.path.exists(os.path.join(target, "eval_report.json"))


def test_no_outdir_anywhere(tmpdir, capsys):
    config = crop_config(tmpdir)
    assert main(["--run", "--config", config]) == 2


def test_mission_config_validation(tmpdir):
    with pytest.raises(ConfigError):
        MissionConfig({"goals": []})
    with pytest.raises(ConfigError):
        MissionConfig({"app": "boats", "goals": [{"metric": "accuracy", "comparator": ">=", "target": 0.5}]})
    with pytest.raises(ConfigError):
        MissionConfig({"agents": 0, "goals": [{"metric": "accuracy", "comparator": ">=", "target": 0.5}]})
    with pytest.raises(ConfigError):
        MissionConfig({"field": {"width": "wide"}, "goals": [{"metric": "accuracy", "comparator": ">=",
                                                              "target": 0.5}]})
    with pytest.raises(ConfigError):
        MissionConfig({"edge": {"racks": 2}, "goals": [{"metric": "accuracy", "comparator": ">=", "target": 0.5}]})
    with pytest.raises(ConfigError):
        MissionConfig({"goals": [{"metric": "accuracy", "comparator": "==", "target": 0.5}]})

    config = MissionConfig({"goals": [{"metric": "accuracy", "comparator": ">=", "target": 0.5}],
                            "edge": {"nodes": 3, "min_share": 0.5}, "cluster": True})
    runtime = config.clusterFactory()(False)
    assert len(runtime.cluster.nodes) == 3
    assert runtime.minShare == 0.5
    assert config.rewardSpec()[0] is None
