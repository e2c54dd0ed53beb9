import csv
import json
import os

import pytest

from otexplore import cli, config
from otexplore.replay import read_stream, replay

import scenarios

DESK = ["--config", "preset:centralized", "--set", "N=400", "--set", "t_e=200",
        "--set", "M=1000"]


def write_cfg(tmp_path, cfg, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(config.dumps(cfg))
    return str(path)


def read_metrics(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_happy_path(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(DESK + ["--out", str(out), "--svg"]) == 0
    rows = read_metrics(out / "metrics.csv")
    assert list(rows[0]) == list(cli.METRIC_FIELDS)
    assert rows[0]["mode"] == "centralized" and rows[0]["termination_step"] == "200"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == [0]
    for f in manifest["files"]:
        assert (out / f).exists(), f
    svg = (out / "seed_0" / "trajectories.svg").read_text()
    assert svg.count("<polyline") == 5
    emitted = config.load(out / "config.yaml")
    assert emitted == cli.load_config(DESK[1], [("N", 400), ("t_e", 200), ("M", 1000)])
    assert manifest["config_hash"] == config.config_hash(emitted)


def test_missing_required_field_exit_2(tmp_path, capsys):
    raw = config.to_dict(scenarios.single())
    del raw["n_a"]
    path = tmp_path / "bad.yaml"
    path.write_text(json.dumps(raw))
    assert cli.main(["--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "n_a" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["--config", "preset:nope"],
    ["--config", "preset:centralized", "--set", "h=9"],
    ["--config", "/no/such/file.yaml"],
])
def test_config_errors_exit_2(tmp_path, argv):
    assert cli.main(argv + ["--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("argv", [
    [],
    ["--config", "x", "--seeds", "5..2"],
    ["--config", "x", "--set", "novalue"],
    ["--config", "x", "--snapshot-every", "0"],
    ["--replay", "x", "--config", "y"],
])
def test_argument_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 2


def test_seed_batch_and_parallel_agree(tmp_path):
    cfg = write_cfg(tmp_path, scenarios.centralized(N_h=20))
    a, b = tmp_path / "serial", tmp_path / "parallel"
    assert cli.main(["--config", cfg, "--seeds", "0..3", "--out", str(a)]) == 0
    assert cli.main(["--config", cfg, "--seeds", "0..3", "--out", str(b), "--jobs", "2"]) == 0
    ra, rb = read_metrics(a / "metrics.csv"), read_metrics(b / "metrics.csv")
    assert [r["seed"] for r in ra] == ["0", "1", "2", "3"]
    for x, y in zip(ra, rb):
        x.pop("wall_ms")
        y.pop("wall_ms")
        assert x == y
    for s in range(4):
        assert ((a / f"seed_{s}" / "snapshots.jsonl").read_bytes()
                == (b / f"seed_{s}" / "snapshots.jsonl").read_bytes())


def test_detection_na_without_targets(tmp_path):
    cfg = write_cfg(tmp_path, scenarios.single(N_h=0))
    assert cli.main(["--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert read_metrics(tmp_path / "o" / "metrics.csv")[0]["detection_rate"] == "NA"


def test_snapshot_every_flag(tmp_path):
    cfg = write_cfg(tmp_path, scenarios.centralized())
    assert cli.main(["--config", cfg, "--snapshot-every", "5", "--seed", "3",
                     "--out", str(tmp_path / "o")]) == 0
    _, _, records = read_stream(tmp_path / "o" / "seed_3" / "snapshots.jsonl")
    assert [r.step for r in records] == [0, 5, 10, 15, 20]


def make_log(tmp_path, cfg):
    path = write_cfg(tmp_path, cfg)
    assert cli.main(["--config", path, "--out", str(tmp_path / "o")]) == 0
    return tmp_path / "o" / f"seed_{cfg.seed}" / "snapshots.jsonl"


@pytest.mark.parametrize("cfg", [
    scenarios.single(N_h=10),
    scenarios.centralized(N_h=10, tight_bound=True),
    scenarios.decentralized(N_h=10),
    scenarios.decentralized(N_h=10, v=3.0, time_varying=True),
], ids=["single", "centralized", "decentralized", "time_varying"])
def test_replay_untampered(tmp_path, capsys, cfg):
    log = make_log(tmp_path, cfg)
    assert cli.main(["--replay", str(log)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 6


def test_replay_hand_edited_weight_fails(tmp_path, capsys):
    log = make_log(tmp_path, scenarios.centralized())
    lines = log.read_text().splitlines()
    rec = json.loads(lines[3])
    j = max(range(len(rec["weights"][0])), key=lambda i: rec["weights"][0][i])
    rec["weights"][0][j] *= 0.5
    lines[3] = json.dumps(rec)
    log.write_text("\n".join(lines) + "\n")
    assert cli.main(["--replay", str(log)]) == 1
    out = capsys.readouterr().out
    assert "FAIL wub_consistency" in out


@pytest.mark.parametrize("mutate", [
    lambda text: text[: len(text) // 2],
    lambda text: "",
    lambda text: "\n".join(text.splitlines()[1:]),
    lambda text: text.replace('"record": "snapshot"', '"record": "other"', 1),
    lambda text: text.replace('"positions"', '"pos"', 1),
], ids=["truncated", "empty", "no_header", "bad_record", "bad_field"])
def test_replay_corrupt_stream_exit_1(tmp_path, capsys, mutate):
    log = make_log(tmp_path, scenarios.single())
    log.write_text(mutate(log.read_text()))
    assert cli.main(["--replay", str(log)]) == 1
    assert "corrupt" in capsys.readouterr().err


def test_replay_missing_file(tmp_path):
    assert cli.main(["--replay", str(tmp_path / "none.jsonl")]) == 1


def test_full_scale_replay(tmp_path):
    out = tmp_path / "full"
    assert cli.main(["--config", "preset:centralized", "--out", str(out)]) == 0
    results = replay(out / "seed_0" / "snapshots.jsonl")
    assert all(r.passed for r in results), results
    wub = next(r for r in results if r.name == "wub_consistency")
    assert "max |logged - recomputed| = 0" in wub.detail


def test_metrics_deterministic_to_12_digits(tmp_path):
    cfg = write_cfg(tmp_path, scenarios.decentralized(N_h=15))
    for d in ("a", "b"):
        assert cli.main(["--config", cfg, "--seeds", "0..1", "--out", str(tmp_path / d)]) == 0
    ra = read_metrics(tmp_path / "a" / "metrics.csv")
    rb = read_metrics(tmp_path / "b" / "metrics.csv")
    for x, y in zip(ra, rb):
        assert {k: v for k, v in x.items() if k != "wall_ms"} == \
               {k: v for k, v in y.items() if k != "wall_ms"}


def test_list_presets(capsys):
    assert cli.main(["--list-presets"]) == 0
    assert "centralized" in capsys.readouterr().out.split()


def test_parse_seeds():
    assert cli.parse_seeds("4") == [4]
    assert cli.parse_seeds("2..5") == [2, 3, 4, 5]


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "otexplore", "--list-presets"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "decentralized" in res.stdout
    assert os.path.exists(os.path.join(os.path.dirname(cli.__file__), "presets"))
