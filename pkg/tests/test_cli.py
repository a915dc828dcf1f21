"""Command-line interface: subcommands, outputs, exit codes."""

import csv
import json

import pytest

from stlwalk.cli import main
from stlwalk.collision import Mlp


@pytest.fixture(scope="module")
def net_path(small_net, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "net.json"
    small_net.save(path)
    return str(path)


def test_train_collision_writes_model(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"collision": {"layers": [8], "epochs": 5}}')
    out = tmp_path / "model.json"
    data = tmp_path / "data.csv"
    rc = main(["train-collision", "--config", str(cfg), "--n", "600",
               "--out", str(out), "--dataset-out", str(data)])
    assert rc == 0
    net = Mlp.load(out)
    assert net.layer_sizes == [6, 8, 1]
    assert data.exists()
    assert "sign agreement" in capsys.readouterr().out


def test_seed_flag_changes_dataset(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"collision": {"layers": [8], "epochs": 3}}')
    a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
    main(["train-collision", "--config", str(cfg), "--n", "400",
          "--out", str(a), "--seed", "1"])
    main(["train-collision", "--config", str(cfg), "--n", "400",
          "--out", str(b), "--seed", "1"])
    main(["train-collision", "--config", str(cfg), "--n", "400",
          "--out", str(c), "--seed", "2"])
    assert a.read_text() == b.read_text()
    assert a.read_text() != c.read_text()


def test_walk_baseline(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    rc = main(["walk", "--controller", "baseline", "--steps", "5",
               "--out", str(out)])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "time"
    assert "com_x" in rows[0] and "riem_sag" in rows[0]
    assert len(rows) > 50
    assert "recovered=True" in capsys.readouterr().out


def test_walk_stl_with_saved_model(tmp_path, net_path):
    out = tmp_path / "trace.csv"
    rc = main(["walk", "--controller", "stl", "--steps", "4",
               "--model", net_path, "--out", str(out)])
    assert rc == 0
    assert out.exists()


def test_push_writes_report(tmp_path, capsys):
    out = tmp_path / "ep"
    rc = main(["push", "--controller", "baseline", "--dir", "3",
               "--phase", "0.25", "--force", "80", "--steps", "6",
               "--out", str(out)])
    assert rc == 0
    report = json.loads((tmp_path / "ep.json").read_text())
    assert report["direction_index"] == 3
    assert report["force"] == 80
    assert "recovered" in report and "crossed" in report
    assert (tmp_path / "ep_trace.csv").exists()


def test_sweep_tiny_grid(tmp_path, net_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "sweep": {"n_directions": 1, "force_cap": 40.0,
                  "resolution": 20.0, "n_steps": 5}}))
    out_dir = tmp_path / "sweep"
    rc = main(["sweep", "--config", str(cfg), "--phases", "0.25",
               "--out", str(out_dir), "--model", net_path])
    assert rc == 0
    with open(out_dir / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["controller", "phase", "direction_index"]
    assert len(rows) == 3  # header + one cell per controller
    summary = json.loads((out_dir / "summary.json").read_text())
    assert len(summary["cells"]) == 2
    assert summary["n_gate_violations"] == 0


def test_bad_config_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"sweep": {"bogus": 1}}')
    rc = main(["walk", "--controller", "baseline", "--config", str(cfg)])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_infeasible_configuration_exits_two(tmp_path, net_path, capsys):
    # a treadmill too short to hold the nominal footholds makes even
    # unperturbed walking fail, which the sweep reports as infeasible
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "treadmill": {"x_min": -0.1, "x_max": 0.1},
        "sweep": {"n_directions": 1, "n_steps": 4, "force_cap": 20.0,
                  "resolution": 20.0}}))
    out_dir = tmp_path / "sweep"
    rc = main(["sweep", "--config", str(cfg), "--phases", "0.25",
               "--out", str(out_dir), "--model", net_path])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit):
        main([])
