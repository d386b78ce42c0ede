import csv
import json

import pytest

from fadingmac import cli
from fadingmac.scenarios import Table


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_file_gives_defaults(tmp_path):
    cfg = cli.parse_config(write(tmp_path, ""))
    assert cfg.propagation.beta == 3.0 and cfg.propagation.sigma_db == 4.0
    assert cfg.propagation.ideal_range_m == 250.0
    assert (cfg.dcf.retry.srl, cfg.dcf.retry.lrl) == (7, 4)
    assert cfg.run["replications"] == 10


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[propagation]\nsigma_db = -1\n", "sigma_db"),
        ("[dcf]\nsrl = 0\n", "srl"),
        ("[dcf]\nsrl = 7\nfoo = 1\n", "line 3"),
        ("[nosuch]\nx = 1\n", "unknown section"),
        ("[dcf]\nlrl = four\n", "line 2"),
        ("[dcf\nlrl = 4\n", "line 1"),
        ("[dcf]\nlrl = 4\nlrl = 5\n", "line 3"),
        ("[flooding]\nchannel = radio\n", "channel"),
    ],
)
def test_config_errors(tmp_path, text, needle):
    with pytest.raises(cli.ConfigError, match=needle):
        cli.parse_config(write(tmp_path, text))


def test_overrides_beat_file(tmp_path):
    p = write(tmp_path, "[run]\nseed = 3\n[dcf]\nrts_cts_enabled = yes\n")
    cfg = cli.parse_config(p, ["run.seed=9", "dcf.rts_cts_enabled=off"])
    assert cfg.run["seed"] == 9 and not cfg.dcf.rts_cts_enabled
    with pytest.raises(cli.ConfigError):
        cli.parse_config(p, ["dcf.nothing=1"])
    with pytest.raises(cli.ConfigError):
        cli.parse_config(p, ["garbage"])


def test_every_flag_has_a_config_key():
    for key in ("seed", "out", "replications", "workers", "trace"):
        assert key in cli.DEFAULTS["run"]


def test_emit_csv(tmp_path):
    path = tmp_path / "t.csv"
    values = [0.1, 1 / 3, 2.0**-40, 1e300, 123456789.123456789]
    cli.emit_csv(Table(["b", "a"], [(v, None) for v in values]), path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["b", "a"]
    assert [float(r[0]) for r in rows[1:]] == values
    assert all(r[1] == "" for r in rows[1:])
    cli.emit_csv(Table(["x", "y"], []), path)
    assert path.read_text() == "x,y\n"
    with pytest.raises(ValueError):
        cli.emit_csv(Table(["x", "y"], [(1,)]), path)
    with pytest.raises(OSError, match="nope"):
        cli.emit_csv(Table(["x"], []), tmp_path / "nope" / "t.csv")


def test_unknown_experiment_lists_registry(tmp_path):
    cfg = cli.parse_config(None)
    with pytest.raises(cli.UnknownExperiment) as exc:
        cli.run_experiment("nope", cfg, tmp_path)
    assert "delivery_vs_distance" in str(exc.value)


def test_delivery_schema_and_manifest(tmp_path):
    cfg = cli.parse_config(None, ["delivery.distances=100 220 250", "delivery.n_samples=500"])
    m = cli.run_experiment("delivery_vs_distance", cfg, tmp_path)
    header = (tmp_path / "delivery_vs_distance.csv").read_text().splitlines()[0]
    assert header == "distance_m,analytic_p,montecarlo_p,two_ray_p"
    data = json.loads((tmp_path / "delivery_vs_distance_manifest.json").read_text())
    assert data["version"] == m.version and data["seeds"] == m.seeds
    assert data["config"]["delivery"]["n_samples"] == "500"
    assert [o["file"] for o in data["outputs"]] == ["delivery_vs_distance.csv"]
    assert data["digest"] == cli._combined_digest(data["outputs"])


def test_replay_is_byte_identical(tmp_path):
    out = tmp_path / "a"
    cli.main(["simulate", "--out", str(out), "--trace", "--replications", "2",
              "--set", "scenario.duration_s=1"])
    new, bad = cli.replay(out / "simulate_manifest.json", tmp_path / "b")
    assert bad == []
    for name in ("simulate.csv", "trace.csv"):
        assert (out / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_main_exit_codes(tmp_path, capsys, monkeypatch):
    assert cli.main(["capture-geometry", "--out", str(tmp_path)]) == 0
    assert "[PASS]" in capsys.readouterr().out
    assert cli.main(["delay", "--out", str(tmp_path), "--set", "dcf.cw_min=30"]) == 2
    assert "cw_min" in capsys.readouterr().err
    failing = lambda cfg: cli.sc.ExperimentResult(
        "stub", {"stub": Table(["x"], [(1,)])}, {}, [cli.sc.Check("never holds", False, "stub")], [])
    monkeypatch.setitem(cli.EXPERIMENTS, "stub", ("stub", failing))
    monkeypatch.setitem(cli.COMMANDS, "stub", "stub")
    manifest = cli.run_experiment("stub", cli.parse_config(None), tmp_path)
    assert manifest.checks == [{"name": "never holds", "passed": False, "detail": "stub"}]
    assert cli.main(["stub", "--out", str(tmp_path)]) == 1
    assert "[FAIL] never holds" in capsys.readouterr().out
    assert cli.main(["list"]) == 0


def test_replay_detects_tampering(tmp_path):
    cli.main(["backoff-curve", "--out", str(tmp_path / "a")])
    man = tmp_path / "a" / "backoff_curve_manifest.json"
    data = json.loads(man.read_text())
    data["outputs"][0]["sha256"] = "0" * 64
    man.write_text(json.dumps(data))
    assert cli.main(["replay", str(man), "--out", str(tmp_path / "b")]) == 1
