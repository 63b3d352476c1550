import json
import shutil

import pytest

from deepguard import cli
from deepguard.autoencoder import load_model
from deepguard.config import ExperimentConfig, load_config
from deepguard.errors import ConfigError
from deepguard.simworld import EpisodeLog

from test_evalkit import PUBLISHED, published_rows


def write_config(path, out, **extra):
    doc = {
        "seed": 3, "out": str(out),
        "corpus": {"frames_per_track": 20, "calibration_frames_per_track": 20},
        "model": {"variant": "simple", "layer_dims": [2304, 16, 2304], "epochs": 2},
        "simulation": {"track": "circle", "n_episodes": 2, "n_frames": 120,
                       "schedules": [{"kind": "fog", "start_frame": 40, "ramp_frames": 10,
                                      "peak_intensity": 1.0, "hold_frames": 40}]},
    }
    for k, v in extra.items():
        doc.setdefault(k, {}).update(v) if isinstance(v, dict) else doc.__setitem__(k, v)
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("exp")
    cfg = write_config(root / "c.json", root / "run")
    for cmd in ("generate", "train", "calibrate", "simulate", "evaluate"):
        assert cli.main(["--config", str(cfg), "--quiet", cmd]) == 0, cmd
    return root, cfg


def test_pipeline_outputs(pipeline):
    root, _ = pipeline
    run = root / "run"
    manifest = json.loads((run / "corpus" / "manifest.json").read_text())
    assert manifest["splits"]["train"]["total"] == 60
    assert manifest["splits"]["train"]["counts"] == {"straight": 20, "circle": 20, "s-curve": 20}
    assert (run / "loss_history.csv").read_text().count("\n") == 1 + 2
    cal = json.loads((run / "calibration.json").read_text())
    assert cal["theta"] > 0 and cal["mode"] == "calibrated"
    logs = sorted((run / "logs").glob("*.jsonl"))
    assert [p.name for p in logs] == ["seed000003_off.jsonl", "seed000003_on.jsonl",
                                      "seed000004_off.jsonl", "seed000004_on.jsonl"]
    summary = json.loads((run / "summary.json").read_text())
    assert summary["pairs"] == 2 and "v_off" in summary
    assert (run / "pr_curve.csv").exists()
    echoed = load_config(run / "config.json")
    assert echoed == load_config(root / "c.json")


def test_rerun_is_byte_identical(pipeline):
    root, cfg = pipeline
    run = root / "run"
    before = {p: p.read_bytes() for p in [run / "model.json", run / "calibration.json",
                                          *sorted((run / "logs").glob("*.jsonl"))]}
    for cmd in ("train", "calibrate", "simulate"):
        assert cli.main(["--config", str(cfg), "--quiet", cmd]) == 0
    for p, data in before.items():
        assert p.read_bytes() == data, p


def test_generate_twice_same_manifest(tmp_path):
    cfg = write_config(tmp_path / "c.json", tmp_path / "a")
    assert cli.main(["--config", str(cfg), "--quiet", "generate"]) == 0
    first = (tmp_path / "a" / "corpus" / "manifest.json").read_bytes()
    shutil.rmtree(tmp_path / "a")
    assert cli.main(["--config", str(cfg), "--quiet", "generate"]) == 0
    assert (tmp_path / "a" / "corpus" / "manifest.json").read_bytes() == first


def test_parallel_simulate_matches_serial(pipeline, tmp_path):
    root, _ = pipeline
    run = root / "run"
    par = tmp_path / "par"
    shutil.copytree(run, par)
    for p in (par / "logs").glob("*"):
        p.unlink()
    cfg = write_config(tmp_path / "c.json", par, simulation={"jobs": 2})
    assert cli.main(["--config", str(cfg), "--quiet", "simulate"]) == 0
    for p in sorted((run / "logs").glob("*.jsonl")):
        assert (par / "logs" / p.name).read_bytes() == p.read_bytes()


def test_seed_flag_overrides(pipeline, tmp_path):
    root, cfg = pipeline
    run = root / "run"
    other = tmp_path / "o"
    shutil.copytree(run, other)
    for p in (other / "logs").glob("*"):
        p.unlink()
    assert cli.main(["--config", str(cfg), "--out", str(other), "--seed", "10", "--quiet", "simulate"]) == 0
    assert (other / "logs" / "seed000010_on.jsonl").exists()
    assert EpisodeLog.load(other / "logs" / "seed000010_on.jsonl").seed == 10


def test_evaluate_single_nominal_log(pipeline, tmp_path):
    root, cfg = pipeline
    log = EpisodeLog.load(sorted((root / "run" / "logs").glob("*_off.jsonl"))[0])
    for r in log.records:
        r["ground_truth_anomalous"] = False
    p = tmp_path / "nominal.jsonl"
    log.save(p)
    out = tmp_path / "ev"
    assert cli.main(["--config", str(cfg), "--out", str(out), "--quiet", "evaluate", str(p)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["totals"]["tpr"] is None
    assert summary["totals"]["fpr"] is not None
    assert "prevention_rate" not in summary


def test_evaluate_counts_fixture(tmp_path):
    out = tmp_path / "t4"
    assert cli.main(["--out", str(out), "--quiet", "evaluate", "--counts", str(PUBLISHED)]) == 0
    rows = json.loads((out / "summary.json").read_text())["rows"]
    pub = {r["name"]: r for r in published_rows()}
    r = next(x for x in rows if x["name"] == "baseline/DAVE-2/VAE")
    assert (r["tpr"], r["fpr"], r["f1"], r["precision"]) == pytest.approx((0.760, 0.134, 0.459, 0.329), abs=0.001)
    assert len(rows) == len(pub)


def test_report_writes_svgs(pipeline):
    pytest.importorskip("matplotlib")
    root, cfg = pipeline
    assert cli.main(["--config", str(cfg), "--quiet", "report"]) == 0
    svgs = sorted((root / "run" / "report").glob("*.svg"))
    assert (root / "run" / "report" / "pr_curve.svg") in svgs
    first = {p: p.read_bytes() for p in svgs}
    assert cli.main(["--config", str(cfg), "--quiet", "report"]) == 0
    for p, data in first.items():
        assert p.read_bytes() == data


def test_exit_codes(tmp_path):
    bad_kind = write_config(tmp_path / "k.json", tmp_path / "k",
                            simulation={"schedules": [{"kind": "hail", "start_frame": 0,
                                                       "ramp_frames": 1, "peak_intensity": 0.5}]})
    assert cli.main(["--config", str(bad_kind), "--quiet", "simulate"]) == 2
    assert cli.main(["--config", str(tmp_path / "missing.json"), "--quiet", "generate"]) == 2
    assert cli.main(["--out", str(tmp_path / "empty"), "--quiet", "train"]) == 3
    no_tracks = write_config(tmp_path / "t.json", tmp_path / "t", corpus={"tracks": []})
    assert cli.main(["--config", str(no_tracks), "--quiet", "generate"]) == 2


def test_calibrate_too_few_frames(tmp_path):
    cfg = write_config(tmp_path / "c.json", tmp_path / "r",
                       corpus={"tracks": ["straight"], "frames_per_track": 12, "calibration_frames_per_track": 5})
    for cmd in ("generate", "train"):
        assert cli.main(["--config", str(cfg), "--quiet", cmd]) == 0
    assert cli.main(["--config", str(cfg), "--quiet", "calibrate"]) == 3


def test_fixed_mode_bands(pipeline, tmp_path):
    root, _ = pipeline
    run = tmp_path / "p"
    shutil.copytree(root / "run", run)
    cfg = write_config(tmp_path / "c.json", run, calibration={"mode": "fixed"})
    assert cli.main(["--config", str(cfg), "--quiet", "calibrate"]) == 0
    cal = json.loads((run / "calibration.json").read_text())
    assert (cal["theta"], cal["band1"], cal["band2"]) == (0.05, 0.059, 0.069)


def test_config_roundtrip_and_validation():
    cfg = ExperimentConfig()
    assert ExperimentConfig.from_dict(json.loads(cfg.dumps())) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"model": {"variant": "conv"}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"seed": -1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"monitor": {"lag": 3}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"calibration": {"false_alarm_rate": 1.5}})


def test_trained_weights_file_shape(pipeline):
    root, _ = pipeline
    m = load_model(root / "run" / "model.json")
    assert m.layer_dims == (2304, 16, 2304)
    assert m.frame_shape == (1, 36, 64)
