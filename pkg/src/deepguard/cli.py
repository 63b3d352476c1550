"""Command-line entry point: generate, train, calibrate, simulate, evaluate, report."""
import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .autoencoder import (NoiseSpec, TrainConfig, default_layer_dims, init_model, load_model,
                          reconstruct_batch, save_model, train)
from .calibration import estimate_threshold, load_calibration, save_calibration
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DataError, DeepGuardError
from .evalkit import (auc_prc, confusion, metrics_csv, pr_curve, pr_curve_csv, prevention_counts,
                      rates, read_counts_csv, summary_json)
from .frames import read_pgm, write_pgm
from .guard import GuardConfig
from .monitor import MonitorConfig, MonitorState
from .simworld.corpus import nominal_corpus
from .simworld.episode import EpisodeConfig, EpisodeLog, run_episode
from .simworld.render import CameraConfig
from .simworld.track import Track

log = logging.getLogger("deepguard")

SPLITS = ("train", "calibration")


def _camera(cfg):
    c, h, w = cfg.frame_shape
    if c != 1:
        raise ConfigError("the simulator renders single-channel frames; frame_shape[0] must be 1")
    return CameraConfig(height=int(h), width=int(w))


def _out(cfg):
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(cfg.dumps())
    except OSError as exc:
        raise DataError(f"cannot write to output directory {out}: {exc}") from exc
    return out


def _require(path, what):
    if not path.exists():
        raise DataError(f"missing {what}: {path}")
    return path


# generate ------------------------------------------------------------------

def cmd_generate(cfg):
    c = cfg.corpus
    if not c.tracks:
        raise ConfigError("corpus.tracks is empty")
    out = _out(cfg)
    cam = _camera(cfg)
    manifest = {"frame_shape": list(cam.shape), "seed": cfg.seed, "splits": {}}
    sizes = {"train": c.frames_per_track, "calibration": c.calibration_frames_per_track}
    for k, split in enumerate(SPLITS):
        frames, counts = nominal_corpus(list(c.tracks), sizes[split], [cfg.seed, k], cam,
                                        every=c.every, segment=c.segment)
        d = out / "corpus" / split
        try:
            d.mkdir(parents=True, exist_ok=True)
            for stale in d.glob("*.pgm"):
                stale.unlink()
            names = []
            for i, f in enumerate(frames):
                name = f"{i:06d}.pgm"
                write_pgm(d / name, f)
                names.append(name)
        except OSError as exc:
            raise DataError(f"cannot write corpus to {d}: {exc}") from exc
        manifest["splits"][split] = {"counts": counts, "total": int(len(frames)), "files": names}
        log.info("generated %d %s frames %s", len(frames), split, counts)
    (out / "corpus" / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_corpus(out, split):
    root = Path(out) / "corpus"
    manifest = _require(root / "manifest.json", "corpus manifest (run generate first)")
    try:
        doc = json.loads(manifest.read_text())
        names = doc["splits"][split]["files"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"malformed corpus manifest {manifest}: {exc}") from exc
    if not names:
        return np.empty((0,) + tuple(doc.get("frame_shape", (1, 1, 1))))
    return np.stack([read_pgm(_require(root / split / n, "corpus frame")) for n in names])


# train / calibrate ---------------------------------------------------------

def _train_config(cfg):
    m = cfg.model
    noise = NoiseSpec("gaussian", m.noise_magnitude) if m.variant == "denoising" else None
    return TrainConfig(m.epochs, m.batch_size, m.learning_rate, cfg.seed, noise, m.kl_weight)


def cmd_train(cfg):
    out = _out(cfg)
    frames = load_corpus(out, "train")
    if len(frames) == 0:
        raise DataError("training corpus is empty")
    n = int(np.prod(cfg.frame_shape))
    if frames[0].size != n:
        raise DataError(f"corpus frames have {frames[0].size} pixels, config expects {n}")
    m = cfg.model
    dims = tuple(m.layer_dims) if m.layer_dims else default_layer_dims(m.variant, n)
    model = init_model(m.variant, dims, cfg.seed, frame_shape=tuple(cfg.frame_shape))

    def progress(epoch, loss):
        log.info("epoch %d loss %.6g", epoch + 1, loss)

    model, history = train(model, frames, _train_config(cfg), progress)
    save_model(model, out / "model.json")
    lines = ["epoch,loss"] + [f"{i + 1},{v!r}" for i, v in enumerate(history)]
    (out / "loss_history.csv").write_text("\n".join(lines) + "\n")
    return model, history


def frame_errors(model, frames, batch=512):
    errs = []
    for s in range(0, len(frames), batch):
        x = np.asarray(frames[s:s + batch], dtype=np.float64)
        rec = reconstruct_batch(model, x).reshape(x.shape)
        errs.append(np.mean((rec - x) ** 2, axis=tuple(range(1, x.ndim))))
    return np.concatenate(errs) if errs else np.empty(0)


def cmd_calibrate(cfg):
    out = _out(cfg)
    model = load_model(_require(out / "model.json", "trained model (run train first)"))
    frames = load_corpus(out, "calibration")
    errors = frame_errors(model, frames)
    cal = estimate_threshold(errors, cfg.calibration.false_alarm_rate, cfg.calibration.mode)
    save_calibration(cal, out / "calibration.json")
    log.info("theta %.6g (%s fit, shape %.4g scale %.4g)", cal.threshold.theta,
             cal.fit.estimator, cal.fit.params.shape, cal.fit.params.scale)
    return cal


# simulate ------------------------------------------------------------------

def _monitor(cfg, out):
    model = load_model(_require(out / "model.json", "trained model (run train first)"))
    cal = load_calibration(_require(out / "calibration.json", "calibration report (run calibrate first)"))
    m = cfg.monitor
    return MonitorState(model, cal.threshold, MonitorConfig(m.order, m.window, m.horizon))


def episode_configs(cfg, threshold):
    s, g = cfg.simulation, cfg.guard
    warn = g.warn_floor if g.warn_floor is not None else threshold.warn_floor
    base = EpisodeConfig(
        track=Track.standard(s.track), schedule=tuple(s.schedules), n_frames=s.n_frames,
        camera=_camera(cfg), guard=GuardConfig(g.speed_factor, warn, g.stop_epsilon),
    )
    runs = []
    for k in range(s.n_episodes):
        seed = cfg.seed + k
        modes = (False, True) if s.paired else (s.guards_enabled,)
        runs += [replace(base, seed=seed, guards_enabled=on) for on in modes]
    return runs


def log_name(ep):
    return f"seed{ep.seed:06d}_{'on' if ep.guards_enabled else 'off'}.jsonl"


def _run_one(args):
    ep, monitor, dump_dir = args
    if dump_dir is None:
        return run_episode(ep, monitor).dumps()
    d = Path(dump_dir)
    d.mkdir(parents=True, exist_ok=True)

    def hook(i, frame):
        write_pgm(d / f"{i:06d}.pgm", frame)

    return run_episode(ep, monitor, hook).dumps()


def cmd_simulate(cfg):
    out = _out(cfg)
    monitor = _monitor(cfg, out)
    eps = episode_configs(cfg, monitor.threshold)
    logs_dir = out / "logs"
    logs_dir.mkdir(exist_ok=True)
    jobs = [(ep, monitor, str(logs_dir / log_name(ep)[:-6]) if cfg.simulation.dump_frames else None)
            for ep in eps]
    if cfg.simulation.jobs > 1:
        with ProcessPoolExecutor(cfg.simulation.jobs) as pool:
            texts = list(pool.map(_run_one, jobs))
    else:
        texts = [_run_one(j) for j in jobs]
    paths = []
    for ep, text in zip(eps, texts):
        p = logs_dir / log_name(ep)
        p.write_text(text)
        paths.append(p)
        log.info("wrote %s", p)
    return paths


# evaluate ------------------------------------------------------------------

def _rate_row(name, counts):
    r = rates(counts)
    return {"name": name, "tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn,
            "tpr": r.tpr, "fpr": r.fpr, "precision": r.precision, "f1": r.f1}


def evaluate_logs(logs, unit="frame", window_len=12):
    rows, total, scores, labels = [], None, [], []
    for name, lg in logs:
        c = confusion(lg, unit, window_len)
        total = c if total is None else total + c
        row = _rate_row(name, c)
        row["seed"] = lg.seed
        row["guards_enabled"] = bool(lg.header.get("config", {}).get("guards_enabled", False))
        row["violations"] = len(lg.violations)
        rows.append(row)
        scores += [r["raw_error"] for r in lg.records]
        labels += [bool(r["ground_truth_anomalous"]) for r in lg.records]
    summary = {"unit": unit, "episodes": len(rows), "totals": _rate_row("all", total)}
    curve = None
    if any(labels):
        summary["auc_prc"] = auc_prc(scores, labels)
        summary["prevalence"] = float(np.mean(labels))
        curve = pr_curve(scores, labels)
    else:
        summary["auc_prc"] = None
    by_seed = {}
    for _, lg in logs:
        on = bool(lg.header.get("config", {}).get("guards_enabled", False))
        by_seed.setdefault(lg.seed, {})["on" if on else "off"] = lg
    pairs = [p for p in by_seed.values() if "on" in p and "off" in p]
    if pairs:
        v_off, v_on = prevention_counts(pairs)
        summary["pairs"] = len(pairs)
        summary["v_off"], summary["v_on"] = v_off, v_on
        summary["prevention_rate"] = max(0.0, (v_off - v_on) / v_off) if v_off else None
    return rows, summary, curve


def cmd_evaluate(cfg, paths=(), counts=None, unit="frame", window_len=12):
    out = _out(cfg)
    if counts is not None:
        text = Path(_require(Path(counts), "counts file")).read_text()
        rows = [_rate_row(name, c) for name, c in read_counts_csv(text, str(counts))]
        (out / "metrics.csv").write_text(metrics_csv(rows))
        (out / "summary.json").write_text(summary_json({"rows": rows}))
        return rows, {"rows": rows}
    paths = [Path(p) for p in paths] or sorted((out / "logs").glob("*.jsonl"))
    if not paths:
        raise DataError("no episode logs to evaluate")
    logs = [(p.stem, EpisodeLog.load(_require(p, "episode log"))) for p in paths]
    rows, summary, curve = evaluate_logs(logs, unit, window_len)
    (out / "metrics.csv").write_text(metrics_csv(rows))
    (out / "summary.json").write_text(summary_json(summary))
    if curve is not None:
        (out / "pr_curve.csv").write_text(pr_curve_csv(*curve))
    return rows, summary


# report --------------------------------------------------------------------

def cmd_report(cfg):
    out = _out(cfg)
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError("report needs matplotlib (pip install 'artifact[report]')") from exc
    matplotlib.rcParams["svg.hashsalt"] = "deepguard"
    rdir = out / "report"
    rdir.mkdir(exist_ok=True)
    written = []
    pr = out / "pr_curve.csv"
    if pr.exists():
        with open(pr) as fh:
            pts = [(float(r["recall"]), float(r["precision"])) for r in csv.DictReader(fh)]
        fig, ax = plt.subplots(figsize=(4, 4))
        ax.plot([p[0] for p in pts], [p[1] for p in pts])
        ax.set_xlabel("recall")
        ax.set_ylabel("precision")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        fig.savefig(rdir / "pr_curve.svg", metadata={"Date": None})
        plt.close(fig)
        written.append(rdir / "pr_curve.svg")
    theta = None
    if (out / "calibration.json").exists():
        theta = load_calibration(out / "calibration.json").threshold.theta
    for p in sorted((out / "logs").glob("*.jsonl")) if (out / "logs").exists() else []:
        lg = EpisodeLog.load(p)
        idx = [r["frame_index"] for r in lg.records]
        fig, ax = plt.subplots(figsize=(8, 3))
        ax.plot(idx, [r["raw_error"] for r in lg.records], lw=0.6, label="raw")
        ax.plot(idx, [r["filtered_error"] for r in lg.records], lw=0.8, label="filtered")
        if theta is not None:
            ax.axhline(theta, color="k", ls="--", lw=0.6, label="threshold")
        for v in lg.violations:
            ax.axvline(v["frame_index"], color="r", lw=0.4)
        ax.set_yscale("log")
        ax.set_xlabel("frame")
        ax.legend(loc="upper left", fontsize=7)
        target = rdir / f"{p.stem}_errors.svg"
        fig.savefig(target, metadata={"Date": None})
        plt.close(fig)
        written.append(target)
    if not written:
        raise DataError("nothing to report: run simulate and evaluate first")
    return written


# entry point ---------------------------------------------------------------

def _common(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="experiment config JSON")
    p.add_argument("--out", default=d, help="output directory (overrides config)")
    p.add_argument("--seed", type=int, default=d, help="master seed (overrides config)")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser():
    parser = argparse.ArgumentParser(prog="deepguard", description=__doc__)
    _common(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "train", "calibrate", "simulate", "report"):
        _common(sub.add_parser(name), True)
    ev = sub.add_parser("evaluate")
    _common(ev, True)
    ev.add_argument("logs", nargs="*", help="episode logs (default: <out>/logs/*.jsonl)")
    ev.add_argument("--counts", help="CSV of raw confusion counts (name,tp,fp,tn,fn)")
    ev.add_argument("--unit", choices=("frame", "window"), default="frame")
    ev.add_argument("--window-len", type=int, default=12)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = cfg.with_overrides(args.seed, args.out)
        if args.command == "generate":
            cmd_generate(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "calibrate":
            cmd_calibrate(cfg)
        elif args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.logs, args.counts, args.unit, args.window_len)
        elif args.command == "report":
            cmd_report(cfg)
    except DeepGuardError as exc:
        log.error("%s", exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
