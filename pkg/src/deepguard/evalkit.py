"""Confusion counts, detection rates, AUC-PRC and the paired prevention rate."""
import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, DataError

UNITS = ("frame", "window")
ATTRIBUTION_FRAMES = 12
NEIGHBORHOOD_FRAMES = 24


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for k in ("tp", "fp", "tn", "fn"):
            v = getattr(self, k)
            if int(v) != v or v < 0:
                raise DataError(f"{k} must be a non-negative count, got {v}")
            object.__setattr__(self, k, int(v))

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class Rates:
    tpr: float | None
    fpr: float | None
    precision: float | None
    f1: float | None

    def as_dict(self):
        return asdict(self)


def _records(log):
    return log.records if hasattr(log, "records") else log


def labels_and_predictions(log):
    recs = _records(log)
    truth = np.array([bool(r["ground_truth_anomalous"]) for r in recs], dtype=bool)
    pred = np.array([r["trigger"] != "none" for r in recs], dtype=bool)
    return truth, pred


def counts_from_arrays(truth, pred):
    truth = np.asarray(truth, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    return ConfusionCounts(int(np.sum(truth & pred)), int(np.sum(~truth & pred)),
                           int(np.sum(~truth & ~pred)), int(np.sum(truth & ~pred)))


def confusion(log, unit="frame", window_len=12):
    """Score a log per frame, or per block of ``window_len`` consecutive frames.

    A block is truth-positive if any of its frames is, and predicted-positive
    if any of its frames triggers. A trailing partial block counts as a block.
    """
    if unit not in UNITS:
        raise ConfigError(f"unit must be one of {UNITS}, got {unit!r}")
    truth, pred = labels_and_predictions(log)
    if truth.size == 0:
        raise DataError("episode log has no frame records")
    if unit == "window":
        if window_len < 1:
            raise ConfigError("window_len must be >= 1")
        starts = np.arange(0, truth.size, window_len)
        truth = np.logical_or.reduceat(truth, starts)
        pred = np.logical_or.reduceat(pred, starts)
    return counts_from_arrays(truth, pred)


def _ratio(num, den):
    return num / den if den > 0 else None


def rates(counts):
    """TPR, FPR, precision and F1; a rate whose denominator is zero is None."""
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
    if tp + fn == 0 and tn + fp == 0 and tp + fp == 0:
        raise DataError("all rate denominators are zero")
    tpr = _ratio(tp, tp + fn)
    fpr = _ratio(fp, fp + tn)
    precision = _ratio(tp, tp + fp)
    if tpr is None or precision is None:
        f1 = None
    else:
        f1 = _ratio(2.0 * precision * tpr, precision + tpr)
    return Rates(tpr, fpr, precision, f1)


def pr_curve(scores, labels):
    """(recall, precision) points sorted by recall, starting at the recall-0 anchor.

    One point per distinct score value s, predicting positive every item
    scoring at least s. Points with no true positive carry no precision
    information and are dropped; the anchor copies the precision of the
    strictest remaining point.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=bool).ravel()
    if s.size != y.size:
        raise DataError(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DataError("AUC-PRC needs at least one positive label")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    # last index of each run of equal scores = threshold at that score
    last = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp, fp = tp[last], fp[last]
    keep = tp > 0
    tp, fp = tp[keep], fp[keep]
    recall = tp / n_pos
    precision = tp / (tp + fp)
    recall = np.r_[0.0, recall]
    precision = np.r_[precision[0], precision]
    return recall, precision


def auc_prc(scores, labels):
    recall, precision = pr_curve(scores, labels)
    return float(np.sum(np.diff(recall) * 0.5 * (precision[1:] + precision[:-1])))


def _violation_frames(log):
    return [int(v["frame_index"]) for v in log.violations]


def _predicted_violations(log, attribution=ATTRIBUTION_FRAMES):
    _, pred = labels_and_predictions(log)
    out = []
    for f in _violation_frames(log):
        lo = max(0, f - attribution)
        if pred[lo:f].any():
            out.append(f)
    return out


def prevention_counts(pairs, attribution=ATTRIBUTION_FRAMES, neighborhood=NEIGHBORHOOD_FRAMES):
    """(V_off, V_on) summed over paired runs.

    V_off counts guards-off violations with a trigger within the preceding
    ``attribution`` frames. V_on counts guards-on violations lying within
    ``neighborhood`` frames of any of those, each on-run violation counted once.
    """
    v_off = v_on = 0
    for pair in pairs:
        off, on = (pair["off"], pair["on"]) if isinstance(pair, dict) else pair
        if off.seed != on.seed:
            raise DataError(f"paired logs have different seeds {off.seed} and {on.seed}")
        predicted = _predicted_violations(off, attribution)
        v_off += len(predicted)
        on_frames = _violation_frames(on)
        v_on += sum(1 for g in on_frames if any(abs(g - f) <= neighborhood for f in predicted))
    return v_off, v_on


def prevention_rate(pairs, attribution=ATTRIBUTION_FRAMES, neighborhood=NEIGHBORHOOD_FRAMES):
    v_off, v_on = prevention_counts(pairs, attribution, neighborhood)
    if v_off == 0:
        raise DataError("no predicted violations in the guards-off runs")
    return max(0.0, (v_off - v_on) / v_off)


def _fmt(v):
    return "" if v is None else repr(float(v)) if isinstance(v, float) else str(v)


def metrics_csv(rows):
    """CSV text for metric rows (dicts sharing the same keys); None becomes empty."""
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    w.writerow(keys)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in keys])
    return buf.getvalue()


def pr_curve_csv(recall, precision):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["recall", "precision"])
    for r, p in zip(recall, precision):
        w.writerow([repr(float(r)), repr(float(p))])
    return buf.getvalue()


def read_counts_csv(text, source="<counts>"):
    """Rows of (label, ConfusionCounts) from CSV with columns name,tp,fp,tn,fn."""
    reader = csv.DictReader(io.StringIO(text))
    need = {"tp", "fp", "tn", "fn"}
    if reader.fieldnames is None or not need <= set(reader.fieldnames):
        raise DataError(f"{source}: counts CSV needs columns tp,fp,tn,fn")
    out = []
    for n, row in enumerate(reader, 2):
        try:
            c = ConfusionCounts(*(int(row[k]) for k in ("tp", "fp", "tn", "fn")))
        except (TypeError, ValueError) as exc:
            raise DataError(f"{source}:{n}: bad count: {exc}") from exc
        label = row.get("name") or row.get("label") or str(n - 1)
        out.append((label, c))
    return out


def summary_json(summary):
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"
