import csv
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepguard.errors import ConfigError, DataError
from deepguard.evalkit import (ConfusionCounts, auc_prc, confusion, pr_curve, prevention_counts,
                               prevention_rate, rates, read_counts_csv)
from deepguard.simworld import EpisodeLog

PUBLISHED = Path(__file__).parent / "data" / "published_counts.csv"
METRICS = ("tpr", "fpr", "f1", "precision")

# published cells that disagree with their own raw counts by more than 0.001
INCONSISTENT = {
    ("deepguard/Epoch/dae", "tpr"),
    ("deepguard/DAVE-2/dae", "tpr"),
    ("deepguard/DAVE-2/dae", "precision"),
    ("deepguard/Chauffeur/VAE", "fpr"),
    ("deepguard/Chauffeur/dae", "tpr"),
    ("deepguard/Chauffeur/dae", "f1"),
    ("deepguard/Chauffeur/dae", "precision"),
}


def published_rows():
    with open(PUBLISHED) as fh:
        return list(csv.DictReader(fh))


def counts_of(row):
    return ConfusionCounts(*(int(row[k]) for k in ("tp", "fp", "tn", "fn")))


def recomputed(row, metric):
    tp, fp, tn, fn = (int(row[k]) for k in ("tp", "fp", "tn", "fn"))
    tpr, prec = tp / (tp + fn), tp / (tp + fp)
    return {"tpr": tpr, "fpr": fp / (fp + tn), "precision": prec,
            "f1": 2 * prec * tpr / (prec + tpr)}[metric]


CELLS = [(r["name"], m) for r in published_rows() for m in METRICS]


@pytest.mark.parametrize("name,metric", [c for c in CELLS if c not in INCONSISTENT])
def test_published_cells_reproduce(name, metric):
    row = next(r for r in published_rows() if r["name"] == name)
    assert getattr(rates(counts_of(row)), metric) == pytest.approx(float(row[metric]), abs=0.001)


@pytest.mark.parametrize("name,metric", sorted(INCONSISTENT))
def test_published_inconsistent_cells_match_recomputation(name, metric):
    row = next(r for r in published_rows() if r["name"] == name)
    got = getattr(rates(counts_of(row)), metric)
    assert got == pytest.approx(recomputed(row, metric), abs=1e-12)
    assert abs(got - float(row[metric])) > 0.001


@pytest.mark.xfail(strict=True, reason="published cell disagrees with its own raw counts")
@pytest.mark.parametrize("name,metric", sorted(INCONSISTENT))
def test_published_inconsistent_cells_published_value(name, metric):
    row = next(r for r in published_rows() if r["name"] == name)
    assert getattr(rates(counts_of(row)), metric) == pytest.approx(float(row[metric]), abs=0.001)


def test_rates_examples():
    r = rates(ConfusionCounts(149, 304, 1970, 47))
    assert (r.tpr, r.fpr, r.precision, r.f1) == pytest.approx((0.760, 0.134, 0.329, 0.459), abs=0.001)
    r = rates(ConfusionCounts(207, 316, 2051, 52))
    assert (r.tpr, r.fpr) == pytest.approx((0.800, 0.134), abs=0.001)
    r = rates(ConfusionCounts(0, 0, 10, 0))
    assert r.tpr is None and r.fpr == 0.0 and r.precision is None and r.f1 is None


def test_rates_all_undefined():
    with pytest.raises(DataError):
        rates(ConfusionCounts(0, 0, 0, 0))


def test_counts_validation():
    with pytest.raises(DataError):
        ConfusionCounts(-1, 0, 0, 0)
    assert ConfusionCounts(1, 2, 3, 4).total == 10


def make_log(truth, pred, violations=(), seed=0, guards=False):
    recs = [{"frame_index": i, "ground_truth_anomalous": bool(t), "trigger": "current" if p else "none",
             "raw_error": 0.0} for i, (t, p) in enumerate(zip(truth, pred))]
    return EpisodeLog({"seed": seed, "config": {"guards_enabled": guards}}, recs,
                      [{"frame_index": f, "kind": "collision"} for f in violations])


def test_confusion_examples():
    assert confusion(make_log([0] * 8, [0] * 8)) == ConfusionCounts(0, 0, 8, 0)
    assert confusion(make_log([1] * 8, [1] * 8)) == ConfusionCounts(8, 0, 0, 0)
    truth = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
    pred = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0]
    assert confusion(make_log(truth, pred)) == ConfusionCounts(3, 1, 4, 2)
    with pytest.raises(DataError):
        confusion(make_log([], []))
    with pytest.raises(ConfigError):
        confusion(make_log(truth, pred), unit="episode")


def test_confusion_windows():
    truth = [0, 0, 1, 0, 0, 0, 0, 0, 0, 0]
    pred = [0, 0, 0, 0, 0, 0, 1, 0, 0, 0]
    # blocks of 4: [0..3] truth only, [4..7] pred only, [8..9] neither
    assert confusion(make_log(truth, pred), "window", 4) == ConfusionCounts(0, 1, 1, 1)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=80))
def test_window_len_one_equals_frames(pairs):
    log = make_log([a for a, _ in pairs], [b for _, b in pairs])
    assert confusion(log, "window", 1) == confusion(log, "frame")
    assert confusion(log).total == len(pairs)


def test_auc_examples():
    assert auc_prc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc_prc([0.5] * 10, [1, 1, 1] + [0] * 7) == pytest.approx(0.3)
    assert auc_prc([0.9, 0.1], [1, 0]) == pytest.approx(1.0)
    assert auc_prc([0.1, 0.9], [1, 0]) == pytest.approx(0.5, abs=0.01)
    with pytest.raises(DataError):
        auc_prc([0.1, 0.2], [0, 0])
    with pytest.raises(DataError):
        auc_prc([0.1], [0, 1])


def test_auc_matches_hand_curve():
    scores = [0.9, 0.8, 0.7, 0.6]
    labels = [1, 0, 1, 0]
    recall, precision = pr_curve(scores, labels)
    assert list(recall) == [0.0, 0.5, 0.5, 1.0, 1.0]
    assert list(precision) == pytest.approx([1.0, 1.0, 0.5, 2 / 3, 0.5])
    # direct sum of the four trapezoids
    direct = 0.5 * (1 + 1) * 0.5 + 0 + 0.5 * (0.5 + 2 / 3) * 0.5 + 0
    assert auc_prc(scores, labels) == pytest.approx(direct)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(-50, 50), st.booleans()), min_size=2, max_size=60))
def test_auc_invariant_under_monotone_maps(items):
    scores = np.array([s / 5.0 for s, _ in items])  # a grid keeps ties exact under the maps
    labels = np.array([y for _, y in items])
    if not labels.any():
        return
    base = auc_prc(scores, labels)
    assert 0.0 <= base <= 1.0
    assert auc_prc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
    assert auc_prc(3 * scores + 1, labels) == pytest.approx(base, abs=1e-12)


def test_auc_vs_sklearn_style_step_bounds():
    rng = np.random.default_rng(0)
    y = rng.random(500) < 0.2
    s = rng.normal(size=500) + 1.5 * y
    from sklearn.metrics import average_precision_score
    ap = average_precision_score(y, s)
    # trapezoid and step integration of the same curve are close for continuous scores
    assert auc_prc(s, y) == pytest.approx(ap, abs=0.03)


def test_prevention_examples():
    # ten predicted off-run violations, one survives with guards on
    truth = [0] * 400
    pred = [0] * 400
    viol = [30 * (k + 1) for k in range(10)]
    for f in viol:
        pred[f - 3] = 1
    off = make_log(truth, pred, viol, seed=1)
    on = make_log(truth, pred, [viol[4] + 5], seed=1, guards=True)
    assert prevention_counts([{"off": off, "on": on}]) == (10, 1)
    assert prevention_rate([{"off": off, "on": on}]) == pytest.approx(0.9)
    assert prevention_rate([(off, off)]) == 0.0


def test_prevention_attribution_window():
    pred = [0] * 100
    pred[40] = 1
    off = make_log([0] * 100, pred, [52, 53], seed=2)  # 40 is within the 12 frames before 52, not 53
    on = make_log([0] * 100, [0] * 100, [], seed=2, guards=True)
    assert prevention_counts([(off, on)]) == (1, 0)


def test_prevention_errors():
    off = make_log([0] * 50, [0] * 50, [20], seed=3)
    with pytest.raises(DataError):
        prevention_rate([(off, off)])
    other = make_log([0] * 50, [0] * 50, [], seed=4)
    with pytest.raises(DataError):
        prevention_rate([(off, other)])


def test_read_counts_csv():
    rows = read_counts_csv(PUBLISHED.read_text())
    assert len(rows) == 27
    with pytest.raises(DataError):
        read_counts_csv("name,tp\nx,1\n")
    with pytest.raises(DataError):
        read_counts_csv("name,tp,fp,tn,fn\nx,1,2,three,4\n")
