"""Detector threshold, OOD metrics, calibration, and the region error bound.

Score polarity is fixed package-wide: a score is the model's OOD
probability, so higher means more OOD, and a sample is predicted ID when
its score is <= delta.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


def select_delta(id_scores) -> float:
    """Smallest threshold keeping at least 95% of ID samples below it."""
    s = np.sort(np.asarray(id_scores, dtype=np.float64))
    n = len(s)
    if n < 20:
        raise ValueError(f"need at least 20 ID scores, got {n}")
    k = int(np.ceil(0.95 * n))
    return float(s[k - 1])


def detect(score: float, delta: float) -> str:
    """'OOD' iff score > delta; equality counts as ID."""
    return "OOD" if score > delta else "ID"


def detect_mask(scores, delta: float) -> np.ndarray:
    """Boolean array, True where predicted OOD."""
    return np.asarray(scores, dtype=np.float64) > delta


def classify_id(probabilities) -> int:
    """Argmax over the first K entries of a (K+1)-probability vector.

    Ties break toward the lowest index; returns a 1-based class.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    return int(np.argmax(p[: len(p) - 1])) + 1


def classify_id_batch(probabilities) -> np.ndarray:
    p = np.asarray(probabilities, dtype=np.float64)
    return np.argmax(p[:, :-1], axis=1) + 1


def auroc(id_scores, ood_scores) -> float:
    """P(random ID score < random OOD score), ties counted half.

    Rank (Mann-Whitney) formulation; equals the area under the FPR-TPR
    curve.
    """
    id_s = np.asarray(id_scores, dtype=np.float64)
    ood_s = np.asarray(ood_scores, dtype=np.float64)
    if len(id_s) == 0 or len(ood_s) == 0:
        raise ValueError("both score arrays must be nonempty")
    ranks = rankdata(np.concatenate([id_s, ood_s]), method="average")
    n_o = len(ood_s)
    u = ranks[len(id_s) :].sum() - n_o * (n_o + 1) / 2.0
    return float(u / (len(id_s) * n_o))


def tnr_at_tpr95(id_scores, ood_scores) -> float:
    """Fraction of OOD scores above the 95%-TPR threshold."""
    delta = select_delta(id_scores)
    ood_s = np.asarray(ood_scores, dtype=np.float64)
    if len(ood_s) == 0:
        raise ValueError("ood_scores must be nonempty")
    return float(np.mean(ood_s > delta))


def detection_error(id_scores, ood_scores) -> float:
    """min over thresholds of 0.5*(1 - TPR) + 0.5*FPR (equal priors).

    Sorted sweep over all distinct score values; a sample is predicted
    ID when score <= threshold.
    """
    id_s = np.sort(np.asarray(id_scores, dtype=np.float64))
    ood_s = np.sort(np.asarray(ood_scores, dtype=np.float64))
    n_i, n_o = len(id_s), len(ood_s)
    if n_i == 0 or n_o == 0:
        raise ValueError("both score arrays must be nonempty")
    thresholds = np.unique(np.concatenate([id_s, ood_s]))
    # counts of scores <= t for each candidate t
    id_le = np.searchsorted(id_s, thresholds, side="right")
    ood_le = np.searchsorted(ood_s, thresholds, side="right")
    miss = 1.0 - id_le / n_i  # 1 - TPR
    fpr = ood_le / n_o
    return float(np.min(0.5 * miss + 0.5 * fpr))


def entropy(probabilities) -> float:
    """Natural-log entropy of a probability vector; 0*log(0) := 0."""
    p = np.asarray(probabilities, dtype=np.float64)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"probabilities must sum to 1, got {p.sum()}")
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def diversity(logit_vectors) -> float:
    """Mean over points of the Euclidean distance to the nearest other point."""
    x = np.asarray(logit_vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least two logit vectors")
    sq = np.sum(x**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, np.inf)
    return float(np.mean(np.sqrt(np.maximum(d2.min(axis=1), 0.0))))


def ece(probabilities, labels, bins: int = 15) -> float:
    """Expected calibration error over equal-width confidence bins.

    Confidence is the max probability, prediction its (1-based) argmax.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if p.ndim != 2 or p.shape[0] == 0 or p.shape[0] != len(y):
        raise ValueError("need nonempty probabilities with matching labels")
    conf = p.max(axis=1)
    correct = (np.argmax(p, axis=1) + 1 == y).astype(np.float64)
    which = np.minimum((conf * bins).astype(np.int64), bins - 1)
    total = 0.0
    for b in range(bins):
        mask = which == b
        if not mask.any():
            continue
        total += mask.sum() / len(y) * abs(correct[mask].mean() - conf[mask].mean())
    return float(total)


def subfunction_bound(region_counts, kernel=None, delta_conf: float = 0.05):
    """Per-region mass P(h_i) and generalization-gap term.

    P(h_i) = sum_j N_j k(i, j) / sum_l sum_j N_j k(l, j) and the gap is
    (1 / P(h_i)) * sqrt(ln(2 / delta) / (2 N)); regions with zero mass
    get an unbounded (infinite) gap.
    """
    counts = np.asarray(region_counts, dtype=np.float64)
    if counts.ndim != 1 or counts.sum() <= 0:
        raise ValueError("region counts must be 1-D with positive total")
    if not 0.0 < delta_conf <= 1.0:
        raise ValueError("delta_conf must lie in (0, 1]")
    c = len(counts)
    k = np.eye(c) if kernel is None else np.asarray(kernel, dtype=np.float64)
    if k.shape != (c, c) or np.any(k < 0):
        raise ValueError(f"kernel must be nonnegative with shape ({c}, {c})")
    weighted = k @ counts
    denom = weighted.sum()
    if denom == 0:
        raise ValueError("kernel row sums are all zero")
    p = weighted / denom
    n_total = counts.sum()
    base = np.sqrt(np.log(2.0 / delta_conf) / (2.0 * n_total))
    with np.errstate(divide="ignore"):
        gap = np.where(p > 0, base / np.where(p > 0, p, 1.0), np.inf)
    return p, gap


def confusion_counts(id_scores, ood_scores, delta: float) -> dict:
    """TP/FN over ID (positive class) and TN/FP over OOD at threshold delta."""
    id_s = np.asarray(id_scores, dtype=np.float64)
    ood_s = np.asarray(ood_scores, dtype=np.float64)
    tp = int(np.sum(id_s <= delta))
    fn = len(id_s) - tp
    tn = int(np.sum(ood_s > delta))
    fp = len(ood_s) - tn
    return {"tp": tp, "fp": fp, "fn": fn, "tn": tn}


def roc_points(id_scores, ood_scores) -> np.ndarray:
    """(FPR, TPR) pairs over all distinct thresholds, for plotting.

    Here 'positive' is OOD-detected, so TPR is the fraction of OOD above
    threshold and FPR the fraction of ID above it.
    """
    id_s = np.sort(np.asarray(id_scores, dtype=np.float64))
    ood_s = np.sort(np.asarray(ood_scores, dtype=np.float64))
    thresholds = np.unique(np.concatenate([id_s, ood_s]))
    fpr = 1.0 - np.searchsorted(id_s, thresholds, side="right") / len(id_s)
    tpr = 1.0 - np.searchsorted(ood_s, thresholds, side="right") / len(ood_s)
    pts = np.column_stack([fpr, tpr])
    return np.vstack([[1.0, 1.0], pts, [0.0, 0.0]])


@dataclass(frozen=True)
class EvalReport:
    delta: float
    tnr_at_tpr95: float
    auroc: float
    detection_error: float
    id_accuracy: float
    confusion: dict
    ece: float
    diversity: float
    entropy: float

    _FIELDS = (
        "delta",
        "tnr_at_tpr95",
        "auroc",
        "detection_error",
        "id_accuracy",
        "tp",
        "fp",
        "fn",
        "tn",
        "ece",
        "diversity",
        "entropy",
    )

    def _row(self):
        vals = {
            **{f: getattr(self, f) for f in self._FIELDS if f not in self.confusion},
            **self.confusion,
        }
        return [vals[f] for f in self._FIELDS]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self._FIELDS)
            writer.writerow(
                [f"{v:.12g}" if isinstance(v, float) else v for v in self._row()]
            )

    def to_text(self) -> str:
        lines = [f"{name:>16}: {value:.6g}" for name, value in
                 zip(self._FIELDS, self._row())]
        return "\n".join(lines)


def evaluate_scores(
    id_probs, id_labels, ood_probs, id_logits=None, ood_logits=None, bins: int = 15
) -> EvalReport:
    """Full metric bundle; scores are the last (reject) probability column.

    Diversity uses the first K logit coordinates of the OOD test samples;
    entropy is the mean softmax entropy over those samples.
    """
    id_probs = np.asarray(id_probs, dtype=np.float64)
    ood_probs = np.asarray(ood_probs, dtype=np.float64)
    id_scores = id_probs[:, -1]
    ood_scores = ood_probs[:, -1]
    delta = select_delta(id_scores)
    preds = classify_id_batch(id_probs)
    div = float("nan")
    if ood_logits is not None and len(ood_logits) >= 2:
        div = diversity(np.asarray(ood_logits)[:, :-1])
    mean_ent = float(np.mean([entropy(p) for p in ood_probs]))
    return EvalReport(
        delta=delta,
        tnr_at_tpr95=tnr_at_tpr95(id_scores, ood_scores),
        auroc=auroc(id_scores, ood_scores),
        detection_error=detection_error(id_scores, ood_scores),
        id_accuracy=float(np.mean(preds == np.asarray(id_labels))),
        confusion=confusion_counts(id_scores, ood_scores, delta),
        ece=ece(id_probs, id_labels, bins=bins),
        diversity=div,
        entropy=mean_ent,
    )
