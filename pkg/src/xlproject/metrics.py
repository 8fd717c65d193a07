"""The shared task's three evaluation metrics plus confusion matrices.

Edge-case conventions (the official scorer leaves them undefined): an
instance whose gold and predicted masks are both all-zero scores token F1 of
1.0, one-sided all-zero scores 0.0; instances with no gold trigger are
excluded from the accumulated-importance mean and counted in the report;
all-negative attribution vectors normalize to uniform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import EMOTION_ORDER, EmotionLabel


@dataclass
class Attributions:
    """Per-word importance values; non-negative and summing to 1 once normalized."""

    values: list[float]

    def __len__(self) -> int:
        return len(self.values)


def normalize_attributions(raw: list[float]) -> Attributions:
    """Clamp negatives to zero and rescale to sum 1 (uniform if everything clamps)."""
    if not raw:
        raise ValueError("attribution list must be non-empty")
    arr = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("attributions must be finite")
    clamped = np.clip(arr, 0.0, None)
    total = clamped.sum()
    if total > 0.0:
        clamped = clamped / total
    else:
        clamped = np.full(len(raw), 1.0 / len(raw))
    return Attributions(values=clamped.tolist())


def _class_counts(
    gold: list[EmotionLabel], pred: list[EmotionLabel]
) -> dict[EmotionLabel, tuple[int, int, int]]:
    counts = {}
    for label in EMOTION_ORDER:
        tp = sum(1 for g, p in zip(gold, pred) if g is label and p is label)
        fp = sum(1 for g, p in zip(gold, pred) if g is not label and p is label)
        fn = sum(1 for g, p in zip(gold, pred) if g is label and p is not label)
        counts[label] = (tp, fp, fn)
    return counts


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn > 0 else 0.0
    return precision, recall, f1


def macro_f1(gold: list[EmotionLabel], pred: list[EmotionLabel]) -> float:
    """Unweighted mean of per-class F1.

    Classes with zero gold and zero predicted instances are left out of the
    mean so that small evaluation slices stay scoreable; full six-class runs
    are unaffected.
    """
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} pred")
    if not gold:
        raise ValueError("inputs must be non-empty")
    scores = []
    for label, (tp, fp, fn) in _class_counts(gold, pred).items():
        if tp + fp + fn == 0:
            continue
        scores.append(_prf(tp, fp, fn)[2])
    return float(np.mean(scores)) if scores else 0.0


def instance_token_f1(gold_mask: list[int], pred_mask: list[int]) -> float:
    """Positional F1 over one sentence's binary trigger mask."""
    if len(gold_mask) != len(pred_mask):
        raise ValueError(f"length mismatch: {len(gold_mask)} gold vs {len(pred_mask)} pred")
    tp = sum(1 for g, p in zip(gold_mask, pred_mask) if g == 1 and p == 1)
    fp = sum(1 for g, p in zip(gold_mask, pred_mask) if g == 0 and p == 1)
    fn = sum(1 for g, p in zip(gold_mask, pred_mask) if g == 1 and p == 0)
    if tp + fp + fn == 0:
        return 1.0  # both masks empty: correctly predicted "no triggers"
    return 2 * tp / (2 * tp + fp + fn)


def corpus_token_f1(instances: list[tuple[list[int], list[int]]]) -> float:
    """Mean of per-instance token F1."""
    if not instances:
        raise ValueError("instances must be non-empty")
    return float(np.mean([instance_token_f1(g, p) for g, p in instances]))


def accumulated_importance(gold_mask: list[int], attributions: Attributions) -> float:
    """Total attribution mass landing on gold trigger tokens."""
    if len(gold_mask) != len(attributions.values):
        raise ValueError(
            f"length mismatch: {len(gold_mask)} mask vs {len(attributions.values)} attributions"
        )
    return float(sum(v for g, v in zip(gold_mask, attributions.values) if g == 1))


def corpus_accumulated_importance(
    instances: list[tuple[list[int], Attributions]],
) -> tuple[float, int]:
    """Mean accumulated importance over instances with at least one gold trigger.

    Returns the mean and the number of skipped no-trigger instances; the
    score is 0.0 when every instance was skipped.
    """
    scores = []
    skipped = 0
    for gold_mask, attributions in instances:
        if not any(gold_mask):
            skipped += 1
            continue
        scores.append(accumulated_importance(gold_mask, attributions))
    return (float(np.mean(scores)) if scores else 0.0, skipped)


@dataclass
class ConfusionMatrix:
    """Gold labels on rows, predicted on columns, both in canonical class order."""

    counts: np.ndarray  # (6, 6) int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_normalized(self) -> np.ndarray:
        sums = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            normalized = np.where(sums > 0, self.counts / np.maximum(sums, 1), 0.0)
        return normalized

    def to_lists(self) -> list[list[int]]:
        return self.counts.astype(int).tolist()

    def to_csv(self) -> str:
        names = [label.value for label in EMOTION_ORDER]
        lines = ["gold\\pred," + ",".join(names)]
        for name, row in zip(names, self.counts):
            lines.append(name + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def confusion_matrix(gold: list[EmotionLabel], pred: list[EmotionLabel]) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} pred")
    index = {label: i for i, label in enumerate(EMOTION_ORDER)}
    counts = np.zeros((len(EMOTION_ORDER), len(EMOTION_ORDER)), dtype=np.int64)
    for g, p in zip(gold, pred):
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(counts=counts)


@dataclass
class MetricsReport:
    macro_f1: float | None = None
    token_f1: float | None = None
    accumulated_importance: float | None = None
    per_class: dict[str, dict[str, float]] = field(default_factory=dict)
    confusion: ConfusionMatrix | None = None
    skipped_no_trigger: int = 0

    def to_json_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "token_f1": self.token_f1,
            "accumulated_importance": self.accumulated_importance,
            "per_class": self.per_class,
            "confusion": self.confusion.to_lists() if self.confusion is not None else None,
            "skipped_no_trigger": self.skipped_no_trigger,
        }


def build_report(
    emotion_pairs: list[tuple[EmotionLabel, EmotionLabel]] | None = None,
    mask_pairs: list[tuple[list[int], list[int]]] | None = None,
    attribution_pairs: list[tuple[list[int], Attributions]] | None = None,
) -> MetricsReport:
    """Assemble the evaluation report from whichever prediction kinds exist."""
    report = MetricsReport()
    if emotion_pairs:
        gold = [g for g, _ in emotion_pairs]
        pred = [p for _, p in emotion_pairs]
        report.macro_f1 = macro_f1(gold, pred)
        report.confusion = confusion_matrix(gold, pred)
        for label, (tp, fp, fn) in _class_counts(gold, pred).items():
            precision, recall, f1 = _prf(tp, fp, fn)
            report.per_class[label.value] = {
                "precision": precision,
                "recall": recall,
                "f1": f1,
            }
    if mask_pairs:
        report.token_f1 = corpus_token_f1(mask_pairs)
    if attribution_pairs:
        score, skipped = corpus_accumulated_importance(attribution_pairs)
        report.accumulated_importance = score
        report.skipped_no_trigger = skipped
    return report
