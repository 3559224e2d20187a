"""Accuracy and confusion-matrix evaluation for both prediction methods."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from src.d4.group import LABELS, TransformTables, derive_tables
from src.data.dataset import Dataset
from src.pipeline.predictor import Classifier, predict_direct_batch, predict_voting
from src.utils.config import worker_count

logger = logging.getLogger(__name__)


class Method(str, Enum):
    DIRECT = "direct"
    VOTING = "voting"

    def __str__(self):
        return self.value


@dataclass
class EvalReport:
    accuracy: float
    confusion: np.ndarray
    per_class_accuracy: np.ndarray
    method: Method
    total: int
    modality: str | None = None
    combine: str = "labels"

    def summary(self) -> str:
        parts = [f"accuracy={self.accuracy:.4f}", f"method={self.method.value}", f"total={self.total}"]
        if self.modality:
            parts.append(f"modality={self.modality}")
        if self.method is Method.VOTING and self.combine != "labels":
            parts.append(f"combine={self.combine}")
        return " ".join(parts)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "modality": self.modality,
            "combine": self.combine,
            "accuracy": self.accuracy,
            "total": self.total,
            "per_class_accuracy": [None if np.isnan(v) else float(v) for v in self.per_class_accuracy],
            "confusion": self.confusion.tolist(),
        }


def evaluate_predictions(y_true: Sequence[int], y_pred: Sequence[int], method="direct",
                         modality: str | None = None, combine: str = "labels") -> EvalReport:
    """Build a report from label arrays; classes without samples get NaN per-class accuracy."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ValueError("cannot evaluate an empty test set")
    if y_true.shape != y_pred.shape:
        raise ValueError(f"{y_true.size} true labels but {y_pred.size} predictions")
    confusion = confusion_matrix(y_true, y_pred, labels=list(LABELS))
    support = confusion.sum(axis=1)
    correct = np.diag(confusion).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(support > 0, correct / np.maximum(support, 1), np.nan)
    total = int(support.sum())
    return EvalReport(
        accuracy=float(correct.sum() / total),
        confusion=confusion,
        per_class_accuracy=per_class,
        method=Method(method),
        total=total,
        modality=modality,
        combine=combine,
    )


def evaluate(net: Classifier, ds_test: Dataset, method="voting", tables: TransformTables | None = None,
             combine: str = "labels",
             progress_callback: Callable[[int, int, str], None] | None = None) -> EvalReport:
    """Predict every test sample with *method* and summarise."""
    method = Method(method)
    if len(ds_test) == 0:
        raise ValueError("cannot evaluate an empty test set")
    slices = [s for s, _ in ds_test.samples]
    modalities = {s.modality.value for s in slices}
    modality = modalities.pop() if len(modalities) == 1 else None

    if method is Method.DIRECT:
        predictions = predict_direct_batch(net, slices)
    else:
        tables = tables or derive_tables()
        total = len(slices)

        def _predict(index: int) -> int:
            if progress_callback and index % 50 == 0:
                progress_callback(index, total, f"Voting on sample {index + 1}/{total} …")
            return predict_voting(net, slices[index], tables, combine)

        workers = min(worker_count(), total)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                predictions = list(pool.map(_predict, range(total)))
        else:
            predictions = [_predict(i) for i in range(total)]

    report = evaluate_predictions(ds_test.labels, predictions, method, modality, combine)
    logger.info("evaluated %s", report.summary())
    return report
