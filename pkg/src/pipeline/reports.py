"""Report writers: evaluation CSV, sweep grid CSV, JSON lines and plain-text summaries."""
import json
import os
from typing import Dict, Iterable

import numpy as np
import pandas as pd

from src.d4.group import LABELS, Orientation
from src.pipeline.evaluation import EvalReport
from src.pipeline.sweep import SweepResult


def _ensure_parent(path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def eval_report_frame(report: EvalReport) -> pd.DataFrame:
    """Confusion matrix (true label rows) with a per-class accuracy column."""
    frame = pd.DataFrame(report.confusion, index=pd.Index(LABELS, name="true"),
                         columns=[f"pred_{k}" for k in LABELS])
    frame["per_class_accuracy"] = report.per_class_accuracy
    return frame


def write_eval_report(report: EvalReport, path: str) -> None:
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"# {report.summary()}\n")
        eval_report_frame(report).to_csv(f, float_format="%.6f", lineterminator="\n")


def write_sweep_grid(result: SweepResult, path: str) -> None:
    """The fraction x (method, modality) accuracy grid."""
    _ensure_parent(path)
    grid = result.grid
    grid.columns = [f"{method}_{modality}" for method, modality in grid.columns]
    grid.to_csv(path, float_format="%.6f", lineterminator="\n")


def write_jsonl(records: Iterable[dict], path: str) -> None:
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")


# ----------------------------------------------------------------------
def generate_report(report: EvalReport) -> str:
    lines = [
        "=== Orientation Evaluation Report ===",
        f"Method    : {report.method.value}" + (f" ({report.combine})" if report.method.value == "voting" else ""),
        f"Modality  : {report.modality or 'mixed'}",
        f"Samples   : {report.total}",
        f"Accuracy  : {report.accuracy:.2%}",
    ]
    weak = [(k, acc) for k, acc in zip(LABELS, report.per_class_accuracy) if not np.isnan(acc) and acc < 1.0]
    if weak:
        lines.append("\nLabels with errors:")
        for k, acc in weak:
            lines.append(f"  • label {k}: {acc:.1%} ({Orientation(k).description})")
    else:
        lines.append("\nEvery label was recognised without error.")
    return '\n'.join(lines)


def generate_transfer_report(reports: Dict[str, EvalReport], source: str) -> str:
    lines = ["=== Modality Transfer Report ==="]
    for modality, report in reports.items():
        how = "scratch " if modality == source else "transfer"
        lines.append(f"{modality:<4} {how}  accuracy {report.accuracy:.2%}  ({report.total} samples)")
    return '\n'.join(lines)
