"""Tests for the voting simulation, the sensitivity sweep, transfer runs and report writers."""
import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import json

import numpy as np
import pytest

from src.data.phantoms import generate_all_modalities
from src.nn.network import NetworkConfig
from src.pipeline.evaluation import evaluate_predictions
from src.pipeline.predictor import vote
from src.pipeline.reports import (
    generate_report, generate_transfer_report, write_eval_report, write_jsonl, write_sweep_grid,
)
from src.pipeline.simulation import simulate_noisy_voting, vote_rows
from src.pipeline.sweep import pretrain_and_transfer, sensitivity_sweep
from src.pipeline.trainer import TrainConfig

TINY = TrainConfig(epochs=1, batch_size=16, lr=3e-3, seed=0,
                   network=NetworkConfig(input_size=16, in_channels=3, conv_channels=(2, 4, 4), hidden_units=8))


@pytest.fixture(scope="module")
def six_patients():
    return generate_all_modalities(6, 1, 16, seed=0, modalities=["C0", "LGE"], noise=False)


# ----------------------------------------------------------------------
def test_vote_rows_matches_vote():
    rng = np.random.default_rng(3)
    rows = rng.integers(0, 8, size=(500, 8))
    assert vote_rows(rows).tolist() == [vote(r) for r in rows.tolist()]


def test_simulation_perfect_classifier():
    result = simulate_noisy_voting(0.0, trials=500)
    assert result.direct_accuracy == result.voting_accuracy == 1.0


def test_simulation_voting_beats_direct():
    result = simulate_noisy_voting(0.2, trials=10_000, seed=0)
    assert result.direct_accuracy == pytest.approx(0.8, abs=0.03)
    assert result.margin >= 2 * result.margin_stderr
    assert "voting=" in result.summary()


def test_simulation_is_seeded():
    assert simulate_noisy_voting(0.3, 2000, seed=5) == simulate_noisy_voting(0.3, 2000, seed=5)
    with pytest.raises(ValueError):
        simulate_noisy_voting(1.5)


# ----------------------------------------------------------------------
def test_sweep_grid_shape_and_reproducibility(six_patients):
    a = sensitivity_sweep(six_patients, fractions=(0.5, 0.34), cfg=TINY)
    b = sensitivity_sweep(six_patients, fractions=(0.5, 0.34), cfg=TINY)
    assert len(a.records) == 2 * 2 * 2
    assert a.grid.shape == (2, 4)
    assert a.grid.index.tolist() == [0.5, 0.34]
    assert [method for method, _ in a.grid.columns] == ["voting", "voting", "direct", "direct"]
    assert [r["accuracy"] for r in a.records] == [r["accuracy"] for r in b.records]
    assert set(a.method_means().index) == {"direct", "voting"}


def test_sweep_rejects_bad_fraction(six_patients):
    with pytest.raises(ValueError):
        sensitivity_sweep(six_patients, fractions=(1.0,), cfg=TINY)


def test_sweep_writers(tmp_path, six_patients):
    result = sensitivity_sweep(six_patients, fractions=(0.5,), cfg=TINY, seeds=[0, 1])
    grid_path = tmp_path / "out" / "grid.csv"
    write_sweep_grid(result, str(grid_path))
    header = grid_path.read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",") == ["fraction", "voting_C0", "voting_LGE", "direct_C0", "direct_LGE"]

    cells = tmp_path / "cells.jsonl"
    write_jsonl(result.records, str(cells))
    rows = [json.loads(line) for line in cells.read_text(encoding="utf-8").splitlines()]
    assert len(rows) == 2 * 2 * 2
    assert {r["seed"] for r in rows} == {0, 1}


def test_pretrain_and_transfer_reports_every_modality():
    volumes = generate_all_modalities(10, 1, 16, seed=1, noise=False)
    reports = pretrain_and_transfer(volumes, TINY, source="C0")
    assert set(reports) == {"C0", "LGE", "T2"}
    assert all(r.total == 2 * 8 for r in reports.values())
    text = generate_transfer_report(reports, "C0")
    assert text.splitlines()[0] == "=== Modality Transfer Report ==="
    assert "transfer" in text


# ----------------------------------------------------------------------
def test_eval_report_csv(tmp_path):
    report = evaluate_predictions([0, 1, 2, 2], [0, 1, 2, 3], "voting", modality="T2")
    path = tmp_path / "eval.csv"
    write_eval_report(report, str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# " + report.summary()
    assert lines[1].startswith("true,pred_0,")
    assert lines[1].endswith(",per_class_accuracy")
    assert lines[2 + 2].endswith(",0.500000")


def test_text_report_lists_weak_labels():
    text = generate_report(evaluate_predictions([0, 1, 1], [0, 1, 0], "direct"))
    assert text.startswith("=== Orientation Evaluation Report ===")
    assert "label 1: 50.0% (horizontal flip)" in text
    perfect = generate_report(evaluate_predictions([0, 1], [0, 1], "direct"))
    assert "without error" in perfect
