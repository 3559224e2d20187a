"""Training-fraction sensitivity sweep and the cross-modality transfer experiment."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

import pandas as pd

from src.d4.group import derive_tables
from src.data.dataset import Volume, expand_orientations, split_by_patient
from src.pipeline.evaluation import EvalReport, Method, evaluate
from src.pipeline.trainer import TrainConfig, derive_seed, train, transfer
from src.utils.constants import DEFAULT_SPLIT_RATIOS, DEFAULT_SWEEP_FRACTIONS

logger = logging.getLogger(__name__)


@dataclass
class SweepResult:
    """One record per (seed, fraction, modality, method) plus the mean grid.

    ``grid`` has one row per training fraction (largest first) and a
    (method, modality) column MultiIndex; cells are accuracies averaged over
    the seeds.
    """
    records: List[dict] = field(default_factory=list)

    @property
    def frame(self) -> pd.DataFrame:
        return pd.DataFrame.from_records(
            [{k: v for k, v in r.items() if k != "confusion"} for r in self.records])

    @property
    def grid(self) -> pd.DataFrame:
        grid = self.frame.pivot_table(index="fraction", columns=["method", "modality"],
                                      values="accuracy", aggfunc="mean")
        # voting columns first, then direct
        columns = sorted(grid.columns, key=lambda c: (c[0] != "voting", c[1]))
        return grid.reindex(columns=columns).sort_index(ascending=False)

    def method_means(self) -> pd.Series:
        """Mean accuracy per method over every cell and seed."""
        return self.frame.groupby("method")["accuracy"].mean()


def _record(report: EvalReport, seed: int, fraction: float) -> dict:
    return {
        "seed": seed,
        "fraction": fraction,
        "modality": report.modality,
        "method": report.method.value,
        "accuracy": report.accuracy,
        "total": report.total,
        "confusion": report.confusion.tolist(),
    }


def sensitivity_sweep(volumes_by_modality: Dict[str, Sequence[Volume]],
                      fractions: Sequence[float] = DEFAULT_SWEEP_FRACTIONS,
                      cfg: TrainConfig | None = None, seeds: Sequence[int] | None = None,
                      progress_callback: Callable[[int, int, str], None] | None = None) -> SweepResult:
    """Retrain from scratch on each training fraction and evaluate both methods.

    Every (seed, fraction) cell draws a fresh two-way patient split; the
    remaining patients form the test set. Because patient ids are shared
    across modalities, each modality of one cell is split the same way.
    """
    cfg = cfg or TrainConfig()
    seeds = list(seeds) if seeds else [cfg.seed]
    fractions = [float(f) for f in fractions]
    for f in fractions:
        if not 0.0 < f < 1.0:
            raise ValueError(f"sweep fractions must be in (0, 1), got {f}")
    if not volumes_by_modality:
        raise ValueError("no volumes to sweep over")

    tables = derive_tables()
    result = SweepResult()
    total = len(seeds) * len(fractions) * len(volumes_by_modality)
    done = 0
    for seed in seeds:
        for f_idx, fraction in enumerate(fractions):
            split_seed = derive_seed(seed, f_idx)
            for modality, volumes in volumes_by_modality.items():
                if progress_callback:
                    progress_callback(done, total, f"seed {seed}, fraction {fraction:.0%}, {modality} …")
                train_ds, _, test_ds = split_by_patient(volumes, (fraction, 0.0, 1.0 - fraction), split_seed)
                cell_cfg = cfg.with_seed(derive_seed(seed, f_idx, 1))
                net = train(expand_orientations(train_ds), None, cell_cfg)
                test = expand_orientations(test_ds)
                for method in Method:
                    report = evaluate(net, test, method, tables)
                    report.modality = str(modality)
                    result.records.append(_record(report, seed, fraction))
                    logger.info("sweep seed=%d fraction=%.2f %s", seed, fraction, report.summary())
                done += 1
    if progress_callback:
        progress_callback(total, total, "Sweep finished")
    return result


def pretrain_and_transfer(volumes_by_modality: Dict[str, Sequence[Volume]], cfg: TrainConfig | None = None,
                          source: str = "C0", method=Method.VOTING,
                          ratios=DEFAULT_SPLIT_RATIOS) -> Dict[str, EvalReport]:
    """Train on *source*, fine-tune a copy on every other modality, evaluate each on its test split."""
    cfg = cfg or TrainConfig()
    if source not in volumes_by_modality:
        raise ValueError(f"source modality {source} has no volumes")
    tables = derive_tables()

    splits = {m: [expand_orientations(ds) for ds in split_by_patient(vols, ratios, cfg.seed)]
              for m, vols in volumes_by_modality.items()}
    train_ds, val_ds, test_ds = splits[source]
    pretrained = train(train_ds, val_ds, cfg)
    reports = {source: evaluate(pretrained, test_ds, method, tables)}

    transfer_cfg = cfg.for_transfer()
    for modality, (train_ds, val_ds, test_ds) in splits.items():
        if modality == source:
            continue
        adapted = transfer(pretrained, train_ds, transfer_cfg, val_ds)
        reports[modality] = evaluate(adapted, test_ds, method, tables)
    for modality, report in reports.items():
        logger.info("%s (%s): %s", modality, "scratch" if modality == source else "transfer", report.summary())
    return reports
