"""Training and transfer learning for the orientation network."""
import csv
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Callable, Dict, List, Sequence

import numpy as np

from src.data.dataset import Dataset
from src.file_io.autosave import AutoSave
from src.imgops.augment import AugmentConfig
from src.imgops.transforms import to_network_input
from src.nn.checkpoint import check_compatible
from src.nn.layers import Params
from src.nn.network import Network, NetworkConfig
from src.nn.optim import AdamState, NonFiniteGradientError, sgd_adam_step
from src.utils.constants import (
    APP_NAME, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LR, DEFAULT_SEED,
    MAX_SNAPSHOTS, TRANSFER_EPOCH_FACTOR, TRANSFER_LR_FACTOR,
)

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int, str], None]


class TrainingDivergedError(RuntimeError):
    def __init__(self, message: str, last_good_checkpoint: str | None = None):
        if last_good_checkpoint:
            message = f"{message}; last good checkpoint: {last_good_checkpoint}"
        else:
            message = f"{message}; no checkpoint was saved"
        super().__init__(message)
        self.last_good_checkpoint = last_good_checkpoint


def derive_seed(*parts: int) -> int:
    """A 32-bit seed determined by *parts*, for nested reproducible streams."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    lr: float = DEFAULT_LR
    seed: int = DEFAULT_SEED
    train_fraction: float = 1.0
    freeze_conv: bool = False
    network: NetworkConfig = field(default_factory=NetworkConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    snapshot_dir: str | None = None
    keep_snapshots: int = MAX_SNAPSHOTS

    def __post_init__(self):
        # 0 epochs is only meaningful for transfer(); train() rejects it
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError(f"train_fraction must be in (0, 1], got {self.train_fraction}")
        if self.keep_snapshots < 1:
            raise ValueError(f"keep_snapshots must be >= 1, got {self.keep_snapshots}")

    def for_transfer(self) -> "TrainConfig":
        """Fine-tuning settings: a quarter of the epochs at a tenth of the rate."""
        return replace(self,
                       epochs=max(1, int(round(self.epochs * TRANSFER_EPOCH_FACTOR))),
                       lr=self.lr * TRANSFER_LR_FACTOR)

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed, network=replace(self.network, seed=seed))


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_accuracy: float | None


class Trainer:
    """Mini-batch Adam over a labelled dataset, keeping the best validation weights."""

    def __init__(self, cfg: TrainConfig, progress_callback: ProgressCallback | None = None,
                 log_path: str | None = None):
        self.cfg = cfg
        self.progress_callback = progress_callback
        self.log_path = log_path
        self.history: List[EpochRecord] = []

    # ------------------------------------------------------------------
    def fit(self, net: Network, ds_train: Dataset, ds_val: Dataset | None = None) -> Network:
        cfg = self.cfg
        if cfg.epochs < 1:
            raise ValueError("training needs at least one epoch")
        if len(ds_train) == 0:
            raise ValueError("training set is empty")
        if cfg.train_fraction < 1.0:
            ds_train = ds_train.restrict_patients(cfg.train_fraction, cfg.seed)
            logger.info("training on %d of the patients (fraction %.2f)",
                        len(ds_train.patients), cfg.train_fraction)

        frozen = net.conv_param_names() if cfg.freeze_conv else []
        autosave = AutoSave(cfg.snapshot_dir, max_versions=cfg.keep_snapshots) if cfg.snapshot_dir else None
        val_inputs, val_labels = self._validation_arrays(net, ds_val)
        state = AdamState()
        best_params: Params | None = None
        best_accuracy = -1.0
        self.history = []
        log_file, writer = self._open_log()

        try:
            for epoch in range(1, cfg.epochs + 1):
                if self.progress_callback:
                    self.progress_callback(epoch - 1, cfg.epochs, f"Epoch {epoch}/{cfg.epochs} …")
                last_good = autosave.last_good if autosave else None
                try:
                    loss = self._run_epoch(net, ds_train, epoch, state, frozen)
                except NonFiniteGradientError as exc:
                    raise TrainingDivergedError(f"epoch {epoch}: {exc}", last_good) from exc
                if not math.isfinite(loss):
                    raise TrainingDivergedError(f"epoch {epoch}: loss is {loss}", last_good)

                accuracy = None
                if val_inputs is not None:
                    accuracy = _batched_accuracy(net, val_inputs, val_labels, cfg.batch_size)
                    if accuracy > best_accuracy:
                        best_accuracy = accuracy
                        best_params = net.state_dict()

                self.history.append(EpochRecord(epoch, loss, accuracy))
                if writer is not None:
                    writer.writerow([epoch, f"{loss:.6f}", "" if accuracy is None else f"{accuracy:.6f}"])
                    log_file.flush()
                if autosave:
                    autosave.save(net, epoch)
                logger.info("epoch %d/%d loss=%.4f val_accuracy=%s", epoch, cfg.epochs, loss,
                            "n/a" if accuracy is None else f"{accuracy:.4f}")
        finally:
            if log_file is not None:
                log_file.close()

        if self.progress_callback:
            self.progress_callback(cfg.epochs, cfg.epochs, "Training finished")
        if best_params is not None:
            net.load_state_dict(best_params)
            logger.info("restored best validation weights (accuracy %.4f)", best_accuracy)
        return net

    # ------------------------------------------------------------------
    def _run_epoch(self, net: Network, ds: Dataset, epoch: int, state: AdamState,
                   frozen: Sequence[str]) -> float:
        cfg, ncfg = self.cfg, self.cfg.network
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(ds))
        total_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch = np.stack([
                to_network_input(ds.samples[i][0], ncfg.input_size, ncfg.in_channels, train=True,
                                 rng_seed=derive_seed(cfg.seed, epoch, i), augment_cfg=cfg.augment)
                for i in idx
            ])
            labels = np.array([ds.samples[i][1] for i in idx], dtype=np.int64)
            loss, _, grads = net.loss_and_gradients(batch, labels)
            if not math.isfinite(loss):
                return loss
            sgd_adam_step(net, grads, cfg.lr, state, frozen=frozen)
            total_loss += loss * len(idx)
        return total_loss / len(order)

    def _validation_arrays(self, net: Network, ds_val: Dataset | None):
        if ds_val is None or len(ds_val) == 0:
            return None, None
        ncfg = net.config
        inputs = np.stack([to_network_input(s, ncfg.input_size, ncfg.in_channels) for s, _ in ds_val.samples])
        return inputs, ds_val.labels

    def _open_log(self):
        if not self.log_path:
            return None, None
        log_file = open(self.log_path, 'w', encoding='utf-8', newline='')
        # the only line that may differ between identical runs
        log_file.write(f"# {APP_NAME} training log {datetime.now().isoformat(timespec='seconds')}\n")
        writer = csv.writer(log_file, lineterminator="\n")
        writer.writerow(["epoch", "loss", "val_accuracy"])
        return log_file, writer


def _batched_accuracy(net: Network, inputs: np.ndarray, labels: np.ndarray, batch_size: int) -> float:
    predictions = np.concatenate([
        np.argmax(net.forward(inputs[i:i + batch_size]), axis=1)
        for i in range(0, len(inputs), batch_size)
    ])
    return float(np.mean(predictions == labels))


# -----------------------------------------------------------------------
def train(ds_train: Dataset, ds_val: Dataset | None, cfg: TrainConfig,
          progress_callback: ProgressCallback | None = None, log_path: str | None = None) -> Network:
    """Train a freshly initialized network (seeded by cfg.network.seed)."""
    net = Network(cfg.network)
    return Trainer(cfg, progress_callback, log_path).fit(net, ds_train, ds_val)


def transfer(pretrained: Network, ds_train: Dataset, cfg: TrainConfig, ds_val: Dataset | None = None,
             progress_callback: ProgressCallback | None = None, log_path: str | None = None) -> Network:
    """Fine-tune a copy of *pretrained*; the original is never modified.

    The learning rate and epoch count are taken from *cfg* as given; use
    ``TrainConfig.for_transfer()`` for the reduced defaults.
    """
    check_compatible(pretrained.config, cfg.network)
    net = pretrained.copy()
    if cfg.epochs == 0:
        return net
    before: Dict[str, np.ndarray] = {n: net.params[n].copy() for n in net.conv_param_names()}
    net = Trainer(cfg, progress_callback, log_path).fit(net, ds_train, ds_val)
    if cfg.freeze_conv:
        changed = [n for n, value in before.items() if not np.array_equal(value, net.params[n])]
        if changed:
            raise RuntimeError(f"frozen parameters changed during transfer: {changed}")
    return net
