"""Tests for training, transfer learning and snapshots."""
import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from src.data.dataset import Dataset, Split, expand_orientations
from src.data.phantoms import PhantomSpec, generate_phantoms
from src.file_io.autosave import AutoSave
from src.imgops.augment import AugmentConfig
from src.imgops.transforms import apply_orientation
from src.nn.layers import ShapeError
from src.nn.network import Network, NetworkConfig
from src.pipeline.predictor import predict_direct
from src.pipeline.trainer import TrainConfig, TrainingDivergedError, derive_seed, train, transfer

SMALL_NET = NetworkConfig(input_size=16, in_channels=3, conv_channels=(4, 8, 8), hidden_units=16, seed=0)


def _cfg(**changes):
    base = dict(epochs=2, batch_size=8, lr=3e-3, seed=0, network=SMALL_NET)
    base.update(changes)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def volumes():
    return generate_phantoms(PhantomSpec(n_patients=4, slices_per_patient=1, image_size=16, noise=False))


@pytest.fixture(scope="module")
def ds_train(volumes):
    return expand_orientations(Dataset.from_volumes(volumes[:2], Split.TRAIN))


@pytest.fixture(scope="module")
def ds_val(volumes):
    return expand_orientations(Dataset.from_volumes(volumes[2:], Split.VAL))


def _params_equal(a, b):
    return all(np.array_equal(a.params[n], b.params[n]) for n in a.params)


# ----------------------------------------------------------------------
def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(train_fraction=0.0)


def test_for_transfer_settings():
    cfg = TrainConfig(epochs=30, lr=1e-3).for_transfer()
    assert cfg.epochs == 8
    assert cfg.lr == pytest.approx(1e-4)
    assert TrainConfig(epochs=1).for_transfer().epochs == 1


def test_derive_seed_is_stable():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 2, 4)


def test_train_rejects_zero_epochs_and_empty_set(ds_train):
    with pytest.raises(ValueError):
        train(ds_train, None, _cfg(epochs=0))
    with pytest.raises(ValueError):
        train(Dataset(split=Split.TRAIN), None, _cfg())


def test_overfits_two_samples(volumes):
    upright = volumes[0].slices[0]
    turned = apply_orientation(upright, 5)
    ds = Dataset(samples=[(upright, 0), (turned, 5)])
    cfg = _cfg(epochs=200, batch_size=2, augment=AugmentConfig.off(),
               network=NetworkConfig(input_size=16, in_channels=3, conv_channels=(8, 16, 16),
                                     hidden_units=32, seed=2))
    net = train(ds, None, cfg)
    assert predict_direct(net, upright) == 0
    assert predict_direct(net, turned) == 5


def test_training_is_deterministic(ds_train, ds_val):
    a = train(ds_train, ds_val, _cfg(seed=7))
    b = train(ds_train, ds_val, _cfg(seed=7))
    assert _params_equal(a, b)


def test_training_log_and_progress(tmp_path, ds_train, ds_val):
    log = tmp_path / "run_log.csv"
    calls = []
    train(ds_train, ds_val, _cfg(epochs=3), progress_callback=lambda i, n, m: calls.append((i, n)),
          log_path=str(log))
    lines = log.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# orient8 training log ")
    assert lines[1] == "epoch,loss,val_accuracy"
    assert [line.split(",")[0] for line in lines[2:]] == ["1", "2", "3"]
    assert all(line.split(",")[2] for line in lines[2:])
    assert calls[0] == (0, 3)
    assert calls[-1] == (3, 3)


def test_log_without_validation_leaves_column_empty(tmp_path, ds_train):
    log = tmp_path / "log.csv"
    train(ds_train, None, _cfg(epochs=1), log_path=str(log))
    assert log.read_text(encoding="utf-8").splitlines()[2].endswith(",")


def test_snapshots_are_pruned(tmp_path, ds_train):
    snapshots = tmp_path / "snaps"
    net = train(ds_train, None, _cfg(epochs=4, snapshot_dir=str(snapshots), keep_snapshots=2))
    saver = AutoSave(str(snapshots))
    names = [os.path.basename(p) for p in saver.list_snapshots()]
    assert names == ["snapshot_epoch0004.or8w", "snapshot_epoch0003.or8w"]
    assert _params_equal(saver.restore_latest(), net)


def test_restore_latest_without_snapshots(tmp_path):
    assert AutoSave(str(tmp_path / "empty")).restore_latest() is None
    with pytest.raises(ValueError):
        AutoSave(str(tmp_path / "x"), max_versions=0)


def test_divergence_names_last_good_checkpoint(tmp_path, ds_train, monkeypatch):
    original = Network.loss_and_gradients
    calls = {"n": 0}
    steps_per_epoch = -(-len(ds_train) // 8)

    def flaky(self, batch, labels):
        calls["n"] += 1
        loss, probs, grads = original(self, batch, labels)
        if calls["n"] > steps_per_epoch:
            loss = float("nan")
        return loss, probs, grads

    monkeypatch.setattr(Network, "loss_and_gradients", flaky)
    with pytest.raises(TrainingDivergedError) as err:
        train(ds_train, None, _cfg(epochs=3, snapshot_dir=str(tmp_path)))
    assert err.value.last_good_checkpoint.endswith("snapshot_epoch0001.or8w")
    assert "epoch 2" in str(err.value)


# ----------------------------------------------------------------------
def test_transfer_zero_epochs_is_a_copy(ds_train):
    pretrained = Network(SMALL_NET)
    tuned = transfer(pretrained, ds_train, _cfg(epochs=0))
    assert tuned is not pretrained
    assert _params_equal(tuned, pretrained)


def test_transfer_leaves_pretrained_alone(ds_train):
    pretrained = Network(SMALL_NET)
    before = pretrained.state_dict()
    tuned = transfer(pretrained, ds_train, _cfg(epochs=1))
    assert all(np.array_equal(before[n], pretrained.params[n]) for n in before)
    assert not _params_equal(tuned, pretrained)


def test_transfer_with_frozen_conv(ds_train):
    pretrained = Network(SMALL_NET)
    tuned = transfer(pretrained, ds_train, _cfg(epochs=2, freeze_conv=True))
    for name in pretrained.conv_param_names():
        assert np.array_equal(tuned.params[name], pretrained.params[name])
    assert not np.array_equal(tuned.params["fc1.weight"], pretrained.params["fc1.weight"])


def test_transfer_config_mismatch(ds_train):
    other = NetworkConfig(input_size=16, in_channels=3, conv_channels=(4, 8, 8), hidden_units=12)
    with pytest.raises(ShapeError):
        transfer(Network(SMALL_NET), ds_train, _cfg(network=other))
