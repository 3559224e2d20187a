"""Tests for Config and the worker-count setting."""
import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import pytest

from src.utils.config import Config, ConfigError, worker_count
from src.utils.constants import DEFAULT_EPOCHS, THREADS_ENV


def test_defaults():
    cfg = Config()
    assert cfg.epochs == DEFAULT_EPOCHS
    assert cfg.method == "voting"
    assert cfg.freeze_conv is False


def test_load_coerces_values(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nepochs = 3\nlr=0.01\nfreeze-conv=yes\nmodality=LGE\n\n", encoding="utf-8")
    cfg = Config(str(p))
    assert cfg.epochs == 3
    assert cfg.lr == 0.01
    assert cfg.freeze_conv is True
    assert cfg.modality == "LGE"


def test_save_and_reload(tmp_path):
    cfg = Config()
    cfg.set("seed", 11)
    path = str(tmp_path / "saved.cfg")
    cfg.save(path)
    assert Config(path).seed == 11


def test_given_tracks_file_and_flag_values(tmp_path):
    p = tmp_path / "seeded.cfg"
    p.write_text("seed=9\n", encoding="utf-8")
    assert Config(str(p)).given("seed")
    cfg = Config()
    assert not cfg.given("seed")
    cfg.merge({"seed": None, "epochs": 4})
    assert not cfg.given("seed")
    assert cfg.given("epochs")


def test_unknown_key_and_bad_value(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("colour=blue\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown"):
        Config(str(p))
    with pytest.raises(ConfigError, match="epochs"):
        Config().set("epochs", "many")
    p.write_text("no equals sign\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="bad.cfg:1"):
        Config(str(p))


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        Config("/nonexistent/orient8.cfg")


def test_merge_skips_unset_values():
    cfg = Config().merge({"epochs": 5, "lr": None, "input": "ignored"})
    assert cfg.epochs == 5
    assert cfg.lr == Config.DEFAULTS["lr"]


def test_worker_count(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count() == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        worker_count()
