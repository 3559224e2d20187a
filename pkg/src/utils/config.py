import logging
import os

from src.utils.constants import (
    DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_INPUT_SIZE, DEFAULT_LR,
    DEFAULT_PATIENTS, DEFAULT_SEED, DEFAULT_SLICES_PER_PATIENT,
    DEFAULT_IMAGE_SIZE, THREADS_ENV,
)

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class Config:
    """Run settings resolved from defaults, a key=value file and explicit flags."""

    DEFAULTS = {
        "seed": DEFAULT_SEED,
        "epochs": DEFAULT_EPOCHS,
        "lr": DEFAULT_LR,
        "batch": DEFAULT_BATCH_SIZE,
        "input_size": DEFAULT_INPUT_SIZE,
        "freeze_conv": False,
        "method": "voting",
        "fraction": 1.0,
        "modality": "C0",
        "patients": DEFAULT_PATIENTS,
        "slices": DEFAULT_SLICES_PER_PATIENT,
        "size": DEFAULT_IMAGE_SIZE,
        "combine": "labels",
    }

    def __init__(self, path: str | None = None):
        self._data = dict(self.DEFAULTS)
        self._given = set()
        self._path = path
        if path:
            self.load(path)

    # ------------------------------------------------------------------
    def load(self, path: str):
        if not os.path.exists(path):
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            for lineno, raw in enumerate(f, start=1):
                line = raw.strip()
                if not line or line.startswith('#'):
                    continue
                if '=' not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = (part.strip() for part in line.split('=', 1))
                self.set(key.replace('-', '_'), value)
        self._path = path

    def save(self, path: str | None = None):
        target = path or self._path
        if target is None:
            raise ConfigError("no config path to save to")
        with open(target, 'w', encoding='utf-8') as f:
            for key in sorted(self._data):
                f.write(f"{key}={self._data[key]}\n")

    # ------------------------------------------------------------------
    def get(self, key, default=None):
        return self._data.get(key, default)

    def set(self, key, value):
        if key not in self.DEFAULTS:
            raise ConfigError(f"unknown config key: {key}")
        self._data[key] = self._coerce(key, value)
        self._given.add(key)

    def merge(self, overrides: dict):
        """Overlay explicitly given values; None means 'not given'."""
        for key, value in overrides.items():
            if value is not None and key in self.DEFAULTS:
                self.set(key, value)
        return self

    def given(self, key) -> bool:
        """True when *key* came from the config file or a flag, not a default."""
        return key in self._given

    def describe(self) -> str:
        return " ".join(f"{k}={self._data[k]}" for k in sorted(self._data))

    # ------------------------------------------------------------------
    def _coerce(self, key, value):
        default = self.DEFAULTS[key]
        if not isinstance(value, str):
            return value
        try:
            if isinstance(default, bool):
                lowered = value.lower()
                if lowered in ("1", "true", "yes", "on"):
                    return True
                if lowered in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            if isinstance(default, int):
                return int(value)
            if isinstance(default, float):
                return float(value)
        except ValueError:
            raise ConfigError(f"invalid value for {key}: {value!r}") from None
        return value

    # ------------------------------------------------------------------
    # Convenience properties
    @property
    def seed(self) -> int:
        return self._data["seed"]

    @property
    def epochs(self) -> int:
        return self._data["epochs"]

    @property
    def lr(self) -> float:
        return self._data["lr"]

    @property
    def batch(self) -> int:
        return self._data["batch"]

    @property
    def input_size(self) -> int:
        return self._data["input_size"]

    @property
    def freeze_conv(self) -> bool:
        return self._data["freeze_conv"]

    @property
    def method(self) -> str:
        return self._data["method"]

    @property
    def modality(self) -> str:
        return self._data["modality"]


def worker_count() -> int:
    """Worker cap from the environment; 1 when unset."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value
