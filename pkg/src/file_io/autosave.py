"""AutoSave – keeps rolling checkpoint snapshots while a network trains."""
import glob as _glob
import logging
import os

from src.nn.checkpoint import load_checkpoint, save_checkpoint
from src.nn.network import Network
from src.utils.constants import CHECKPOINT_EXTENSION, MAX_SNAPSHOTS

logger = logging.getLogger(__name__)


class AutoSave:
    """Saves a snapshot per epoch and keeps the last *max_versions* of them.

    File names carry the epoch number rather than a wall-clock time, so the
    snapshot directory of two identical runs is identical too.
    """

    MAX_VERSIONS = MAX_SNAPSHOTS

    def __init__(self, directory: str, basename: str = "snapshot", max_versions: int | None = None):
        self._dir = directory
        self._basename = basename
        self._max_versions = self.MAX_VERSIONS if max_versions is None else max_versions
        if self._max_versions < 1:
            raise ValueError(f"max_versions must be >= 1, got {self._max_versions}")
        self._last_good: str | None = None
        os.makedirs(directory, exist_ok=True)

    # ------------------------------------------------------------------
    @property
    def directory(self) -> str:
        return self._dir

    @property
    def last_good(self) -> str | None:
        """Path of the most recent snapshot written by this instance."""
        return self._last_good

    # ------------------------------------------------------------------
    def save(self, net: Network, epoch: int) -> str:
        save_path = os.path.join(self._dir, f"{self._basename}_epoch{epoch:04d}{CHECKPOINT_EXTENSION}")
        save_checkpoint(net, save_path)
        self._last_good = save_path
        self._prune_old_saves()
        logger.debug("snapshot %s", save_path)
        return save_path

    def _prune_old_saves(self):
        files = sorted(self._glob())
        while len(files) > self._max_versions:
            stale = files.pop(0)
            try:
                os.remove(stale)
            except OSError as exc:
                logger.warning("could not remove old snapshot %s: %s", stale, exc)

    def _glob(self) -> list:
        pattern = os.path.join(self._dir, f"{self._basename}_epoch*{CHECKPOINT_EXTENSION}")
        return _glob.glob(pattern)

    # ------------------------------------------------------------------
    def list_snapshots(self) -> list:
        """Snapshot paths, newest first."""
        return sorted(self._glob(), reverse=True)

    def restore_latest(self) -> Network | None:
        """Load the newest snapshot, or None when there is none."""
        snapshots = self.list_snapshots()
        if not snapshots:
            return None
        return load_checkpoint(snapshots[0])
