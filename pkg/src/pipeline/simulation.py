"""Monte-Carlo comparison of direct and voting prediction with a simulated classifier."""
import math
from dataclasses import dataclass

import numpy as np

from src.d4.group import TransformTables, derive_tables
from src.utils.constants import NUM_ORIENTATIONS


@dataclass(frozen=True)
class SimulationResult:
    error_rate: float
    trials: int
    direct_accuracy: float
    voting_accuracy: float

    @property
    def direct_stderr(self) -> float:
        return math.sqrt(self.direct_accuracy * (1 - self.direct_accuracy) / self.trials)

    @property
    def voting_stderr(self) -> float:
        return math.sqrt(self.voting_accuracy * (1 - self.voting_accuracy) / self.trials)

    @property
    def margin(self) -> float:
        return self.voting_accuracy - self.direct_accuracy

    @property
    def margin_stderr(self) -> float:
        return math.hypot(self.direct_stderr, self.voting_stderr)

    def summary(self) -> str:
        return (f"error_rate={self.error_rate:g} trials={self.trials} "
                f"direct={self.direct_accuracy:.4f}±{self.direct_stderr:.4f} "
                f"voting={self.voting_accuracy:.4f}±{self.voting_stderr:.4f}")


def vote_rows(recovered: np.ndarray) -> np.ndarray:
    """Row-wise vote() over a (trials, 8) label array."""
    counts = np.zeros((recovered.shape[0], NUM_ORIENTATIONS), dtype=np.int64)
    rows = np.arange(recovered.shape[0])
    for j in range(recovered.shape[1]):
        np.add.at(counts, (rows, recovered[:, j]), 1)
    tied = counts == counts.max(axis=1, keepdims=True)
    first = recovered[:, 0]
    return np.where(tied[rows, first], first, np.argmax(tied, axis=1))


def simulate_noisy_voting(error_rate: float, trials: int = 10_000, seed: int = 0,
                          tables: TransformTables | None = None) -> SimulationResult:
    """Each view is misclassified independently with probability *error_rate*.

    A wrong answer is uniform over the 7 other labels. Direct prediction
    sees only view 0; voting maps every view's answer back and votes.
    """
    if not 0.0 <= error_rate <= 1.0:
        raise ValueError(f"error_rate must be in [0, 1], got {error_rate}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tables = tables or derive_tables()
    rng = np.random.default_rng(seed)

    true = rng.integers(0, NUM_ORIENTATIONS, size=trials)
    views = np.arange(NUM_ORIENTATIONS)
    view_labels = tables.compose[views[np.newaxis, :], true[:, np.newaxis]]
    wrong = rng.random((trials, NUM_ORIENTATIONS)) < error_rate
    # an offset in 1..7 always lands on a different label
    offsets = rng.integers(1, NUM_ORIENTATIONS, size=(trials, NUM_ORIENTATIONS))
    predicted = np.where(wrong, (view_labels + offsets) % NUM_ORIENTATIONS, view_labels)
    recovered = tables.inverse_action[views[np.newaxis, :], predicted]

    direct = float(np.mean(predicted[:, 0] == true))
    voting = float(np.mean(vote_rows(recovered) == true))
    return SimulationResult(error_rate=error_rate, trials=trials,
                            direct_accuracy=direct, voting_accuracy=voting)
