"""Softmax and categorical cross-entropy."""
import numpy as np

from src.utils.constants import NUM_ORIENTATIONS, SOFTMAX_EPS


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def one_hot(labels, classes: int = NUM_ORIENTATIONS) -> np.ndarray:
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if np.any((labels < 0) | (labels >= classes)):
        raise ValueError(f"labels must be in 0..{classes - 1}, got {labels.tolist()}")
    out = np.zeros((labels.size, classes), dtype=np.float64)
    out[np.arange(labels.size), labels] = 1.0
    return out


def cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> float:
    """Mean over the batch of -sum_i O_i log(P_i + eps); never negative."""
    probs = np.atleast_2d(probs)
    onehot = np.atleast_2d(onehot)
    per_sample = -(onehot * np.log(probs.astype(np.float64) + SOFTMAX_EPS)).sum(axis=-1)
    return float(max(per_sample.mean(), 0.0))


def cross_entropy_grad(probs: np.ndarray, onehot: np.ndarray) -> np.ndarray:
    """Gradient of the batch-mean loss with respect to the logits: (p - y) / N."""
    return (probs - onehot.astype(probs.dtype)) / probs.shape[0]
