"""Direct and group-inverse voting prediction, and canonical reorientation."""
from typing import Protocol, Sequence

import numpy as np

from src.d4.group import LABELS, TransformTables, check_label, derive_tables, inverse
from src.imgops.slice import Slice
from src.imgops.transforms import apply_orientation, to_network_input
from src.nn.network import NetworkConfig
from src.utils.constants import NUM_ORIENTATIONS

COMBINE_MODES = ("labels", "probs")


class Classifier(Protocol):
    """Anything with a network config and a batch -> probabilities forward pass."""

    config: NetworkConfig

    def forward(self, batch: np.ndarray) -> np.ndarray: ...


def network_inputs(net: Classifier, slices: Sequence[Slice]) -> np.ndarray:
    cfg = net.config
    return np.stack([to_network_input(s, cfg.input_size, cfg.in_channels) for s in slices])


def predict_direct(net: Classifier, slice_: Slice) -> int:
    """Resize, normalize, forward, argmax; np.argmax breaks ties toward the smaller label."""
    probs = net.forward(network_inputs(net, [slice_]))
    return int(np.argmax(probs[0]))


def predict_direct_batch(net: Classifier, slices: Sequence[Slice], batch_size: int = 64) -> np.ndarray:
    out = []
    for start in range(0, len(slices), batch_size):
        probs = net.forward(network_inputs(net, slices[start:start + batch_size]))
        out.append(np.argmax(probs, axis=1))
    return np.concatenate(out).astype(np.int64) if out else np.zeros(0, dtype=np.int64)


def vote(recovered: Sequence[int]) -> int:
    """Most frequent label; ties go to recovered[0] if it is tied, else the smallest label."""
    recovered = [check_label(r) for r in recovered]
    if not recovered:
        raise ValueError("cannot vote over an empty label list")
    counts = np.bincount(recovered, minlength=NUM_ORIENTATIONS)
    tied = np.flatnonzero(counts == counts.max())
    if recovered[0] in tied:
        return recovered[0]
    return int(tied[0])


def view_probabilities(net: Classifier, slice_: Slice) -> np.ndarray:
    """(8, 8) probabilities; row j belongs to the view apply_orientation(slice_, j)."""
    views = [apply_orientation(slice_, j) for j in LABELS]
    return net.forward(network_inputs(net, views))


def predict_voting(net: Classifier, slice_: Slice, tables: TransformTables | None = None,
                   combine: str = "labels") -> int:
    """Classify all 8 views, map each answer back through its view and combine.

    View j of a slice with label t has label compose(j, t), so
    inverse_action[j][pred_j] recovers t whenever pred_j is right.
    ``combine="probs"`` sums the mapped probability vectors instead of
    counting argmax labels.
    """
    if combine not in COMBINE_MODES:
        raise ValueError(f"combine must be one of {COMBINE_MODES}, got {combine!r}")
    tables = tables or derive_tables()
    probs = view_probabilities(net, slice_)
    if combine == "labels":
        predictions = np.argmax(probs, axis=1)
        return vote([int(tables.inverse_action[j, predictions[j]]) for j in LABELS])

    total = np.zeros(NUM_ORIENTATIONS, dtype=np.float64)
    for j in LABELS:
        # row j of inverse_action is a permutation, so no index repeats
        total[tables.inverse_action[j]] += probs[j]
    return int(np.argmax(total))


def reorient(net: Classifier, slice_: Slice, tables: TransformTables | None = None,
             combine: str = "labels") -> Slice:
    """Undo the voted orientation; the result carries it as predicted_orientation."""
    tables = tables or derive_tables()
    label = predict_voting(net, slice_, tables, combine)
    upright = apply_orientation(slice_, inverse(tables, label))
    return upright.with_pixels(upright.pixels, predicted_orientation=label)
