"""Class-level evaluation of subclass (or class) output networks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..entropy_channel import ChannelMatrix
from .losses import aggregate_to_class, softmax_with_temperature


def normalized_confusion(true, pred, n: int) -> ChannelMatrix:
    """Row-normalized confusion matrix; rows without samples become uniform."""
    counts = np.zeros((n, n))
    np.add.at(counts, (np.asarray(true, dtype=int), np.asarray(pred, dtype=int)), 1.0)
    sums = counts.sum(axis=1, keepdims=True)
    m = np.where(sums > 0, counts / np.where(sums > 0, sums, 1.0), 1.0 / n)
    return ChannelMatrix(m)


def f1_score(tp, fp, fn) -> tuple[float, float, float]:
    """(precision, recall, f1) with 0/0 taken as 0."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class Metrics:
    f1: float
    precision: float
    recall: float
    accuracy: float
    class_confusion: ChannelMatrix
    subclass_confusion: ChannelMatrix | None = None

    def to_dict(self) -> dict:
        return {
            "f1": self.f1,
            "precision": self.precision,
            "recall": self.recall,
            "accuracy": self.accuracy,
            "class_confusion": self.class_confusion.tolist(),
            "subclass_confusion": None if self.subclass_confusion is None else self.subclass_confusion.tolist(),
        }


def predict(net, x, hierarchy):
    """(class predictions, subclass predictions or None).

    Subclass-output networks predict the class with the largest summed
    subclass probability.
    """
    logits = net.forward(x)
    probs = softmax_with_temperature(logits, 1.0)
    if net.n_outputs == hierarchy.n_subclasses:
        return np.argmax(aggregate_to_class(probs, hierarchy), axis=1), np.argmax(probs, axis=1)
    if net.n_outputs == hierarchy.n_classes:
        return np.argmax(probs, axis=1), None
    raise ValueError(f"network width {net.n_outputs} matches neither classes nor subclasses")


def classification_metrics(true_cls, pred_cls, n_classes: int, positive: int) -> tuple[float, float, float, float]:
    true_cls = np.asarray(true_cls)
    pred_cls = np.asarray(pred_cls)
    tp = int(np.sum((pred_cls == positive) & (true_cls == positive)))
    fp = int(np.sum((pred_cls == positive) & (true_cls != positive)))
    fn = int(np.sum((pred_cls != positive) & (true_cls == positive)))
    precision, recall, f1 = f1_score(tp, fp, fn)
    accuracy = float(np.mean(pred_cls == true_cls)) if len(true_cls) else 0.0
    return f1, precision, recall, accuracy


def evaluate(net, data, hierarchy=None, positive_class: str | None = None) -> Metrics:
    hierarchy = hierarchy if hierarchy is not None else data.hierarchy
    positive_class = positive_class if positive_class is not None else hierarchy.class_ids[-1]
    pos = hierarchy.class_ids.index(positive_class)
    pred_cls, pred_sub = predict(net, data.features, hierarchy)
    f1, precision, recall, accuracy = classification_metrics(data.class_labels, pred_cls, hierarchy.n_classes, pos)
    cls_conf = normalized_confusion(data.class_labels, pred_cls, hierarchy.n_classes)
    sub_conf = None
    if pred_sub is not None and hierarchy.n_subclasses >= 2:
        sub_conf = normalized_confusion(data.subclass_labels, pred_sub, hierarchy.n_subclasses)
    return Metrics(f1, precision, recall, accuracy, cls_conf, sub_conf)


def within_class_confusions(net, data, hierarchy) -> list[ChannelMatrix | None]:
    """Per class, the subclass confusion among samples of that class that were
    also predicted into it. Single-subclass classes give None."""
    _, pred_sub = predict(net, data.features, hierarchy)
    if pred_sub is None:
        return [None] * hierarchy.n_classes
    parent = hierarchy.parent_index()
    out = []
    offset = 0
    for c, (_, sids) in enumerate(hierarchy.classes):
        k = len(sids)
        if k < 2:
            out.append(None)
        else:
            mask = (data.class_labels == c) & (parent[pred_sub] == c)
            out.append(normalized_confusion(data.subclass_labels[mask] - offset, pred_sub[mask] - offset, k))
        offset += k
    return out
