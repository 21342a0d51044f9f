"""Tempered softmax, the teacher/student losses, and subclass aggregation.

Losses use natural logarithms; batched versions average over samples.
"""
from __future__ import annotations

import numpy as np

LOSS_FLOOR = 1e-12


def softmax_with_temperature(z, tau: float = 1.0) -> np.ndarray:
    """sigma(z / tau) along the last axis, max-shifted for stability."""
    if not tau > 0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    z = np.asarray(z, dtype=float) / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z, tau: float = 1.0) -> np.ndarray:
    if not tau > 0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    z = np.asarray(z, dtype=float) / tau
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(probs, target) -> float:
    """-sum target * log(probs) for a one-hot ``target``."""
    probs = np.asarray(probs, dtype=float)
    target = np.asarray(target, dtype=float)
    if probs.shape != target.shape:
        raise ValueError("probs and target shapes differ")
    if not (np.all((target == 0) | (target == 1)) and target.sum() == 1):
        raise ValueError("target must be one-hot")
    return float(-np.sum(target * np.log(np.maximum(probs, LOSS_FLOOR))))


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(np.maximum(q[mask], LOSS_FLOOR)))))


def kl_scale_factor(tau: float, scale_kl: bool = True) -> float:
    return tau * tau if scale_kl else 1.0


def skd_loss(teacher_logits, student_logits, tau: float, scale_kl: bool = True) -> float:
    """tau^2 * KL(sigma(t/tau) || sigma(s/tau)) for one sample."""
    t = np.asarray(teacher_logits, dtype=float)
    s = np.asarray(student_logits, dtype=float)
    if t.shape != s.shape:
        raise ValueError(f"teacher width {t.shape} != student width {s.shape}")
    p = softmax_with_temperature(t, tau)
    log_q = log_softmax(s, tau)
    mask = p > 0
    kl = float(np.sum(p[mask] * (np.log(p[mask]) - log_q[mask])))
    return kl_scale_factor(tau, scale_kl) * max(kl, 0.0)


def student_objective(ce: float, skd: float, lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError("task balance must lie in [0, 1]")
    return lam * ce + (1.0 - lam) * skd


def aggregate_to_class(subclass_probs, hierarchy) -> np.ndarray:
    """Class probabilities as sums over each class's subclasses.

    Works on a single vector or a batch (last axis = subclasses, ordered as
    ``hierarchy.subclass_ids``).
    """
    p = np.asarray(subclass_probs, dtype=float)
    if p.shape[-1] != hierarchy.n_subclasses:
        raise ValueError(f"width {p.shape[-1]} != {hierarchy.n_subclasses} subclasses")
    parent = hierarchy.parent_index()
    onehot = np.zeros((hierarchy.n_subclasses, hierarchy.n_classes))
    onehot[np.arange(hierarchy.n_subclasses), parent] = 1.0
    return p @ onehot


# --- batched value/gradient pairs w.r.t. logits -----------------------------


def ce_value_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    b = len(labels)
    logp = log_softmax(logits)
    value = -logp[np.arange(b), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(b), labels] -= 1.0
    return float(value), grad / b


def skd_value_grad(teacher_logits: np.ndarray, student_logits: np.ndarray, tau: float, scale_kl: bool = True):
    b = len(student_logits)
    p = softmax_with_temperature(teacher_logits, tau)
    log_q = log_softmax(student_logits, tau)
    with np.errstate(divide="ignore"):
        log_p = np.where(p > 0, np.log(p), 0.0)
    scale = kl_scale_factor(tau, scale_kl)
    value = scale * np.sum(p * (log_p - log_q)) / b
    grad = scale * (np.exp(log_q) - p) / (tau * b)
    return float(value), grad


def objective_value_grad(logits, labels, teacher_logits, tau, lam, scale_kl=True):
    """lambda * CE + (1 - lambda) * SKD and its gradient w.r.t. the logits.

    Terms with zero weight are skipped entirely, so lambda == 1 is exactly
    plain supervised training.
    """
    value = 0.0
    grad = np.zeros_like(logits)
    if lam > 0.0:
        v, g = ce_value_grad(logits, labels)
        value += lam * v
        grad = lam * g if lam != 1.0 else g
    if lam < 1.0:
        if teacher_logits is None:
            raise ValueError("distillation term needs teacher logits")
        v, g = skd_value_grad(teacher_logits, logits, tau, scale_kl)
        w = 1.0 - lam
        value += w * v
        grad = grad + (w * g if w != 1.0 else g)
    return value, grad
