"""Teacher and student training by plain mini-batch gradient descent.

Every network draws its initial weights and its batch order from one
``numpy.random.default_rng(seed)`` stream, so a fixed seed gives bit-identical
weights.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import Mapping

import numpy as np

from .losses import objective_value_grad
from .network import ToyNet


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class DistillConfig:
    temperature: float = 5.0
    task_balance: float = 0.45
    epochs: int = 40
    learning_rate: float = 0.05
    batch_size: int = 32
    teacher_hidden: tuple = (32, 32)
    student_hidden: tuple = (8,)
    seed: int = 0
    runs: int = 1
    scale_kl: bool = True
    allow_larger_student: bool = False

    def __post_init__(self):
        object.__setattr__(self, "teacher_hidden", tuple(int(h) for h in self.teacher_hidden))
        object.__setattr__(self, "student_hidden", tuple(int(h) for h in self.student_hidden))
        if not self.temperature > 0:
            raise ConfigError("temperature", "must be > 0")
        if not 0.0 <= self.task_balance <= 1.0:
            raise ConfigError("task_balance", "must lie in [0, 1]")
        if self.epochs < 0:
            raise ConfigError("epochs", "must be >= 0")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate", "must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")
        if self.runs < 1:
            raise ConfigError("runs", "must be >= 1")
        for name in ("teacher_hidden", "student_hidden"):
            if any(h < 1 for h in getattr(self, name)):
                raise ConfigError(name, "layer widths must be >= 1")
        t, s = self.teacher_hidden, self.student_hidden
        if not self.allow_larger_student and (len(t) < len(s) or sum(t) < sum(s)):
            raise ConfigError("student_hidden", "student is larger than the teacher (set allow_larger_student)")

    @classmethod
    def from_dict(cls, d: Mapping) -> "DistillConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown config field")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "DistillConfig":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["teacher_hidden"] = list(self.teacher_hidden)
        d["student_hidden"] = list(self.student_hidden)
        return d


def _train_split(data):
    d = data.train() if np.any(data.split == "train") else data
    if len(d) == 0:
        raise ValueError("empty training set")
    return d


def _width(data, labels: str) -> int:
    h = data.hierarchy
    return h.n_subclasses if labels == "subclass" else h.n_classes


def fit(net: ToyNet, x, y, rng, cfg: DistillConfig, teacher_logits=None, lam: float = 1.0) -> ToyNet:
    """Mini-batch gradient descent on lam * CE + (1 - lam) * SKD, in place."""
    n = len(x)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits, acts = net.forward(x[idx], keep=True)
            t = None if teacher_logits is None else teacher_logits[idx]
            _, dlogits = objective_value_grad(logits, y[idx], t, cfg.temperature, lam, cfg.scale_kl)
            for p, g in zip(net.params(), net.backward(acts, dlogits)):
                p -= cfg.learning_rate * g
    return net


def train_supervised(data, hidden, cfg: DistillConfig, labels: str = "subclass") -> ToyNet:
    """Cross-entropy training of a fresh network of the given hidden widths."""
    d = _train_split(data)
    rng = np.random.default_rng(cfg.seed)
    net = ToyNet.init([d.features.shape[1], *hidden, _width(d, labels)], rng)
    return fit(net, d.features, d.labels(labels), rng, cfg)


def train_teacher(data, cfg: DistillConfig, labels: str = "subclass") -> ToyNet:
    """Teacher trained with cross-entropy on subclass (default) or class labels."""
    return train_supervised(data, cfg.teacher_hidden, cfg, labels)


def distill_student(teacher: ToyNet, data, cfg: DistillConfig, labels: str = "subclass", init: ToyNet | None = None) -> ToyNet:
    """Student trained on lam * CE(labels) + (1 - lam) * tau^2 KL(teacher || student).

    The teacher is only evaluated, never updated. ``init`` replaces the random
    initialization (the random stream is consumed identically either way).
    """
    d = _train_split(data)
    width = _width(d, labels)
    if teacher.n_outputs != width:
        raise ValueError(f"teacher has {teacher.n_outputs} outputs, {labels} labels need {width}")
    rng = np.random.default_rng(cfg.seed)
    net = ToyNet.init([d.features.shape[1], *cfg.student_hidden, width], rng)
    if init is not None:
        if init.n_inputs != net.n_inputs or init.n_outputs != width:
            raise ValueError("init network has the wrong input or output width")
        net = init.copy()
    teacher_logits = teacher.forward(d.features)
    return fit(net, d.features, d.labels(labels), rng, cfg, teacher_logits, cfg.task_balance)


def objective(net: ToyNet, x, labels, teacher_logits, tau, lam, scale_kl=True):
    logits, acts = net.forward(x, keep=True)
    value, dlogits = objective_value_grad(logits, labels, teacher_logits, tau, lam, scale_kl)
    return value, net.backward(acts, dlogits)


# denominators below this are treated as this, so exactly-zero gradients
# (dead ReLU units) compare on an absolute scale
GRADCHECK_FLOOR = 1e-6


def _objective_value_ld(weights, biases, x, label, teacher_logits, tau, lam, scale_kl):
    """Objective for one sample, written out separately in extended precision.

    This is the finite-difference side of the gradient check, so it shares no
    code with the float64 forward/backward path.
    """
    ld = np.longdouble
    a = x.astype(ld)
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        a = a @ w + b
        if i < last:
            a = np.where(a > 0, a, ld(0))

    def log_softmax_ld(z):
        z = z - z.max()
        return z - np.log(np.sum(np.exp(z)))

    value = ld(0)
    if lam > 0:
        value += ld(lam) * -log_softmax_ld(a)[label]
    if lam < 1:
        tau_ld = ld(tau)
        log_p = log_softmax_ld(teacher_logits.astype(ld) / tau_ld)
        log_q = log_softmax_ld(a / tau_ld)
        kl = np.sum(np.exp(log_p) * (log_p - log_q))
        scale = tau_ld * tau_ld if scale_kl else ld(1)
        value += (ld(1) - ld(lam)) * scale * kl
    return value


def gradient_check(net: ToyNet, sample, tau: float, lam: float, eps: float = 1e-6, scale_kl: bool = True) -> float:
    """Max relative error between backprop and central differences.

    ``sample`` is ``(x, label)`` or ``(x, label, teacher_logits)``. Every
    parameter coordinate is perturbed by +-eps and the objective re-evaluated
    in ``np.longdouble``.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    x, label, *rest = sample
    x = np.asarray(x, dtype=float).reshape(-1)
    label = int(label)
    t = None if not rest or rest[0] is None else np.asarray(rest[0], dtype=float).reshape(-1)
    if lam < 1 and t is None:
        raise ValueError("distillation path needs teacher logits in the sample")
    _, grads = objective(net, x[None, :], np.array([label]), None if t is None else t[None, :], tau, lam, scale_kl)

    weights = [w.astype(np.longdouble) for w in net.weights]
    biases = [b.astype(np.longdouble) for b in net.biases]
    params = []
    for w, b in zip(weights, biases):
        params += [w, b]
    h = np.longdouble(eps)
    worst = 0.0
    for p, g in zip(params, grads):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = _objective_value_ld(weights, biases, x, label, t, tau, lam, scale_kl)
            flat[i] = orig - h
            down = _objective_value_ld(weights, biases, x, label, t, tau, lam, scale_kl)
            flat[i] = orig
            numeric = float((up - down) / (2 * h))
            denom = max(abs(numeric), abs(gflat[i]), GRADCHECK_FLOOR)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst


def random_gradcheck_case(rng: np.random.Generator, tau: float, lam: float, scale_kl: bool = True):
    """Random net and sample for gradient checking."""
    n_in = int(rng.integers(2, 6))
    hidden = [int(h) for h in rng.integers(2, 7, size=rng.integers(1, 3))]
    n_out = int(rng.integers(2, 6))
    net = ToyNet.init([n_in, *hidden, n_out], rng)
    for b in net.biases:
        b += 0.1 * rng.standard_normal(b.shape)
    x = rng.standard_normal(n_in)
    label = int(rng.integers(n_out))
    teacher = 2.0 * rng.standard_normal(n_out)
    return net, (x, label, teacher)


def gradient_check_sweep(n: int = 100, seed: int = 0, eps: float = 1e-6, paths=None):
    """Run ``gradient_check`` over random cases for each (tau, lam) path.

    Returns {path_name: (max error, worst case index)}.
    """
    paths = paths or {"ce": (1.0, 1.0), "skd_tau1": (1.0, 0.0), "skd_tau5": (5.0, 0.0), "mixed": (5.0, 0.45)}
    out = {}
    for name, (tau, lam) in paths.items():
        rng = np.random.default_rng([seed, hash_name(name)])
        errs = []
        for _ in range(n):
            net, sample = random_gradcheck_case(rng, tau, lam)
            errs.append(gradient_check(net, sample, tau, lam, eps))
        out[name] = (float(max(errs)), int(np.argmax(errs)))
    return out


def hash_name(name: str) -> int:
    # stable across interpreter runs, unlike hash()
    return sum((i + 1) * ord(c) for i, c in enumerate(name))


__all__ = [
    "ConfigError",
    "DistillConfig",
    "distill_student",
    "fit",
    "gradient_check",
    "gradient_check_sweep",
    "objective",
    "random_gradcheck_case",
    "train_supervised",
    "train_teacher",
]
