"""Teacher/student comparison over repeated seeded runs.

Each run draws a fresh dataset and trains five networks on it:

* ``teacher``       - large net, subclass labels
* ``teacher_class`` - large net, class labels (the conventional KD teacher)
* ``baseline``      - small net, class labels, no distillation
* ``kd``            - small net distilled from ``teacher_class`` at class level
* ``skd``           - small net distilled from ``teacher`` at subclass level

Run ``i`` uses seed ``cfg.seed + i`` for its data, and per-network seeds
derived from it, so runs can execute in any order or in parallel without
changing a single bit of the result.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from ..labelbits import analyze_confusion, skd_information_gain
from ..synthdata import SyntheticSpec, generate
from .metrics import evaluate, within_class_confusions
from .training import DistillConfig, distill_student, train_supervised

ARMS = ("teacher", "teacher_class", "baseline", "kd", "skd")
_ARM_STREAM = {name: i + 1 for i, name in enumerate(ARMS)}


def arm_seed(run_seed: int, arm: str) -> int:
    ss = np.random.SeedSequence([int(run_seed), _ARM_STREAM[arm]])
    return int(ss.generate_state(1)[0])


def _labelbits(net, train, spec: SyntheticSpec, level: str):
    h = spec.train_hierarchy()
    m = evaluate(net, train, h, spec.positive_class)
    if level == "subclass":
        subs = within_class_confusions(net, train, h)
        return analyze_confusion(m.class_confusion, subs, h, project=True), m
    return analyze_confusion(m.class_confusion, [], h.collapsed(), project=True), m


def run_once(spec: SyntheticSpec, cfg: DistillConfig, run_index: int) -> dict:
    seed = cfg.seed + run_index
    data = generate(spec, seed)
    train, test = data.train(), data.test()
    c = {arm: replace(cfg, seed=arm_seed(seed, arm)) for arm in ARMS}

    nets = {}
    nets["teacher"] = train_supervised(train, cfg.teacher_hidden, c["teacher"], "subclass")
    nets["teacher_class"] = train_supervised(train, cfg.teacher_hidden, c["teacher_class"], "class")
    nets["baseline"] = train_supervised(train, cfg.student_hidden, c["baseline"], "class")
    nets["kd"] = distill_student(nets["teacher_class"], train, c["kd"], "class")
    nets["skd"] = distill_student(nets["teacher"], train, c["skd"], "subclass")

    metrics = {arm: evaluate(net, test, spec.hierarchy, spec.positive_class) for arm, net in nets.items()}
    sub_bits, teacher_train = _labelbits(nets["teacher"], train, spec, "subclass")
    cls_bits, _ = _labelbits(nets["teacher_class"], train, spec, "class")
    return {
        "run": run_index,
        "seed": seed,
        "metrics": {arm: m.to_dict() for arm, m in metrics.items()},
        "teacher_train_f1": teacher_train.f1,
        "labelbits": sub_bits.to_dict(),
        "labelbits_class_only": cls_bits.to_dict(),
        "information_gain": skd_information_gain(sub_bits, cls_bits),
    }


def _run_once_args(args):
    return run_once(*args)


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    n = len(v)
    std = float(v.std(ddof=1)) if n > 1 else 0.0
    return {"mean": float(v.mean()), "std": std, "se": std / math.sqrt(n), "n": n}


def _compare(a: dict, b: dict) -> dict:
    gap = a["mean"] - b["mean"]
    se = math.sqrt(a["se"] ** 2 + b["se"] ** 2)
    # z is undefined with a single run (no spread to compare against)
    return {"gap": gap, "pooled_se": se, "z": gap / se if se > 0 else None}


def run_experiment(spec: SyntheticSpec, cfg: DistillConfig, workers: int = 1) -> dict:
    """Train and evaluate every arm for ``cfg.runs`` seeds; aggregate F1."""
    jobs = [(spec, cfg, i) for i in range(cfg.runs)]
    if workers > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_once_args, jobs))
    else:
        runs = [run_once(*j) for j in jobs]

    f1 = {arm: _summary([r["metrics"][arm]["f1"] for r in runs]) for arm in ARMS}
    best = max(runs, key=lambda r: (r["teacher_train_f1"], -r["run"]))
    mean_conf = {
        arm: np.mean([r["metrics"][arm]["class_confusion"] for r in runs], axis=0).tolist() for arm in ARMS
    }
    sub_arms = ("teacher", "skd")
    mean_sub_conf = {
        arm: np.mean([r["metrics"][arm]["subclass_confusion"] for r in runs], axis=0).tolist()
        for arm in sub_arms
        if runs[0]["metrics"][arm]["subclass_confusion"] is not None
    }
    skd_vs_kd = _compare(f1["skd"], f1["kd"])
    return {
        "config": cfg.to_dict(),
        "spec": spec.to_dict(),
        "f1": f1,
        "comparisons": {
            "skd_vs_baseline": _compare(f1["skd"], f1["baseline"]),
            "skd_vs_kd": skd_vs_kd,
            "kd_vs_baseline": _compare(f1["kd"], f1["baseline"]),
        },
        "subclass_gain_significant": skd_vs_kd["z"] is not None and skd_vs_kd["z"] > 2.0,
        "mean_class_confusion": mean_conf,
        "mean_subclass_confusion": mean_sub_conf,
        "labelbits": {
            "best_run": best["run"],
            "with_subclasses": best["labelbits"],
            "class_only": best["labelbits_class_only"],
            "information_gain": best["information_gain"],
        },
        "runs": runs,
    }
