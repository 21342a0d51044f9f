"""Synthetic subclass-structured Gaussian data.

Each subclass is an isotropic Gaussian blob. The benchmark spec gives the
positive class a *shortcut* feature that separates it from the negative class
on its own, plus secondary features that tell its subclasses apart. In the
test split a fraction of positive samples lose the shortcut: that coordinate
is redrawn from the negative class's marginal. A model that only learned the
shortcut misses those samples; one forced to separate subclasses has also
picked up the secondary features and can still recover many of them.

Randomness comes from ``numpy.random.default_rng`` (PCG64), seeded per call.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .labelbits import ClassHierarchy


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    hierarchy: ClassHierarchy
    subclass_centers: np.ndarray
    noise_scale: float = 1.0
    train_size: tuple = ()
    test_size: tuple = ()
    dropout_feature: int | None = None
    dropout_fraction: float = 0.0
    positive_class: str | None = None

    def __post_init__(self):
        centers = np.array(self.subclass_centers, dtype=float)
        if centers.ndim != 2 or centers.shape[0] != self.hierarchy.n_subclasses:
            raise SpecError("need one center per subclass")
        centers.setflags(write=False)
        object.__setattr__(self, "subclass_centers", centers)
        n = self.hierarchy.n_subclasses
        train = tuple(int(x) for x in self.train_size) or (100,) * n
        test = tuple(int(x) for x in self.test_size) or (100,) * n
        if len(train) != n or len(test) != n:
            raise SpecError("train_size and test_size need one count per subclass")
        if min(train) < 0 or min(test) < 0 or sum(train) == 0:
            raise SpecError("sample counts must be >= 0 with a non-empty training split")
        object.__setattr__(self, "train_size", train)
        object.__setattr__(self, "test_size", test)
        if not 0.0 <= self.dropout_fraction <= 1.0:
            raise SpecError("dropout_fraction must lie in [0, 1]")
        if self.noise_scale < 0 or not np.isfinite(self.noise_scale):
            raise SpecError("noise_scale must be finite and >= 0")
        pos = self.positive_class if self.positive_class is not None else self.hierarchy.class_ids[-1]
        if pos not in self.hierarchy.class_ids:
            raise SpecError(f"unknown positive class {pos!r}")
        object.__setattr__(self, "positive_class", pos)
        if self.dropout_feature is not None and not 0 <= self.dropout_feature < self.dim:
            raise SpecError("dropout_feature out of range")
        if self.dropout_fraction > 0 and self.dropout_feature is None:
            raise SpecError("dropout_fraction > 0 needs a dropout_feature")
        if self.dropout_fraction > 0 and self.hierarchy.n_classes < 2:
            raise SpecError("feature dropout needs a negative class to resample from")

    @property
    def dim(self) -> int:
        return self.subclass_centers.shape[1]

    def train_hierarchy(self) -> ClassHierarchy:
        """Hierarchy whose sample counts are this spec's training counts."""
        return self.hierarchy.with_counts(dict(zip(self.hierarchy.subclass_ids, self.train_size)))

    def to_dict(self) -> dict:
        return {
            "hierarchy": self.hierarchy.to_dict(),
            "subclass_centers": self.subclass_centers.tolist(),
            "noise_scale": self.noise_scale,
            "train_size": list(self.train_size),
            "test_size": list(self.test_size),
            "dropout_feature": self.dropout_feature,
            "dropout_fraction": self.dropout_fraction,
            "positive_class": self.positive_class,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SyntheticSpec":
        d = dict(d)
        h = d.pop("hierarchy")
        d["hierarchy"] = h if isinstance(h, ClassHierarchy) else ClassHierarchy.from_dict(h)
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise SpecError(f"unknown spec fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SyntheticDataset:
    features: np.ndarray
    subclass_labels: np.ndarray
    class_labels: np.ndarray
    split: np.ndarray
    hierarchy: ClassHierarchy = field(repr=False, default=None)

    def __post_init__(self):
        if len(self.features) and not np.all(np.isfinite(self.features)):
            raise SpecError("features contain non-finite values")
        if self.hierarchy is not None and len(self.subclass_labels):
            parent = self.hierarchy.parent_index()
            if not np.array_equal(parent[self.subclass_labels], self.class_labels):
                raise SpecError("class labels disagree with subclass labels")

    def __len__(self):
        return len(self.features)

    def subset(self, which: str) -> "SyntheticDataset":
        mask = self.split == which
        return SyntheticDataset(
            self.features[mask], self.subclass_labels[mask], self.class_labels[mask], self.split[mask], self.hierarchy
        )

    def train(self) -> "SyntheticDataset":
        return self.subset("train")

    def test(self) -> "SyntheticDataset":
        return self.subset("test")

    def labels(self, level: str) -> np.ndarray:
        if level == "subclass":
            return self.subclass_labels
        if level == "class":
            return self.class_labels
        raise ValueError(f"unknown label level {level!r}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.features.shape[1]
        w.writerow([f"x{i}" for i in range(d)] + ["subclass_id", "class_id", "split"])
        sids, cids = self.hierarchy.subclass_ids, self.hierarchy.class_ids
        for x, s, c, sp in zip(self.features, self.subclass_labels, self.class_labels, self.split):
            w.writerow([repr(float(v)) for v in x] + [sids[s], cids[c], sp])
        return buf.getvalue()


def _counts_to_labels(counts: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(counts)), counts)


def generate(spec: SyntheticSpec, seed: int) -> SyntheticDataset:
    """Draw a train/test dataset from ``spec``; deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    parent = spec.hierarchy.parent_index()
    centers = spec.subclass_centers
    parts = []
    for split, counts in (("train", spec.train_size), ("test", spec.test_size)):
        sub = _counts_to_labels(counts)
        x = centers[sub] + spec.noise_scale * rng.standard_normal((len(sub), spec.dim))
        parts.append((x, sub, np.full(len(sub), split)))

    x_test, sub_test, _ = parts[1]
    if spec.dropout_fraction > 0:
        pos = spec.hierarchy.class_ids.index(spec.positive_class)
        candidates = np.flatnonzero(parent[sub_test] == pos)
        n_drop = int(round(spec.dropout_fraction * len(candidates)))
        chosen = np.sort(rng.choice(candidates, size=n_drop, replace=False)) if n_drop else candidates[:0]
        # negative-class marginal of the dropout coordinate: a training-size
        # weighted mixture of the negative subclasses' 1-D Gaussians
        neg = np.flatnonzero(parent != pos)
        w = np.array([spec.train_size[s] for s in neg], dtype=float)
        w = w / w.sum() if w.sum() > 0 else np.full(len(neg), 1.0 / len(neg))
        donors = rng.choice(neg, size=n_drop, p=w)
        f = spec.dropout_feature
        x_test[chosen, f] = centers[donors, f] + spec.noise_scale * rng.standard_normal(n_drop)

    x = np.concatenate([p[0] for p in parts])
    sub = np.concatenate([p[1] for p in parts])
    split = np.concatenate([p[2] for p in parts])
    return SyntheticDataset(x, sub, parent[sub], split, spec.hierarchy)


def imbalance(spec: SyntheticSpec, ratios: Mapping[str, float]) -> SyntheticSpec:
    """Scale each class's per-subclass training counts by its ratio.

    E.g. ``{"HP": 2162 / 990}`` on a spec with equal class sizes reproduces the
    MHIST HP:SSA imbalance.
    """
    scale = {c: 1.0 for c in spec.hierarchy.class_ids}
    for c, r in ratios.items():
        if c not in scale:
            raise SpecError(f"unknown class {c!r}")
        if not r > 0:
            raise SpecError("ratios must be positive")
        scale[c] = float(r)
    parent = spec.hierarchy.parent_index()
    cids = spec.hierarchy.class_ids
    train = []
    for s, n in enumerate(spec.train_size):
        m = int(np.floor(n * scale[cids[parent[s]]] + 0.5))
        if m <= 0:
            raise SpecError(f"subclass {spec.hierarchy.subclass_ids[s]!r} would have no training samples")
        train.append(m)
    return replace(spec, train_size=tuple(train))


MHIST_IMBALANCE = 2162 / 990


def benchmark_spec() -> SyntheticSpec:
    """Two classes, the positive one split into two subclasses.

    Feature 0 is the shortcut shared by both positive subclasses. Features 1
    and 2 are secondary: subclass A sits high on feature 1, subclass B high on
    feature 2. Remaining features are pure noise. Half of the positive test
    samples lose the shortcut.

    This is a constructed benchmark for exercising the training pipeline, not
    a model of any real dataset. Negatives sit midway on the secondary
    features, so a class-level boundary there is weak while each positive
    subclass is easy to separate from the negatives on its own feature.
    """
    return _benchmark(merged=False)


def degenerate_spec() -> SyntheticSpec:
    """Benchmark geometry with the two positive subclasses merged onto one
    center, so subclass labels carry no information."""
    return _benchmark(merged=True)


BENCHMARK_SHORTCUT = 2.0
BENCHMARK_SECONDARY = 8.0
BENCHMARK_DIM = 6


def _benchmark(merged: bool) -> SyntheticSpec:
    h = ClassHierarchy((("HP", ("HP",)), ("SSA", ("SSA-a", "SSA-b"))))
    m, s = BENCHMARK_SHORTCUT, BENCHMARK_SECONDARY
    centers = np.zeros((3, BENCHMARK_DIM))
    centers[:, 0] = (-m, m, m)
    centers[0, 1:3] = s / 2
    if merged:
        centers[1:, 1:3] = s / 2
    else:
        centers[1, 1] = s
        centers[2, 2] = s
    return SyntheticSpec(
        hierarchy=h,
        subclass_centers=centers,
        noise_scale=1.0,
        train_size=(300, 150, 150),
        test_size=(600, 300, 300),
        dropout_feature=0,
        dropout_fraction=0.5,
        positive_class="SSA",
    )
