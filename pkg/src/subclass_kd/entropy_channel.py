"""Entropy primitives and discrete memoryless channel matrices.

A channel here is a row-stochastic matrix: row ``i`` is the distribution of
the predicted label given true label ``i``. A normalized confusion matrix is
exactly such a matrix, which is why the same type is used for both.
"""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# entries below this are treated as exact zeros inside log terms
LOG_EPS = 1e-12
PROB_ATOL = 1e-9
PARSE_ATOL = 1e-6

DEFAULT_EMPIRICAL_TOL = 0.02


class ChannelError(ValueError):
    """Invalid channel or probability input."""


def _check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or np.isnan(p):
        raise ChannelError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > LOG_EPS
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def binary_entropy(p: float) -> float:
    """H_b(p) in bits, with 0 log 0 = 0."""
    p = _check_probability(p)
    return float(-_xlog2x(np.array([p, 1.0 - p])).sum())


def as_prob_vector(dist: Sequence[float], atol: float = PROB_ATOL) -> np.ndarray:
    v = np.asarray(dist, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ChannelError("probability vector must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ChannelError("probability vector entries must be finite and >= 0")
    if abs(v.sum() - 1.0) > atol:
        raise ChannelError(f"probability vector sums to {v.sum():.12g}, not 1")
    return v


def entropy(dist: Sequence[float]) -> float:
    """Shannon entropy in bits."""
    v = as_prob_vector(dist)
    return float(-_xlog2x(v).sum())


class ChannelTag(str, enum.Enum):
    BSC = "BSC"
    BAC = "BAC"
    Z = "ZChannel"
    QARY = "QarySymmetric"
    STRONG = "StrongSymmetric"
    WEAK = "WeaklySymmetric"
    GENERAL = "General"


SYMMETRIC_TAGS = frozenset({ChannelTag.BSC, ChannelTag.QARY, ChannelTag.STRONG, ChannelTag.WEAK})


@dataclass(frozen=True)
class ChannelMatrix:
    """Row-stochastic transition matrix, true label -> predicted label."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ChannelError("channel matrix must be 2-D")
        if m.shape[0] < 2 or m.shape[1] < 2:
            raise ChannelError(f"channel needs >= 2 inputs and outputs, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ChannelError("channel entries must be finite and >= 0")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_ATOL)
        if bad.size:
            raise ChannelError(f"row {int(bad[0])} sums to {sums[bad[0]]:.12g}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_square(self) -> bool:
        return self.n_inputs == self.n_outputs

    @property
    def rows(self) -> list[np.ndarray]:
        return list(self.matrix)

    def __eq__(self, other):
        if not isinstance(other, ChannelMatrix):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(np.all(self.matrix == other.matrix))

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))

    def tolist(self) -> list[list[float]]:
        return self.matrix.tolist()

    # --- serialization -------------------------------------------------

    @classmethod
    def from_rows(cls, rows, renormalize: bool = False) -> "ChannelMatrix":
        """Build from raw rows, tolerating rounding of up to 1e-6 per row.

        Rows further from 1 are rejected unless ``renormalize`` is set.
        """
        m = np.array(rows, dtype=float)
        if m.ndim != 2:
            raise ChannelError("matrix rows must all have the same length")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ChannelError("channel entries must be finite and >= 0")
        sums = m.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > PARSE_ATOL)
        if off.size and not renormalize:
            i = int(off[0])
            raise ChannelError(f"row {i} sums to {sums[i]:.9g}; pass renormalize to rescale")
        if np.any(sums == 0):
            raise ChannelError("cannot renormalize an all-zero row")
        return cls(m / sums[:, None])

    @classmethod
    def from_csv(cls, text: str, renormalize: bool = False) -> "ChannelMatrix":
        rows = [[float(x) for x in r] for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        return cls.from_rows(rows, renormalize=renormalize)

    @classmethod
    def from_json(cls, text: str, renormalize: bool = False) -> "ChannelMatrix":
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["matrix"]
        return cls.from_rows(data, renormalize=renormalize)

    @classmethod
    def load(cls, path, renormalize: bool = False) -> "ChannelMatrix":
        path = str(path)
        with open(path) as fh:
            text = fh.read()
        if path.endswith(".json"):
            return cls.from_json(text, renormalize=renormalize)
        return cls.from_csv(text, renormalize=renormalize)

    def to_csv(self) -> str:
        return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in self.matrix)

    def to_json(self) -> str:
        return json.dumps(self.tolist())


# --- constructors ---------------------------------------------------------


def make_qary_symmetric(n: int, p: float) -> ChannelMatrix:
    """N-ary channel with correct probability p and uniform errors."""
    if int(n) != n or n < 2:
        raise ChannelError(f"q-ary symmetric channel needs n >= 2, got {n}")
    n = int(n)
    p = _check_probability(p)
    m = np.full((n, n), (1.0 - p) / (n - 1))
    np.fill_diagonal(m, p)
    return ChannelMatrix(m)


def make_bac(p0: float, p1: float) -> ChannelMatrix:
    p0 = _check_probability(p0, "p0")
    p1 = _check_probability(p1, "p1")
    return ChannelMatrix([[p0, 1.0 - p0], [1.0 - p1, p1]])


def make_z(p1: float) -> ChannelMatrix:
    return make_bac(1.0, p1)


def make_bsc(p: float) -> ChannelMatrix:
    return make_bac(p, p)


def mutual_information(input_dist: Sequence[float], channel: ChannelMatrix) -> float:
    """I(X;Y) in bits for input distribution ``input_dist`` through ``channel``."""
    r = as_prob_vector(input_dist, atol=1e-8)
    w = channel.matrix
    if r.size != channel.n_inputs:
        raise ChannelError("input distribution size does not match channel inputs")
    q = r @ w
    h_out = -_xlog2x(q).sum()
    h_cond = -(r * _xlog2x(w).sum(axis=1)).sum()
    return float(max(h_out - h_cond, 0.0))


# --- classification -------------------------------------------------------


@dataclass(frozen=True)
class ChannelKind:
    tag: ChannelTag
    params: dict = field(default_factory=dict)
    deviation: float = 0.0

    def __str__(self):
        if not self.params:
            return self.tag.value
        inner = ", ".join(f"{k}={_fmt_param(v)}" for k, v in self.params.items())
        return f"{self.tag.value}({inner})"


def _fmt_param(v):
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(f"{x:.6f}" for x in v) + "]"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _linf(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def qary_projection(m: ChannelMatrix) -> tuple[float, float]:
    """Project a square matrix onto the q-ary symmetric pattern.

    Returns the averaged diagonal and the L-inf distance to the projected
    matrix.
    """
    if not m.is_square:
        raise ChannelError("q-ary projection needs a square matrix")
    p_hat = float(np.clip(np.mean(np.diag(m.matrix)), 0.0, 1.0))
    proj = make_qary_symmetric(m.n_inputs, p_hat)
    return p_hat, _linf(m.matrix, proj.matrix)


def row_permutation_deviation(w: np.ndarray) -> float:
    s = -np.sort(-w, axis=1)
    return _linf(s, s.mean(axis=0, keepdims=True))


def column_permutation_deviation(w: np.ndarray) -> float:
    return row_permutation_deviation(w.T)


def column_sum_deviation(w: np.ndarray) -> float:
    cs = w.sum(axis=0)
    return float(np.max(np.abs(cs - cs.mean())))


def classify_channel(m: ChannelMatrix, tol: float = 0.0) -> ChannelKind:
    """Most specific channel family within L-inf distance ``tol``.

    Precedence: Z > BSC > BAC > q-ary > strong symmetric > weakly
    symmetric > general. Z and BSC are BAC special cases and BSC is also the
    binary q-ary channel, so the narrower label wins.
    """
    if tol < 0:
        raise ChannelError("tol must be >= 0")
    w = m.matrix
    # slack for float noise in the constructors themselves
    tol_eff = tol + 1e-12
    if not m.is_square:
        return ChannelKind(ChannelTag.GENERAL)

    if m.n_inputs == 2:
        p0, p1 = float(w[0, 0]), float(w[1, 1])
        dev_z = _linf(w, make_z(p1).matrix)
        if dev_z <= tol_eff:
            return ChannelKind(ChannelTag.Z, {"p1": p1}, dev_z)
        p = (p0 + p1) / 2
        dev_bsc = _linf(w, make_bsc(p).matrix)
        if dev_bsc <= tol_eff:
            return ChannelKind(ChannelTag.BSC, {"p": p}, dev_bsc)
        return ChannelKind(ChannelTag.BAC, {"p0": p0, "p1": p1}, 0.0)

    p_hat, dev_q = qary_projection(m)
    if dev_q <= tol_eff:
        return ChannelKind(ChannelTag.QARY, {"n": m.n_inputs, "p": p_hat}, dev_q)

    dev_rows = row_permutation_deviation(w)
    if dev_rows <= tol_eff:
        row = (-np.sort(-w, axis=1)).mean(axis=0)
        params = {"row": [float(x) for x in row]}
        dev_cols = column_permutation_deviation(w)
        if dev_cols <= tol_eff:
            return ChannelKind(ChannelTag.STRONG, params, max(dev_rows, dev_cols))
        dev_sums = column_sum_deviation(w)
        if dev_sums <= tol_eff:
            return ChannelKind(ChannelTag.WEAK, params, max(dev_rows, dev_sums))
    return ChannelKind(ChannelTag.GENERAL)


def random_symmetric_channel(n: int, rng: np.random.Generator, strong: bool = True) -> ChannelMatrix:
    """Random strongly symmetric channel, or a weakly-but-not-strongly one.

    Strong: a random row laid out along a random Latin square. Weak: only
    for n == 4, rows are permutations of (a, 1/4, 1/4, 1/2 - a) arranged so
    every column sums to 1 while the columns are not permutations of each
    other.
    """
    if strong:
        row = rng.dirichlet(np.ones(n))
        base = np.array([np.roll(np.arange(n), k) for k in range(n)])
        latin = base[rng.permutation(n)][:, rng.permutation(n)]
        return ChannelMatrix(row[latin])
    if n != 4:
        raise ChannelError("weakly symmetric generator only supports n == 4")
    a = rng.uniform(0.0, 0.5)
    while abs(a - 0.25) < 0.02:
        a = rng.uniform(0.0, 0.5)
    c = 0.5 - a
    m = np.array([
        [a, 0.25, 0.25, c],
        [a, 0.25, c, 0.25],
        [c, 0.25, a, 0.25],
        [c, 0.25, 0.25, a],
    ])
    m = m[rng.permutation(4)][:, rng.permutation(4)]
    return ChannelMatrix(m)
