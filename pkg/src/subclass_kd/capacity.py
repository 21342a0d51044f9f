"""Channel capacities: closed forms for the symmetric and binary families,
plus a Blahut-Arimoto maximizer that serves as an independent check.

All capacities are in bits per channel use.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy_channel import (
    ChannelError,
    ChannelMatrix,
    ChannelTag,
    _check_probability,
    _xlog2x,
    binary_entropy,
    column_permutation_deviation,
    entropy,
)

DEGENERATE_ATOL = 1e-12


class DegenerateChannelError(ChannelError):
    """Both rows of a binary channel are identical (p0 + p1 == 1)."""


class SymmetryError(ChannelError):
    """Matrix is not strongly or weakly symmetric."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    optimal_input: np.ndarray
    iterations: int = 0
    method: str = "closed-form"

    def __post_init__(self):
        r = np.asarray(self.optimal_input, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "optimal_input", r)

    @property
    def alpha_star(self) -> float:
        """Probability of input 1; only meaningful for binary channels."""
        return float(self.optimal_input[1])


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def capacity_qary_symmetric(n: int, p: float) -> CapacityResult:
    """log N + p log p + (1-p) log((1-p)/(N-1))."""
    if int(n) != n or n < 2:
        raise ChannelError(f"q-ary symmetric channel needs n >= 2, got {n}")
    n = int(n)
    p = _check_probability(p)
    c = np.log2(n) + float(_xlog2x(np.array([p]))[0])
    if p < 1.0:
        c += (1.0 - p) * np.log2((1.0 - p) / (n - 1))
    return CapacityResult(max(float(c), 0.0), _uniform(n))


def check_symmetric(m: ChannelMatrix, tol: float = 1e-9) -> None:
    """Raise SymmetryError unless ``m`` is strongly or weakly symmetric."""
    w = m.matrix
    if not m.is_square:
        raise SymmetryError("symmetric-channel capacity needs a square matrix")
    s = -np.sort(-w, axis=1)
    ref = s.mean(axis=0)
    dev = np.max(np.abs(s - ref), axis=1)
    if dev.max() > tol:
        raise SymmetryError(f"row {int(np.argmax(dev))} is not a permutation of the other rows")
    if column_permutation_deviation(w) <= tol:
        return
    cs = w.sum(axis=0)
    cdev = np.abs(cs - cs.mean())
    if cdev.max() > tol:
        raise SymmetryError(
            f"column {int(np.argmax(cdev))} sum {cs[np.argmax(cdev)]:.6f} differs from the others "
            "and columns are not permutations of each other"
        )


def capacity_symmetric(m: ChannelMatrix, tol: float = 1e-9) -> CapacityResult:
    """log N - H(row) for strongly or weakly symmetric channels."""
    check_symmetric(m, tol)
    n = m.n_inputs
    row = m.matrix[0] / m.matrix[0].sum()
    return CapacityResult(max(float(np.log2(n) - entropy(row)), 0.0), _uniform(n))


def k_factor(p0: float, p1: float) -> float:
    p0 = _check_probability(p0, "p0")
    p1 = _check_probability(p1, "p1")
    d = p0 + p1 - 1.0
    if abs(d) <= DEGENERATE_ATOL:
        raise DegenerateChannelError(f"p0 + p1 = 1 (p0={p0}, p1={p1}): useless channel, K diverges")
    return (binary_entropy(p1) - binary_entropy(p0)) / d


def _inv_one_plus_exp2(k: float) -> float:
    # 1 / (2**k + 1) without overflow
    if k > 0:
        e = 2.0 ** -k
        return e / (1.0 + e)
    return 1.0 / (1.0 + 2.0 ** k)


def bac_optimal_alpha(p0: float, p1: float) -> float:
    """Capacity-achieving probability of input 1 of the BAC [[p0,1-p0],[1-p1,p1]].

    The closed form assumes p1 <= p0; otherwise the hypotheses are relabeled,
    solved, and mapped back.
    """
    p0 = _check_probability(p0, "p0")
    p1 = _check_probability(p1, "p1")
    if p1 > p0:
        return 1.0 - bac_optimal_alpha(p1, p0)
    if p0 == p1:
        # symmetric channel; the closed form loses digits near p = 0.5
        if abs(2.0 * p0 - 1.0) <= DEGENERATE_ATOL:
            raise DegenerateChannelError("p0 + p1 = 1: every input distribution is optimal")
        return 0.5
    d = p0 + p1 - 1.0
    k = k_factor(p0, p1)
    alpha = (_inv_one_plus_exp2(k) - (1.0 - p0)) / d
    return float(min(max(alpha, 0.0), 1.0))


def capacity_bac(p0: float, p1: float) -> CapacityResult:
    """log(1 + 2^K) - p0 K - H_b(p0), with optimal input [1 - a*, a*].

    A useless channel (p0 + p1 == 1) returns capacity 0 and a uniform input.
    """
    p0 = _check_probability(p0, "p0")
    p1 = _check_probability(p1, "p1")
    if abs(p0 + p1 - 1.0) <= DEGENERATE_ATOL:
        return CapacityResult(0.0, _uniform(2))
    if p1 > p0:
        swapped = capacity_bac(p1, p0)
        return CapacityResult(swapped.capacity, swapped.optimal_input[::-1].copy())
    if p0 == p1:
        return CapacityResult(1.0 - binary_entropy(p0), _uniform(2))
    if p0 == 1.0:
        return capacity_z(p1)
    k = k_factor(p0, p1)
    c = float(np.logaddexp2(0.0, k)) - p0 * k - binary_entropy(p0)
    alpha = bac_optimal_alpha(p0, p1)
    return CapacityResult(max(c, 0.0), np.array([1.0 - alpha, alpha]))


# Infimum of the Z-channel optimal input, approached as p1 -> 0. The bound
# 0.3768 that is often quoted only holds for p1 >= Z_ALPHA_QUOTED_MIN_P1.
Z_ALPHA_LOWER = float(np.exp(-1.0))
Z_ALPHA_QUOTED = 0.3768
Z_ALPHA_QUOTED_MIN_P1 = 0.16929573259254


def capacity_z(p1: float) -> CapacityResult:
    """Z-channel (input 0 always received correctly): log(1 + 2^(-H_b(p1)/p1))."""
    p1 = _check_probability(p1, "p1")
    if p1 == 0.0:
        raise DegenerateChannelError("Z-channel with p1 = 0 is useless")
    k = binary_entropy(p1) / p1
    c = float(np.logaddexp2(0.0, -k))
    alpha = _inv_one_plus_exp2(k) / p1
    # for tiny p1 the closed form cancels; allow for its rounding near 1/e
    assert Z_ALPHA_LOWER - 1e-6 < alpha <= 0.5 + 1e-12, alpha
    return CapacityResult(c, np.array([1.0 - alpha, alpha]))


def _relative_entropies(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    """D(W_i || q) in nats for every row i."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, w * (np.log(w) - np.log(q)), 0.0)
    return terms.sum(axis=1)


def blahut_arimoto(m: ChannelMatrix, tol: float = 1e-9, max_iter: int = 10_000) -> CapacityResult:
    """Capacity by alternating maximization, started from the uniform input.

    Stops when the gap between the upper bound max_i D(W_i||q) and the lower
    bound log sum_i r_i exp(D(W_i||q)) falls below ``tol`` bits.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    w = m.matrix
    r = _uniform(m.n_inputs)
    gap = np.inf
    for it in range(1, int(max_iter) + 1):
        d = _relative_entropies(w, r @ w)
        dmax = d.max()
        # log-sum-exp in nats, shifted by dmax
        z = r * np.exp(d - dmax)
        lower = dmax + np.log(z.sum())
        gap = (dmax - lower) / np.log(2)
        if gap < tol:
            return CapacityResult(max(lower / np.log(2), 0.0), r, it, "blahut-arimoto")
        r = z / z.sum()
    raise ConvergenceError(f"Blahut-Arimoto did not converge in {max_iter} iterations (gap {gap:.3e} bits)", gap)


def closed_form_capacity(m: ChannelMatrix, kind) -> CapacityResult | None:
    """Closed-form capacity for a classified channel, or None for General."""
    tag = kind.tag
    if tag is ChannelTag.Z:
        if kind.params["p1"] == 0.0:
            return CapacityResult(0.0, _uniform(2))
        return capacity_z(kind.params["p1"])
    if tag is ChannelTag.BSC:
        return capacity_bac(kind.params["p"], kind.params["p"])
    if tag is ChannelTag.BAC:
        return capacity_bac(kind.params["p0"], kind.params["p1"])
    if tag is ChannelTag.QARY:
        return capacity_qary_symmetric(kind.params["n"], kind.params["p"])
    if tag in (ChannelTag.STRONG, ChannelTag.WEAK):
        return capacity_symmetric(m, tol=max(kind.deviation, 1e-9))
    return None


__all__ = [
    "CapacityResult",
    "ConvergenceError",
    "DegenerateChannelError",
    "SymmetryError",
    "Z_ALPHA_LOWER",
    "Z_ALPHA_QUOTED",
    "Z_ALPHA_QUOTED_MIN_P1",
    "bac_optimal_alpha",
    "blahut_arimoto",
    "capacity_bac",
    "capacity_qary_symmetric",
    "capacity_symmetric",
    "capacity_z",
    "check_symmetric",
    "closed_form_capacity",
    "k_factor",
]
