import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from subclass_kd.distill.losses import (
    aggregate_to_class,
    ce_value_grad,
    cross_entropy,
    kl_divergence,
    objective_value_grad,
    skd_loss,
    skd_value_grad,
    softmax_with_temperature,
    student_objective,
)
from subclass_kd.labelbits import ClassHierarchy

EXACT = 1e-12
logits = arrays(np.float64, st.integers(2, 8), elements=st.floats(-20, 20))
taus = st.floats(0.1, 20)


def test_softmax_examples():
    assert softmax_with_temperature([0.0, 0.0], 3.0) == pytest.approx([0.5, 0.5])
    assert softmax_with_temperature([math.log(4), 0.0], 1.0) == pytest.approx([0.8, 0.2], abs=1e-15)
    p = softmax_with_temperature([3.0, -1.0, 0.5], 1e4)
    assert np.max(np.abs(p - 1 / 3)) < 1e-3


def test_softmax_rejects_bad_temperature():
    with pytest.raises(ValueError):
        softmax_with_temperature([1.0, 2.0], 0.0)


@given(logits, taus, st.floats(-50, 50))
def test_softmax_shift_invariance(z, tau, c):
    a = softmax_with_temperature(z, tau)
    b = softmax_with_temperature(z + c, tau)
    assert np.max(np.abs(a - b)) <= EXACT
    assert abs(a.sum() - 1) <= EXACT


def test_cross_entropy_examples():
    assert cross_entropy([0, 1, 0], [0, 1, 0]) == 0.0
    assert cross_entropy([0.25] * 4, [0, 0, 1, 0]) == pytest.approx(math.log(4))
    assert cross_entropy([0.8, 0.2], [1, 0]) == pytest.approx(-math.log(0.8))
    with pytest.raises(ValueError):
        cross_entropy([0.5, 0.5], [0.5, 0.5])


def test_skd_loss_examples():
    assert skd_loss([1.0, -2.0, 0.3], [1.0, -2.0, 0.3], 5.0) == 0.0
    p = np.array([0.7310585786, 0.2689414214])
    expected = kl_divergence(p, p[::-1])
    assert skd_loss([1.0, 0.0], [0.0, 1.0], 1.0) == pytest.approx(expected, abs=1e-9)
    # written out: sum p log(p/q), two terms
    hand = 0.7310585786 * math.log(0.7310585786 / 0.2689414214) + 0.2689414214 * math.log(0.2689414214 / 0.7310585786)
    assert expected == pytest.approx(hand, abs=1e-9)


def test_skd_loss_tau_squared_scaling():
    t, s = [2.0, 0.0, -1.0], [0.0, 1.0, 0.5]
    assert skd_loss(t, s, 4.0) == pytest.approx(16 * skd_loss(t, s, 4.0, scale_kl=False))


def test_skd_loss_width_mismatch():
    with pytest.raises(ValueError):
        skd_loss([1.0, 2.0], [1.0, 2.0, 3.0], 1.0)


@given(logits, taus)
def test_skd_loss_zero_at_equality(z, tau):
    assert abs(skd_loss(z, z, tau)) <= EXACT


@given(st.integers(2, 6).flatmap(lambda n: st.tuples(*(arrays(np.float64, n, elements=st.floats(-20, 20)),) * 2)), taus)
def test_skd_loss_nonnegative(pair, tau):
    t, s = pair
    assert skd_loss(t, s, tau) >= 0.0


def test_student_objective_examples():
    assert student_objective(1.3, 2.7, 1.0) == 1.3
    assert student_objective(1.3, 2.7, 0.0) == 2.7
    assert student_objective(1.0, 2.0, 0.45) == pytest.approx(1.55, abs=1e-15)
    with pytest.raises(ValueError):
        student_objective(1.0, 1.0, 1.5)


@given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_student_objective_linear_in_lambda(ce, skd, l1, l2, t):
    lm = t * l1 + (1 - t) * l2
    lhs = student_objective(ce, skd, lm)
    rhs = t * student_objective(ce, skd, l1) + (1 - t) * student_objective(ce, skd, l2)
    assert abs(lhs - rhs) <= EXACT * max(1.0, ce, skd)


H3 = ClassHierarchy((("A", ("s1", "s2")), ("B", ("s3",))))


def test_aggregate_examples():
    assert aggregate_to_class([0.3, 0.2, 0.5], H3) == pytest.approx([0.5, 0.5])
    assert aggregate_to_class([0.0, 0.0, 1.0], H3).tolist() == [0.0, 1.0]
    h = ClassHierarchy((("A", ("a", "b", "c")), ("B", ("d",))))
    assert aggregate_to_class([0.25] * 4, h).tolist() == [0.75, 0.25]


@given(arrays(np.float64, (5, 3), elements=st.floats(0, 1)).filter(lambda a: np.all(a.sum(axis=1) > 1e-3)))
def test_aggregate_preserves_normalization(a):
    p = a / a.sum(axis=1, keepdims=True)
    c = aggregate_to_class(p, H3)
    assert np.max(np.abs(c.sum(axis=1) - 1)) <= EXACT


def test_batched_values_match_single_sample_losses():
    rng = np.random.default_rng(3)
    z, t = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
    y = np.array([0, 2, 1, 1])
    v, _ = ce_value_grad(z, y)
    single = np.mean([cross_entropy(softmax_with_temperature(zi), np.eye(3)[yi]) for zi, yi in zip(z, y)])
    assert v == pytest.approx(single, abs=1e-12)
    v, _ = skd_value_grad(t, z, 5.0)
    assert v == pytest.approx(np.mean([skd_loss(ti, zi, 5.0) for ti, zi in zip(t, z)]), abs=1e-12)


def test_objective_endpoints_skip_the_other_term():
    rng = np.random.default_rng(4)
    z = rng.standard_normal((3, 4))
    y = np.array([0, 1, 3])
    assert objective_value_grad(z, y, None, 5.0, 1.0)[0] == ce_value_grad(z, y)[0]
    t = rng.standard_normal((3, 4))
    v, g = objective_value_grad(z, y, t, 5.0, 0.0)
    v2, g2 = skd_value_grad(t, z, 5.0)
    assert v == v2 and np.array_equal(g, g2)
    with pytest.raises(ValueError):
        objective_value_grad(z, y, None, 5.0, 0.5)
