import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subclass_kd.capacity import (
    Z_ALPHA_LOWER,
    Z_ALPHA_QUOTED,
    Z_ALPHA_QUOTED_MIN_P1,
    ConvergenceError,
    DegenerateChannelError,
    SymmetryError,
    bac_optimal_alpha,
    blahut_arimoto,
    capacity_bac,
    capacity_qary_symmetric,
    capacity_symmetric,
    capacity_z,
    closed_form_capacity,
    k_factor,
)
from subclass_kd.entropy_channel import (
    ChannelMatrix,
    classify_channel,
    binary_entropy,
    entropy,
    make_bac,
    make_bsc,
    make_qary_symmetric,
    make_z,
    mutual_information,
)

# Independent optimum values, frozen from scipy bounded scalar / multi-start
# Nelder-Mead maximization of I(X;Y) written from scratch (not this package).
ORACLE_BINARY = {
    (0.9, 0.8): (0.397754346569, 0.4824445453),
    (1.0, 0.94): (0.836315446638, 0.4680083670),
    (0.6, 0.7): (0.066661218841, 0.5053501921),
}
RANDOM_4X4 = np.array(
    [[0.5, 0.2, 0.2, 0.1], [0.1, 0.6, 0.1, 0.2], [0.25, 0.25, 0.4, 0.1], [0.05, 0.15, 0.3, 0.5]]
)
RANDOM_4X4_CAPACITY = 0.319718519416
RANDOM_4X4_INPUT = [0.35054053, 0.26410654, 0.0, 0.38535293]


@pytest.mark.parametrize("n, p, expected", [(2, 1.0, 1.0), (4, 0.86, 1.1938664383), (2, 0.97, 0.805608)])
def test_qary_points(n, p, expected):
    assert capacity_qary_symmetric(n, p).capacity == pytest.approx(expected, abs=5e-7)


def test_qary_matches_uniform_input_information():
    m = make_qary_symmetric(4, 0.7)
    assert capacity_qary_symmetric(4, 0.7).capacity == pytest.approx(mutual_information([0.25] * 4, m), abs=1e-14)
    assert capacity_qary_symmetric(4, 0.7).capacity == pytest.approx(0.643220350553, abs=1e-11)


def test_capacity_symmetric_examples():
    assert capacity_symmetric(make_qary_symmetric(3, 0.8)).capacity == pytest.approx(
        capacity_qary_symmetric(3, 0.8).capacity, abs=1e-14
    )
    w = ChannelMatrix(np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]]))
    c = capacity_symmetric(w).capacity
    assert c == pytest.approx(math.log2(3) - entropy([0.5, 0.3, 0.2]), abs=1e-14)
    assert c == pytest.approx(blahut_arimoto(w).capacity, abs=1e-6)
    assert capacity_symmetric(ChannelMatrix(np.eye(5))).capacity == pytest.approx(math.log2(5))


def test_capacity_symmetric_names_offending_row():
    w = ChannelMatrix(np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.1, 0.1, 0.8]]))
    with pytest.raises(SymmetryError, match="row 2"):
        capacity_symmetric(w)


# Published four-decimal values; compared at the 5e-4 table tolerance.
TABLE_ATOL = 5e-4


@pytest.mark.parametrize("p0, p1, expected", [(1.0, 0.94, 0.3483), (0.99, 0.80, 0.8116), (0.94, 0.89, 0.2078)])
def test_k_factor_points(p0, p1, expected):
    assert k_factor(p0, p1) == pytest.approx(expected, abs=TABLE_ATOL)


def test_k_factor_degenerate():
    with pytest.raises(DegenerateChannelError):
        k_factor(0.5, 0.5)


@pytest.mark.parametrize("p0, p1, expected", [(1.0, 0.94, 0.4680), (0.99, 0.80, 0.4467)])
def test_bac_alpha_points(p0, p1, expected):
    assert bac_optimal_alpha(p0, p1) == pytest.approx(expected, abs=TABLE_ATOL)


@given(st.floats(0.01, 0.99).filter(lambda p: abs(p - 0.5) > 1e-6))
def test_bac_alpha_symmetric_is_half(p):
    assert bac_optimal_alpha(p, p) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("p0, p1, expected", [(1.0, 0.96, 0.8793), (0.94, 0.89, 0.5849), (0.5, 0.5, 0.0)])
def test_capacity_bac_points(p0, p1, expected):
    assert capacity_bac(p0, p1).capacity == pytest.approx(expected, abs=TABLE_ATOL)


@pytest.mark.parametrize("pair", sorted(ORACLE_BINARY))
def test_capacity_bac_against_frozen_optimizer(pair):
    cap, alpha = ORACLE_BINARY[pair]
    r = capacity_bac(*pair)
    assert r.capacity == pytest.approx(cap, abs=1e-9)
    assert r.alpha_star == pytest.approx(alpha, abs=1e-6)


def test_capacity_z_points():
    assert capacity_z(0.94).capacity == pytest.approx(0.8363, abs=TABLE_ATOL)
    r = capacity_z(1.0)
    assert r.capacity == pytest.approx(1.0) and r.alpha_star == pytest.approx(0.5)
    r = capacity_z(0.82)
    assert r.capacity == pytest.approx(0.6441, abs=TABLE_ATOL)
    assert r.alpha_star == pytest.approx(0.4392, abs=TABLE_ATOL)


def test_capacity_z_useless():
    with pytest.raises(DegenerateChannelError):
        capacity_z(0.0)


@given(st.floats(1e-6, 1.0))
def test_z_alpha_interval(p1):
    a = capacity_z(p1).alpha_star
    assert Z_ALPHA_LOWER < a <= 0.5


@given(st.floats(Z_ALPHA_QUOTED_MIN_P1 + 1e-9, 1.0))
def test_z_alpha_quoted_bound_above_crossover(p1):
    assert capacity_z(p1).alpha_star > Z_ALPHA_QUOTED


def test_z_alpha_quoted_bound_fails_below_crossover():
    # counterexample frozen from a 30-digit mpmath evaluation
    assert capacity_z(0.1).alpha_star == pytest.approx(0.372970834684384, abs=1e-12)
    assert capacity_z(1e-6).alpha_star == pytest.approx(math.exp(-1), abs=1e-6)


@given(st.floats(0.001, 1.0))
def test_z_is_bac_with_perfect_class0(p1):
    assert capacity_z(p1).capacity == capacity_bac(1.0, p1).capacity


@given(st.floats(0.0, 1.0))
def test_bsc_is_symmetric_bac(p):
    assert capacity_bac(p, p).capacity == 1.0 - binary_entropy(p)
    assert capacity_bac(p, p).capacity == pytest.approx(capacity_qary_symmetric(2, p).capacity, abs=1e-14)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_capacity_bac_bounds_and_swap(p0, p1):
    a, b = capacity_bac(p0, p1), capacity_bac(p1, p0)
    assert -1e-12 <= a.capacity <= 1 + 1e-12
    assert a.capacity == pytest.approx(b.capacity, abs=1e-12)
    assert a.optimal_input == pytest.approx(b.optimal_input[::-1], abs=1e-12)


@settings(max_examples=50)
@given(st.floats(0.02, 0.98), st.floats(0.02, 0.98))
def test_capacity_bac_optimal_input_achieves_capacity(p0, p1):
    r = capacity_bac(p0, p1)
    m = make_bac(p0, p1)
    assert mutual_information(r.optimal_input, m) == pytest.approx(r.capacity, abs=1e-10)
    for a in np.linspace(0, 1, 21):
        assert mutual_information([1 - a, a], m) <= r.capacity + 1e-12


def test_blahut_arimoto_examples():
    assert blahut_arimoto(make_bsc(0.5)).capacity == pytest.approx(0.0, abs=1e-12)
    r = blahut_arimoto(make_z(0.94))
    assert r.capacity == pytest.approx(0.836315446638, abs=1e-6)
    assert r.optimal_input == pytest.approx([0.532, 0.468], abs=5e-4)


def test_blahut_arimoto_random_4x4():
    r = blahut_arimoto(ChannelMatrix(RANDOM_4X4))
    assert 0 <= r.capacity <= 2
    assert r.capacity == pytest.approx(RANDOM_4X4_CAPACITY, abs=1e-6)
    assert r.optimal_input == pytest.approx(RANDOM_4X4_INPUT, abs=1e-4)


def test_blahut_arimoto_coarse_grid_never_beats_it():
    m = ChannelMatrix(RANDOM_4X4)
    c = blahut_arimoto(m).capacity
    step = 0.05
    grid = np.arange(0, 1 + 1e-9, step)
    best = 0.0
    for a in grid:
        for b in grid[grid <= 1 - a + 1e-9]:
            for d in grid[grid <= 1 - a - b + 1e-9]:
                best = max(best, mutual_information([a, b, d, max(1 - a - b - d, 0.0)], m))
    assert best <= c + 1e-12
    assert c - best < 5e-3


def test_blahut_arimoto_reports_non_convergence():
    with pytest.raises(ConvergenceError) as e:
        blahut_arimoto(make_bac(0.5, 0.45), max_iter=5)
    assert e.value.gap > 0


@settings(max_examples=40)
@given(st.integers(2, 5), st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_blahut_arimoto_is_a_maximum(n, k, seed):
    rng = np.random.default_rng(seed)
    m = ChannelMatrix(rng.dirichlet(np.ones(k), size=n))
    # nearly identical rows converge slowly, hence the generous iteration cap
    r = blahut_arimoto(m, max_iter=10**6)
    assert mutual_information(r.optimal_input, m) == pytest.approx(r.capacity, abs=1e-8)
    for _ in range(20):
        assert mutual_information(rng.dirichlet(np.ones(n)), m) <= r.capacity + 1e-9
    assert r.capacity <= math.log2(min(n, k)) + 1e-12


def test_closed_form_dispatch():
    assert closed_form_capacity(make_z(0.9), classify_channel(make_z(0.9))).method == "closed-form"
    general = ChannelMatrix(np.array([[0.2, 0.5, 0.3], [0.1, 0.1, 0.8], [0.6, 0.3, 0.1]]))
    assert closed_form_capacity(general, classify_channel(general)) is None
    assert blahut_arimoto(general).capacity == pytest.approx(0.404493660594, abs=1e-6)
