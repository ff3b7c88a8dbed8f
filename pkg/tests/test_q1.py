import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import constant_q1, q1_system
from rqlevels import q1
from rqlevels.errors import ModelError, NotQ1
from rqlevels.rate_model import Policy, SystemSpec, backlog_transship_profile, constant_profile


def test_one_order_system():
    spec = constant_q1(1.0, 0, 1.0)
    sol = q1.embedded_solution_q1(spec, scale=2.0)
    assert sol.bar_y() == 2.0 and sol.hat_y(0) == 2.0
    w = q1.weights_q1(spec, scale=2.0).weights
    assert w == {0: 2.0, 1: 2.0}
    dist = q1.solve_q1(spec)
    assert dist.as_dict() == {0: 0.5, 1: 0.5}


def test_unit_rates_constants():
    sol = q1.embedded_solution_q1(constant_q1(1.0, 2, 1.0))
    assert sol.bar_y() == 1.0
    assert sol.hat_y(2) == 1.0 and sol.hat_y(1) == 1.0
    assert sol.y(2) == 1.0


def test_constants_ignore_pending_times():
    spec = q1_system([0.7, 1.9, 1.1], 2, 1.3)
    sol = q1.embedded_solution_q1(spec)
    assert sol.hat_y(1, (0.1, 1.3)) == sol.hat_y(1, (0.9, 1.3))
    assert sol.y(2, (0.2,)) == sol.y(2, (0.8,))


def test_product_form_constants_non_constant_rates():
    rates = [0.7, 1.9, 1.1, 2.3]  # levels 1..4, r = 3
    spec = q1_system(rates, 3, 0.8)
    sol = q1.embedded_solution_q1(spec)
    lam = dict(zip(range(1, 5), rates))
    assert sol.bar_y() == pytest.approx(1 / (lam[1] * lam[2] * lam[3]))
    assert sol.hat_y(3) == pytest.approx(1 / (lam[1] * lam[2] * lam[3]))
    assert sol.hat_y(1) == pytest.approx(1 / lam[1])
    assert sol.hat_y(0) == 1.0
    assert sol.y(3) == pytest.approx(1 / (lam[1] * lam[2]))
    assert sol.y(1) == 1.0


def test_unit_rate_weights_are_inverse_factorials():
    w = q1.weights_q1(constant_q1(1.0, 3, 1.0)).weights
    ratios = [w[l] * math.factorial(4 - l) for l in range(5)]
    assert np.allclose(ratios, ratios[0], rtol=1e-14)


@pytest.mark.parametrize("lam,r,tau", [(1.0, 3, 1.0), (2.0, 5, 0.6), (0.4, 2, 5.0), (3.0, 0, 0.1)])
def test_constant_rate_is_truncated_poisson(lam, r, tau):
    dist = q1.solve_q1(constant_q1(lam, r, tau))
    k = np.arange(r + 2)
    pmf = stats.poisson.pmf(k, tau * lam)
    expected = pmf / pmf.sum()
    got = np.array([dist[r + 1 - j] for j in k])
    assert np.max(np.abs(got - expected)) <= 1e-12


def test_short_lead_time_concentrates_at_top():
    dist = q1.solve_q1(q1_system([1.0, 2.0, 0.5], 2, 1e-9))
    assert dist[3] == pytest.approx(1.0, abs=1e-8)


def test_three_routes_agree():
    spec = SystemSpec(Policy(2, 1, 1.2), backlog_transship_profile(1.0, 0.6, 2, -2, 3))
    direct = q1.solve_q1(spec)
    by_weights = q1.weights_q1(spec).distribution()
    by_integration = q1.weights_q1_by_integration(spec, q1.embedded_solution_q1(spec)).distribution()
    assert direct.total_variation(by_weights) < 1e-14
    assert direct.total_variation(by_integration) < 1e-10


def test_not_q1_rejected():
    spec = SystemSpec(Policy(2, 2, 1.0), constant_profile(1.0, 0, 4))
    for fn in (q1.solve_q1, q1.weights_q1, q1.embedded_solution_q1):
        with pytest.raises(NotQ1):
            fn(spec)


def test_residuals_vanish_for_product_form():
    spec = constant_q1(1.0, 3, 1.0)
    vectors = q1.random_time_vectors(spec, 100, seed=3)
    sol = q1.embedded_solution_q1(spec)
    table = q1.equilibrium_residuals_q1(spec, sol, vectors)
    assert set(table) == {"0A", "0B", "0C", "2C", "3C", "2B", "3B", "4B"}
    assert max(table.values()) <= 1e-8


def test_single_order_residual_is_exactly_zero():
    spec = constant_q1(1.3, 0, 0.7)
    table = q1.equilibrium_residuals_q1(spec, q1.embedded_solution_q1(spec), [(0.3,)])
    assert set(table) == {"0A", "0B"}
    assert max(table.values()) == 0.0


@pytest.mark.parametrize("kind,level", [("arrival_top", None), ("placement", 2), ("arrival", 3), ("placement", 0)])
def test_perturbed_constants_fail_the_residual(kind, level):
    spec = constant_q1(1.0, 3, 1.0)
    vectors = q1.random_time_vectors(spec, 20, seed=5)
    bad = q1.embedded_solution_q1(spec).perturbed(kind, level, 1.1)
    assert q1.equilibrium_residual_q1(spec, bad, vectors) > 1e-3


def test_time_vectors_must_be_sorted():
    spec = constant_q1(1.0, 1, 1.0)
    with pytest.raises(ModelError):
        q1.equilibrium_residual_q1(spec, q1.embedded_solution_q1(spec), [(0.5, 0.2)])


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 5),
    st.floats(0.1, 3.0),
    st.lists(st.floats(0.2, 5.0), min_size=7, max_size=7),
    st.floats(0.1, 10.0),
)
def test_positive_and_time_rescaling(r, tau, pool, c):
    rates = pool[: r + 1]
    dist = q1.solve_q1(q1_system(rates, r, tau))
    assert np.all(dist.probabilities > 0)
    # only the products tau * lambda matter
    scaled = q1.solve_q1(q1_system([x * c for x in rates], r, tau / c))
    assert dist.total_variation(scaled) < 1e-12
