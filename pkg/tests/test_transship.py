import pytest

from rqlevels import transship as ts
from rqlevels.errors import ModelError, NoConvergence
from rqlevels.q1 import solve_q1
from rqlevels.rate_model import Policy, SystemSpec, constant_profile

SYM = ts.TransshipScenario(ts.StoreSpec(2, 1, 1.0), ts.StoreSpec(2, 1, 1.0), 1.0)
ASYM = ts.TransshipScenario(ts.StoreSpec(2, 2, 1.0), ts.StoreSpec(3, 1, 2.0), 1.0)


def test_store_invariants():
    with pytest.raises(ModelError):
        ts.StoreSpec(2, 0, 1.0)
    with pytest.raises(ModelError):
        ts.StoreSpec(2, 4, 1.0)
    with pytest.raises(ModelError):
        ts.StoreSpec(2, 1, 0.0)
    with pytest.raises(ModelError):
        ts.BetaPair(1.2, 0.0)


def test_effective_profiles():
    assert ts.effective_profile(ASYM, "a", 0.0).rates == (0.0, 1.0, 1.0, 1.0)
    assert ts.effective_profile(ASYM, "b", 0.25).rates == (0.0, 2.25, 2.25, 2.25, 2.25)
    top = ts.TransshipScenario(ts.StoreSpec(2, 3, 1.0), ts.StoreSpec(1, 1, 2.0), 1.0)
    assert ts.effective_profile(top, "a", 0.5).rates == (0.0, 1.0, 1.0, 2.0)


def test_direct_formula_matches_solver():
    for sc in (SYM, ASYM):
        for store in ("a", "b"):
            for beta in (0.0, 0.1, 0.6):
                via_solver = solve_q1(ts.store_system(sc, store, beta))[0]
                assert ts.stockout_fraction(sc, store, beta) == pytest.approx(via_solver, rel=1e-13)


def test_update_symmetry():
    new = ts.beta_update(SYM, ts.BetaPair(0.2, 0.2))
    assert new.beta_a == new.beta_b


def test_vanishing_peer_demand():
    sc = ts.TransshipScenario(ts.StoreSpec(2, 1, 1.0), ts.StoreSpec(2, 1, 1e-15), 1.0)
    alone = solve_q1(SystemSpec(Policy(2, 1, 1.0), constant_profile(1.0, 0, 3)))[0]
    for beta_b in (0.0, 0.5, 1.0):
        assert ts.beta_update(sc, ts.BetaPair(0.3, beta_b)).beta_a == pytest.approx(alone, rel=1e-12)


def test_short_lead_time_drives_beta_down():
    sc = ts.TransshipScenario(ts.StoreSpec(1, 1, 1.0), ts.StoreSpec(1, 1, 1.0), 1e-6)
    assert max(ts.beta_update(sc, ts.BetaPair(1.0, 1.0)).beta_a, 0) < 1e-10


def test_fixed_point_and_residual():
    sc = ts.TransshipScenario(ts.StoreSpec(0, 1, 1.0), ts.StoreSpec(0, 1, 1.0), 1.0)
    report = ts.iterate_fixed_point(sc)
    beta = report.beta
    # independent substitution through the direct formula
    assert abs(ts.stockout_fraction(sc, "a", beta.beta_b) - beta.beta_a) <= 1e-10
    assert abs(ts.stockout_fraction(sc, "b", beta.beta_a) - beta.beta_b) <= 1e-10
    assert abs(beta.beta_a - beta.beta_b) <= 1e-10
    # r = 0, c = 1: beta = tau (1 + beta) / (1 + tau (1 + beta)), so beta^2 + beta - 1 = 0 at tau = 1
    assert beta.beta_a == pytest.approx((5**0.5 - 1) / 2, abs=1e-9)


def test_multistart_agrees():
    for sc in (SYM, ASYM):
        low, high, gap = ts.multistart_fixed_point(sc)
        assert gap <= 1e-9
        assert low.residual <= 1e-10 and high.residual <= 1e-10


def test_iteration_budget():
    with pytest.raises(NoConvergence) as info:
        ts.iterate_fixed_point(ASYM, max_iterations=2)
    assert info.value.residual > 0


def test_store_distributions():
    beta = ts.solve_fixed_point(ASYM)
    da, db = ts.store_distributions(ASYM, beta)
    assert da.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    assert abs(da[0] - beta.beta_a) <= 1e-10 and abs(db[0] - beta.beta_b) <= 1e-10
    isolated = ts.store_distributions(ASYM, ts.BetaPair(0.0, 0.0))[0]
    assert isolated == solve_q1(SystemSpec(Policy(2, 1, 1.0), constant_profile(1.0, 0, 3)))
