import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import eta_band_prob_quad, eta_lmtc_quad, ramp_rap_gap

from pathspace import (
    Box,
    Coordinate,
    Horizon,
    PathSpaceError,
    ProcessEnsemble,
    StepPath,
    Tent,
    TruncatedPolynomial,
    simulate,
)
from pathspace.processes import (
    _band_counts,
    band_containment,
    band_prob,
    eta_band_probability,
    eta_lmtc_closed_form,
    fdc_test,
    fdd,
    fixed_jump_candidates,
    lmtc_profile,
    mcc_probe,
    mpcc_check,
    rap,
    rap_as_gap,
    rap_expectation,
    stationarity_test,
)


def test_simulation_is_seeded_and_thread_independent():
    a = simulate("random-walk", 50, seed=9)
    b = simulate("random-walk", 50, seed=9, parallel=4)
    c = simulate("random-walk", 50, seed=10)
    assert np.array_equal(a.knots, b.knots) and np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values[:, 0], c.values[:, 0]) or not np.array_equal(a.knots, c.knots)
    # path i does not depend on N
    d = simulate("random-walk", 20, seed=9)
    assert d.path(7) == a.path(7)


def test_seed_validation():
    with pytest.raises(PathSpaceError):
        simulate("eta", 5, seed=-1)
    with pytest.raises(PathSpaceError):
        simulate("eta", 5, seed=1.5)
    with pytest.raises(PathSpaceError):
        simulate("nope", 5, seed=1)


def test_values_on_matches_path_evaluation():
    ens = simulate("eta", 40, seed=3)
    ts = [0.0, 0.1, 0.37, 0.9, 2.0]
    V = ens.values_on(ts)
    for i in range(ens.N):
        p = ens.path(i)
        assert V[i, :, 0] == pytest.approx([p(t)[0] for t in ts], abs=1e-15)


def test_forced_omega():
    ens = simulate("eta", 3, seed=0, params={"omega": 0.25})
    assert ens.values_at(0.0)[:, 0].tolist() == [0.75] * 3
    with pytest.raises(PathSpaceError):
        lmtc_profile(ens, [2.0], (0.1, 0.9), mode="closed-form")


def test_band_containment_is_exact():
    ens = simulate("eta", 200, seed=4)
    flags = band_containment(ens, (0.0, 1.0), 1.0)
    assert flags.all()
    # narrower band: a path stays iff its ramp starts at or above a and tops out below b
    ts = np.linspace(0, 1, 2001)
    for i in range(20):
        p = ens.path(i)
        vals = np.array([p(t)[0] for t in ts] + [p.left_limit_at(p.breakpoints[1])[0]])
        grid_ok = bool(np.all((vals >= 0.25) & (vals <= 0.75)))
        assert band_containment(ens, (0.25, 0.75), 1.0)[i] == grid_ok
    assert band_prob(ens, (0.25, 0.75), 1.0).estimates["band_prob"] == 0.0


@given(tau=st.floats(0, 3), a=st.floats(0, 1), w=st.floats(0, 1))
def test_eta_band_probability_matches_quadrature(tau, a, w):
    b = min(a + w, 1.2)
    assert eta_band_probability(tau, a, b) == pytest.approx(eta_band_prob_quad(tau, a, b), abs=1e-8)


@pytest.mark.parametrize("T", [0.5, 2.0, 5.0, 20.0])
@pytest.mark.parametrize("band", [(0.1, 0.9), (0.25, 0.75), (0.6, 0.95)])
def test_lmtc_closed_form_matches_quadrature(T, band):
    assert eta_lmtc_closed_form(T, *band) == pytest.approx(eta_lmtc_quad(T, *band), abs=1e-8)


def test_lmtc_frozen_values():
    prof = lmtc_profile("eta", [2, 5, 10, 20], (0.1, 0.9)).estimates["profile"]
    assert prof == pytest.approx([0.95, 0.98, 0.99, 0.995], abs=1e-12)


def test_band_counts_match_pointwise_grid():
    ens = simulate("eta", 300, seed=5)
    h, n = 0.01, 300
    mids = (np.arange(n) + 0.5) * h
    V = ens.values_on(mids)[..., 0]
    direct = np.sum((V >= 0.1) & (V <= 0.9), axis=1)
    assert np.array_equal(_band_counts(ens, h, n, 0.1, 0.9), direct)
    steps = simulate("random-walk", 100, seed=5, params={"sigma": 0.3})
    V = steps.values_on(mids)[..., 0]
    direct = np.sum((V >= -0.2) & (V <= 0.4), axis=1)
    assert np.array_equal(_band_counts(steps, h, n, -0.2, 0.4), direct)


def test_mpcc_and_mcc():
    ens = simulate("constant", 10, seed=0, params={"c": 0.5})
    r = mpcc_check([ens], 0.1, 1.0, Box([0.0], [1.0]))
    assert r.passed and r.estimates["inf_prob"] == 1.0
    jumps = simulate("single-jump", 100, seed=1, params={"lo": 0.5, "hi": 0.6})
    m = mcc_probe([jumps], 0.1, 2.0, [0.1, 0.5, 1.5])
    assert m.estimates["exceedance"] == [0.0, 0.0, 1.0]
    assert (m.estimates["smallest_delta"], m.estimates["largest_delta"]) == (0.1, 0.5)
    with pytest.raises(PathSpaceError):
        mcc_probe([jumps], 0.1, 1.0, [1.0])


def test_fdc_on_shrinking_shifts():
    x = Coordinate(0, bound=2.0)
    limit = simulate("constant", 4, seed=0, params={"c": 0.0})
    seq = [simulate("deterministic-shift", 4, seed=0, params={"c": 1.0 / n}) for n in (1, 10, 100, 1000)]
    r = fdc_test(seq, limit, [x, Tent([0.0], 1.0)], [[0.0], [0.0, 1.0]], tol=0.05, window=2)
    assert r.passed
    assert not fdc_test(seq, limit, [x], [[1.0]], tol=0.005, window=2).passed
    assert fixed_jump_candidates(simulate("single-jump", 5, seed=0, params={"lo": 1.0, "hi": 1.0})) == [1.0]


def test_fdd_and_stationarity():
    ens = simulate("eta", 1000, seed=6)
    mu = fdd(ens, [0.0, 0.5])
    assert mu.is_tuple and mu.points.shape[1:] == (2, 1)
    r = stationarity_test(ens, [Coordinate(0, bound=2.0)], [0.0], [0.5], tol=0.05)
    assert not r.passed
    const = simulate("constant", 10, seed=0, params={"c": 0.3})
    assert stationarity_test(const, [Coordinate(0)], [0.0], [1.0, 2.0], tol=0.0).passed


def test_rap_is_reproducible():
    ens = simulate("random-walk", 30, seed=7)
    a, b = rap(ens, 5.0, seed=1), rap(ens, 5.0, seed=1)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.knots, b.knots)


@pytest.mark.parametrize("T", [0.5, 10.0, 100.0, 1000.0])
def test_rap_gap_on_ramp_matches_quadrature(T):
    ramp = simulate("ramp", 1, seed=0).path(0)
    f = TruncatedPolynomial((0.0, 1.0))
    assert rap_as_gap(ramp, f, T) == pytest.approx(ramp_rap_gap(T), abs=1e-12)


def test_rap_expectation_on_step_path():
    x = StepPath([0, 1.0, 3.0], [0.0, 1.0, 0.5])
    f = Tent([1.0], 1.0)
    # f(0) = 0, f(1) = 1, f(0.5) = 0.5
    assert rap_expectation(x, f, 4.0, 0.0) == pytest.approx((2.0 + 0.5) / 4.0)


def test_ensemble_from_paths_horizon_check():
    with pytest.raises(PathSpaceError):
        ProcessEnsemble.from_paths([StepPath([0], [0.0]), StepPath([0], [0.0], Horizon.interval(0, 1))])
