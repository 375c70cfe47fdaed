import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from conftest import random_step_path
from oracles import brute_force_w_prime

from pathspace import Horizon, PathSpaceError, StepPath, eta_path, indicator
from pathspace.skorokhod import (
    ModulusTransformer,
    SkoOptions,
    candidate_time_changes,
    modulus_w_prime,
    sko_dist,
    sup_band_dist,
)

I2 = Horizon.interval(0.0, 2.0)


def test_interval_shift_matches_closed_form():
    x = StepPath([0, 1.0], [0, 1], I2)
    y = StepPath([0, 1.1], [0, 1], I2)
    r = sko_dist(x, y)
    # λ(1.1) = 1 on [0, 2]: slopes 1/1.1 and 1/0.9
    assert r.value == pytest.approx(math.log(1 / 0.9), abs=1e-15)
    assert r.certified_lower <= r.value
    assert r.witness(1.1) == pytest.approx(1.0)


def test_halfline_shift_and_asymmetry():
    assert sko_dist(indicator(1.0), indicator(1.1)).value == pytest.approx(math.log(1.1), abs=1e-15)
    d12 = sko_dist(indicator(1.0), indicator(2.0)).value
    d21 = sko_dist(indicator(2.0), indicator(1.0)).value
    # x∘λ jumping at s costs max(|ln s|, e^{-min(s, 2)}) for (x, y); the grid
    # candidate s = 1.25 gives e^{-1.25}. For (y, x) every s costs at least e^{-1}.
    assert d21 == pytest.approx(math.exp(-1), abs=1e-15)
    assert d12 == pytest.approx(math.exp(-1.25), abs=1e-15)
    assert d12 < d21


def test_identity_distance_is_zero_and_capped():
    x = StepPath([0, 0.5], [0.0, 10.0], I2)
    assert sko_dist(x, x).value == 0.0
    y = StepPath([0], [5.0], I2)
    assert sko_dist(x, y).value == 1.0


def test_sup_band_dist():
    x = StepPath([0, 1.0], [0, 1], I2)
    y = StepPath([0, 1.5], [0, 0.25], I2)
    assert sup_band_dist(x, y, 0.0, 0.9) == 0.0
    assert sup_band_dist(x, y, 0.0, 2.0) == 1.0
    assert sup_band_dist(x, y, 1.6, 2.0) == 0.75


def test_candidates_are_inverse_symmetric():
    x = random_step_path(np.random.default_rng(1), horizon=I2, t_hi=2.0)
    y = random_step_path(np.random.default_rng(2), horizon=I2, t_hi=2.0)
    a = {(tuple(l.knots), tuple(l.images)) for l in candidate_time_changes(x, y)}
    b = {(tuple(l.images), tuple(l.knots)) for l in candidate_time_changes(y, x)}
    assert a == b


def test_sko_result_record():
    d = sko_dist(indicator(1.0), indicator(1.1)).to_dict()
    assert set(d) == {"value", "witness_knots", "witness_images", "witness_tail_slope", "certified_lower",
                      "candidates_evaluated", "horizon"}


def test_sko_dist_rejects_bad_input():
    with pytest.raises(PathSpaceError):
        sko_dist(eta_path(0.5), indicator(1.0))
    with pytest.raises(PathSpaceError):
        SkoOptions(matching_depth=0)


def test_w_prime_simple_values():
    x = StepPath([0, 1.0], [0.0, 1.0])
    assert modulus_w_prime(x, 0.5, 2.0) == 0.0
    # two jumps 0.2 apart cannot be separated when δ = 0.5
    y = StepPath([0, 1.0, 1.2], [0.0, 1.0, 0.5])
    assert modulus_w_prime(y, 0.5, 2.0) == 0.5
    assert modulus_w_prime(y, 0.1, 2.0) == 0.0


def test_w_prime_needs_interior_boundaries():
    x = StepPath([0, 0.5, 1.5, 2.3], [0.0, 0.5, 1.0, 0.0])
    assert modulus_w_prime(x, 1.0, 4.0) == 0.5
    assert brute_force_w_prime(x, 1.0, 4.0) == 0.5
    assert brute_force_w_prime(x, 1.0, 4.0, interior=False) == 1.0


def test_w_prime_errors():
    x = StepPath([0, 1.0], [0.0, 1.0])
    with pytest.raises(PathSpaceError, match="delta < T"):
        modulus_w_prime(x, 2.0, 2.0)
    with pytest.raises(PathSpaceError):
        modulus_w_prime(eta_path(0.5), 0.1, 1.0)


def test_modulus_transformer():
    paths = [StepPath([0, 1.0], [0.0, 1.0]), StepPath([0, 1.0, 1.2], [0.0, 1.0, 0.5])]
    tr = ModulusTransformer(deltas=(0.1, 0.5), T=2.0)
    W = tr.fit_transform(paths)
    assert W.shape == (2, 2)
    assert W[1].tolist() == [0.0, 0.5]
    assert clone(tr).get_params()["deltas"] == (0.1, 0.5)


grid = st.lists(st.integers(1, 24).map(lambda k: k / 10), max_size=6, unique=True).map(sorted)


@given(ts=grid, vals=st.lists(st.integers(0, 3), min_size=7, max_size=7),
       delta=st.sampled_from([0.1, 0.2, 0.3, 0.5]))
def test_w_prime_matches_brute_force_on_ties(ts, vals, delta):
    # grid-aligned jump times make the gap constraint bind exactly
    x = StepPath([0.0, *ts], np.array(vals[: len(ts) + 1], dtype=float))
    assert modulus_w_prime(x, delta, 2.0) == brute_force_w_prime(x, delta, 2.0)


@given(seed=st.integers(0, 10_000))
def test_w_prime_monotone_in_delta(seed):
    x = random_step_path(np.random.default_rng(seed))
    w = [modulus_w_prime(x, d, 2.0) for d in (0.05, 0.2, 0.6, 1.2)]
    assert w == sorted(w)


@given(seed=st.integers(0, 10_000))
def test_interval_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    h = Horizon.interval(0.0, 3.0)
    x, y, z = (random_step_path(rng, 4, t_hi=3.0, horizon=h) for _ in range(3))
    dxy = sko_dist(x, y).value
    assert abs(dxy - sko_dist(y, x).value) <= 1e-9
    assert sko_dist(x, z).value <= dxy + sko_dist(y, z).value + 2e-9
    assert sko_dist(x, y).certified_lower <= dxy + 1e-12
