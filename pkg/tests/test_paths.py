import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathspace import (
    Horizon,
    HorizonError,
    PathSpaceError,
    PiecewiseLinearPath,
    StepPath,
    TimeChange,
    advance,
    compose_time_change,
    eta_path,
    indicator,
    jump_times,
    left_limit,
    restrict,
    restrict_extend,
    time_change_norm,
)


def test_step_path_is_right_continuous_with_left_limits():
    x = StepPath([0, 1, 2], [0.0, 1.0, 3.0])
    assert x(0.999)[0] == 0.0
    assert x(1.0)[0] == 1.0
    assert left_limit(x, 1.0)[0] == 0.0
    assert left_limit(x, 2.0)[0] == 1.0
    assert x(50.0)[0] == 3.0
    assert jump_times(x) == [1.0, 2.0]


def test_step_path_validation():
    with pytest.raises(PathSpaceError, match="strictly increasing"):
        StepPath([0, 1, 1], [0, 1, 2])
    with pytest.raises(PathSpaceError, match="horizon start"):
        StepPath([0.5, 1], [0, 1])
    with pytest.raises(PathSpaceError, match="beyond horizon end"):
        StepPath([0, 3], [0, 1], Horizon.interval(0, 2))
    with pytest.raises(HorizonError):
        StepPath([0, 1], [0, 1], Horizon.interval(0, 2)).value_at(2.5)


def test_piecewise_linear_path_values():
    x = PiecewiseLinearPath([0.0, 1.0], [0.0, 5.0], [0.0, 2.0], tail_slope=[-1.0])
    assert x(0.5)[0] == pytest.approx(1.0)
    assert left_limit(x, 1.0)[0] == 2.0
    assert x(1.0)[0] == 5.0
    assert x(3.0)[0] == pytest.approx(3.0)
    assert jump_times(x) == [1.0]


def test_eta_path_shape():
    x = eta_path(0.4)
    assert x(0.0)[0] == pytest.approx(0.6)
    assert x(0.3)[0] == pytest.approx(0.9)
    assert left_limit(x, 0.4)[0] == pytest.approx(1.0)
    assert x(0.4)[0] == 0.5
    assert x(7.0)[0] == 0.5
    with pytest.raises(PathSpaceError):
        eta_path(1.0)


def test_time_change_norm_and_inverse():
    lam = TimeChange([0, 1], [0, 2])
    assert lam.tail_slope == 2.0
    assert time_change_norm(lam) == pytest.approx(math.log(2))
    inv = lam.inverse()
    assert inv(lam(0.7)) == pytest.approx(0.7)
    assert time_change_norm(inv) == pytest.approx(time_change_norm(lam))
    with pytest.raises(PathSpaceError):
        TimeChange([0, 1], [0, 1], Horizon.interval(0, 2))


def test_compose_moves_breakpoints_to_preimages():
    x = indicator(1.0)
    lam = TimeChange([0.0, 2.0], [0.0, 1.0], tail_slope=1.0)
    y = compose_time_change(x, lam)
    assert y.breakpoints.tolist() == [0.0, 2.0]


def test_restrict_and_extend_and_advance():
    x = StepPath([0, 1, 2, 3], [0.0, 1.0, 2.0, 3.0])
    r = restrict(x, 0.5, 2.5)
    assert r.breakpoints.tolist() == [0.5, 1.0, 2.0]
    assert r.values[:, 0].tolist() == [0.0, 1.0, 2.0]
    e = restrict_extend(x, 1.5)
    assert e.horizon == Horizon.interval(0, 2.5)
    assert e(2.5)[0] == 1.0
    a = advance(x, 1.5)
    assert a.breakpoints.tolist() == [0.0, 0.5, 1.5]
    assert a(0)[0] == 1.0
    with pytest.raises(HorizonError):
        restrict_extend(x, 0.0)


times = st.lists(st.floats(0.01, 5.0), min_size=1, max_size=5, unique=True).map(sorted)


@given(ks=times, ims=times)
def test_inverse_of_compose_is_identity(ks, ims):
    n = min(len(ks), len(ims))
    lam = TimeChange([0.0, *ks[:n]], [0.0, *ims[:n]])
    mu = lam.compose(lam.inverse())
    for t in (0.0, 0.3, 1.7, 4.2, 9.0):
        assert mu(t) == pytest.approx(t, rel=1e-9, abs=1e-9)
    assert time_change_norm(lam.inverse()) == pytest.approx(time_change_norm(lam))


# dyadic times keep tau + t exact, so breakpoint ties are decided the same way
@given(tau=st.integers(0, 32).map(lambda k: k / 8), t=st.integers(0, 32).map(lambda k: k / 8))
def test_advance_shifts_values(tau, t):
    x = StepPath([0, 0.5, 1.5, 3.0], [0.0, 1.0, -1.0, 2.0])
    assert np.array_equal(advance(x, tau)(t), x(tau + t))
