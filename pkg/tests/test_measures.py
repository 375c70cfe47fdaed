import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathspace import (
    Ball,
    Box,
    Coordinate,
    DiscreteMeasure,
    PathSpaceError,
    TrivialMeasureError,
    concentrate,
    empirical_measure,
    expand,
    integral,
    portmanteau_check,
    pushforward,
    tightness_profile,
    weak_conv_test,
)

x = Coordinate(0, bound=10.0)


def test_duplicate_atoms_merge_in_first_appearance_order():
    mu = DiscreteMeasure([[2.0], [1.0], [2.0]], [0.25, 0.5, 0.25])
    assert mu.points[:, 0].tolist() == [2.0, 1.0]
    assert mu.weights.tolist() == [0.5, 0.5]
    assert mu.is_probability()
    with pytest.raises(ValueError):
        mu.weights[0] = 1.0


def test_weights_must_be_positive():
    with pytest.raises(PathSpaceError):
        DiscreteMeasure([[0.0]], [0.0])
    with pytest.raises(TrivialMeasureError):
        DiscreteMeasure(np.empty((0, 1)), [])


def test_integral_mass_and_pushforward():
    mu = DiscreteMeasure([[0.0], [1.0], [3.0]], [0.2, 0.3, 0.5])
    assert integral(mu, x) == pytest.approx(1.8)
    assert integral(mu, lambda p: p[0] ** 2) == pytest.approx(4.8)
    assert mu.mass(Box([0.5], [5.0])) == pytest.approx(0.8)
    nu = pushforward(mu, lambda p: min(p[0], 1.0))
    assert nu.n_atoms == 2 and nu.weights.tolist() == pytest.approx([0.2, 0.8])


def test_concentrate_and_expand():
    mu = DiscreteMeasure([[0.0], [1.0], [3.0]], [0.2, 0.3, 0.5])
    c = concentrate(mu, Box([0.0], [1.0]))
    assert c.metadata["dropped_mass"] == pytest.approx(0.5)
    e = expand(c)
    assert e.n_atoms == 2 and "dropped_mass" not in e.metadata
    with pytest.raises(TrivialMeasureError):
        concentrate(mu, Box([10.0], [11.0]))


def test_weak_conv_test_window():
    target = DiscreteMeasure.dirac([0.0])
    seq = [DiscreteMeasure.dirac([1.0 / n]) for n in (1, 2, 4, 8)]
    r = weak_conv_test(seq, target, [x], tol=0.2, window=1)
    assert r.passed
    assert r.final_gaps.tolist() == [0.125]
    assert not weak_conv_test(seq, target, [x], tol=0.2, window=2).passed
    assert len(list(r.rows())) == 4
    with pytest.raises(PathSpaceError, match="window"):
        weak_conv_test(seq, target, [x], tol=0.2, window=None)
    with pytest.raises(PathSpaceError, match="window"):
        weak_conv_test(seq, target, [x], tol=0.2, window=5)


def test_portmanteau_on_converging_diracs():
    target = DiscreteMeasure.dirac([0.0])
    seq = [DiscreteMeasure.dirac([1.0 / n]) for n in range(1, 20)]
    closed = Box([-0.01], [0.01])
    opened = Ball([0.0], 0.5, closed=False)
    out = portmanteau_check(seq, target, [closed], [opened], window=5)
    # mass leaves the closed set in the limit only from outside, so limsup <= target holds
    assert out["passed"]
    bad = portmanteau_check(seq, target, [], [Ball([0.0], 1e-3, closed=False)], window=5)
    assert not bad["passed"] and bad["violations"]


def test_tightness_profile():
    fam = [DiscreteMeasure([[0.0], [5.0]], [0.9, 0.1]), DiscreteMeasure([[1.0], [2.0]], [0.5, 0.5])]
    prof = tightness_profile(fam, [Box([-1.0], [1.5]), Box([-1.0], [10.0])])
    assert prof.tolist() == pytest.approx([0.5, 0.0])
    with pytest.raises(PathSpaceError, match="nested"):
        tightness_profile(fam, [Box([-1.0], [10.0]), Box([-1.0], [1.0])])


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30))
def test_empirical_measure_is_probability(xs):
    mu = empirical_measure(np.array(xs)[:, None])
    assert mu.is_probability(1e-12)
    assert integral(mu, x) == pytest.approx(np.mean(xs), abs=1e-12)
