import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from pathspace import (
    ONE,
    BlackBox,
    Box,
    DiscreteMeasure,
    FunctionFamily,
    NotConstructiveError,
    PathSpaceError,
    SeparationError,
    StepPath,
    Tent,
    TrivialMeasureError,
    TupleFunction,
    build_base,
    declare_limit,
    embed,
    integral,
    replica_function,
    replica_measure,
    replica_process,
    rho_family,
    rho_hat,
    simulate,
    tent_family,
    variant_map,
)
from pathspace.replication import ReplicationBase

REGION = Box([0.0], [1.0])
FAM = tent_family([0.0, 0.5, 1.0], [1.0, 4.0])
SAMPLE = np.linspace(0, 1, 11)[:, None]


@pytest.fixture
def base():
    return build_base(REGION, FAM, [0.5], SAMPLE)


def test_base_validation():
    with pytest.raises(PathSpaceError, match="constant function 1"):
        build_base(REGION, FunctionFamily([Tent([0.0], 1.0)]), [0.5], SAMPLE)
    with pytest.raises(PathSpaceError, match="anchor"):
        build_base(REGION, FAM, [2.0], SAMPLE)
    with pytest.raises(PathSpaceError, match="outside the region"):
        build_base(REGION, FAM, [0.5], [[0.0], [3.0]])
    with pytest.raises(SeparationError) as err:
        build_base(REGION, FunctionFamily([ONE, Tent([0.5], 1.0)]), [0.5], [[0.25], [0.75]])
    assert err.value.witness is not None


def test_sklearn_protocol(base):
    est = clone(base)
    assert not hasattr(est, "sample_cloud_")
    V = est.fit(SAMPLE).transform([[0.5]])
    assert V.shape == (1, len(FAM)) and V[0, 0] == 1.0
    assert set(est.get_params()) == {"family", "region", "anchor", "tol", "membership_tol"}
    with pytest.raises(Exception):
        ReplicationBase(FAM, REGION, [0.5]).transform([[0.5]])


def test_embed_and_declared_limits(base):
    p = embed(base, [0.5])
    assert p.provenance == "anchor-image" and p.verified and p.depth == len(FAM)
    q = embed(base, [0.2])
    assert q.provenance == "image-of"
    lim = declare_limit(base, q.vector)
    assert not lim.verified and lim.source is None
    assert rho_hat(base, p, lim) == pytest.approx(rho_family(FAM, [0.5], [0.2]), abs=1e-15)
    with pytest.raises(PathSpaceError):
        declare_limit(base, [0.0])


def test_replica_function_requires_construction(base):
    f = FAM[1] * FAM[2] + 0.5 * FAM[3]
    rf = replica_function(base, f)
    assert rf(embed(base, [0.3])) == pytest.approx(f([0.3]), abs=1e-15)
    with pytest.raises(NotConstructiveError):
        replica_function(base, BlackBox(np.sin, 1.0))
    with pytest.raises(NotConstructiveError):
        replica_function(base, Tent([0.2], 3.0))


def test_replica_measure_drops_outside_mass(base):
    mu = DiscreteMeasure([[0.2], [0.9], [1.5]], [0.25, 0.25, 0.5])
    bar = replica_measure(base, mu)
    assert bar.metadata["dropped_mass"] == 0.5
    assert bar.total_mass() == 0.5
    with pytest.raises(TrivialMeasureError):
        replica_measure(base, DiscreteMeasure([[3.0]], [1.0]))


def test_tuple_replica_measure(base):
    t = TupleFunction([FAM[1], FAM[4]], arity=2)
    mu = DiscreteMeasure([[[0.1], [0.6]], [[0.3], [2.0]], [[0.8], [0.8]]], [0.2, 0.3, 0.5])
    bar = replica_measure(base, mu)
    assert bar.n_atoms == 2 and bar.metadata["dropped_mass"] == pytest.approx(0.3)
    keep = np.array([True, False, True])
    lhs = float(np.dot(mu.weights[keep], t.values(mu.points[keep])))
    assert integral(bar, replica_function(base, t)) == pytest.approx(lhs, abs=1e-15)


def test_replica_process_uses_anchor_off_region(base):
    x = StepPath([0, 1.0, 2.0], [0.3, 5.0, 0.9])
    ens = simulate("custom-paths", 0, seed=0, paths=[x])
    out = replica_process(base, ens)
    y = out.path(0)
    assert np.array_equal(y.values[0], FAM.values([[0.3]])[0])
    assert np.array_equal(y.values[1], base.anchor_image_)
    assert out.params["replaced_values"] == 1
    eta = simulate("eta", 3, seed=0)
    with pytest.raises(PathSpaceError, match="sample times"):
        replica_process(base, eta)
    assert replica_process(base, eta, times=[0.0, 0.5, 1.0]).N == 3


def test_variant_map():
    g = variant_map(lambda v: 2.0, REGION, -1.0)
    assert g([0.5]) == 2.0 and g([3.0]) == -1.0
    assert variant_map(lambda v: 2.0, None, -1.0)([0.5]) == -1.0


@given(a=st.floats(-0.5, 1.5), b=st.floats(-0.5, 1.5))
def test_embedding_is_rho_isometry(a, b):
    base = build_base(REGION, FAM, [0.5], SAMPLE)
    assert rho_hat(base, embed(base, [a]), embed(base, [b])) == rho_family(FAM, [a], [b])
