"""Replication bases: embedding a state region into a truncated sequence space.

A base is a region ``E0``, a finite family ``F`` containing the constant 1,
and an anchor ``x0`` in ``E0``. Points map to ``(f_1(x), ..., f_m(x))``; the
closure of the image of ``E0`` is represented by the embedded reference
sample plus a membership tolerance, never materialized.

:class:`ReplicationBase` follows the scikit-learn estimator protocol: ``fit``
on a reference sample validates the base, ``transform`` embeds points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import NotConstructiveError, PathSpaceError, SeparationError, TrivialMeasureError
from .families import (
    BoundedFunction,
    Constant,
    FunctionFamily,
    Product,
    Scaled,
    Sum,
    TupleFunction,
    separates_points,
)
from .measures import DiscreteMeasure
from .paths import StepPath
from .states import as_point, as_points

__all__ = [
    "EmbeddedPoint",
    "ReplicationBase",
    "ReplicaFunction",
    "build_base",
    "embed",
    "declare_limit",
    "rho_hat",
    "variant_map",
    "replica_function",
    "replica_measure",
    "replica_process",
]

PROVENANCES = ("image-of", "anchor-image", "declared-limit")


@dataclass(frozen=True)
class EmbeddedPoint:
    """A point of the embedded space, with where it came from.

    ``source`` is the original state for images; declared limits have none
    and are flagged unverified.
    """

    vector: np.ndarray
    provenance: str = "image-of"
    source: np.ndarray | None = None

    @property
    def verified(self):
        return self.provenance != "declared-limit"

    @property
    def depth(self):
        return len(self.vector)


class ReplicationBase(TransformerMixin, BaseEstimator):
    """Desk-scale replication base ``(E0, F, x0)``.

    Parameters
    ----------
    family : FunctionFamily
        Must contain the constant function 1.
    region : Region
        The set ``E0``.
    anchor : array-like
        A point of ``E0``; replica processes send off-region values here.
    tol : float
        Separation tolerance for the reference sample.
    membership_tol : float
        Default distance (in ``rho_hat``) to the embedded cloud within which
        a point counts as lying in the closure of the embedded region.

    Attributes
    ----------
    sample_ : ndarray (n, dim)
        Reference sample after validation.
    sample_cloud_ : ndarray (n, m)
        Its embedding.
    anchor_image_ : ndarray (m,)
    """

    def __init__(self, family=None, region=None, anchor=None, tol=1e-12, membership_tol=1e-9):
        self.family = family
        self.region = region
        self.anchor = anchor
        self.tol = tol
        self.membership_tol = membership_tol

    def _validate_params(self):
        if not isinstance(self.family, FunctionFamily):
            raise PathSpaceError("family must be a FunctionFamily")
        if not self.family.contains_one:
            raise PathSpaceError("family must contain the constant function 1")
        if self.region is None:
            raise PathSpaceError("region is required")
        if self.anchor is None:
            raise PathSpaceError("anchor is required")
        anchor = as_point(self.anchor)
        if anchor not in self.region:
            raise PathSpaceError(f"anchor {anchor.tolist()} lies outside the region {self.region.description}")
        return anchor

    def fit(self, X, y=None):
        """Validate the base against a reference sample of ``E0``."""
        anchor = self._validate_params()
        S = as_points(X)
        outside = ~self.region.contains(S)
        if np.any(outside):
            i = int(np.nonzero(outside)[0][0])
            raise PathSpaceError(f"reference sample point {i} ({S[i].tolist()}) lies outside the region")
        sep = separates_points(self.family, S, tol=self.tol)
        if not sep.separated:
            x, z = sep.witness
            raise SeparationError(
                f"family does not separate {x.tolist()} and {z.tolist()}", witness=sep.witness
            )
        self.sample_ = S
        self.sample_cloud_ = self.family.values(S)
        self.anchor_ = anchor
        self.anchor_image_ = self.family.values(anchor[None, :])[0]
        self.depth_ = len(self.family)
        return self

    def transform(self, X):
        check_is_fitted(self, "sample_cloud_")
        return self.family.values(as_points(X))

    def rho(self, P, Q):
        """Broadcasting ρ on embedded coordinates (last axis)."""
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        if P.shape[-1] != len(self.family) or Q.shape[-1] != len(self.family):
            raise PathSpaceError(f"embedded depth mismatch: expected {len(self.family)}")
        return np.minimum(np.abs(P - Q), 1.0) @ self.family.weights

    def cloud_distance(self, V):
        """ρ distance of each embedded row of ``V`` to the reference cloud."""
        check_is_fitted(self, "sample_cloud_")
        V = np.atleast_2d(np.asarray(V, dtype=float))
        return self.rho(V[:, None, :], self.sample_cloud_[None, :, :]).min(axis=1)

    def to_record(self):
        rec = {
            "region": self.region.to_record(),
            "family": self.family.to_records(),
            "anchor": as_point(self.anchor).tolist(),
            "tol": self.tol,
            "membership_tol": self.membership_tol,
        }
        if hasattr(self, "sample_"):
            rec["reference_sample"] = self.sample_.tolist()
        return rec


def build_base(region, family, anchor, reference_sample, tol=1e-12, membership_tol=1e-9):
    """Construct and validate a :class:`ReplicationBase`."""
    return ReplicationBase(family, region, anchor, tol, membership_tol).fit(reference_sample)


def embed(base, x):
    """``(f_1(x), ..., f_m(x))``; ``x`` need not lie in ``E0``."""
    x = as_point(x)
    v = base.family.values(x[None, :])[0]
    bounds = base.family.bounds
    if np.any(np.abs(v) > bounds + 1e-12):
        raise PathSpaceError("embedded component exceeds its declared bound")
    prov = "anchor-image" if hasattr(base, "anchor_") and np.array_equal(x, base.anchor_) else "image-of"
    return EmbeddedPoint(v, prov, x)


def declare_limit(base, vector):
    """An embedded point given only by coordinates (e.g. a limit of images)."""
    v = np.asarray(vector, dtype=float).ravel()
    if len(v) != len(base.family):
        raise PathSpaceError(f"declared limit has depth {len(v)}, base has {len(base.family)}")
    if np.any(np.abs(v) > base.family.bounds + 1e-12):
        raise PathSpaceError("declared limit exceeds a declared bound")
    return EmbeddedPoint(v, "declared-limit", None)


def _vec(p):
    return p.vector if isinstance(p, EmbeddedPoint) else np.asarray(p, dtype=float)


def rho_hat(base, p, q):
    """``Σ_j 2^{-j+1} (|p_j - q_j| ∧ 1)`` on embedded coordinates."""
    P, Q = _vec(p), _vec(q)
    if P.shape != Q.shape:
        raise PathSpaceError(f"depth mismatch: {P.shape} vs {Q.shape}")
    return float(base.rho(P, Q))


def variant_map(f, domain, default):
    """``x -> f(x)`` on ``domain`` and ``default`` elsewhere.

    ``domain=None`` stands for the empty set.
    """

    def g(x):
        if domain is not None and as_point(x) in domain:
            return f(x)
        return default

    return g


class ReplicaFunction:
    """Algebraic expression over embedded coordinates.

    Built by :func:`replica_function`; ``values`` takes an ``(n, m)`` batch of
    embedded points, or ``(n, d, m)`` for tuple functions.
    """

    def __init__(self, expr, depth, arity=None, name=""):
        self.expr = expr
        self.depth = depth
        self.arity = arity
        self.name = name

    def values(self, V):
        V = np.asarray(V, dtype=float)
        if self.arity is None:
            V = np.atleast_2d(V)
            if V.shape[-1] != self.depth:
                raise PathSpaceError(f"expected embedded depth {self.depth}, got {V.shape[-1]}")
            return _eval(self.expr, V)
        if V.ndim == 2:
            V = V[None]
        out = np.ones(len(V))
        for j, e in enumerate(self.expr):
            out = out * _eval(e, V[:, j, :])
        return out

    def __call__(self, p):
        V = _vec(p)
        return float(self.values(V[None, ...])[0])

    def __repr__(self):
        return f"ReplicaFunction({self.name})"


def _eval(e, V):
    op = e[0]
    if op == "coord":
        return V[:, e[1]].copy()
    if op == "const":
        return np.full(len(V), e[1])
    if op == "scale":
        return e[1] * _eval(e[2], V)
    if op == "sum":
        out = _eval(e[1][0], V)
        for t in e[1][1:]:
            out = out + _eval(t, V)
        return out
    if op == "prod":
        out = _eval(e[1][0], V)
        for t in e[1][1:]:
            out = out * _eval(t, V)
        return out
    raise AssertionError(op)


def _compile(f, index):
    if not isinstance(f, BoundedFunction) or not f.constructive:
        raise NotConstructiveError(f"{getattr(f, 'name', f)!r} has no construction record")
    if f.key in index:
        return ("coord", index[f.key])
    if isinstance(f, Constant):
        return ("const", f.c)
    if isinstance(f, Scaled):
        return ("scale", f.a, _compile(f.f, index))
    if isinstance(f, Sum):
        return ("sum", [_compile(t, index) for t in f.terms])
    if isinstance(f, Product):
        return ("prod", [_compile(t, index) for t in f.factors])
    raise NotConstructiveError(f"{f.name} is not built from family members by sums, products and scalars")


def replica_function(base, f):
    """Replica of ``f`` in the algebra generated by the family.

    ``f`` must be built from family members with sums, products and scalar
    multiples (tuple functions are compiled slot by slot). Anything else,
    including black-box callables, raises :class:`NotConstructiveError`.
    """
    index = {g.key: j for j, g in enumerate(base.family)}
    if isinstance(f, TupleFunction):
        exprs = [_compile(g, index) for g in f.slots]
        return ReplicaFunction(exprs, len(base.family), arity=f.arity, name=f.name)
    return ReplicaFunction(_compile(f, index), len(base.family), name=getattr(f, "name", ""))


def replica_measure(base, mu):
    """``μ̄(A) = μ(A ∩ E0^d)``: atoms in ``E0`` are embedded, the rest dropped.

    The dropped mass is recorded in ``metadata["dropped_mass"]``.
    """
    P = mu.points
    if P.ndim == 2:
        inside = base.region.contains(P)
        emb = base.family.values(P[inside])
    else:
        n, d, dim = P.shape
        inside = base.region.contains(P.reshape(n * d, dim)).reshape(n, d).all(axis=1)
        kept = P[inside]
        emb = base.family.values(kept.reshape(-1, dim)).reshape(len(kept), d, len(base.family))
    if not np.any(inside):
        raise TrivialMeasureError("the measure gives zero mass to the base region")
    meta = dict(mu.metadata)
    meta["dropped_mass"] = float(np.sum(mu.weights[~inside]))
    meta["provenance"] = "replica"
    return DiscreteMeasure(emb, mu.weights[inside], meta)


def _replica_values(base, X, tol):
    V = base.family.values(X)
    far = ~base.region.contains(X)
    if np.any(far):
        far[far] = base.cloud_distance(V[far]) > tol
    V[far] = base.anchor_image_
    return V, far


def replica_process(base, ensemble, membership_tol=None, times=None):
    """Embedded ensemble with off-region values replaced by the anchor image.

    A value is kept when it lies in ``E0`` or its image is within
    ``membership_tol`` (in ρ) of the embedded reference cloud; otherwise the
    anchor image is used instead.

    Step paths are mapped exactly, value by value. Other paths are read at
    the given ``times`` (which must start at the horizon start) and returned
    as step paths through those readings.
    """
    from .processes import ProcessEnsemble

    check_is_fitted(base, "sample_cloud_")
    tol = base.membership_tol if membership_tol is None else float(membership_tol)
    out, replaced = [], 0
    for i in range(ensemble.N):
        x = ensemble.path(i)
        if isinstance(x, StepPath):
            bps, X = x.breakpoints, x.values
        else:
            if times is None:
                raise PathSpaceError("piecewise-linear paths need explicit sample times")
            bps = np.asarray(times, dtype=float)
            X = np.array([x.value_at(t) for t in bps])
        V, far = _replica_values(base, X, tol)
        replaced += int(np.sum(far))
        out.append(StepPath(bps, V, x.horizon))
    params = {"base_depth": len(base.family), "membership_tol": tol, "replaced_values": replaced,
              "source": ensemble.config()}
    return ProcessEnsemble.from_paths(out, sampler=f"replica({ensemble.sampler})", params=params,
                                      seed=ensemble.seed)

