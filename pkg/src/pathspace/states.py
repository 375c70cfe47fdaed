"""State points and pseudometrics on the state space.

A state point is a 1-D float array. Labeled finite spaces store the label
as the single coordinate, and a :class:`Metric` of kind ``"table"`` reads
distances from an explicit matrix.
"""

from __future__ import annotations

import numpy as np

from .exceptions import PathSpaceError

__all__ = ["as_point", "as_points", "Metric", "euclidean", "truncated", "table", "rho_metric"]


def as_point(x) -> np.ndarray:
    """Coerce a scalar or sequence to a finite 1-D float array."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise PathSpaceError(f"state point must be 1-D, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise PathSpaceError(f"state point has non-finite coordinates: {p}")
    return p


def as_points(X) -> np.ndarray:
    """Coerce a batch of states to an ``(n, dim)`` array.

    A flat sequence is read as ``n`` one-dimensional states.
    """
    A = np.asarray(X, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise PathSpaceError(f"expected a batch of state points, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise PathSpaceError("batch of state points contains NaN or Inf")
    return A


class Metric:
    """Pseudometric on states.

    Parameters
    ----------
    kind : {"euclidean", "truncated", "table", "rho"}
    cap : float, optional
        Truncation level for ``"truncated"``.
    table : array-like, optional
        Symmetric distance matrix for ``"table"``; points carry the label as
        their only coordinate.
    family : FunctionFamily, optional
        Family whose ``rho`` pseudometric is used for ``"rho"``.
    """

    def __init__(self, kind="euclidean", cap=None, table=None, family=None):
        self.kind = kind
        self.cap = cap
        self.family = family
        self.table = None
        if kind == "truncated":
            if cap is None or not cap > 0:
                raise PathSpaceError("truncated metric needs a positive cap")
        elif kind == "table":
            D = np.asarray(table, dtype=float)
            if D.ndim != 2 or D.shape[0] != D.shape[1]:
                raise PathSpaceError("distance table must be square")
            if np.any(D < 0) or not np.allclose(D, D.T, atol=0) or np.any(np.diag(D) != 0):
                raise PathSpaceError(
                    "distance table must be nonnegative, symmetric and zero on the diagonal"
                )
            self.table = D
        elif kind == "rho":
            if family is None:
                raise PathSpaceError("rho metric needs a function family")
        elif kind != "euclidean":
            raise PathSpaceError(f"unknown metric kind {kind!r}")

    @property
    def key(self):
        if self.kind == "truncated":
            return ("truncated", float(self.cap))
        if self.kind == "table":
            return ("table", self.table.tobytes())
        if self.kind == "rho":
            return ("rho", tuple(f.key for f in self.family))
        return ("euclidean",)

    def __eq__(self, other):
        return isinstance(other, Metric) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        if self.kind == "truncated":
            return f"Metric('truncated', cap={self.cap})"
        return f"Metric({self.kind!r})"

    def dist(self, X, Y) -> np.ndarray:
        """Broadcasting distance over the last axis."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if self.kind == "table":
            i = X[..., 0].astype(int)
            j = Y[..., 0].astype(int)
            return self.table[i, j]
        if self.kind == "rho":
            return self.family.rho_values(X, Y)
        d = np.sqrt(np.sum((X - Y) ** 2, axis=-1))
        if self.kind == "truncated":
            d = np.minimum(d, self.cap)
        return d

    def __call__(self, x, y) -> float:
        return float(self.dist(as_point(x), as_point(y)))

    def to_record(self):
        if self.kind == "truncated":
            return {"kind": "truncated", "cap": self.cap}
        if self.kind == "table":
            return {"kind": "table", "table": self.table.tolist()}
        if self.kind == "rho":
            return {"kind": "rho", "family": [f.to_record() for f in self.family]}
        return {"kind": "euclidean"}


def euclidean() -> Metric:
    return Metric("euclidean")


def truncated(cap) -> Metric:
    return Metric("truncated", cap=cap)


def table(distances) -> Metric:
    return Metric("table", table=distances)


def rho_metric(family) -> Metric:
    return Metric("rho", family=family)


def resolve_metric(metric) -> Metric:
    return Metric() if metric is None else metric
