"""Decidable subsets of the state space.

Regions stand in for the Borel sets, compacts and totally bounded sets that
the diagnostics need. Membership is exact for the predicate kinds.
"""

from __future__ import annotations

import numpy as np

from .exceptions import PathSpaceError
from .states import resolve_metric

__all__ = ["Region", "Box", "Ball", "LabelSet", "FiniteSet", "EmptyRegion", "region_from_record"]


def _flat(X):
    A = np.asarray(X, dtype=float)
    if A.ndim == 0:
        return A.reshape(1, 1)
    if A.ndim == 1:
        return A[None, :]
    return A.reshape(A.shape[0], -1)


class Region:
    description = ""

    def contains(self, X) -> np.ndarray:
        """Vectorized membership for an ``(n, dim)`` batch."""
        raise NotImplementedError

    def __contains__(self, x):
        return bool(self.contains(_flat(x))[0])

    def distance(self, X, metric=None) -> np.ndarray:
        """Distance from each row of ``X`` to the region (0 inside)."""
        raise NotImplementedError

    def sample_points(self):
        """Finite point list representing the region, if it has one."""
        raise PathSpaceError(f"{type(self).__name__} has no finite sample")


class Box(Region):
    """Axis-aligned box ``[lo, hi]`` (or the open box when ``closed=False``).

    Scalar bounds broadcast to every coordinate.
    """

    def __init__(self, lo, hi, closed=True, description=""):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if np.any(self.lo > self.hi):
            raise PathSpaceError(f"box has lo > hi: {self.lo} > {self.hi}")
        self.closed = bool(closed)
        self.description = description or (
            f"{'[' if closed else '('}{self.lo.tolist()}, {self.hi.tolist()}{']' if closed else ')'}"
        )

    def contains(self, X):
        A = _flat(X)
        if self.closed:
            inside = (A >= self.lo) & (A <= self.hi)
        else:
            inside = (A > self.lo) & (A < self.hi)
        return inside.all(axis=1)

    def distance(self, X, metric=None):
        A = _flat(X)
        metric = resolve_metric(metric)
        if metric.kind not in ("euclidean", "truncated"):
            raise PathSpaceError("box distance is only defined for euclidean-type metrics")
        proj = np.clip(A, self.lo, self.hi)
        return metric.dist(A, proj)

    def to_record(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist(), "closed": self.closed}

    def __repr__(self):
        return f"Box({self.lo.tolist()}, {self.hi.tolist()}, closed={self.closed})"


class Ball(Region):
    def __init__(self, center, radius, metric=None, closed=True, description=""):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        self.metric = resolve_metric(metric)
        self.closed = bool(closed)
        self.description = description or f"ball({self.center.tolist()}, {self.radius})"

    def contains(self, X):
        d = self.metric.dist(_flat(X), self.center)
        return d <= self.radius if self.closed else d < self.radius

    def distance(self, X, metric=None):
        d = self.metric.dist(_flat(X), self.center)
        return np.maximum(d - self.radius, 0.0)

    def to_record(self):
        return {
            "kind": "ball",
            "center": self.center.tolist(),
            "radius": self.radius,
            "closed": self.closed,
            "metric": self.metric.to_record(),
        }


class LabelSet(Region):
    def __init__(self, labels, description=""):
        self.labels = np.asarray(sorted(set(int(v) for v in labels)), dtype=float)
        self.description = description or f"labels{self.labels.astype(int).tolist()}"

    def contains(self, X):
        A = _flat(X)
        return np.isin(A[:, 0], self.labels)

    def distance(self, X, metric=None):
        A = _flat(X)
        metric = resolve_metric(metric)
        if len(self.labels) == 0:
            return np.full(len(A), np.inf)
        D = metric.dist(A[:, None, :], self.labels[None, :, None])
        return D.min(axis=1)

    def sample_points(self):
        return self.labels[:, None]

    def to_record(self):
        return {"kind": "labels", "labels": self.labels.astype(int).tolist()}


class FiniteSet(Region):
    """Finite list of points; membership means distance ``<= tol`` to one of them."""

    def __init__(self, points, tol=0.0, metric=None, description=""):
        P = np.asarray(points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.size == 0:
            P = P.reshape(0, max(P.shape[-1] if P.ndim == 2 else 1, 1))
        self.points = P
        self.tol = float(tol)
        self.metric = resolve_metric(metric)
        self.description = description or f"finite set of {len(P)} points"

    def contains(self, X):
        return self.distance(X) <= self.tol

    def distance(self, X, metric=None):
        A = _flat(X)
        if len(self.points) == 0:
            return np.full(len(A), np.inf)
        metric = self.metric if metric is None else metric
        D = metric.dist(A[:, None, :], self.points[None, :, :])
        return D.min(axis=1)

    def sample_points(self):
        return self.points

    def to_record(self):
        return {"kind": "sample", "points": self.points.tolist(), "tol": self.tol}


class EmptyRegion(Region):
    description = "empty set"

    def contains(self, X):
        return np.zeros(len(_flat(X)), dtype=bool)

    def distance(self, X, metric=None):
        return np.full(len(_flat(X)), np.inf)

    def to_record(self):
        return {"kind": "empty"}


def region_from_record(rec) -> Region:
    from .io import metric_from_record

    kind = rec.get("kind")
    if kind == "box":
        return Box(rec["lo"], rec["hi"], closed=rec.get("closed", True))
    if kind == "interval":
        return Box(rec["a"], rec["b"], closed=rec.get("closed", True))
    if kind == "ball":
        metric = metric_from_record(rec["metric"]) if "metric" in rec else None
        return Ball(rec["center"], rec["radius"], metric=metric, closed=rec.get("closed", True))
    if kind == "labels":
        return LabelSet(rec["labels"])
    if kind == "sample":
        return FiniteSet(rec["points"], tol=rec.get("tol", 0.0))
    if kind == "empty":
        return EmptyRegion()
    raise PathSpaceError(f"region: unknown kind {kind!r}")

