"""Càdlàg paths and time changes.

Two exactly representable path classes are provided:

* :class:`StepPath` -- piecewise constant, value ``values[i]`` on
  ``[breakpoints[i], breakpoints[i+1])``, last value held to the end of the
  horizon.
* :class:`PiecewiseLinearPath` -- linear between knots, with separate left
  limits at each knot so that jumps are allowed.

A :class:`TimeChange` is a strictly increasing piecewise-linear bijection of
the horizon. Evaluation at a knot returns the stored image exactly, which is
what lets matched jump times line up bit-for-bit after composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import HorizonError, PathSpaceError
from .states import resolve_metric

__all__ = [
    "Horizon",
    "StepPath",
    "PiecewiseLinearPath",
    "TimeChange",
    "evaluate",
    "left_limit",
    "jump_times",
    "time_change_norm",
    "compose_time_change",
    "restrict_extend",
    "restrict",
    "advance",
    "indicator",
    "constant_path",
    "eta_path",
]

DEFAULT_JUMP_TOL = 1e-12


@dataclass(frozen=True)
class Horizon:
    """Time horizon: ``[start, end]`` or the half-line ``[0, inf)``."""

    start: float = 0.0
    end: float = math.inf

    def __post_init__(self):
        if not self.end > self.start:
            raise HorizonError(f"empty horizon [{self.start}, {self.end}]")
        if math.isinf(self.end) and self.start != 0.0:
            raise HorizonError("a half-line horizon must start at 0")

    @classmethod
    def halfline(cls):
        return cls(0.0, math.inf)

    @classmethod
    def interval(cls, a, b):
        return cls(float(a), float(b))

    @property
    def is_halfline(self):
        return math.isinf(self.end)

    def contains(self, t):
        return self.start <= t <= self.end

    def covers(self, other: "Horizon"):
        return self.start <= other.start and other.end <= self.end

    def to_record(self):
        if self.is_halfline:
            return {"kind": "halfline"}
        return {"kind": "interval", "a": self.start, "b": self.end}


def _as_values(values, n):
    V = np.asarray(values, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2 or V.shape[0] != n:
        raise PathSpaceError(f"expected {n} state values, got array of shape {np.shape(values)}")
    if not np.all(np.isfinite(V)):
        raise PathSpaceError("path values must be finite")
    return V


def _as_times(times, name="breakpoints"):
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or len(t) == 0:
        raise PathSpaceError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(t)):
        raise PathSpaceError(f"{name} must be finite")
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if len(bad):
        i = int(bad[0]) + 1
        raise PathSpaceError(f"{name} must be strictly increasing (index {i}: {t[i - 1]} >= {t[i]})")
    return t


def _segment_index(times, t):
    return int(np.searchsorted(times, t, side="right")) - 1


class _Path:
    horizon: Horizon
    breakpoints: np.ndarray

    @property
    def dim(self):
        return self.values.shape[1]

    def _check_time(self, t):
        if not self.horizon.contains(t):
            raise HorizonError(
                f"time {t} outside horizon [{self.horizon.start}, {self.horizon.end}]"
            )

    def __call__(self, t):
        return evaluate(self, t)


class StepPath(_Path):
    """Piecewise-constant càdlàg path.

    Parameters
    ----------
    breakpoints : array-like, shape (m+1,)
        Strictly increasing; the first entry is the horizon start.
    values : array-like, shape (m+1,) or (m+1, dim)
    horizon : Horizon, optional
        Defaults to the half-line.
    """

    def __init__(self, breakpoints, values, horizon=None):
        self.horizon = Horizon.halfline() if horizon is None else horizon
        self.breakpoints = _as_times(breakpoints)
        self.values = _as_values(values, len(self.breakpoints))
        if self.breakpoints[0] != self.horizon.start:
            raise PathSpaceError(
                f"first breakpoint {self.breakpoints[0]} must equal horizon start {self.horizon.start}"
            )
        if self.breakpoints[-1] > self.horizon.end:
            raise PathSpaceError(f"breakpoint {self.breakpoints[-1]} beyond horizon end {self.horizon.end}")
        self.breakpoints.setflags(write=False)
        self.values.setflags(write=False)

    def value_at(self, t):
        self._check_time(t)
        return self.values[_segment_index(self.breakpoints, t)]

    def values_at(self, ts):
        """Vectorized right-continuous evaluation (no horizon check)."""
        idx = np.searchsorted(self.breakpoints, ts, side="right") - 1
        return self.values[np.maximum(idx, 0)]

    def left_limit_at(self, t):
        if not (self.horizon.start < t <= self.horizon.end):
            raise HorizonError(f"left limit needs a time in ({self.horizon.start}, {self.horizon.end}], got {t}")
        i = int(np.searchsorted(self.breakpoints, t, side="left")) - 1
        return self.values[i]

    def __eq__(self, other):
        return (
            isinstance(other, StepPath)
            and self.horizon == other.horizon
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        vals = [float(v[0]) if len(v) == 1 else v.tolist() for v in self.values]
        pairs = ", ".join(f"{t:g}: {v}" for t, v in zip(self.breakpoints, vals))
        return f"StepPath({{{pairs}}}, horizon={self.horizon.to_record()})"

    def to_record(self):
        return {
            "horizon": self.horizon.to_record(),
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
        }


class PiecewiseLinearPath(_Path):
    """Càdlàg path that is linear between knots.

    ``values[i]`` is the value at knot ``i`` (the right limit) and
    ``left_values[i]`` the left limit there; the first left value is ignored.
    On ``[knots[i], knots[i+1])`` the path runs linearly from ``values[i]``
    towards ``left_values[i+1]``. Past the last knot it continues with
    ``tail_slope`` (zero by default). Only meaningful for euclidean states.
    """

    def __init__(self, knots, values, left_values=None, horizon=None, tail_slope=None):
        self.horizon = Horizon.halfline() if horizon is None else horizon
        self.breakpoints = _as_times(knots, "knots")
        n = len(self.breakpoints)
        self.values = _as_values(values, n)
        if left_values is None:
            L = self.values.copy()
        else:
            L = np.asarray(left_values, dtype=float)
            if L.ndim == 1:
                L = L[:, None]
            L = L.copy()
            if L.shape != self.values.shape:
                raise PathSpaceError("left_values must match values in shape")
            L[0] = self.values[0]
            if not np.all(np.isfinite(L)):
                raise PathSpaceError("left values must be finite")
        self.left_values = L
        if tail_slope is None:
            tail = np.zeros(self.values.shape[1])
        else:
            tail = np.broadcast_to(np.asarray(tail_slope, dtype=float), (self.values.shape[1],)).copy()
        self.tail_slope = tail
        if self.breakpoints[0] != self.horizon.start:
            raise PathSpaceError(
                f"first knot {self.breakpoints[0]} must equal horizon start {self.horizon.start}"
            )
        if self.breakpoints[-1] > self.horizon.end:
            raise PathSpaceError(f"knot {self.breakpoints[-1]} beyond horizon end {self.horizon.end}")
        for a in (self.breakpoints, self.values, self.left_values, self.tail_slope):
            a.setflags(write=False)

    @property
    def knots(self):
        return self.breakpoints

    def _interp(self, i, t):
        k = self.breakpoints
        if t == k[i]:
            return self.values[i]
        if i + 1 < len(k):
            frac = (t - k[i]) / (k[i + 1] - k[i])
            return self.values[i] + (self.left_values[i + 1] - self.values[i]) * frac
        return self.values[i] + self.tail_slope * (t - k[i])

    def value_at(self, t):
        self._check_time(t)
        return self._interp(_segment_index(self.breakpoints, t), t)

    def values_at(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.array([self._interp(max(_segment_index(self.breakpoints, t), 0), t) for t in ts])

    def left_limit_at(self, t):
        if not (self.horizon.start < t <= self.horizon.end):
            raise HorizonError(f"left limit needs a time in ({self.horizon.start}, {self.horizon.end}], got {t}")
        k = self.breakpoints
        i = int(np.searchsorted(k, t, side="left"))
        if i < len(k) and k[i] == t:
            return self.left_values[i]
        return self._interp(i - 1, t)

    def __eq__(self, other):
        return (
            isinstance(other, PiecewiseLinearPath)
            and self.horizon == other.horizon
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.left_values, other.left_values)
            and np.array_equal(self.tail_slope, other.tail_slope)
        )

    def __repr__(self):
        return (
            f"PiecewiseLinearPath(knots={self.breakpoints.tolist()}, values={self.values.tolist()}, "
            f"left_values={self.left_values.tolist()})"
        )

    def to_record(self):
        rec = {
            "horizon": self.horizon.to_record(),
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
            "left_values": self.left_values.tolist(),
        }
        if np.any(self.tail_slope != 0):
            rec["tail_slope"] = self.tail_slope.tolist()
        return rec


def evaluate(path, t):
    """Right-continuous value ``path(t)`` as a 1-D state array."""
    return path.value_at(float(t))


def left_limit(path, t):
    """Left limit of ``path`` at ``t``; ``t`` must be past the horizon start."""
    return path.left_limit_at(float(t))


def jump_times(path, metric=None, tol=DEFAULT_JUMP_TOL):
    """Sorted left-jump times: knots where the value and left limit differ by more than ``tol``."""
    metric = resolve_metric(metric)
    k = path.breakpoints
    if len(k) < 2:
        return []
    if isinstance(path, StepPath):
        prev = path.values[:-1]
    else:
        prev = path.left_values[1:]
    d = metric.dist(path.values[1:], prev)
    return [float(t) for t in k[1:][d > tol]]


class TimeChange:
    """Strictly increasing piecewise-linear self-map of a horizon.

    ``knots`` are domain times, ``images`` their images. On an interval
    horizon both must start at ``a`` and end at ``b``. On the half-line they
    start at 0 and the map continues past the last knot with ``tail_slope``
    (default: slope of the last segment, or 1 for a single knot).
    """

    def __init__(self, knots, images, horizon=None, tail_slope=None):
        self.horizon = Horizon.halfline() if horizon is None else horizon
        self.knots = _as_times(knots, "time-change knots")
        self.images = _as_times(images, "time-change images")
        if len(self.knots) != len(self.images):
            raise PathSpaceError("time change needs as many images as knots")
        a = self.horizon.start
        if self.knots[0] != a or self.images[0] != a:
            raise PathSpaceError("time change must fix the horizon start")
        if self.horizon.is_halfline:
            if tail_slope is None:
                if len(self.knots) > 1:
                    tail_slope = (self.images[-1] - self.images[-2]) / (self.knots[-1] - self.knots[-2])
                else:
                    tail_slope = 1.0
            if not (tail_slope > 0 and math.isfinite(tail_slope)):
                raise PathSpaceError("tail slope must be positive and finite")
            self.tail_slope = float(tail_slope)
        else:
            b = self.horizon.end
            if self.knots[-1] != b or self.images[-1] != b:
                raise PathSpaceError("interval time change must fix both horizon endpoints")
            self.tail_slope = None

    @classmethod
    def identity(cls, horizon=None):
        horizon = Horizon.halfline() if horizon is None else horizon
        if horizon.is_halfline:
            return cls([0.0], [0.0], horizon, tail_slope=1.0)
        return cls([horizon.start, horizon.end], [horizon.start, horizon.end], horizon)

    @property
    def slopes(self):
        s = list(np.diff(self.images) / np.diff(self.knots))
        if self.tail_slope is not None:
            s.append(self.tail_slope)
        return np.asarray(s)

    def _map(self, xs, ys, tail, t):
        i = _segment_index(xs, t)
        if i < 0:
            raise HorizonError(f"time {t} before horizon start")
        if t == xs[i]:
            return float(ys[i])
        if i + 1 < len(xs):
            return float(ys[i] + (ys[i + 1] - ys[i]) * ((t - xs[i]) / (xs[i + 1] - xs[i])))
        if tail is None:
            raise HorizonError(f"time {t} beyond horizon end {xs[-1]}")
        return float(ys[i] + tail * (t - xs[i]))

    def __call__(self, t):
        if np.ndim(t):
            return np.array([self._map(self.knots, self.images, self.tail_slope, float(s)) for s in t])
        return self._map(self.knots, self.images, self.tail_slope, float(t))

    def inverse(self):
        tail = None if self.tail_slope is None else 1.0 / self.tail_slope
        return TimeChange(self.images, self.knots, self.horizon, tail_slope=tail)

    def apply_inverse(self, t):
        tail = None if self.tail_slope is None else 1.0 / self.tail_slope
        if np.ndim(t):
            return np.array([self._map(self.images, self.knots, tail, float(s)) for s in t])
        return self._map(self.images, self.knots, tail, float(t))

    def compose(self, inner: "TimeChange") -> "TimeChange":
        """Return ``self ∘ inner``."""
        if inner.horizon != self.horizon:
            raise HorizonError("cannot compose time changes on different horizons")
        pts = set(inner.knots.tolist()) | set(inner.apply_inverse(self.knots).tolist())
        knots = np.array(sorted(pts))
        images = np.array([self(inner(t)) for t in knots])
        tail = None if self.tail_slope is None else self.tail_slope * inner.tail_slope
        return TimeChange(knots, images, self.horizon, tail_slope=tail)

    def norm(self):
        return time_change_norm(self)

    def __eq__(self, other):
        return (
            isinstance(other, TimeChange)
            and self.horizon == other.horizon
            and np.array_equal(self.knots, other.knots)
            and np.array_equal(self.images, other.images)
            and self.tail_slope == other.tail_slope
        )

    def __repr__(self):
        return f"TimeChange(knots={self.knots.tolist()}, images={self.images.tolist()}, tail_slope={self.tail_slope})"


def time_change_norm(lam: TimeChange) -> float:
    """``sup_{t>s} |ln((λ(t)-λ(s))/(t-s))|``.

    Every chord slope of a piecewise-linear map is a convex combination of
    segment slopes, so the supremum is the largest ``|ln slope|`` over segments.
    """
    return float(np.max(np.abs(np.log(lam.slopes))))


def compose_time_change(x, lam: TimeChange):
    """The step path ``t -> x(λ(t))``; breakpoints move to their λ-preimages."""
    if not isinstance(x, StepPath):
        raise PathSpaceError("compose_time_change is defined for step paths")
    if x.horizon != lam.horizon:
        raise HorizonError("path and time change live on different horizons")
    bps = lam.apply_inverse(x.breakpoints)
    return StepPath(bps, x.values, x.horizon)


def restrict(x, a, b):
    """Restriction of a step path to the interval horizon ``[a, b]``."""
    if not isinstance(x, StepPath):
        raise PathSpaceError("restrict is defined for step paths")
    h = Horizon.interval(a, b)
    if not x.horizon.covers(h):
        raise HorizonError(f"[{a}, {b}] is not inside the path horizon")
    k = x.breakpoints
    keep = (k > a) & (k <= b)
    bps = np.concatenate([[a], k[keep]])
    vals = np.concatenate([x.value_at(a)[None, :], x.values[keep]])
    return StepPath(bps, vals, h)


def restrict_extend(x, u):
    """Path equal to ``x`` on ``[0, u]`` and held at ``x(u)`` on ``(u, u+1]``."""
    u = float(u)
    if not u > 0:
        raise HorizonError(f"restrict_extend needs u > 0, got u={u}")
    if not x.horizon.contains(u):
        raise HorizonError(f"u={u} outside the path horizon")
    h = Horizon.interval(0.0, u + 1.0)
    k = x.breakpoints
    keep = k <= u
    if isinstance(x, StepPath):
        return StepPath(k[keep], x.values[keep], h)
    knots = list(k[keep])
    vals = list(x.values[keep])
    lefts = list(x.left_values[keep])
    if knots[-1] != u:
        knots.append(u)
        xu = x.value_at(u)
        vals.append(xu)
        lefts.append(xu)
    return PiecewiseLinearPath(knots, vals, lefts, horizon=h)


def advance(x, tau):
    """The half-line path ``t -> x(tau + t)``."""
    tau = float(tau)
    if not x.horizon.is_halfline:
        raise HorizonError("advancing a path needs a half-line horizon")
    if tau < 0:
        raise HorizonError("advance needs tau >= 0")
    k = x.breakpoints
    keep = k > tau
    knots = np.concatenate([[0.0], k[keep] - tau])
    # Shifted knots can collide in floating point; drop the earlier one.
    if isinstance(x, StepPath):
        vals = np.concatenate([x.value_at(tau)[None, :], x.values[keep]])
        ok = np.concatenate([np.diff(knots) > 0, [True]])
        return StepPath(knots[ok], vals[ok])
    vals = np.concatenate([x.value_at(tau)[None, :], x.values[keep]])
    lefts = np.concatenate([x.value_at(tau)[None, :], x.left_values[keep]])
    ok = np.concatenate([[True], np.diff(knots) > 0])
    return PiecewiseLinearPath(knots[ok], vals[ok], lefts[ok], tail_slope=x.tail_slope)


def indicator(t0, horizon=None, low=0.0, high=1.0):
    """Step path ``low`` before ``t0`` and ``high`` from ``t0`` on."""
    horizon = Horizon.halfline() if horizon is None else horizon
    return StepPath([horizon.start, t0], [low, high], horizon)


def constant_path(c, horizon=None):
    horizon = Horizon.halfline() if horizon is None else horizon
    return StepPath([horizon.start], [np.atleast_1d(np.asarray(c, dtype=float))], horizon)


def eta_path(omega):
    """Ramp ``1 - omega + t`` on ``[0, omega)``, then ``1/2`` forever."""
    omega = float(omega)
    if not 0.0 < omega < 1.0:
        raise PathSpaceError(f"omega must lie in (0, 1), got {omega}")
    return PiecewiseLinearPath([0.0, omega], [1.0 - omega, 0.5], [1.0 - omega, 1.0])
