"""Moduli of continuity and Skorokhod J1 distances for step paths.

The J1 distance is an infimum over all time changes. For step paths the
useful time changes are the ones that line jump times up, so
:func:`sko_dist` searches a finite candidate set: the identity, every
order-preserving partial matching of jump times, and a grid of partial
moves towards each matching. The returned value is an upper bound on the
infimum, together with the time change that attains it.

:func:`modulus_w_prime` is exact for step paths. See its docstring for the
algorithm.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import HorizonError, PathSpaceError
from .paths import (
    DEFAULT_JUMP_TOL,
    Horizon,
    StepPath,
    TimeChange,
    jump_times,
    restrict,
    time_change_norm,
)
from .states import resolve_metric

__all__ = [
    "SkoOptions",
    "SkoResult",
    "sup_band_dist",
    "modulus_w_prime",
    "candidate_time_changes",
    "sko_dist",
    "ModulusTransformer",
]


@dataclass(frozen=True)
class SkoOptions:
    """Search controls for :func:`sko_dist`.

    matching_depth : largest number of jump pairs matched at once.
    refine_grid : number of partial-move fractions per matching (1 = full
        matchings only).
    tol : reporting tolerance; also the jump-detection tolerance.
    """

    matching_depth: int = 4
    refine_grid: int = 4
    tol: float = 1e-9

    def __post_init__(self):
        if self.matching_depth < 1 or self.refine_grid < 1 or not self.tol > 0:
            raise PathSpaceError("SkoOptions fields must all be positive")


@dataclass
class SkoResult:
    value: float
    witness: TimeChange
    certified_lower: float | None = None
    candidates_evaluated: int = 0
    horizon: Horizon = field(default_factory=Horizon.halfline)

    def to_dict(self):
        return {
            "value": self.value,
            "witness_knots": self.witness.knots.tolist(),
            "witness_images": self.witness.images.tolist(),
            "witness_tail_slope": self.witness.tail_slope,
            "certified_lower": self.certified_lower,
            "candidates_evaluated": self.candidates_evaluated,
            "horizon": self.horizon.to_record(),
        }


def _merged_times(x, y, a, b):
    t = np.union1d(x.breakpoints, y.breakpoints)
    t = t[(t > a) & (t <= b)]
    return np.concatenate([[a], t])


def sup_band_dist(x, y, a, b, metric=None):
    """``sup_{t in [a,b]} 1 ∧ r(x(t), y(t))``.

    Exact: for step paths the supremum is a maximum over merged
    breakpoints; for piecewise-linear paths the distance is convex along each
    linear piece, so values at knots and left limits at knots suffice.
    """
    metric = resolve_metric(metric)
    a, b = float(a), float(b)
    if not b > a:
        raise HorizonError(f"empty interval [{a}, {b}]")
    for p in (x, y):
        if not (p.horizon.contains(a) and p.horizon.contains(b)):
            raise HorizonError(f"[{a}, {b}] is not inside the path horizon")
    ts = _merged_times(x, y, a, b)
    if isinstance(x, StepPath) and isinstance(y, StepPath):
        d = metric.dist(x.values_at(ts), y.values_at(ts))
        return float(min(np.max(d), 1.0))
    pts = np.union1d(ts, [b])
    vals = [metric.dist(x.values_at(pts), y.values_at(pts))]
    inner = pts[pts > a]
    if len(inner):
        lx = np.array([x.left_limit_at(t) for t in inner])
        ly = np.array([y.left_limit_at(t) for t in inner])
        vals.append(metric.dist(lx, ly))
    return float(min(np.max(np.concatenate(vals)), 1.0))


# ---------------------------------------------------------------------------
# modulus of continuity


def _pieces(x, metric, tol, t_stop):
    """Jump times up to ``t_stop`` and the constant value on each piece."""
    J = [t for t in jump_times(x, metric, tol) if t <= t_stop]
    starts = [x.horizon.start] + J
    vals = np.array([x.value_at(t) for t in starts])
    return np.asarray(starts), vals


def _osc_table(vals, metric):
    n = len(vals)
    D = metric.dist(vals[:, None, :], vals[None, :, :])
    O = np.zeros((n, n))
    for p in range(n):
        cur = 0.0
        for q in range(p, n):
            cur = max(cur, float(np.max(D[p:q + 1, q])))
            O[p, q] = cur
    return O


def _feasible(theta, starts, O, delta, T, end):
    """Whether some admissible partition has every oscillation ``<= theta``.

    States are boundaries placed exactly at a jump time (``"J"``) or strictly
    inside a constant piece (``"I"``). Each reachable state keeps the
    smallest boundary position (an infimum for ``"I"``); smaller is never
    worse for what follows. At most one boundary per piece is needed.
    """
    K = len(starts)
    nxt = list(starts[1:]) + [math.inf]

    def piece(t):
        return bisect.bisect_right(starts, t) - 1

    def terminal_ok(p, lo):
        c = min(max(T, lo + delta), end)
        return O[p, piece(c)] <= theta

    # lo[p][kind]: smallest reachable boundary position in region (p, kind)
    best = {(0, "J"): 0.0}
    for pb in range(1, K):
        for kind in ("J", "I"):
            cand = math.inf
            for (pa, _), lo_a in best.items():
                if pa >= pb:
                    continue
                last = pb - 1 if kind == "J" else pb
                if O[pa, last] > theta:
                    continue
                if kind == "J":
                    if starts[pb] > lo_a + delta and starts[pb] < T:
                        cand = min(cand, starts[pb])
                else:
                    lo = max(starts[pb], lo_a + delta)
                    if lo < min(nxt[pb], T):
                        cand = min(cand, lo)
            if cand < math.inf:
                best[(pb, kind)] = cand
    return any(terminal_ok(p, lo) for (p, _), lo in best.items())


def modulus_w_prime(x, delta, T, metric=None, tol=DEFAULT_JUMP_TOL):
    """Modulus ``w'(x, δ, T)`` of a step path.

    The infimum runs over partitions ``0 = t_0 < ... < t_{n-1} < T < t_n``
    with every gap ``> δ``, of the largest oscillation
    ``sup_{s,t in [t_{i-1}, t_i)} r(x(s), x(t))``.

    The oscillation of ``[s, t)`` only depends on which constant pieces it
    meets, so the candidate thresholds are the oscillations of runs of
    consecutive pieces. A binary search over them calls a reachability
    check that allows boundaries at jump times and strictly inside pieces;
    restricting boundaries to jump times alone can miss the optimum when
    the gap constraint binds.
    """
    if not isinstance(x, StepPath):
        raise PathSpaceError("modulus_w_prime is defined for step paths")
    delta, T = float(delta), float(T)
    if not delta > 0 or not T > 0:
        raise PathSpaceError(f"delta and T must be positive (delta={delta}, T={T})")
    if delta >= T:
        raise PathSpaceError(f"modulus needs delta < T (delta={delta}, T={T})")
    metric = resolve_metric(metric)
    end = x.horizon.end
    starts, vals = _pieces(x, metric, tol, T + delta)
    O = _osc_table(vals, metric)
    levels = np.unique(O[np.triu_indices(len(starts))])
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(levels[mid], list(starts), O, delta, T, end):
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


class ModulusTransformer(TransformerMixin, BaseEstimator):
    """Maps a list of step paths to their moduli ``w'`` on a grid of δ.

    Stateless: ``fit`` only validates parameters.
    """

    def __init__(self, deltas=(0.1,), T=1.0, metric=None, tol=DEFAULT_JUMP_TOL):
        self.deltas = deltas
        self.T = T
        self.metric = metric
        self.tol = tol

    def fit(self, X=None, y=None):
        deltas = np.atleast_1d(np.asarray(self.deltas, dtype=float))
        if np.any(deltas <= 0) or np.any(deltas >= self.T):
            raise PathSpaceError(f"every delta must lie in (0, T) with T={self.T}")
        self.deltas_ = deltas
        return self

    def transform(self, X):
        if not hasattr(self, "deltas_"):
            self.fit()
        return np.array(
            [[modulus_w_prime(x, d, self.T, self.metric, self.tol) for d in self.deltas_] for x in X]
        )


# ---------------------------------------------------------------------------
# Skorokhod distance


def _matchings(jx, jy, depth):
    """Order-preserving partial matchings, by size then lexicographically."""
    out = []
    for r in range(1, min(depth, len(jx), len(jy)) + 1):
        for ix in itertools.combinations(range(len(jx)), r):
            for iy in itertools.combinations(range(len(jy)), r):
                out.append([(jx[i], jy[j]) for i, j in zip(ix, iy)])
    return out


def _moves(x, y, horizon, metric, opts):
    """Time changes that move x's jumps (some way) onto matched y-jumps."""
    a, b = horizon.start, horizon.end
    jx = [t for t in jump_times(x, metric, opts.tol) if a < t < b]
    jy = [t for t in jump_times(y, metric, opts.tol) if a < t < b]
    fracs = [k / opts.refine_grid for k in range(1, opts.refine_grid + 1)]
    out = []
    for m in _matchings(jx, jy, opts.matching_depth):
        for th in fracs:
            # x∘λ jumps at s where λ(s) = x-jump; th = 1 gives s = y-jump exactly
            dom = [(1.0 - th) * tx + th * ty for tx, ty in m]
            img = [tx for tx, _ in m]
            if horizon.is_halfline:
                knots, images = [0.0] + dom, [0.0] + img
                lam = TimeChange(knots, images, horizon, tail_slope=1.0)
            else:
                knots, images = [a] + dom + [b], [a] + img + [b]
                lam = TimeChange(knots, images, horizon)
            out.append(lam)
    return out


def candidate_time_changes(x, y, opts=None, horizon=None, metric=None):
    """Deterministic candidate set for the infimum in the J1 distance.

    The identity comes first, then the moves of ``x`` towards ``y`` and the
    inverses of the moves of ``y`` towards ``x``. The set for ``(y, x)`` is
    the set of inverses of the set for ``(x, y)``.
    """
    opts = SkoOptions() if opts is None else opts
    horizon = x.horizon if horizon is None else horizon
    metric = resolve_metric(metric)
    cands = [TimeChange.identity(horizon)]
    cands += _moves(x, y, horizon, metric, opts)
    cands += [lam.inverse() for lam in _moves(y, x, horizon, metric, opts)]
    seen = set()
    out = []
    for lam in cands:
        k = (lam.knots.tobytes(), lam.images.tobytes(), lam.tail_slope)
        if k not in seen:
            seen.add(k)
            out.append(lam)
    return out


def _cost(x, y, lam, horizon, metric):
    """``|||λ||| ∨ (band distance or discounted integral)`` for one candidate."""
    norm = time_change_norm(lam)
    xb = lam.apply_inverse(x.breakpoints)
    a, b = horizon.start, horizon.end
    t = np.union1d(xb, y.breakpoints)
    t = t[(t >= a) & (t <= b)]
    ix = np.searchsorted(xb, t, side="right") - 1
    iy = np.searchsorted(y.breakpoints, t, side="right") - 1
    d = np.minimum(metric.dist(x.values[ix], y.values[iy]), 1.0)
    if not horizon.is_halfline:
        return max(norm, float(np.max(d)))
    # u -> r_[0,u] is a nondecreasing step function with jumps in t
    g = np.maximum.accumulate(d)
    e = np.exp(-t)
    w = e - np.concatenate([e[1:], [0.0]])
    return max(norm, float(np.dot(g, w)))


def _lower_bound(x, y, horizon, metric):
    a, b = horizon.start, horizon.end
    lb = float(metric.dist(x.value_at(a), y.value_at(a)))
    if not horizon.is_halfline:
        lb = max(lb, float(metric.dist(x.value_at(b), y.value_at(b))))
        # every value of x∘λ is a value of x, and vice versa
        vx = x.values_at(_merged_times(x, x, a, b))
        vy = y.values_at(_merged_times(y, y, a, b))
        D = metric.dist(vx[:, None, :], vy[None, :, :])
        lb = max(lb, float(D.min(axis=0).max()), float(D.min(axis=1).max()))
    return min(lb, 1.0)


def sko_dist(x, y, horizon=None, metric=None, opts=None):
    """Skorokhod J1 distance between two step paths (upper bound + witness).

    Parameters
    ----------
    x, y : StepPath
    horizon : Horizon, optional
        An interval ``[a, b]`` inside both path horizons, or the half-line.
        Defaults to the common horizon of the paths.
    metric : Metric, optional
    opts : SkoOptions, optional

    Notes
    -----
    Interval horizon: ``min |||λ||| ∨ sup_{[a,b]} 1 ∧ r(x∘λ, y)``.
    Half-line: ``min |||λ||| ∨ ∫ e^{-u} r_[0,u](x∘λ, y) du``, integrated in
    closed form because ``u -> r_[0,u]`` is a step function. Note that this
    half-line form is not symmetric in ``(x, y)`` in general.
    """
    if not (isinstance(x, StepPath) and isinstance(y, StepPath)):
        raise PathSpaceError("sko_dist is defined for step paths")
    metric = resolve_metric(metric)
    opts = SkoOptions() if opts is None else opts
    if horizon is None:
        if x.horizon != y.horizon:
            raise HorizonError("paths live on different horizons; pass an explicit horizon")
        horizon = x.horizon
    if not (x.horizon.covers(horizon) and y.horizon.covers(horizon)):
        raise HorizonError("requested horizon is not inside both path horizons")
    if horizon.is_halfline:
        xs, ys = x, y
    else:
        xs = x if x.horizon == horizon else restrict(x, horizon.start, horizon.end)
        ys = y if y.horizon == horizon else restrict(y, horizon.start, horizon.end)
    cands = candidate_time_changes(xs, ys, opts, horizon, metric)
    best, best_lam = math.inf, None
    for lam in cands:
        c = _cost(xs, ys, lam, horizon, metric)
        if c < best:
            best, best_lam = c, lam
    return SkoResult(
        value=best,
        witness=best_lam,
        certified_lower=_lower_bound(xs, ys, horizon, metric),
        candidates_evaluated=len(cands),
        horizon=horizon,
    )
