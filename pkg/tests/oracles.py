"""Independent reference computations used to freeze expected values.

Nothing here calls the algorithms under test; only path attributes
(breakpoints and values) are read.
"""

import math

import numpy as np
from scipy import integrate


# ---------------------------------------------------------------------------
# w' by exhaustive search over partitions


def _osc(x, s, e_incl):
    """Largest |x(u) - x(v)| over u, v in [s, e_incl] for a 1-D step path."""
    k = x.breakpoints
    v = x.values[:, 0]
    i0 = int(np.searchsorted(k, s, side="right")) - 1
    i1 = int(np.searchsorted(k, e_incl, side="right")) - 1
    seg = v[i0:i1 + 1]
    return float(seg.max() - seg.min())


def _osc_open(x, s, e):
    """Largest |x(u) - x(v)| over u, v in [s, e)."""
    k = x.breakpoints
    v = x.values[:, 0]
    i0 = int(np.searchsorted(k, s, side="right")) - 1
    i1 = int(np.searchsorted(k, e, side="left")) - 1
    seg = v[i0:max(i1, i0) + 1]
    return float(seg.max() - seg.min())


def brute_force_w_prime(x, delta, T, interior=True):
    """``w'(x, δ, T)`` by depth-first search over every partition shape.

    A boundary sits either exactly at a breakpoint or strictly inside the
    open piece after it (including the first piece). Within a shape the
    earliest admissible position is used; inside a piece that is an
    infimum, so the boundary is ``pos + 0`` and the interval it closes
    includes ``pos``. The last interval runs past ``max(T, t_{n-1} + δ)``.
    ``interior=False`` allows breakpoint boundaries only.
    """
    k = [float(t) for t in x.breakpoints]
    regions = []
    for p, t in enumerate(k):
        if p > 0:
            regions.append((p, "at", t))
        nxt = k[p + 1] if p + 1 < len(k) else math.inf
        if interior:
            regions.append((p, "in", t, nxt))
    best = [math.inf]

    def dfs(prev, start_idx, cost):
        if cost >= best[0]:
            return
        best[0] = min(best[0], max(cost, _osc(x, prev, max(T, prev + delta))))
        for r in range(start_idx, len(regions)):
            reg = regions[r]
            if reg[1] == "at":
                t = reg[2]
                if prev + delta < t < T:
                    dfs(t, r + 1, max(cost, _osc_open(x, prev, t)))
            else:
                lo, hi = reg[2], reg[3]
                pos = max(lo, prev + delta)
                if pos < min(hi, T):
                    dfs(pos, r + 1, max(cost, _osc(x, prev, pos)))

    dfs(0.0, 0, 0.0)
    return best[0]


# ---------------------------------------------------------------------------
# shifted indicator on the half-line


def shifted_indicator_grid(h, n_knots=200001, n_tail=201):
    """Dense search over one-knot time changes for ``1_[1,∞)`` vs ``1_[1+h,∞)``.

    λ maps the knot ``s`` to 1 and continues with slope ``σ``. Then
    ``x∘λ`` jumps at ``s`` and ``∫ e^{-u} r_[0,u] du`` is ``e^{-min(s, 1+h)}``
    unless the jumps coincide. The knot grid includes ``1 + h``.
    """
    s = np.union1d(np.linspace(0.25, 4.0, n_knots), [1.0 + h])
    sig = np.union1d(np.exp(np.linspace(-0.5, 0.5, n_tail)), [1.0])
    disc = np.where(s == 1.0 + h, 0.0, np.exp(-np.minimum(s, 1.0 + h)))
    knot_cost = np.maximum(np.abs(np.log(1.0 / s)), disc)
    return float(np.min(np.maximum(knot_cost[:, None], np.abs(np.log(sig))[None, :])))


# ---------------------------------------------------------------------------
# eta process by quadrature


def eta_value(omega, t):
    return 1.0 - omega + t if t < omega else 0.5


def eta_mean(t):
    pts = [t] if 0 < t < 1 else None
    return integrate.quad(lambda w: eta_value(w, t), 0.0, 1.0, points=pts)[0]


def eta_band_prob_quad(tau, a, b):
    f = lambda w: 1.0 if a <= eta_value(w, tau) <= b else 0.0  # noqa: E731
    pts = sorted({p for p in (tau, 1 + tau - b, 1 + tau - a) if 0 < p < 1})
    return integrate.quad(f, 0.0, 1.0, points=pts or None, limit=200)[0]


def eta_lmtc_quad(T, a, b):
    pts = sorted({p for p in (a, b, 1.0, 1 - a, 1 - b) if 0 < p < T})
    return integrate.quad(lambda u: eta_band_prob_quad(u, a, b), 0.0, T, points=pts, limit=400)[0] / T


# ---------------------------------------------------------------------------
# ramp under the randomly advanced shift


def ramp_rap_gap(T, c=1.0):
    """Gap for ``x(t) = t`` and ``f = clip(., 0, 1)`` at shift ``c``.

    ``E f(x(τ)) = (1/T) ∫_0^T min(u, 1) du`` and the shifted value adds ``c``.
    """
    g = lambda u: min(max(u, 0.0), 1.0)  # noqa: E731
    e0 = integrate.quad(g, 0.0, T, points=[1.0] if T > 1 else None)[0] / T
    e1 = integrate.quad(lambda u: g(u + c), 0.0, T)[0] / T
    return abs(e0 - e1)
