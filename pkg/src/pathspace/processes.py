"""Seeded process ensembles and the tightness / finite-dimensional diagnostics.

An ensemble stores N paths in packed arrays so that evaluating all of them
at one time is a handful of numpy operations. Each path is drawn from its
own counter-based stream (see :mod:`pathspace.rng`), so results do not
depend on how generation is split across workers.

Packed layout (``K`` = most knots in any path, rows padded with ``inf``):

``knots`` (N, K), ``values`` (N, K, dim), ``left`` (N, K, dim), ``tail`` (N, dim).

Step paths use ``left[:, i] = values[:, i-1]`` and zero tail slope, so one
evaluation rule serves both path kinds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import HorizonError, PathSpaceError
from .families import Constant, Coordinate, Product, Scaled, Sum, Tent, TruncatedPolynomial, build_closure
from .measures import ConvergenceReport, DiscreteMeasure, _check_window, weak_conv_test
from .paths import Horizon, PiecewiseLinearPath, StepPath, advance
from .rng import check_seed, path_rng, stream_key
from .skorokhod import modulus_w_prime

__all__ = [
    "SAMPLERS",
    "ProcessEnsemble",
    "DiagnosticsReport",
    "simulate",
    "band_prob",
    "mpcc_check",
    "eta_band_probability",
    "eta_lmtc_closed_form",
    "lmtc_profile",
    "mcc_probe",
    "fdd",
    "fd_test_functions",
    "fdc_test",
    "stationarity_test",
    "as_test",
    "rap",
    "rap_expectation",
    "rap_as_gap",
    "fixed_jump_candidates",
]

_HALF_ULP = 2.0**-54


# ---------------------------------------------------------------------------
# samplers: each returns (knots, values, left_values or None, tail or None)


def _eta(rng, p, horizon):
    w = p.get("omega")
    if w is None:
        w = rng.random() + _HALF_ULP  # in (0, 1)
    return [0.0, w], [[1.0 - w], [0.5]], [[1.0 - w], [1.0]], None


def _constant(rng, p, horizon):
    c = np.atleast_1d(np.asarray(p.get("c", 0.0), dtype=float))
    return [horizon.start], [c], None, None


def _ramp(rng, p, horizon):
    s = float(p.get("slope", 1.0))
    return [horizon.start], [[s * horizon.start]], None, [s]


def _jump_times(rng, rate, a, b):
    n = rng.poisson(rate * (b - a))
    return np.sort(a + (b - a) * rng.random(n))


def _t_max(p, horizon):
    if horizon.is_halfline:
        return float(p.get("t_max", 10.0))
    return horizon.end


def _random_walk(rng, p, horizon):
    x0 = float(p.get("x0", 0.0))
    t = _jump_times(rng, float(p.get("rate", 1.0)), horizon.start, _t_max(p, horizon))
    t = t[t > horizon.start]
    steps = rng.normal(0.0, float(p.get("sigma", 1.0)), len(t))
    vals = x0 + np.concatenate([[0.0], np.cumsum(steps)])
    return [horizon.start, *t], vals[:, None], None, None


def _poisson_jump(rng, p, horizon):
    t = _jump_times(rng, float(p.get("rate", 1.0)), horizon.start, _t_max(p, horizon))
    t = t[t > horizon.start]
    if p.get("jump", "unit") == "unit":
        steps = np.ones(len(t))
    else:
        steps = rng.normal(float(p.get("mean", 0.0)), float(p.get("sigma", 1.0)), len(t))
    vals = np.concatenate([[0.0], np.cumsum(steps)])
    return [horizon.start, *t], vals[:, None], None, None


def _single_jump(rng, p, horizon):
    lo, hi = float(p.get("lo", 0.0)), float(p.get("hi", 1.0))
    t = lo + (hi - lo) * rng.random()
    if t <= horizon.start:
        t = horizon.start + _HALF_ULP
    return [horizon.start, t], [[0.0], [float(p.get("height", 1.0))]], None, None


_SAMPLER_FUNCS = {
    "eta": _eta,
    "constant": _constant,
    "deterministic-shift": _constant,
    "ramp": _ramp,
    "random-walk": _random_walk,
    "poisson-jump": _poisson_jump,
    "single-jump": _single_jump,
}
SAMPLERS = tuple(sorted(_SAMPLER_FUNCS)) + ("custom-paths",)
_PL_SAMPLERS = {"eta", "ramp"}


def _pack(raw, kind):
    """Packed arrays from a list of raw (knots, values, left, tail) tuples."""
    N = len(raw)
    K = max(len(r[0]) for r in raw)
    dim = np.atleast_2d(np.asarray(raw[0][1], dtype=float)).shape[1]
    knots = np.full((N, K), np.inf)
    values = np.zeros((N, K, dim))
    left = np.zeros((N, K, dim))
    tail = np.zeros((N, dim))
    for i, (k, v, L, s) in enumerate(raw):
        n = len(k)
        V = np.asarray(v, dtype=float).reshape(n, dim)
        knots[i, :n] = k
        values[i, :n] = V
        values[i, n:] = V[-1]
        if L is None:
            left[i, 0] = V[0]
            left[i, 1:n] = V[:-1]
        else:
            left[i, :n] = np.asarray(L, dtype=float).reshape(n, dim)
            left[i, 0] = V[0]
        # padding: past the last knot the path follows its tail
        left[i, n:] = V[-1]
        if s is not None:
            tail[i] = s
    return knots, values, left, tail


class ProcessEnsemble:
    """N sampled càdlàg paths with uniform weights ``1/N``.

    Build with :func:`simulate` or :meth:`from_paths`.
    """

    def __init__(self, knots, values, left, tail, kind="step", horizon=None, sampler="custom-paths",
                 params=None, seed=None):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.left = np.asarray(left, dtype=float)
        self.tail = np.asarray(tail, dtype=float)
        if self.knots.ndim != 2 or self.values.shape[:2] != self.knots.shape:
            raise PathSpaceError("packed ensemble arrays have inconsistent shapes")
        if kind not in ("step", "pl"):
            raise PathSpaceError(f"unknown path kind {kind!r}")
        self.kind = kind
        self.horizon = Horizon.halfline() if horizon is None else horizon
        self.sampler = sampler
        self.params = dict(params or {})
        self.seed = seed
        for a in (self.knots, self.values, self.left, self.tail):
            a.setflags(write=False)

    @classmethod
    def from_paths(cls, paths, sampler="custom-paths", params=None, seed=None):
        paths = list(paths)
        if not paths:
            raise PathSpaceError("ensemble needs at least one path")
        horizon = paths[0].horizon
        if any(p.horizon != horizon for p in paths):
            raise HorizonError("all paths of an ensemble must share one horizon")
        if all(isinstance(p, StepPath) for p in paths):
            raw = [(p.breakpoints, p.values, None, None) for p in paths]
            kind = "step"
        else:
            raw = []
            for p in paths:
                if isinstance(p, StepPath):
                    L = np.concatenate([p.values[:1], p.values[:-1]])
                    raw.append((p.breakpoints, p.values, L, None))
                else:
                    raw.append((p.breakpoints, p.values, p.left_values, p.tail_slope))
            kind = "pl"
        return cls(*_pack(raw, kind), kind=kind, horizon=horizon, sampler=sampler, params=params, seed=seed)

    @property
    def N(self):
        return len(self.knots)

    def __len__(self):
        return self.N

    @property
    def dim(self):
        return self.values.shape[2]

    @property
    def weights(self):
        return np.full(self.N, 1.0 / self.N)

    def n_knots(self, i):
        return int(np.sum(np.isfinite(self.knots[i])))

    def path(self, i):
        n = self.n_knots(i)
        k = self.knots[i, :n]
        if self.kind == "step":
            return StepPath(k, self.values[i, :n], self.horizon)
        return PiecewiseLinearPath(k, self.values[i, :n], self.left[i, :n], self.horizon, tail_slope=self.tail[i])

    @property
    def paths(self):
        return [self.path(i) for i in range(self.N)]

    def values_at(self, t):
        """``(N, dim)`` array of the paths evaluated at time ``t``."""
        return self.values_on([t])[:, 0]

    def values_on(self, ts):
        """``(N, m, dim)`` array of the paths evaluated at ``m`` times."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        bad = [t for t in ts if not self.horizon.contains(t)]
        if bad:
            raise HorizonError(f"time {bad[0]} outside horizon [{self.horizon.start}, {self.horizon.end}]")
        K = self.knots.shape[1]
        rows = np.arange(self.N)[:, None]
        idx = np.sum(self.knots[:, None, :] <= ts[None, :, None], axis=2) - 1
        v = self.values[rows, idx]
        if self.kind == "step":
            return v
        k0 = self.knots[rows, idx]
        nxt = np.minimum(idx + 1, K - 1)
        k1 = self.knots[rows, nxt]
        inner = (idx + 1 < K) & np.isfinite(k1)
        dt = ts[None, :] - k0
        with np.errstate(invalid="ignore", divide="ignore"):
            seg = v + (self.left[rows, nxt] - v) * (dt / (k1 - k0))[..., None]
            tl = v + self.tail[:, None, :] * dt[..., None]
        out = np.where(inner[..., None], seg, tl)
        at_knot = dt == 0
        out[at_knot] = v[at_knot]
        return out

    def config(self):
        return {
            "sampler": self.sampler,
            "N": self.N,
            "seed": self.seed,
            "params": self.params,
            "horizon": self.horizon.to_record(),
        }

    def to_record(self):
        rec = self.config()
        rec["kind"] = self.kind
        rec["paths"] = [self.path(i).to_record() for i in range(self.N)]
        return rec

    def __repr__(self):
        return f"ProcessEnsemble(sampler={self.sampler!r}, N={self.N}, seed={self.seed})"


def simulate(sampler, N, seed, horizon=None, params=None, parallel=1, paths=None):
    """Draw an ensemble.

    Parameters
    ----------
    sampler : str
        One of :data:`SAMPLERS`. ``custom-paths`` wraps the given ``paths``.
    N : int
        Number of paths (ignored for ``custom-paths``).
    seed : int
        64-bit seed; path ``i`` uses stream ``sampler`` at counter ``i``.
    horizon : Horizon, optional
        Defaults to the half-line. ``eta`` requires it.
    params : dict, optional
        Sampler parameters: ``eta`` (``omega`` forces a fixed draw),
        ``constant``/``deterministic-shift`` (``c``), ``ramp`` (``slope``),
        ``random-walk`` (``sigma``, ``rate``, ``x0``, ``t_max``),
        ``poisson-jump`` (``rate``, ``jump`` in {"unit", "normal"}, ``mean``,
        ``sigma``, ``t_max``), ``single-jump`` (``lo``, ``hi``, ``height``).
        Half-line jump samplers stop jumping at ``t_max``.
    parallel : int
        Worker threads. Output does not depend on it.
    """
    params = dict(params or {})
    horizon = Horizon.halfline() if horizon is None else horizon
    if sampler == "custom-paths":
        if not paths:
            raise PathSpaceError("custom-paths sampler needs paths")
        return ProcessEnsemble.from_paths(paths, params=params, seed=seed)
    if sampler not in _SAMPLER_FUNCS:
        raise PathSpaceError(f"unknown sampler {sampler!r}; choose from {', '.join(SAMPLERS)}")
    N = int(N)
    if N < 1:
        raise PathSpaceError(f"N must be at least 1, got {N}")
    seed = check_seed(seed)
    if sampler == "eta" and not horizon.is_halfline:
        raise HorizonError("the eta sampler lives on the half-line")
    if sampler == "eta" and "omega" in params and not 0.0 < params["omega"] < 1.0:
        raise PathSpaceError("forced omega must lie in (0, 1)")
    fn = _SAMPLER_FUNCS[sampler]
    key = stream_key(seed, sampler)

    def work(lo, hi):
        return [fn(path_rng(seed, sampler, i, key), params, horizon) for i in range(lo, hi)]

    parallel = max(1, int(parallel))
    if parallel == 1:
        raw = work(0, N)
    else:
        edges = np.linspace(0, N, parallel + 1).astype(int)
        with ThreadPoolExecutor(max_workers=parallel) as ex:
            parts = list(ex.map(work, edges[:-1], edges[1:]))
        raw = [r for part in parts for r in part]
    kind = "pl" if sampler in _PL_SAMPLERS else "step"
    return ProcessEnsemble(*_pack(raw, kind), kind=kind, horizon=horizon, sampler=sampler,
                           params=params, seed=seed)


# ---------------------------------------------------------------------------
# reports


@dataclass
class DiagnosticsReport:
    condition: str
    params: dict
    estimates: dict
    stderr: dict = field(default_factory=dict)
    n: int = 0
    passed: bool | None = None
    threshold: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "condition": self.condition,
            "params": self.params,
            "estimates": self.estimates,
            "stderr": self.stderr,
            "n": self.n,
            "passed": self.passed,
            "threshold": self.threshold,
            "notes": list(self.notes),
        }


def _band(band, dim):
    a, b = band
    lo = np.broadcast_to(np.asarray(a, dtype=float), (dim,))
    hi = np.broadcast_to(np.asarray(b, dtype=float), (dim,))
    if np.any(lo > hi):
        raise PathSpaceError(f"empty band [{a}, {b}]")
    return lo, hi


def _in_band(V, lo, hi):
    return np.all((V >= lo) & (V <= hi), axis=-1)


def band_containment(ens, band, T):
    """Per-path flags: the whole path on ``[start, T]`` stays in the closed band.

    Exact. On each linear piece the visited values lie between the value at
    the piece start and the left limit at its end (or the value at ``T``);
    both endpoints in the closed band is necessary and sufficient.
    """
    T = float(T)
    if not ens.horizon.contains(T) or T < ens.horizon.start:
        raise HorizonError(f"T={T} outside the ensemble horizon")
    lo, hi = _band(band, ens.dim)
    K = ens.knots
    start_ok = K <= T
    nxt = np.concatenate([K[:, 1:], np.full((ens.N, 1), np.inf)], axis=1)
    Lnext = np.concatenate([ens.left[:, 1:], ens.values[:, -1:]], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        slope = np.where(np.isfinite(nxt)[..., None], (Lnext - ens.values) / (nxt - K)[..., None],
                         ens.tail[:, None, :])
        vT = ens.values + slope * (T - K)[..., None]
    end = np.where((nxt <= T)[..., None], Lnext, vT)
    seg_ok = _in_band(ens.values, lo, hi) & _in_band(np.nan_to_num(end, nan=0.0), lo, hi)
    return np.all(seg_ok | ~start_ok, axis=1)


def band_prob(ens, band, T):
    """Fraction of paths that stay inside ``band`` on all of ``[0, T]``."""
    inside = band_containment(ens, band, T)
    p = float(np.mean(inside))
    return DiagnosticsReport(
        condition="MCCC",
        params={"band": [float(band[0]), float(band[1])], "T": float(T), "ensemble": ens.config()},
        estimates={"band_prob": p},
        stderr={"band_prob": math.sqrt(p * (1.0 - p) / ens.N)},
        n=ens.N,
    )


def mpcc_check(ensembles, eps, t, region, metric=None):
    """Inf over the family of ``P(X_t in A^ε)`` against ``1 - ε``."""
    ensembles = list(ensembles)
    if not ensembles:
        raise PathSpaceError("mpcc_check needs at least one ensemble")
    if not eps > 0:
        raise PathSpaceError("eps must be positive")
    probs, errs = [], []
    for ens in ensembles:
        d = region.distance(ens.values_at(t), metric)
        p = float(np.mean(d < eps))
        probs.append(p)
        errs.append(math.sqrt(p * (1.0 - p) / ens.N))
    inf = min(probs)
    return DiagnosticsReport(
        condition="MPCC",
        params={"eps": float(eps), "t": float(t), "region": region.description},
        estimates={"inf_prob": inf, "per_ensemble": probs, "margin": inf - (1.0 - eps)},
        stderr={"per_ensemble": errs},
        n=sum(e.N for e in ensembles),
        passed=inf >= 1.0 - eps,
        threshold=1.0 - eps,
    )


# ---------------------------------------------------------------------------
# long-time averages


def _band_counts(ens, h, n, a, b):
    """Per path, how many midpoints ``(j + 1/2) h``, ``j < n``, fall in the band.

    On a linear piece the times spent in a box form one interval, so the
    count is a difference of floor/ceil indices. It equals pointwise
    evaluation on the grid except when a grid time hits a band crossing
    exactly (a probability-zero tie for continuous samplers).
    """
    lo, hi = _band((a, b), ens.dim)
    K = ens.knots
    nxt = np.concatenate([K[:, 1:], np.full((ens.N, 1), np.inf)], axis=1)
    Lnext = np.concatenate([ens.left[:, 1:], ens.values[:, -1:]], axis=1)
    v0 = ens.values
    with np.errstate(invalid="ignore", divide="ignore"):
        slope = np.where(np.isfinite(nxt)[..., None], (Lnext - v0) / (nxt - K)[..., None],
                         ens.tail[:, None, :])
        # per coordinate: times in the piece where lo <= v0 + slope (t - k0) <= hi
        ta = (lo - v0) / slope
        tb = (hi - v0) / slope
    flat = slope == 0
    inside_flat = (v0 >= lo) & (v0 <= hi)
    t_lo = np.where(flat, np.where(inside_flat, -np.inf, np.inf), np.minimum(ta, tb))
    t_hi = np.where(flat, np.where(inside_flat, np.inf, -np.inf), np.maximum(ta, tb))
    with np.errstate(invalid="ignore"):
        # padded rows give inf - inf; they are masked below
        L = np.maximum(K, K + np.max(t_lo, axis=2))
        U = K + np.min(t_hi, axis=2)
        j0 = np.clip(np.ceil(L / h - 0.5), 0, n)
        j1 = np.minimum(np.floor(U / h - 0.5) + 1, np.ceil(nxt / h - 0.5))
        j1 = np.clip(j1, 0, n)
    c = np.where(np.isfinite(K), np.maximum(j1 - j0, 0), 0)
    return np.sum(np.nan_to_num(c), axis=1)


def eta_band_probability(tau, a, b):
    """Exact ``P(η_τ in [a, b])`` for ω uniform on (0, 1).

    Before ω the path is ``1 - ω + τ``; that lies in ``[a, b]`` iff
    ``ω in [1 + τ - b, 1 + τ - a]``, and ``ω > τ`` is needed. After ω the
    value is 1/2, with probability ``min(τ, 1)``.
    """
    tau = np.asarray(tau, dtype=float)
    upper = np.minimum(1.0, 1.0 + tau - a)
    lower = np.maximum(tau, 1.0 + tau - b)
    ramp = np.clip(upper - np.maximum(lower, 0.0), 0.0, None)
    settled = np.minimum(tau, 1.0) * float(a <= 0.5 <= b)
    return ramp + settled


def eta_lmtc_closed_form(T, a, b):
    """``(1/T) ∫_0^T P(η_τ in [a, b]) dτ``, exact.

    The integrand is piecewise linear with kinks among ``a``, ``b``, 1
    (``1 - a`` and ``1 - b`` are added as harmless extra nodes), so the
    trapezoid rule on those nodes is exact.
    """
    T = float(T)
    nodes = np.array([0.0, a, b, 1.0, 1.0 - a, 1.0 - b, T])
    nodes = np.unique(np.clip(nodes, 0.0, T))
    P = eta_band_probability(nodes, a, b)
    return float(np.sum(np.diff(nodes) * (P[1:] + P[:-1]) / 2.0) / T)


def _check_schedule(schedule):
    s = np.asarray(schedule, dtype=float).ravel()
    if len(s) == 0:
        raise PathSpaceError("time schedule must be non-empty")
    if np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise PathSpaceError("time schedule must be positive and strictly increasing")
    return s


def lmtc_profile(source, schedule, band, step=0.01, mode=None):
    """Long-time averages ``(1/T_k) ∫_0^{T_k} P(X_τ in band) dτ``.

    Parameters
    ----------
    source : ProcessEnsemble or "eta"
        ``"eta"`` selects the closed form.
    schedule : increasing positive times ``T_k``.
    band : (a, b)
    step : float
        Quadrature step for Monte-Carlo mode (midpoint rule per path).
    mode : {"mc", "closed-form"}, optional
        Defaults to closed form for ``"eta"`` and Monte Carlo otherwise.

    Notes
    -----
    Monte-Carlo mode averages, for each path, the in-band indicator over the
    midpoints of a grid of ``[0, T_k]``; the estimate is the mean of those
    per-path averages and the standard error their standard deviation over
    ``sqrt(N)``.
    """
    T = _check_schedule(schedule)
    a, b = float(band[0]), float(band[1])
    if a > b:
        raise PathSpaceError(f"empty band [{a}, {b}]")
    if not step > 0:
        raise PathSpaceError(f"quadrature step must be positive, got {step}")
    is_eta = isinstance(source, str)
    if is_eta and source != "eta":
        raise PathSpaceError(f"closed form only exists for eta, got {source!r}")
    mode = mode or ("closed-form" if is_eta else "mc")
    params = {"schedule": T.tolist(), "band": [a, b], "mode": mode}
    if mode == "closed-form":
        if not is_eta and not (source.sampler == "eta" and "omega" not in source.params):
            raise PathSpaceError("closed-form mode needs the eta process")
        vals = [eta_lmtc_closed_form(t, a, b) for t in T]
        return DiagnosticsReport(
            condition="LMTC",
            params=params,
            estimates={"profile": vals},
            stderr={"profile": [0.0] * len(T)},
        )
    if mode != "mc":
        raise PathSpaceError(f"unknown mode {mode!r}")
    if is_eta:
        raise PathSpaceError("Monte-Carlo mode needs an ensemble")
    ens = source
    params["step"] = float(step)
    params["ensemble"] = ens.config()
    ns = np.maximum(np.rint(T / step).astype(int), 1)
    shared = np.allclose(ns * step, T, rtol=1e-12, atol=0.0)
    means, errs = [], []
    for Tk, nk in zip(T, ns):
        h = step if shared else Tk / nk
        Y = _band_counts(ens, h, nk, a, b) / nk
        means.append(float(np.mean(Y)))
        errs.append(float(np.std(Y, ddof=1) / math.sqrt(ens.N)) if ens.N > 1 else 0.0)
    return DiagnosticsReport(
        condition="LMTC",
        params=params,
        estimates={"profile": means},
        stderr={"profile": errs},
        n=ens.N,
    )


# ---------------------------------------------------------------------------
# modulus condition


def mcc_probe(ensembles, eps, T, delta_grid, metric=None):
    """Exceedance ``sup_i P(w'(X^i, δ, T) >= ε)`` on a grid of δ.

    Reports the smallest and the largest certifying δ (exceedance ``<= ε``),
    or ``None`` when no grid value certifies.
    """
    ensembles = list(ensembles)
    grid = np.asarray(delta_grid, dtype=float).ravel()
    if len(grid) == 0 or np.any(grid <= 0):
        raise PathSpaceError("delta grid must be non-empty and positive")
    if np.any(grid >= T):
        raise PathSpaceError(f"every delta must be below T={T}")
    for ens in ensembles:
        if ens.kind != "step":
            raise PathSpaceError("mcc_probe needs step-path ensembles")
    exceed = []
    for d in grid:
        sup = 0.0
        for ens in ensembles:
            w = np.array([modulus_w_prime(ens.path(i), d, T, metric) for i in range(ens.N)])
            sup = max(sup, float(np.mean(w >= eps)))
        exceed.append(sup)
    ok = [float(d) for d, e in zip(grid, exceed) if e <= eps]
    return DiagnosticsReport(
        condition="MCC",
        params={"eps": float(eps), "T": float(T), "delta_grid": grid.tolist()},
        estimates={
            "exceedance": exceed,
            "smallest_delta": min(ok) if ok else None,
            "largest_delta": max(ok) if ok else None,
        },
        n=sum(e.N for e in ensembles),
        passed=bool(ok),
        threshold=float(eps),
    )


# ---------------------------------------------------------------------------
# finite-dimensional distributions


def _times(T0):
    t = [float(s) for s in np.atleast_1d(T0)]
    if not t:
        raise PathSpaceError("time set must be non-empty")
    return t


def fdd(ens, T0):
    """Empirical law of ``(X_{t_1}, ..., X_{t_d})``, weight ``1/N`` per path."""
    V = np.stack([ens.values_at(t) for t in _times(T0)], axis=1)
    return DiscreteMeasure(V, ens.weights, {"provenance": "fdd", "times": _times(T0)})


def fd_test_functions(D, d, max_factors=2):
    """Budgeted ``mc[Π^d(D)]`` as a list of tuple functions."""
    tuples = build_closure(D, "pi_d", d=d)
    return build_closure(tuples, "mc", max_factors=max_factors)


def fixed_jump_candidates(ens, threshold=0.5, tol=1e-12):
    """Times at which more than ``threshold`` of the paths jump."""
    K = ens.knots[:, 1:]
    jump = (np.max(np.abs(ens.values[:, 1:] - ens.left[:, 1:]), axis=2) > tol) & np.isfinite(K)
    times, counts = np.unique(K[jump], return_counts=True)
    return [float(t) for t, c in zip(times, counts) if c / ens.N > threshold]


def _merge(reports, tol, window, params):
    names, I, tgt, gaps = [], [], [], []
    for label, r in reports:
        names += [f"{n} @ {label}" for n in r.names]
        I.append(r.integrals)
        tgt.append(r.target_integrals)
        gaps.append(r.gaps)
    return ConvergenceReport(names, np.vstack(I), np.concatenate(tgt), np.vstack(gaps), float(tol),
                             window, params)


def fdc_test(ensembles_seq, limit, D, T0_list, tol, window, max_factors=2, jump_threshold=0.5):
    """Finite-dimensional convergence through expectations of tuple test functions.

    For each time set ``T0`` and each ``f`` in the budgeted ``mc[Π^{|T0|}(D)]``
    the gap ``|E^n f(X^n_{T0}) - E f(X_{T0})|`` is computed; the merged report
    passes iff all trailing-window gaps are ``<= tol``.
    """
    seq = list(ensembles_seq)
    T0_list = [_times(T0) for T0 in T0_list]
    if not T0_list:
        raise PathSpaceError("T0_list must be non-empty")
    parts = []
    for T0 in T0_list:
        fs = fd_test_functions(D, len(T0), max_factors)
        target = fdd(limit, T0)
        r = weak_conv_test([fdd(e, T0) for e in seq], target, fs, tol, window)
        parts.append((T0, r))
    params = {
        "T0_list": T0_list,
        "max_factors": max_factors,
        "n_generators": len(list(D)),
        "fixed_jump_candidates": fixed_jump_candidates(limit, jump_threshold),
    }
    return _merge(parts, tol, parts[0][1].window, params)


def _expectations(ens, T0, fs):
    M = fdd(ens, T0)
    return np.array([float(np.dot(M.weights, f.values(M.points))) for f in fs])


def stationarity_test(ens, D, T0, c_list, tol, max_factors=2):
    """Compares ``E f(X_{T0})`` with ``E f(X_{T0 + c})`` for every test function."""
    T0 = _times(T0)
    fs = fd_test_functions(D, len(T0), max_factors)
    base = _expectations(ens, T0, fs)
    gaps = {}
    for c in c_list:
        shifted = _expectations(ens, [t + float(c) for t in T0], fs)
        gaps[str(float(c))] = np.abs(base - shifted).tolist()
    worst = max(max(g) for g in gaps.values())
    return DiagnosticsReport(
        condition="stationarity",
        params={"T0": T0, "c_list": [float(c) for c in c_list], "tol": float(tol),
                "functions": [f.name for f in fs], "max_factors": max_factors},
        estimates={"gaps": gaps, "base": base.tolist(), "max_gap": worst},
        n=ens.N,
        passed=worst <= tol,
        threshold=float(tol),
    )


def as_test(ensembles_seq, D, T0, c_list, tol, window, max_factors=2):
    """Asymptotic stationarity: ``E^n[f(X^n_{T0}) - f(X^n_{T0+c})] -> 0``."""
    seq = list(ensembles_seq)
    T0 = _times(T0)
    fs = fd_test_functions(D, len(T0), max_factors)
    names, rows = [], []
    for c in c_list:
        shifted = [t + float(c) for t in T0]
        diffs = np.array([_expectations(e, T0, fs) - _expectations(e, shifted, fs) for e in seq]).T
        rows.append(diffs)
        names += [f"{f.name} @ c={float(c):g}" for f in fs]
    I = np.vstack(rows)
    window = _check_window(window, len(seq))
    return ConvergenceReport(names, I, np.zeros(len(I)), np.abs(I), float(tol), window,
                             {"T0": T0, "c_list": [float(c) for c in c_list], "max_factors": max_factors})


# ---------------------------------------------------------------------------
# randomly advanced processes


def rap(ens, T, seed):
    """Each path advanced by its own ``τ_i ~ U[0, T]`` (stream ``"rap"``)."""
    T = float(T)
    if not T > 0:
        raise PathSpaceError(f"T must be positive, got {T}")
    if not ens.horizon.is_halfline:
        raise HorizonError("randomly advanced processes need half-line paths")
    seed = check_seed(seed)
    key = stream_key(seed, "rap")
    taus = np.array([T * path_rng(seed, "rap", i, key).random() for i in range(ens.N)])
    return ProcessEnsemble.from_paths(
        [advance(ens.path(i), taus[i]) for i in range(ens.N)],
        sampler=f"rap({ens.sampler})",
        params={"T": T, "base": ens.config()},
        seed=seed,
    )


def _kinks(f):
    """State values where a 1-D test function stops being polynomial."""
    if isinstance(f, TruncatedPolynomial):
        return list(f.kinks)
    if isinstance(f, Tent):
        c = float(f.center[0])
        return [c - 1.0 / f.k, c, c + 1.0 / f.k]
    if isinstance(f, (Coordinate, Constant)):
        return []
    if isinstance(f, Sum):
        return [k for t in f.terms for k in _kinks(t)]
    if isinstance(f, Product):
        return [k for t in f.factors for k in _kinks(t)]
    if isinstance(f, Scaled):
        return _kinks(f.f)
    raise PathSpaceError(f"no exact integration rule for {f.name}")


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _path_integral(x, f, a, b):
    """``∫_a^b f(x(s)) ds`` for a 1-D step or piecewise-linear path.

    Pieces are split at knots and where the path crosses a kink of ``f``;
    on each piece the integrand is a polynomial in ``s``, integrated by
    8-point Gauss-Legendre (exact up to degree 15).
    """
    if b <= a:
        return 0.0
    cuts = {a, b}
    cuts.update(t for t in x.breakpoints if a < t < b)
    kinks = _kinks(f)
    if kinks and isinstance(x, PiecewiseLinearPath):
        edges = sorted(cuts)
        for s0, s1 in zip(edges[:-1], edges[1:]):
            v0 = float(x.value_at(s0)[0])
            v1 = float(x.left_limit_at(s1)[0]) if s1 > x.horizon.start else v0
            if v1 == v0:
                continue
            for k in kinks:
                u = (k - v0) / (v1 - v0)
                if 0.0 < u < 1.0:
                    cuts.add(s0 + u * (s1 - s0))
    edges = np.array(sorted(cuts))
    total = 0.0
    for s0, s1 in zip(edges[:-1], edges[1:]):
        mid, half = (s0 + s1) / 2.0, (s1 - s0) / 2.0
        ts = mid + half * _GL_X
        vals = f.values(x.values_at(ts))
        total += half * float(np.dot(_GL_W, vals))
    return total


def rap_expectation(x, f, T, t):
    """``E f(X^T_t) = (1/T) ∫_0^T f(x(τ + t)) dτ`` for a deterministic path."""
    T = float(T)
    if not T > 0:
        raise PathSpaceError(f"T must be positive, got {T}")
    return _path_integral(x, f, float(t), float(t) + T) / T


def rap_as_gap(x, f, T, t0=0.0, c=1.0):
    """``|E f(X^T_{t0}) - E f(X^T_{t0 + c})|`` in closed form."""
    return abs(rap_expectation(x, f, T, t0) - rap_expectation(x, f, T, t0 + c))
