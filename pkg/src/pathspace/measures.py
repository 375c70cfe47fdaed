"""Finitely supported measures and sequential weak-convergence checks.

Atoms are stored as rows of a 2-D array; tuple-valued atoms (points of
``E^d``) use a 3-D array of shape ``(n, d, dim)``. Limits superior and
inferior are read off a trailing window of the sequence, whose length the
caller always supplies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import PathSpaceError, TrivialMeasureError

__all__ = [
    "DiscreteMeasure",
    "ConvergenceReport",
    "integral",
    "pushforward",
    "concentrate",
    "expand",
    "weak_conv_test",
    "portmanteau_check",
    "tightness_profile",
    "empirical_measure",
]


class DiscreteMeasure:
    """Positive measure with finitely many atoms.

    Parameters
    ----------
    points : array-like
        ``(n,)`` or ``(n, dim)`` for state points; ``(n, d, dim)`` for tuples.
    weights : array-like, shape (n,)
        Strictly positive.
    metadata : dict, optional
        Free-form provenance; ``dropped_mass`` is filled in by operations that
        discard atoms.

    Atoms with identical points are merged (weights added), keeping the
    order of first appearance.
    """

    def __init__(self, points, weights, metadata=None):
        P = np.asarray(points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        w = np.asarray(weights, dtype=float).ravel()
        if P.ndim not in (2, 3) or len(P) != len(w):
            raise PathSpaceError(
                f"measure: {len(w)} weights for points of shape {P.shape}"
            )
        if not np.all(np.isfinite(P)):
            raise PathSpaceError("measure: atom points must be finite")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise PathSpaceError("measure: weights must be positive and finite")
        if len(w) == 0:
            raise TrivialMeasureError("measure has no atoms (total mass 0)")
        flat = P.reshape(len(P), -1)
        _, first, inv = np.unique(flat, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        if len(first) < len(P):
            order = np.argsort(first, kind="stable")
            rank = np.empty_like(order)
            rank[order] = np.arange(len(order))
            merged = np.zeros(len(first))
            for i, k in enumerate(inv):
                merged[rank[k]] += w[i]
            P = P[np.sort(first)]
            w = merged
        self.points = P
        self.weights = w
        self.metadata = dict(metadata or {})
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def dirac(cls, point, mass=1.0):
        return cls(np.atleast_1d(np.asarray(point, dtype=float))[None, ...], [mass])

    @property
    def n_atoms(self):
        return len(self.weights)

    @property
    def is_tuple(self):
        return self.points.ndim == 3

    def total_mass(self):
        return float(np.sum(self.weights))

    def is_probability(self, tol=1e-12):
        return abs(self.total_mass() - 1.0) <= tol

    def mass(self, region):
        """``μ(A)`` for a region with vectorized ``contains``."""
        inside = region.contains(self.points.reshape(self.n_atoms, -1))
        return float(np.sum(self.weights[inside]))

    def __eq__(self, other):
        return (
            isinstance(other, DiscreteMeasure)
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self):
        return f"DiscreteMeasure(n_atoms={self.n_atoms}, mass={self.total_mass():.6g})"

    def to_record(self):
        rec = {
            "atoms": [
                {"point": p.tolist(), "weight": float(w)} for p, w in zip(self.points, self.weights)
            ]
        }
        if self.metadata:
            rec["metadata"] = self.metadata
        return rec


def empirical_measure(points):
    """Uniform weights ``1/n`` on the given sample (duplicates merge)."""
    P = np.asarray(points, dtype=float)
    n = len(P)
    if n == 0:
        raise TrivialMeasureError("empirical measure of an empty sample")
    return DiscreteMeasure(P, np.full(n, 1.0 / n))


def integral(mu, f):
    """``Σ weight · f(point)``.

    ``f`` may be a family member (anything with ``values``) or a plain
    callable applied atom by atom.
    """
    if hasattr(f, "values"):
        vals = np.asarray(f.values(mu.points), dtype=float)
    else:
        try:
            vals = np.array([float(np.squeeze(f(p))) for p in mu.points])
        except Exception as exc:
            raise PathSpaceError(f"integral: test function failed at an atom: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise PathSpaceError("integral: test function is not finite at every atom")
    return float(np.dot(mu.weights, vals))


def pushforward(mu, f):
    """Image measure ``μ∘f⁻¹``; atoms with equal images are merged."""
    imgs = [np.atleast_1d(np.asarray(f(p), dtype=float)) for p in mu.points]
    meta = dict(mu.metadata)
    meta["provenance"] = "pushforward"
    return DiscreteMeasure(np.stack(imgs), mu.weights, meta)


def concentrate(mu, region):
    """Concentration ``μ|_A``: keeps the atoms inside ``A``."""
    inside = region.contains(mu.points.reshape(mu.n_atoms, -1))
    if not np.any(inside):
        raise TrivialMeasureError(f"measure gives zero mass to {region.description}")
    meta = dict(mu.metadata)
    meta["dropped_mass"] = float(np.sum(mu.weights[~inside]))
    meta["region"] = region.description
    return DiscreteMeasure(mu.points[inside], mu.weights[inside], meta)


def expand(nu):
    """Expansion of a concentrated measure back to the ambient space.

    Atoms and weights are unchanged; only the region tag is removed.
    """
    meta = {k: v for k, v in nu.metadata.items() if k not in ("region", "dropped_mass")}
    return DiscreteMeasure(nu.points, nu.weights, meta)


@dataclass
class ConvergenceReport:
    """Per-test-function integral sequences and their gaps to the target."""

    names: list
    integrals: np.ndarray  # (n_functions, n_measures)
    target_integrals: np.ndarray
    gaps: np.ndarray
    tol: float
    window: int
    params: dict = field(default_factory=dict)

    @property
    def final_gaps(self):
        return self.gaps[:, -1]

    @property
    def window_max(self):
        return self.gaps[:, -self.window:].max(axis=1)

    @property
    def passed(self):
        return bool(np.all(self.window_max <= self.tol))

    def to_dict(self):
        return {
            "names": list(self.names),
            "integrals": self.integrals.tolist(),
            "target_integrals": self.target_integrals.tolist(),
            "gaps": self.gaps.tolist(),
            "final_gaps": self.final_gaps.tolist(),
            "tol": self.tol,
            "window": self.window,
            "passed": self.passed,
            "params": self.params,
        }

    def rows(self):
        """Long-format rows ``(function, index, integral, gap)`` for CSV export."""
        for i, name in enumerate(self.names):
            for n in range(self.gaps.shape[1]):
                yield {"function": name, "index": n, "integral": float(self.integrals[i, n]),
                       "gap": float(self.gaps[i, n])}


def _check_window(window, n):
    if window is None:
        raise PathSpaceError("window must be given explicitly")
    window = int(window)
    if not 1 <= window <= n:
        raise PathSpaceError(f"window={window} must lie in [1, {n}]")
    return window


def _name(f, i):
    return getattr(f, "name", None) or getattr(f, "__name__", None) or f"f{i}"


def weak_conv_test(seq, target, D, tol, window):
    """Integral test of ``μ_n → μ`` against a finite list of test functions.

    Pass iff every gap ``|∫f dμ_n − ∫f dμ|`` in the trailing ``window``
    is ``<= tol`` for every ``f``.
    """
    seq = list(seq)
    D = list(D)
    if not D:
        raise PathSpaceError("weak_conv_test needs at least one test function")
    if not seq:
        raise PathSpaceError("weak_conv_test needs a nonempty sequence")
    window = _check_window(window, len(seq))
    I = np.array([[integral(mu, f) for mu in seq] for f in D])
    tgt = np.array([integral(target, f) for f in D])
    gaps = np.abs(I - tgt[:, None])
    return ConvergenceReport(
        names=[_name(f, i) for i, f in enumerate(D)],
        integrals=I,
        target_integrals=tgt,
        gaps=gaps,
        tol=float(tol),
        window=window,
    )


def portmanteau_check(seq, target, closed_regions=(), open_regions=(), window=None):
    """Closed/open-set inequalities over a trailing window.

    Returns a dict with one entry per region:
    ``limsup μ_n(F) <= μ(F)`` for closed ``F`` and
    ``liminf μ_n(O) >= μ(O)`` for open ``O``.
    """
    seq = list(seq)
    window = _check_window(window, len(seq))
    tail = seq[-window:]
    out = {"closed": [], "open": [], "window": window}
    for F in closed_regions:
        est = max(mu.mass(F) for mu in tail)
        lim = target.mass(F)
        out["closed"].append({"region": F.description, "limsup": est, "target": lim,
                              "ok": est <= lim})
    for O in open_regions:
        est = min(mu.mass(O) for mu in tail)
        lim = target.mass(O)
        out["open"].append({"region": O.description, "liminf": est, "target": lim,
                            "ok": est >= lim})
    out["violations"] = [r["region"] for r in out["closed"] + out["open"] if not r["ok"]]
    out["passed"] = not out["violations"]
    return out


def tightness_profile(family, nested_regions):
    """Sup over the family of the mass outside each region.

    The regions must be nested (increasing); this is checked on the union of
    all atoms.
    """
    family = list(family)
    regions = list(nested_regions)
    if not family or not regions:
        raise PathSpaceError("tightness_profile needs measures and regions")
    atoms = np.concatenate([mu.points.reshape(mu.n_atoms, -1) for mu in family])
    prev = None
    for K in regions:
        inside = K.contains(atoms)
        if prev is not None and np.any(prev & ~inside):
            raise PathSpaceError(f"regions are not nested at {K.description}")
        prev = inside
    return np.array(
        [max(mu.total_mass() - mu.mass(K) for mu in family) for K in regions]
    )
