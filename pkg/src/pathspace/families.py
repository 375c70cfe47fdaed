"""Bounded test functions, finite families, closures and the ρ pseudometrics.

Functions are small expression trees so that every member of a generated
closure carries its own construction record. Structural identity is the
``key`` attribute; sums and products are normalized (flattened, sorted,
constant-one factors dropped) so that commuted expressions share a key.
Semantic equality is not attempted.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .exceptions import BoundViolation, PathSpaceError
from .states import as_point, resolve_metric

__all__ = [
    "BoundedFunction",
    "Constant",
    "Coordinate",
    "Tent",
    "TruncatedPolynomial",
    "Sum",
    "Product",
    "Scaled",
    "BlackBox",
    "TupleFunction",
    "FunctionFamily",
    "ONE",
    "build_closure",
    "tent_family",
    "separates_points",
    "SeparationResult",
    "rho_family",
    "epsilon_envelope_contains",
    "DEFAULT_COEFFICIENTS",
]

DEFAULT_COEFFICIENTS = (1.0, -1.0, 0.5, -0.5, 2.0, -2.0)
_BOUND_SLACK = 1e-12


def _batch(X):
    A = np.asarray(X, dtype=float)
    if A.ndim == 0:
        return A.reshape(1, 1)
    if A.ndim == 1:
        return A[:, None]
    return A


def _sort_key(f):
    return repr(f.key)


class BoundedFunction:
    """Base class; subclasses implement ``values`` on an ``(n, dim)`` batch."""

    bound: float
    key: tuple

    def values(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return float(self.values(as_point(x)[None, :])[0])

    def __add__(self, other):
        return Sum([self, other])

    def __mul__(self, other):
        if isinstance(other, BoundedFunction):
            return Product([self, other])
        return Scaled(other, self)

    def __rmul__(self, a):
        return Scaled(a, self)

    def __eq__(self, other):
        return isinstance(other, BoundedFunction) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return self.name

    @property
    def name(self):
        return repr(self.key)

    @property
    def constructive(self):
        return True


class Constant(BoundedFunction):
    def __init__(self, c=1.0):
        self.c = float(c)
        self.bound = abs(self.c)
        self.key = ("const", self.c)

    def values(self, X):
        return np.full(len(_batch(X)), self.c)

    @property
    def name(self):
        return "1" if self.c == 1.0 else f"{self.c:g}"

    def to_record(self):
        return {"kind": "one"} if self.c == 1.0 else {"kind": "constant", "value": self.c}


ONE = Constant(1.0)


class Coordinate(BoundedFunction):
    """``x -> x[index]`` on a state space where ``|x[index]| <= bound``."""

    def __init__(self, index=0, bound=1.0):
        self.index = int(index)
        self.bound = float(bound)
        self.key = ("coord", self.index, self.bound)

    def values(self, X):
        v = _batch(X)[:, self.index]
        if np.any(np.abs(v) > self.bound + _BOUND_SLACK):
            raise BoundViolation(f"coordinate {self.index} exceeds declared bound {self.bound}")
        return v.astype(float, copy=True)

    @property
    def name(self):
        return "x" if self.index == 0 else f"x{self.index}"

    def to_record(self):
        return {"kind": "coordinate", "index": self.index, "bound": self.bound}


class Tent(BoundedFunction):
    """``x -> max(1 - k * r(x, center), 0)``."""

    def __init__(self, center, k, metric=None):
        if not k > 0:
            raise PathSpaceError(f"tent scale must be positive, got {k}")
        self.center = as_point(center)
        self.k = float(k)
        self.metric = resolve_metric(metric)
        self.bound = 1.0
        self.key = ("tent", tuple(self.center.tolist()), self.k, self.metric.key)

    def values(self, X):
        d = self.metric.dist(_batch(X), self.center)
        return np.maximum(1.0 - self.k * d, 0.0)

    @property
    def name(self):
        c = self.center.tolist()
        return f"g[{c[0] if len(c) == 1 else c},{self.k:g}]"

    def to_record(self):
        rec = {"kind": "tent", "center": self.center.tolist(), "k": self.k}
        if self.metric.kind != "euclidean":
            rec["metric"] = self.metric.to_record()
        return rec


class TruncatedPolynomial(BoundedFunction):
    """Polynomial in one coordinate, with the coordinate clipped to ``[lo, hi]``.

    ``coeffs`` are in increasing degree. With ``coeffs=(0, 1)`` and
    ``[lo, hi] = [0, 1]`` this is the clipped identity.
    """

    def __init__(self, coeffs, lo=0.0, hi=1.0, index=0):
        self.coeffs = tuple(float(c) for c in coeffs)
        self.lo, self.hi = float(lo), float(hi)
        if not self.hi > self.lo:
            raise PathSpaceError("truncation interval must have hi > lo")
        self.index = int(index)
        poly = np.polynomial.Polynomial(self.coeffs)
        crit = [r.real for r in poly.deriv().roots() if abs(r.imag) < 1e-12 and self.lo < r.real < self.hi]
        pts = np.array([self.lo, self.hi, *crit])
        self.bound = float(np.max(np.abs(poly(pts))))
        self._poly = poly
        self.key = ("tpoly", self.coeffs, self.lo, self.hi, self.index)

    @property
    def kinks(self):
        return (self.lo, self.hi)

    def values(self, X):
        v = np.clip(_batch(X)[:, self.index], self.lo, self.hi)
        return self._poly(v)

    @property
    def name(self):
        return f"p{list(self.coeffs)}[{self.lo:g},{self.hi:g}]"

    def to_record(self):
        return {"kind": "polynomial", "coeffs": list(self.coeffs), "lo": self.lo, "hi": self.hi, "index": self.index}


class Sum(BoundedFunction):
    def __new__(cls, terms):
        flat = []
        for t in terms:
            flat.extend(t.terms if isinstance(t, Sum) else [t])
        if len(flat) == 1:
            return flat[0]
        obj = super().__new__(cls)
        obj.terms = tuple(sorted(flat, key=_sort_key))
        obj.bound = float(sum(t.bound for t in obj.terms))
        obj.key = ("sum",) + tuple(t.key for t in obj.terms)
        return obj

    def __init__(self, terms):
        pass

    def values(self, X):
        out = self.terms[0].values(X)
        for t in self.terms[1:]:
            out = out + t.values(X)
        return out

    @property
    def name(self):
        groups = [(f, len(list(g))) for f, g in itertools.groupby(self.terms)]
        return " + ".join(f.name if n == 1 else f"{n}{f.name}" for f, n in groups)

    @property
    def constructive(self):
        return all(t.constructive for t in self.terms)

    def to_record(self):
        return {"kind": "sum", "terms": [t.to_record() for t in self.terms]}


class Product(BoundedFunction):
    def __new__(cls, factors):
        flat = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, Product) else [f])
        flat = [f for f in flat if f.key != ONE.key]
        if not flat:
            return ONE
        if len(flat) == 1:
            return flat[0]
        obj = super().__new__(cls)
        obj.factors = tuple(sorted(flat, key=_sort_key))
        obj.bound = float(np.prod([f.bound for f in obj.factors]))
        obj.key = ("prod",) + tuple(f.key for f in obj.factors)
        return obj

    def __init__(self, factors):
        pass

    def values(self, X):
        out = self.factors[0].values(X)
        for f in self.factors[1:]:
            out = out * f.values(X)
        return out

    @property
    def name(self):
        groups = [(f, len(list(g))) for f, g in itertools.groupby(self.factors)]
        return "·".join(
            (f"({f.name})" if isinstance(f, Sum) else f.name) + ("" if n == 1 else f"^{n}") for f, n in groups
        )

    @property
    def constructive(self):
        return all(f.constructive for f in self.factors)

    def to_record(self):
        return {"kind": "product", "factors": [f.to_record() for f in self.factors]}


class Scaled(BoundedFunction):
    def __new__(cls, a, f):
        a = float(a)
        if a == 1.0:
            return f
        obj = super().__new__(cls)
        obj.a = a
        obj.f = f
        obj.bound = abs(a) * f.bound
        obj.key = ("scale", a, f.key)
        return obj

    def __init__(self, a, f):
        pass

    def values(self, X):
        return self.a * self.f.values(X)

    @property
    def name(self):
        inner = f"({self.f.name})" if isinstance(self.f, Sum) else self.f.name
        return f"{Fraction(self.a).limit_denominator(1000)}{inner}"

    @property
    def constructive(self):
        return self.f.constructive

    def to_record(self):
        return {"kind": "scale", "a": self.a, "f": self.f.to_record()}


class BlackBox(BoundedFunction):
    """Wraps an arbitrary callable. Has no construction record."""

    def __init__(self, fn, bound, label=None):
        self.fn = fn
        self.bound = float(bound)
        self.label = label if label is not None else getattr(fn, "__name__", "blackbox")
        self.key = ("blackbox", label if label is not None else id(fn))

    def values(self, X):
        A = _batch(X)
        v = np.array([float(self.fn(x if len(x) > 1 else x[0])) for x in A])
        if np.any(np.abs(v) > self.bound + _BOUND_SLACK):
            raise BoundViolation(f"black-box function exceeds declared bound {self.bound}")
        return v

    @property
    def name(self):
        return f"blackbox[{self.label}]"

    @property
    def constructive(self):
        return False


class TupleFunction:
    """``(x_1, ..., x_d) -> prod_j f_j(x_j)`` over the slots that are present.

    ``slots[j]`` is the factor applied to coordinate ``j``; slots past the
    tuple's length act as the constant 1. Trailing constant-one slots are
    stripped so that structurally equal products share a key.
    """

    def __init__(self, slots, arity=None):
        slots = list(slots)
        while slots and slots[-1].key == ONE.key:
            slots.pop()
        if not slots:
            slots = [ONE]
        self.slots = tuple(slots)
        self.arity = len(self.slots) if arity is None else int(arity)
        if len(self.slots) > self.arity:
            raise PathSpaceError("tuple function uses more slots than its arity")
        self.bound = float(np.prod([f.bound for f in self.slots]))
        self.key = ("tuple",) + tuple(f.key for f in self.slots)

    def values(self, X):
        """``X`` has shape ``(n, d, dim)``."""
        A = np.asarray(X, dtype=float)
        if A.ndim == 2:
            A = A[:, :, None]
        out = self.slots[0].values(A[:, 0, :])
        for j, f in enumerate(self.slots[1:], start=1):
            out = out * f.values(A[:, j, :])
        return out

    def __call__(self, x):
        A = np.asarray(x, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        return float(self.values(A[None])[0])

    def __mul__(self, other):
        n = max(len(self.slots), len(other.slots))
        slots = [
            Product([a, b])
            for a, b in itertools.zip_longest(self.slots, other.slots, fillvalue=ONE)
        ]
        return TupleFunction(slots[:n], arity=max(self.arity, other.arity))

    def __eq__(self, other):
        return isinstance(other, TupleFunction) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def name(self):
        return " ⊗ ".join(f"{f.name}∘p{j + 1}" for j, f in enumerate(self.slots))

    def __repr__(self):
        return f"TupleFunction({self.name})"


class FunctionFamily:
    """Finite ordered family of bounded functions.

    The order fixes the weights ``2^{-j+1}`` of the ρ pseudometric.
    ``truncation_of_infinite`` flags a family cut from a countable
    generator; :attr:`tail_bound` is then the neglected weight.
    """

    def __init__(self, members, truncation_of_infinite=False):
        members = list(members)
        if not members:
            raise PathSpaceError("function family must be non-empty")
        self.members = members
        self.truncation_of_infinite = truncation_of_infinite
        keys = [f.key for f in members]
        self.one_index = keys.index(ONE.key) if ONE.key in keys else None
        self.weights = 2.0 ** (-np.arange(len(members)))

    @property
    def contains_one(self):
        return self.one_index is not None

    @property
    def tail_bound(self):
        return 2.0 ** (-len(self.members) + 1) if self.truncation_of_infinite else 0.0

    @property
    def bounds(self):
        return np.array([f.bound for f in self.members])

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def index(self, f):
        return [g.key for g in self.members].index(f.key)

    def values(self, X) -> np.ndarray:
        """``(n, m)`` matrix of member values on an ``(n, dim)`` batch."""
        A = _batch(X)
        return np.column_stack([f.values(A) for f in self.members])

    def rho_values(self, X, Y) -> np.ndarray:
        """Broadcasting ρ over the last axis of ``X`` and ``Y``."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        shape = np.broadcast_shapes(X.shape, Y.shape)
        Xb = np.broadcast_to(X, shape).reshape(-1, shape[-1])
        Yb = np.broadcast_to(Y, shape).reshape(-1, shape[-1])
        diff = np.minimum(np.abs(self.values(Xb) - self.values(Yb)), 1.0)
        return (diff @ self.weights).reshape(shape[:-1])

    def to_records(self):
        return [f.to_record() for f in self.members]

    def __repr__(self):
        return "FunctionFamily([" + ", ".join(f.name for f in self.members) + "])"


def _dedup(items):
    seen = set()
    out = []
    for f in items:
        if f.key not in seen:
            seen.add(f.key)
            out.append(f)
    return out


def _members(D):
    return list(D.members) if isinstance(D, FunctionFamily) else list(D)


def build_closure(
    D,
    mode,
    max_terms=2,
    max_factors=2,
    coefficients=DEFAULT_COEFFICIENTS,
    d=1,
):
    """Enumerate a finite truncation of an algebraic closure of ``D``.

    Parameters
    ----------
    D : FunctionFamily or sequence
        Generators. ``mc`` also accepts :class:`TupleFunction` generators.
    mode : {"ae", "ac", "mc", "agQ", "pi_d"}
        ``ae``: ``D`` plus all pairwise sums ``f + g`` (``f = g`` allowed).
        ``ac``: sums over non-empty subsets of at most ``max_terms`` members.
        ``mc``: products of at most ``max_factors`` members, repetition allowed.
        ``agQ``: ``ac`` applied to ``{a f : f in mc(D), a in coefficients}``.
        ``pi_d``: tuple functions ``prod_{j<=i} f_j ∘ p_j`` for ``i <= d``.
    max_terms, max_factors, d : int
        Enumeration budget.
    coefficients : sequence of float
        Rational coefficients for ``agQ``.

    Returns
    -------
    FunctionFamily, or list of TupleFunction for ``pi_d`` (and for ``mc``
    over tuple functions). Order is lexicographic in construction indices,
    duplicates (by structural key) are dropped.
    """
    gens = _members(D)
    if not gens:
        raise PathSpaceError("closure of an empty family")
    if min(max_terms, max_factors, d) < 1 or len(coefficients) == 0:
        raise PathSpaceError("closure budget must be positive")

    if mode == "ae":
        out = list(gens)
        for i, j in itertools.combinations_with_replacement(range(len(gens)), 2):
            out.append(Sum([gens[i], gens[j]]))
    elif mode == "ac":
        out = []
        for r in range(1, min(max_terms, len(gens)) + 1):
            for idx in itertools.combinations(range(len(gens)), r):
                out.append(Sum([gens[i] for i in idx]))
    elif mode == "mc":
        out = []
        for r in range(1, max_factors + 1):
            for idx in itertools.combinations_with_replacement(range(len(gens)), r):
                p = gens[idx[0]]
                for i in idx[1:]:
                    p = p * gens[i]
                out.append(p)
        out = _dedup(out)
        if isinstance(gens[0], TupleFunction):
            return out
        return FunctionFamily(out)
    elif mode == "agQ":
        mc = build_closure(gens, "mc", max_factors=max_factors).members
        scaled = _dedup([Scaled(a, f) for f in mc for a in coefficients])
        return build_closure(scaled, "ac", max_terms=max_terms)
    elif mode == "pi_d":
        out = []
        for i in range(1, d + 1):
            for combo in itertools.product(gens, repeat=i):
                out.append(TupleFunction(combo, arity=d))
        return _dedup(out)
    else:
        raise PathSpaceError(f"unknown closure mode {mode!r}")
    return FunctionFamily(_dedup(out))


def tent_family(centers, scales, metric=None):
    """``{1} ∪ {g_{y,k}}`` with the constant first, then centers-major order."""
    centers = list(centers)
    scales = list(scales)
    if not centers or not scales:
        raise PathSpaceError("tent_family needs at least one center and one scale")
    for k in scales:
        if not k > 0:
            raise PathSpaceError(f"tent scale must be positive, got {k}")
    members = [ONE] + [Tent(y, k, metric) for y in centers for k in scales]
    return FunctionFamily(members)


class SeparationResult:
    def __init__(self, witness=None, n_points=0):
        self.witness = witness
        self.n_points = n_points

    @property
    def separated(self):
        return self.witness is None

    def __bool__(self):
        return self.separated

    def __repr__(self):
        if self.separated:
            return f"SeparationResult(separated, {self.n_points} distinct points)"
        return f"SeparationResult(witness={self.witness})"


def separates_points(D, sample, tol=1e-12, metric=None):
    """Check that ``D`` tells apart every pair of distinct sample points.

    Points within ``tol`` of each other under ``metric`` count as one. Returns
    a :class:`SeparationResult` that is falsy and carries a witness pair when
    some distinct pair has ``max_f |f(x) - f(y)| <= tol``.
    """
    family = D if isinstance(D, FunctionFamily) else FunctionFamily(D)
    metric = resolve_metric(metric)
    P = _batch(sample)
    if len(P) < 2:
        raise PathSpaceError("separation check needs at least two sample points")
    keep = []
    for i in range(len(P)):
        if not keep or np.all(metric.dist(P[keep], P[i]) > tol):
            keep.append(i)
    P = P[keep]
    V = family.values(P)
    for i in range(len(P) - 1):
        gap = np.max(np.abs(V[i + 1 :] - V[i]), axis=1)
        bad = np.nonzero(gap <= tol)[0]
        if len(bad):
            j = i + 1 + int(bad[0])
            return SeparationResult(witness=(P[i].copy(), P[j].copy()), n_points=len(P))
    return SeparationResult(n_points=len(P))


def rho_family(D, x, y):
    """ρ_D between two points, or the max-over-coordinates version on tuples.

    A 1-D ``x`` is one state; a 2-D ``x`` of shape ``(d, dim)`` is a d-tuple.
    """
    family = D if isinstance(D, FunctionFamily) else FunctionFamily(D)
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1)
    if Y.ndim == 0:
        Y = Y.reshape(1)
    if X.shape != Y.shape:
        raise PathSpaceError(f"arity mismatch: {X.shape} vs {Y.shape}")
    if X.ndim == 1:
        return float(family.rho_values(X[None, :], Y[None, :])[0])
    return float(np.max(family.rho_values(X, Y)))


def epsilon_envelope_contains(A, eps, x, metric=None) -> bool:
    """Whether ``x`` lies in the open ε-envelope ``{z : r(z, y) < ε for some y in A}``."""
    metric = resolve_metric(metric)
    P = _batch(A)
    if len(P) == 0:
        raise PathSpaceError("envelope of an empty set")
    return bool(np.min(metric.dist(P, as_point(x))) < eps)
