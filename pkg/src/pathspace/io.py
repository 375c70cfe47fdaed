"""JSON file formats and report writers.

Path::

    {"horizon": {"kind": "halfline"} | {"kind": "interval", "a": 0, "b": 2},
     "breakpoints": [...], "values": [[...], ...],
     "left_values": [[...], ...], "tail_slope": [...]}   # piecewise-linear only

Measure::

    {"atoms": [{"point": [...], "weight": 0.5}, ...]}

Family: a list of constructor records such as ``{"kind": "tent", "center": [0], "k": 2}``.
Base: ``{"region": ..., "family": [...], "anchor": [...], "reference_sample": [...]}``.
Ensemble: sampler config plus ``"paths"``.

Validation errors are :class:`PathSpaceError` naming the file and field.
JSON output uses sorted keys and full float precision, so equal values give
byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .exceptions import PathSpaceError, TrivialMeasureError
from .families import (
    ONE,
    Constant,
    Coordinate,
    FunctionFamily,
    Product,
    Scaled,
    Sum,
    Tent,
    TruncatedPolynomial,
)
from .measures import DiscreteMeasure
from .paths import Horizon, PiecewiseLinearPath, StepPath
from .states import Metric

__all__ = [
    "read_json",
    "write_json",
    "write_csv",
    "horizon_from_record",
    "path_from_record",
    "load_path",
    "save_path",
    "measure_from_record",
    "load_measure",
    "save_measure",
    "metric_from_record",
    "function_from_record",
    "family_from_record",
    "load_family",
    "save_family",
    "base_from_record",
    "load_base",
    "save_base",
    "ensemble_from_record",
    "load_ensemble",
    "save_ensemble",
]


def read_json(path):
    """Parse a JSON file. ``OSError`` and ``JSONDecodeError`` propagate."""
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


def csv_text(rows, columns=None):
    rows = list(rows)
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in columns})
    return buf.getvalue()


def write_csv(rows, path, columns=None):
    """Write dict rows; floats with 17 significant digits."""
    Path(path).write_text(csv_text(rows, columns), encoding="utf-8")


def _where(src, field):
    return f"{src}: {field}" if src else field


def _field(rec, key, src):
    if not isinstance(rec, dict):
        raise PathSpaceError(f"{_where(src, key)}: expected a JSON object, got {type(rec).__name__}")
    if key not in rec:
        raise PathSpaceError(f"{_where(src, key)}: missing field")
    return rec[key]


def _wrap(src, field, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PathSpaceError as exc:
        raise type(exc)(f"{_where(src, field)}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise PathSpaceError(f"{_where(src, field)}: {exc}") from exc


# ---------------------------------------------------------------------------
# paths


def horizon_from_record(rec, src=""):
    if rec is None:
        return Horizon.halfline()
    kind = _field(rec, "kind", src + " horizon" if src else "horizon")
    if kind == "halfline":
        return Horizon.halfline()
    if kind == "interval":
        return _wrap(src, "horizon", Horizon.interval, _field(rec, "a", src), _field(rec, "b", src))
    raise PathSpaceError(f"{_where(src, 'horizon.kind')}: unknown horizon kind {kind!r}")


def path_from_record(rec, src=""):
    h = horizon_from_record(rec.get("horizon") if isinstance(rec, dict) else None, src)
    bps = _field(rec, "breakpoints", src)
    vals = _field(rec, "values", src)
    if "left_values" in rec or "tail_slope" in rec:
        return _wrap(src, "breakpoints/values", PiecewiseLinearPath, bps, vals, rec.get("left_values"), h,
                     rec.get("tail_slope"))
    return _wrap(src, "breakpoints/values", StepPath, bps, vals, h)


def load_path(path):
    return path_from_record(read_json(path), str(path))


def save_path(x, path):
    write_json(x.to_record(), path)


# ---------------------------------------------------------------------------
# measures


def measure_from_record(rec, src=""):
    atoms = _field(rec, "atoms", src)
    if not isinstance(atoms, list):
        raise PathSpaceError(f"{_where(src, 'atoms')}: expected a list")
    pts, ws = [], []
    for i, a in enumerate(atoms):
        w = float(_field(a, "weight", f"{src} atoms[{i}]"))
        if not np.isfinite(w) or w < 0:
            raise PathSpaceError(f"{_where(src, f'atoms[{i}].weight')}: weight must be finite and >= 0")
        if w == 0:
            continue
        pts.append(_field(a, "point", f"{src} atoms[{i}]"))
        ws.append(w)
    if not ws:
        raise TrivialMeasureError(f"{_where(src, 'atoms')}: total mass is zero")
    return _wrap(src, "atoms", DiscreteMeasure, pts, ws, rec.get("metadata"))


def load_measure(path):
    return measure_from_record(read_json(path), str(path))


def save_measure(mu, path):
    write_json(mu.to_record(), path)


# ---------------------------------------------------------------------------
# families


def metric_from_record(rec, src=""):
    if rec is None:
        return Metric()
    kind = _field(rec, "kind", src)
    if kind == "euclidean":
        return Metric()
    if kind == "truncated":
        return _wrap(src, "metric.cap", Metric, "truncated", cap=_field(rec, "cap", src))
    if kind == "table":
        return _wrap(src, "metric.table", Metric, "table", table=_field(rec, "table", src))
    if kind == "rho":
        return Metric("rho", family=family_from_record(_field(rec, "family", src), src))
    raise PathSpaceError(f"{_where(src, 'metric.kind')}: unknown metric kind {kind!r}")


def function_from_record(rec, src=""):
    kind = _field(rec, "kind", src)
    if kind == "one":
        return ONE
    if kind == "constant":
        return Constant(float(_field(rec, "value", src)))
    if kind == "coordinate":
        return _wrap(src, "coordinate", Coordinate, rec.get("index", 0), rec.get("bound", 1.0))
    if kind == "tent":
        metric = metric_from_record(rec.get("metric"), src)
        return _wrap(src, "tent", Tent, _field(rec, "center", src), _field(rec, "k", src), metric)
    if kind == "polynomial":
        return _wrap(src, "polynomial", TruncatedPolynomial, _field(rec, "coeffs", src), rec.get("lo", 0.0),
                     rec.get("hi", 1.0), rec.get("index", 0))
    if kind == "sum":
        return Sum([function_from_record(t, src) for t in _field(rec, "terms", src)])
    if kind == "product":
        return Product([function_from_record(t, src) for t in _field(rec, "factors", src)])
    if kind == "scale":
        return Scaled(float(_field(rec, "a", src)), function_from_record(_field(rec, "f", src), src))
    raise PathSpaceError(f"{_where(src, 'kind')}: unknown function kind {kind!r}")


def family_from_record(rec, src=""):
    if isinstance(rec, dict):
        rec = _field(rec, "family", src)
    if not isinstance(rec, list):
        raise PathSpaceError(f"{_where(src, 'family')}: expected a list of function records")
    return FunctionFamily([function_from_record(r, f"{src} family[{i}]") for i, r in enumerate(rec)])


def load_family(path):
    return family_from_record(read_json(path), str(path))


def save_family(family, path):
    write_json(family.to_records(), path)


# ---------------------------------------------------------------------------
# bases and ensembles


def base_from_record(rec, src=""):
    from .regions import region_from_record
    from .replication import build_base

    region = _wrap(src, "region", region_from_record, _field(rec, "region", src))
    family = family_from_record(_field(rec, "family", src), src)
    return _wrap(
        src, "base", build_base, region, family, _field(rec, "anchor", src),
        _field(rec, "reference_sample", src), rec.get("tol", 1e-12), rec.get("membership_tol", 1e-9),
    )


def load_base(path):
    return base_from_record(read_json(path), str(path))


def save_base(base, path):
    write_json(base.to_record(), path)


def ensemble_from_record(rec, src=""):
    from .processes import ProcessEnsemble

    paths = _field(rec, "paths", src)
    if not isinstance(paths, list) or not paths:
        raise PathSpaceError(f"{_where(src, 'paths')}: expected a non-empty list")
    ps = [path_from_record(p, f"{src} paths[{i}]") for i, p in enumerate(paths)]
    return _wrap(src, "paths", ProcessEnsemble.from_paths, ps, sampler=rec.get("sampler", "custom-paths"),
                 params=rec.get("params"), seed=rec.get("seed"))


def load_ensemble(path):
    return ensemble_from_record(read_json(path), str(path))


def save_ensemble(ens, path):
    write_json(ens.to_record(), path)
