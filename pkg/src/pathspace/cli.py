"""Command-line front end.

Subcommands: dist, modulus, tightness, fdc, replicate, simulate, report.
Every report embeds the full run configuration, including the seed.
Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

from . import io
from .exceptions import PathSpaceError
from .families import FunctionFamily
from .paths import Horizon
from .processes import (
    SAMPLERS,
    band_prob,
    fdc_test,
    lmtc_profile,
    mcc_probe,
    mpcc_check,
    simulate,
)
from .regions import region_from_record
from .replication import replica_measure, replica_process
from .skorokhod import SkoOptions, modulus_w_prime, sko_dist

__all__ = ["RunConfig", "build_parser", "run", "main"]


@dataclass
class RunConfig:
    subcommand: str
    inputs: list = field(default_factory=list)
    seed: int | None = None
    samples: int | None = None
    tol: float | None = None
    window: int | None = None
    out: str | None = None
    format: str = "json"
    parallel: int = 1
    options: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise PathSpaceError(f"{self.prog}: {message}")


def _floats(text, name):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise PathSpaceError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise PathSpaceError(f"--{name}: no values given")
    return vals


def _pair(text, name):
    vals = _floats(text, name)
    if len(vals) != 2:
        raise PathSpaceError(f"--{name}: expected two values a,b, got {text!r}")
    return vals


def _horizon(text):
    if text is None or text == "halfline":
        return None if text is None else Horizon.halfline()
    a, b = _pair(text, "horizon")
    return Horizon.interval(a, b)


def _params(text):
    if not text:
        return {}
    try:
        p = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PathSpaceError(f"--params: invalid JSON ({exc.msg})") from None
    if not isinstance(p, dict):
        raise PathSpaceError("--params: expected a JSON object")
    return p


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit seed for all randomness")
    common.add_argument("--samples", type=int, default=None, help="number of sampled paths")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--window", type=int, default=None, help="trailing window for limit checks")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--parallel", type=int, default=1, help="worker threads")

    p = _Parser(prog="pathspace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("dist", parents=[common], help="Skorokhod J1 distance between two step paths")
    s.add_argument("x")
    s.add_argument("y")
    s.add_argument("--horizon", default=None, help="'a,b' or 'halfline' (default: the paths' horizon)")
    s.add_argument("--depth", type=int, default=SkoOptions.matching_depth)
    s.add_argument("--grid", type=int, default=SkoOptions.refine_grid)

    s = sub.add_parser("modulus", parents=[common], help="modulus w' over a grid of delta")
    s.add_argument("path")
    s.add_argument("--deltas", required=True)
    s.add_argument("--T", type=float, required=True)

    s = sub.add_parser("tightness", parents=[common], help="containment and modulus diagnostics")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--sampler", choices=SAMPLERS)
    src.add_argument("--ensemble", help="ensemble file instead of a sampler")
    s.add_argument("--params", default=None, help="sampler parameters as a JSON object")
    s.add_argument("--check", choices=("band", "mpcc", "lmtc", "mcc"), default="band")
    s.add_argument("--band", default=None, help="a,b")
    s.add_argument("--T", type=float, default=None)
    s.add_argument("--schedule", default=None, help="T_1,T_2,... for lmtc")
    s.add_argument("--step", type=float, default=0.01, help="quadrature step for lmtc")
    s.add_argument("--closed-form", action="store_true", help="lmtc from the eta closed form")
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--t", type=float, default=None, help="time for mpcc")
    s.add_argument("--region", default=None, help="region file for mpcc")
    s.add_argument("--deltas", default=None, help="delta grid for mcc")

    s = sub.add_parser("fdc", parents=[common], help="finite-dimensional convergence test")
    s.add_argument("--sequence", nargs="+", required=True, help="ensemble files X^1, X^2, ...")
    s.add_argument("--limit", required=True, help="limit ensemble file")
    s.add_argument("--family", required=True, help="family file")
    s.add_argument("--times", required=True, help="time sets separated by ';', e.g. '0;1,2'")
    s.add_argument("--max-factors", type=int, default=2)

    s = sub.add_parser("replicate", parents=[common], help="replica measure or ensemble")
    s.add_argument("base")
    what = s.add_mutually_exclusive_group(required=True)
    what.add_argument("--measure")
    what.add_argument("--ensemble")
    s.add_argument("--times", default=None, help="sample times for piecewise-linear paths")

    s = sub.add_parser("simulate", parents=[common], help="write a sampled ensemble")
    s.add_argument("--sampler", choices=SAMPLERS, required=True)
    s.add_argument("--params", default=None)
    s.add_argument("--horizon", default=None)

    s = sub.add_parser("report", parents=[common], help="merge JSON reports into one CSV")
    s.add_argument("reports", nargs="+")
    return p


def _need(value, name):
    if value is None:
        raise PathSpaceError(f"--{name} is required for this subcommand")
    return value


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _rows(report, source=None):
    for key, val in _flatten(report):
        row = {"key": key, "value": val}
        if source is not None:
            row = {"source": source, **row}
        yield row


def _emit(cfg, payload):
    text = io.csv_text(_rows(payload)) if cfg.format == "csv" else io.dumps(payload)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_dist(a, cfg):
    x, y = io.load_path(a.x), io.load_path(a.y)
    opts = SkoOptions(matching_depth=a.depth, refine_grid=a.grid, tol=a.tol or SkoOptions.tol)
    cfg.options.update(horizon=a.horizon, depth=a.depth, grid=a.grid)
    r = sko_dist(x, y, horizon=_horizon(a.horizon), opts=opts)
    return r.to_dict()


def _cmd_modulus(a, cfg):
    x = io.load_path(a.path)
    deltas = _floats(a.deltas, "deltas")
    cfg.options.update(deltas=deltas, T=a.T)
    for d in deltas:
        if d >= a.T:
            raise PathSpaceError(f"--deltas: delta={d} must be smaller than --T={a.T}")
    return {"table": [{"delta": d, "w_prime": modulus_w_prime(x, d, a.T)} for d in deltas]}


def _ensemble(a, cfg):
    if a.ensemble:
        return io.load_ensemble(a.ensemble)
    seed = _need(cfg.seed, "seed")
    n = _need(cfg.samples, "samples")
    params = _params(a.params)
    cfg.options.update(sampler=a.sampler, params=params)
    return simulate(a.sampler, n, seed, params=params, parallel=cfg.parallel)


def _cmd_tightness(a, cfg):
    cfg.options.update(check=a.check)
    if a.check == "lmtc":
        band = _pair(_need(a.band, "band"), "band")
        schedule = _floats(_need(a.schedule, "schedule"), "schedule")
        cfg.options.update(band=band, schedule=schedule, step=a.step, closed_form=a.closed_form)
        if a.closed_form:
            if a.sampler != "eta":
                raise PathSpaceError("--closed-form is only available for --sampler eta")
            return lmtc_profile("eta", schedule, band).to_dict()
        return lmtc_profile(_ensemble(a, cfg), schedule, band, step=a.step, mode="mc").to_dict()
    ens = _ensemble(a, cfg)
    if a.check == "band":
        band = _pair(_need(a.band, "band"), "band")
        T = _need(a.T, "T")
        cfg.options.update(band=band, T=T)
        return band_prob(ens, band, T).to_dict()
    if a.check == "mpcc":
        eps, t = _need(a.eps, "eps"), _need(a.t, "t")
        region = region_from_record(io.read_json(_need(a.region, "region")))
        cfg.options.update(eps=eps, t=t, region=a.region)
        return mpcc_check([ens], eps, t, region).to_dict()
    eps, T = _need(a.eps, "eps"), _need(a.T, "T")
    deltas = _floats(_need(a.deltas, "deltas"), "deltas")
    cfg.options.update(eps=eps, T=T, deltas=deltas)
    return mcc_probe([ens], eps, T, deltas).to_dict()


def _cmd_fdc(a, cfg):
    seq = [io.load_ensemble(f) for f in a.sequence]
    limit = io.load_ensemble(a.limit)
    family = io.load_family(a.family)
    gens = [f for f in family if not (family.one_index is not None and f == family[family.one_index])]
    times = [_floats(t, "times") for t in a.times.split(";")]
    tol = _need(cfg.tol, "tol")
    window = _need(cfg.window, "window")
    cfg.options.update(times=times, max_factors=a.max_factors)
    r = fdc_test(seq, limit, FunctionFamily(gens or list(family)), times, tol, window, a.max_factors)
    return r.to_dict()


def _cmd_replicate(a, cfg):
    base = io.load_base(a.base)
    if a.measure:
        mu = replica_measure(base, io.load_measure(a.measure))
        out = mu.to_record()
    else:
        times = _floats(a.times, "times") if a.times else None
        ens = replica_process(base, io.load_ensemble(a.ensemble), cfg.tol, times)
        out = ens.to_record()
    return {"result": out}


def _cmd_simulate(a, cfg):
    seed = _need(cfg.seed, "seed")
    n = _need(cfg.samples, "samples")
    params = _params(a.params)
    cfg.options.update(sampler=a.sampler, params=params, horizon=a.horizon)
    ens = simulate(a.sampler, n, seed, horizon=_horizon(a.horizon), params=params, parallel=cfg.parallel)
    return ens.to_record()


def _cmd_report(a, cfg):
    rows = []
    for f in a.reports:
        rows.extend(_rows(io.read_json(f), source=f))
    return rows


_COMMANDS = {
    "dist": _cmd_dist,
    "modulus": _cmd_modulus,
    "tightness": _cmd_tightness,
    "fdc": _cmd_fdc,
    "replicate": _cmd_replicate,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
}


def run(argv=None):
    """Parse ``argv``, run the subcommand and write its report. Returns the exit code."""
    try:
        a = build_parser().parse_args(argv)
        inputs = [v for k in ("x", "y", "path", "base", "measure", "ensemble", "limit", "family")
                  for v in [getattr(a, k, None)] if isinstance(v, str)]
        inputs += list(getattr(a, "sequence", None) or []) + list(getattr(a, "reports", None) or [])
        cfg = RunConfig(a.subcommand, inputs, a.seed, a.samples, a.tol, a.window, a.out, a.format,
                        a.parallel)
        result = _COMMANDS[a.subcommand](a, cfg)
        if a.subcommand == "report":
            text = io.csv_text(result)
            if cfg.out:
                with open(cfg.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0
        # where the output goes and how many threads made it do not change
        # any number, and leaving them out keeps reruns byte-identical
        config = {k: v for k, v in asdict(cfg).items() if k not in ("out", "parallel")}
        if a.subcommand == "simulate":
            payload = result
            payload["config"] = config
        else:
            payload = {"config": config, **result}
        _emit(cfg, payload)
        return 0
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PathSpaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
