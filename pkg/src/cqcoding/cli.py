"""Batch experiment runner driven by JSON configuration files.

Usage::

    cqcoding capacity --config exp.json --out results/ --format csv

Each run writes ``<kind>.csv`` (or ``<kind>.json`` with ``--format json``)
and a ``<kind>_report.json`` that embeds the SHA-256 hash of the canonical
configuration. Exit codes: 0 success, 2 invalid configuration, 3 resource
limit hit (partial results are written and flagged), 4 numerical or
invariant failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import capacity as cap
from . import coding, typicality
from .channels import channel_from_dict, mixing_defect
from .errors import CQError, ResourceError
from .joint import build_joint, holevo_information
from .operators import dimension_cap, matrix_from_json
from .sources import IIDProcess, process_from_dict

log = logging.getLogger("cqcoding")

KINDS = ("capacity", "typicality", "code", "converse", "mixing", "aep")

_MATRIX = {"type": "array", "items": {"type": "array"}}
_PROB = {"type": "array", "items": {"type": "number", "minimum": 0}}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema"],
    "properties": {
        "schema": {"const": 1},
        "kind": {"enum": list(KINDS)},
        "channel": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["memoryless", "classical", "markov_noise", "finite_memory"]},
                "labels": {"type": "array", "items": {"type": "string"}},
                "signals": {"type": "object", "additionalProperties": _MATRIX},
                "stochastic": {"type": "array", "items": _PROB},
                "memory": {"type": "integer", "minimum": 0},
                "window_signals": {"type": "array", "items": {
                    "type": "object", "required": ["window", "state"],
                    "properties": {"window": {"type": "array"}, "state": _MATRIX}}},
                "noise_symbols": {"type": "array"},
                "noise_order": {"type": "integer", "minimum": 1},
                "transition": {"type": "array", "items": _PROB},
                "stationary": _PROB,
                "kraus": {"type": "object",
                          "additionalProperties": {"type": "array", "items": _MATRIX}},
            },
        },
        "process": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["iid", "markov", "periodic_product", "shift_average"]},
                "labels": {"type": "array", "items": {"type": "string"}},
                "base": {"type": "object"},
                "probs": _PROB,
                "order": {"type": "integer", "minimum": 1},
                "transition": {"type": "array", "items": _PROB},
                "stationary": _PROB,
                "period": {"type": "integer", "minimum": 1},
                "block_dist": _PROB,
            },
        },
        "params": {
            "type": "object",
            "properties": {
                "n": {"type": "array", "items": {"type": "integer", "minimum": 1},
                      "minItems": 1},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "eps_list": {"type": "array",
                             "items": {"type": "number", "exclusiveMinimum": 0}},
                "lambda": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["iterative", "grid"]},
                "order": {"enum": ["lex", "reverse", "shuffle"]},
                "capacity": {"type": "number", "minimum": 0},
                "source": {"enum": ["output", "joint"]},
                "x": {"type": "array"},
                "b1": _MATRIX,
                "b2": _MATRIX,
                "gaps": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "seed": {"type": "integer"},
                "threads": {"type": "integer", "minimum": 1},
                "dim_cap": {"type": "integer", "minimum": 1},
            },
        },
        "output": {"type": "object",
                   "properties": {"dir": {"type": "string"}, "stem": {"type": "string"}}},
    },
}

_NEEDS = {"capacity": ("channel",), "typicality": ("channel",), "code": ("channel",),
          "converse": (), "mixing": ("channel",), "aep": ("channel",)}


class ConfigError(CQError, ValueError):
    """Invalid configuration; ``pointer`` locates the offending field."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def validate_config(config: dict, kind: str) -> None:
    """Schema and cross-field validation with JSON-pointer diagnostics."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(_pointer(e.absolute_path), e.message)
    if config.get("kind", kind) != kind:
        raise ConfigError("/kind", f"config is for {config['kind']!r}, not {kind!r}")
    for key in _NEEDS[kind]:
        if key not in config:
            raise ConfigError(f"/{key}", f"required for experiment {kind!r}")


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _build(config: dict, key: str, builder):
    try:
        return builder(config[key])
    except (CQError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ResourceError):
            raise
        raise ConfigError(f"/{key}", str(exc)) from exc


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def _process(config: dict, ch):
    if "process" in config:
        p = _build(config, "process", process_from_dict)
    else:
        p = IIDProcess(np.full(ch.size, 1.0 / ch.size))
    if ch is not None and p.size != ch.size:
        raise ConfigError("/process", "process and channel alphabets differ")
    return p


def _run_capacity(cfg, ch, params, rows):
    for n in params.get("n", [1]):
        r = cap.holevo_cn(ch, n, params.get("tol", 1e-9), params.get("method", "iterative"))
        rows.append({"n": n, "C_n": r.value, "C_n_per_site": r.per_site, "method": r.method,
                     "iterations": r.iterations, "gap_estimate": r.gap_estimate})
    return ["n", "C_n", "C_n_per_site", "method", "iterations", "gap_estimate"]


def _run_typicality(cfg, ch, params, rows):
    p = _process(cfg, ch)
    eps = params.get("eps", 0.25)
    for n in params.get("n", [2]):
        j = build_joint(p, ch, n, params.get("threads", 1))
        r = typicality.conditional_typicality_pipeline(p, ch, n, eps, joint=j)
        rows.append({"n": n, "eps": eps, "size_T": len(r.T), "p_T": r.p_T, "delta": r.delta,
                     "eta": r.eta, "eta_prime": r.eta_prime, "eps_realized": r.eps_realized,
                     "s_cond": r.s_cond,
                     "max_trace_c": max((r.trace_c(x) for x in r.T), default=0)})
    return ["n", "eps", "size_T", "p_T", "delta", "eta", "eta_prime", "eps_realized",
            "s_cond", "max_trace_c"]


def _run_code(cfg, ch, params, rows):
    p = _process(cfg, ch)
    eps, lam = params.get("eps", 0.25), params.get("lambda", 0.1)
    for n in params.get("n", [2]):
        j = build_joint(p, ch, n, params.get("threads", 1))
        r = typicality.conditional_typicality_pipeline(p, ch, n, eps, joint=j)
        code = coding.greedy_code(r, None, lam, order=params.get("order", "lex"),
                                  seed=params.get("seed"))
        max_err, avg_err = coding.evaluate_errors(code, j)
        rows.append({"n": n, "M": code.size, "rate": code.rate, "max_err": max_err,
                     "avg_err": avg_err, "chi_per_site": holevo_information(j) / n})
    return ["n", "M", "rate", "max_err", "avg_err", "chi_per_site"]


def _run_converse(cfg, ch, params, rows):
    if "capacity" in params:
        c_val = params["capacity"]
    elif ch is not None:
        c_val = max(cap.holevo_cn(ch, n, params.get("tol", 1e-9)).per_site
                    for n in params.get("n", [1]))
    else:
        raise ConfigError("/params/capacity", "give a capacity value or a channel")
    for n in params.get("n", [1]):
        for eps in params.get("eps_list", [params.get("eps", 0.25)]):
            rows.append({"n": n, "eps": eps, "capacity": c_val,
                         "floor": cap.weak_converse_floor(c_val, n, eps)})
    return ["n", "eps", "capacity", "floor"]


def _run_mixing(cfg, ch, params, rows):
    d = ch.site_dim
    b1 = matrix_from_json(params["b1"]) if "b1" in params else np.diag(
        [1.0] + [0.0] * (d - 1)).astype(complex)
    b2 = matrix_from_json(params["b2"]) if "b2" in params else b1
    k = round(np.log(b1.shape[0]) / np.log(d))
    gaps = params.get("gaps", list(range(1, 11)))
    x = params.get("x")
    context = [0] * ch.memory if ch.memory else None
    for g in gaps:
        xs = list(x) if x is not None else [0] * (2 * k + g)
        rows.append({"gap": g, "defect": mixing_defect(ch, xs, b1, b2, g, context)})
    return ["gap", "defect"]


def _run_aep(cfg, ch, params, rows):
    p = _process(cfg, ch)
    eps = params.get("eps", 0.1)
    source = params.get("source", "output")
    for n in params.get("n", [4]):
        j = build_joint(p, ch, n, params.get("threads", 1))
        if source == "output":
            view = typicality.BlockSpectrumView.output(j)
            rate = typicality.entropies(j).s_output / n
        else:
            view = typicality.BlockSpectrumView.joint(j)
            rate = typicality.entropies(j).s_joint / n
        beta = typicality.dimension_covering_exponent(view, eps)
        rows.append({"n": n, "beta": beta, "beta_per_site": beta / n, "entropy_rate": rate,
                     "gap": abs(beta / n - rate)})
    return ["n", "beta", "beta_per_site", "entropy_rate", "gap"]


_RUNNERS = {"capacity": _run_capacity, "typicality": _run_typicality, "code": _run_code,
            "converse": _run_converse, "mixing": _run_mixing, "aep": _run_aep}


def run(config: dict, kind: str, out_dir: str | Path | None = None, fmt: str = "csv",
        seed: int | None = None, threads: int | None = None) -> int:
    """Run one experiment and write its artifacts; returns the exit status."""
    config = json.loads(json.dumps(config))
    params = config.setdefault("params", {})
    if seed is not None:
        params["seed"] = seed
    if threads is not None:
        params["threads"] = threads
    validate_config(config, kind)
    out = Path(out_dir or config.get("output", {}).get("dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    stem = config.get("output", {}).get("stem", kind)

    rows: list[dict] = []
    status, partial, message = 0, False, ""
    cap_value = params.get("dim_cap")
    try:
        with dimension_cap(cap_value) if cap_value is not None else contextlib.nullcontext():
            ch = _build(config, "channel", channel_from_dict) if "channel" in config else None
            columns = _RUNNERS[kind](config, ch, params, rows)
    except ResourceError as exc:
        status, partial, message = 3, True, str(exc)
        columns = sorted({k for r in rows for k in r}) if rows else ["n"]
        log.error("resource limit reached: %s", exc)

    if fmt == "csv":
        (out / f"{stem}.csv").write_text(rows_to_csv(rows, columns), encoding="utf-8",
                                         newline="\n")
    else:
        (out / f"{stem}.json").write_text(json.dumps(rows, sort_keys=True, default=float,
                                                     indent=1) + "\n", encoding="utf-8")
    report = {"kind": kind, "config_hash": config_hash(config), "partial": partial,
              "message": message, "rows": len(rows), "columns": columns,
              "results": rows, "config": config}
    (out / f"{stem}_report.json").write_text(
        json.dumps(report, sort_keys=True, default=float, indent=1) + "\n", encoding="utf-8")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqcoding", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run a {kind} experiment")
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config, args.kind, args.out, args.format, args.seed, args.threads)
    except ConfigError as exc:
        print(f"error: invalid config at {exc}", file=sys.stderr)
        return 2
    except CQError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
