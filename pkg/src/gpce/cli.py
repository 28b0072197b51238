"""Command-line interface: ``gpce build|stats|sample|validate|gram|hermite``.

Exit codes are 0 on success, 1 when a validation suite fails, 2 for bad
input (flags, configs, covariance or model files, failed builds) and 3 for
file-system errors.  Numbers in reports are printed with 12 significant
digits; model files keep full double precision so they round-trip.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import scenarios
from .errors import GpceError
from .gaussian import (
    DEFAULT_SKIP,
    GaussianMeasure,
    QmcConfig,
    make_measure,
    parse_covariance,
    read_covariance,
)
from .hermite import build_basis, index_label, parse_index_label, polynomial_from_dict
from .moments import gram_matrix
from .pce import (
    PolynomialOutput,
    build_pce,
    model_from_json,
    model_to_json,
    sample_surrogate,
    variance,
)
from .validation import SUITES, run_suite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_IO = 3

DIGITS = 12


class InputError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


class ValidationFailed(Exception):
    """A validation suite had a failing check; maps to exit code 1."""


def fmt(value: float) -> str:
    return f"{float(value):.{DIGITS}g}"


def rounded(value: float) -> float:
    return float(fmt(value))


# -- run configuration ---------------------------------------------------------

@dataclass
class RunConfig:
    """Everything ``build`` needs, merged from ``--config`` and the flags."""

    covariance: np.ndarray
    order: int
    function: object
    method: str | QmcConfig
    center: bool = True
    out: str | None = None

    @property
    def dimension(self) -> int:
        return self.covariance.shape[0]


def _parse_params(text: str) -> dict:
    params = {}
    for item in filter(None, text.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"expected key=value, got {item!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise InputError(f"parameter {key.strip()!r} is not a number: {value!r}") from None
    return params


def _function_spec(raw) -> tuple[str, dict]:
    """Normalize a function spec to ``(name, params)``.

    Accepted forms: ``"example1_case2"``, ``"example2:t=1,rho=0.5"``, a
    mapping ``{"name": ..., **params}``, a mapping ``{"polynomial": {...}}``
    or a JSON string of either mapping.
    """
    if isinstance(raw, str):
        text = raw.strip()
        if text.startswith("{"):
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise InputError(f"function literal is not valid JSON: {exc.msg}") from None
        else:
            name, _, params = text.partition(":")
            return name, _parse_params(params)
    if not isinstance(raw, dict):
        raise InputError("function must be a name or a JSON object")
    if "polynomial" in raw:
        return "polynomial", {"terms": raw["polynomial"]}
    if "name" not in raw:
        # a bare mapping of index labels is taken as a polynomial literal
        return "polynomial", {"terms": raw}
    params = {k: v for k, v in raw.items() if k != "name"}
    return str(raw["name"]), params


def resolve_function(raw, covariance: np.ndarray | None):
    """Return ``(output, default_covariance)`` for a function spec."""
    name, params = _function_spec(raw)
    if name.startswith("example1_case"):
        try:
            case = int(name[len("example1_case"):])
            cov = scenarios.example1_covariance(case)
        except (ValueError, KeyError):
            raise InputError(f"unknown builtin {name!r}; cases are 1 to 4") from None
        return scenarios.example1_output(), cov
    if name == "example2":
        t = float(params.get("t", 1.0))
        rho = float(params.get("rho", 0.5))
        if not 0.0 <= t <= 1.0 or not -1.0 < rho < 1.0:
            raise InputError("example2 needs 0 <= t <= 1 and -1 < rho < 1")
        return scenarios.example2_output(t), scenarios.example2_covariance(rho)
    if name == "example3_synthetic":
        return scenarios.example3_output(), scenarios.example3_covariance()
    if name == "polynomial":
        terms = params["terms"]
        if not isinstance(terms, dict):
            raise InputError("polynomial literal must map index labels to numbers")
        dim = None if covariance is None else covariance.shape[0]
        try:
            poly = polynomial_from_dict(terms, dim)
        except (ValueError, TypeError) as exc:
            raise InputError(f"bad polynomial literal: {exc}") from None
        if any(len(j) != poly.dimension for j in poly.terms):
            raise InputError("polynomial literal mixes index lengths")
        return PolynomialOutput(poly), None
    raise InputError(f"unknown function {name!r}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    return data


def _covariance_from(value) -> np.ndarray:
    """A covariance given as a file path or as nested arrays."""
    if isinstance(value, str):
        return read_covariance(value)
    return parse_covariance(json.dumps(value), "json")


def _sigma(args, config: dict) -> np.ndarray | None:
    if getattr(args, "sigma", None):
        return read_covariance(args.sigma)
    if "covariance" in config:
        return _covariance_from(config["covariance"])
    return None


def run_config(args) -> RunConfig:
    config = _load_config(args.config)
    covariance = _sigma(args, config)
    raw_fn = args.function if args.function is not None else config.get("function")
    if raw_fn is None:
        raise InputError("no output function given (use --function or the config)")
    output, default_cov = resolve_function(raw_fn, covariance)
    if covariance is None:
        covariance = default_cov
    if covariance is None:
        raise InputError("no covariance given (use --sigma or the config)")
    if output.dimension != covariance.shape[0]:
        raise InputError(f"function has dimension {output.dimension}, "
                         f"covariance is {covariance.shape[0]}x{covariance.shape[0]}")
    if "dimension" in config and int(config["dimension"]) != covariance.shape[0]:
        raise InputError(f"config dimension {config['dimension']} does not match the covariance")

    order = args.order if args.order is not None else config.get("order")
    if order is None:
        raise InputError("no order given (use --order or the config)")
    order = int(order)
    if order < 0:
        raise InputError("order must be non-negative")

    qmc = dict(config.get("qmc", {}))
    if args.qmc is not None:
        qmc["sample_count"] = args.qmc
    if args.skip is not None:
        qmc["skip"] = args.skip
    method_name = config.get("method", "qmc" if "sample_count" in qmc else "exact")
    if args.qmc is not None:
        method_name = "qmc"
    if method_name == "qmc":
        if "sample_count" not in qmc:
            raise InputError("qmc method needs a sample count (use --qmc)")
        try:
            method = QmcConfig(int(qmc["sample_count"]), covariance.shape[0],
                               int(qmc.get("skip", DEFAULT_SKIP)))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    elif method_name == "exact":
        if not output.exact:
            raise InputError("the exact method needs a builtin or polynomial output")
        method = "exact"
    else:
        raise InputError(f"unknown method {method_name!r}")
    center = not args.raw_qmc and bool(config.get("centered", True))
    out = args.out if args.out is not None else config.get("out")
    return RunConfig(covariance, order, output, method, center, out)


# -- output helpers ---------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _report_dict(report) -> dict:
    return {"mean": rounded(report.mean), "variance": rounded(report.variance),
            "contributions": [rounded(v) for v in report.contributions]}


def _report_csv(report) -> str:
    rows = ["quantity,value", f"mean,{fmt(report.mean)}", f"variance,{fmt(report.variance)}"]
    rows += [f"variance_degree_{l},{fmt(v)}" for l, v in enumerate(report.contributions, start=1)]
    return "\n".join(rows) + "\n"


def _measure(args) -> GaussianMeasure:
    config = _load_config(args.config)
    cov = _sigma(args, config)
    if cov is None and (args.function or config.get("function")):
        _, cov = resolve_function(args.function or config["function"], None)
    if cov is None:
        raise InputError("no covariance given (use --sigma, --function or the config)")
    return make_measure(cov)


# -- subcommands ------------------------------------------------------------------

def cmd_build(args) -> int:
    cfg = run_config(args)
    measure = make_measure(cfg.covariance)
    try:
        model = build_pce(measure, cfg.function, cfg.order, cfg.method, center=cfg.center)
    except GpceError as exc:
        raise type(exc)(f"build: {exc}") from exc
    _emit(model_to_json(model), cfg.out)
    if cfg.out is not None:
        report = variance(model)
        print(f"mean {fmt(report.mean)}")
        print(f"variance {fmt(report.variance)}")
    return EXIT_OK


def cmd_stats(args) -> int:
    model = model_from_json(Path(args.model).read_text())
    report = variance(model)
    if args.format == "csv":
        text = _report_csv(report)
    else:
        text = json.dumps(_report_dict(report), indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _hist_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + "_hist" + (p.suffix or ".csv"))


def cmd_sample(args) -> int:
    if args.n < 1:
        raise InputError("--n must be at least 1")
    model = model_from_json(Path(args.model).read_text())
    values, hist = sample_surrogate(model, args.n, args.seed)
    samples = "value\n" + "".join(fmt(v) + "\n" for v in values)
    rows = ["bin_left,bin_right,count,density"]
    for lo, hi, c, d in zip(hist.edges[:-1], hist.edges[1:], hist.counts, hist.density):
        rows.append(f"{fmt(lo)},{fmt(hi)},{int(c)},{fmt(d)}")
    Path(args.out).write_text(samples)
    hist_out = Path(args.hist) if args.hist else _hist_path(args.out)
    hist_out.write_text("\n".join(rows) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    checks = run_suite(args.suite)
    failed = [c for c in checks if not c.passed]
    verdict = {
        "suite": args.suite,
        "passed": not failed,
        "count": len(checks),
        "failures": len(failed),
        "checks": [{"name": c.name, "expected": rounded(c.expected), "got": rounded(c.got),
                    "error": float(f"{c.error:.3g}"), "tolerance": c.tolerance,
                    "passed": c.passed} for c in checks],
    }
    _emit(json.dumps(verdict, indent=2) + "\n", args.out)
    if failed:
        raise ValidationFailed(failed[0].describe())
    return EXIT_OK


def cmd_gram(args) -> int:
    measure = _measure(args)
    if args.degree < 0:
        raise InputError("--degree must be non-negative")
    gram = gram_matrix(measure, args.degree)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([index_label(j) for j in gram.indices])
    for row in gram.entries:
        writer.writerow([fmt(v) for v in row])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_hermite(args) -> int:
    measure = _measure(args)
    if args.index:
        try:
            indices = [parse_index_label(s) for s in args.index]
        except ValueError:
            raise InputError("indices look like 1,0,2") from None
        if any(len(j) != measure.dimension or min(j) < 0 for j in indices):
            raise InputError(f"indices need {measure.dimension} non-negative entries")
        order = max(sum(j) for j in indices)
    else:
        if args.order is None:
            raise InputError("give --index or --order")
        order = args.order
        indices = None
    basis = build_basis(measure, order)
    if indices is None:
        indices = [e.index for e in basis.entries()]
    out = {}
    for j in indices:
        psi = basis.psi(j)
        keys = sorted(psi.terms, key=lambda k: (sum(k), tuple(-v for v in k)))
        out[index_label(j)] = {index_label(k): rounded(psi.terms[k]) for k in keys}
    text = json.dumps(out[index_label(indices[0])] if len(indices) == 1 else out, indent=2)
    _emit(text + "\n", args.out)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpce", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def covariance_flags(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--sigma", help="covariance file (.csv or .json)")
        p.add_argument("--function", help="builtin name, name:key=value,... or JSON literal")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("build", help="build an expansion and write the model JSON")
    covariance_flags(p)
    p.add_argument("--order", type=int)
    p.add_argument("--qmc", type=int, metavar="L", help="use L quasi-Monte Carlo points")
    p.add_argument("--skip", type=int, help=f"leading Sobol points dropped (default {DEFAULT_SKIP})")
    p.add_argument("--raw-qmc", action="store_true",
                   help="do not subtract the sample mean in the QMC estimator")
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser("stats", help="mean and variance of a model")
    p.add_argument("model")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("sample", help="sample a model surrogate and bin the values")
    p.add_argument("model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="samples CSV")
    p.add_argument("--hist", help="histogram CSV (default: <out>_hist.csv)")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("validate", help="run a reproduction suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--out")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("gram", help="print the Gram matrix of one degree as CSV")
    covariance_flags(p)
    p.add_argument("--degree", type=int, required=True)
    p.set_defaults(handler=cmd_gram)

    p = sub.add_parser("hermite", help="print standardized Hermite polynomials as JSON")
    covariance_flags(p)
    p.add_argument("--index", action="append", help="multi-index such as 1,0,1 (repeatable)")
    p.add_argument("--order", type=int, help="print every polynomial up to this degree")
    p.set_defaults(handler=cmd_hermite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ValidationFailed as exc:
        print(f"gpce {args.command}: validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"gpce {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InputError, GpceError, ValueError, KeyError, TypeError) as exc:
        print(f"gpce {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
