"""Command-line front end.

    scalekit [--out DIR] [--format {csv,json-lines}] [--seed N] COMMAND ...

Commands: ``complexity``, ``scale``, ``sweep``, ``sample``, ``fit-runtime``
and ``predict``.  Each writes its artifacts under ``--out`` and prints a
short summary.  Exit codes: 0 success, 2 unresolvable model or I/O failure,
3 invalid or unparsable input, 4 sampling exhausted, 64 usage error.

Every ``cmd_*`` function can also be called directly and returns a
:class:`CommandResult` instead of exiting.
"""

from __future__ import annotations

import argparse
import csv
import functools
import io
import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .complexity import ComplexityReport, network_complexity
from .errors import (
    DegenerateDataError,
    DegenerateResolutionError,
    DesignError,
    DivisibilityError,
    DomainError,
    ExhaustionError,
    InvalidSpecError,
    SpecParseError,
    UnknownModelError,
)
from .families import DesignSpaceRanges, get_model, parse_flops, sample_design_space
from .ir import NetworkSpec, load_spec, save_spec, validate_network
from .runtime import (
    FeatureSet,
    RuntimeModel,
    compare_metrics,
    correlation_report,
    fit_runtime,
    load_measurements,
    predict_runtime,
)
from .scaling import (
    ScaleRequest,
    fast_policy,
    loglog_slope,
    policy_from_name,
    predicted_multipliers,
    scale_network,
    sweep,
    SWEEP_FIELDS,
)

EXIT_OK = 0
EXIT_RESOLVE = 2
EXIT_INVALID = 3
EXIT_EXHAUSTED = 4
EXIT_USAGE = 64

FORMATS = ("csv", "json-lines")
DEFAULT_POLICIES = "w,dWr,dwr,dw"
DEFAULT_GRID = "1,2,4,8,16,32,64,128"


class UsageError(Exception):
    pass


@dataclass
class CommandResult:
    exit_code: int
    artifacts: list = field(default_factory=list)
    summary: str = ""

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OK


def _exit_code(exc: BaseException) -> int | None:
    if isinstance(exc, (UsageError, DomainError)):
        return EXIT_USAGE
    if isinstance(exc, ExhaustionError):
        return EXIT_EXHAUSTED
    if isinstance(exc, (SpecParseError, InvalidSpecError, DivisibilityError,
                        DegenerateResolutionError, DegenerateDataError, DesignError)):
        return EXIT_INVALID
    if isinstance(exc, (UnknownModelError, OSError)):
        return EXIT_RESOLVE
    return None


def _command(fn):
    """Turn known failures into a CommandResult with the matching exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs) -> CommandResult:
        try:
            return fn(*args, **kwargs)
        except Exception as exc:  # noqa: BLE001 - mapped or re-raised below
            code = _exit_code(exc)
            if code is None:
                raise
            return CommandResult(code, [], f"error: {exc}")

    return wrapper


# ---------------------------------------------------------------------------
# helpers


def resolve_spec(ref) -> NetworkSpec:
    """A spec file path or a registry name; the network must validate."""
    if isinstance(ref, NetworkSpec):
        spec = ref
    else:
        ref = str(ref)
        path = Path(ref)
        if path.is_file():
            spec = load_spec(path)
        elif ref.endswith(".json") or os.sep in ref:
            raise FileNotFoundError(f"no such spec file: {ref}")
        else:
            spec = get_model(ref)
    errs = validate_network(spec)
    if errs:
        raise InvalidSpecError(errs)
    return spec


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "model"


def _out_dir(out) -> Path:
    path = Path(out if out is not None else ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _check_format(fmt: str) -> str:
    if fmt not in FORMATS:
        raise UsageError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    return fmt


def _table_text(fields, rows, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)
        return buf.getvalue()
    return "".join(json.dumps({k: row[k] for k in fields}) + "\n" for row in rows)


def _write_table(path_stem: Path, fields, rows, fmt: str) -> Path:
    path = path_stem.with_name(path_stem.name + (".csv" if fmt == "csv" else ".jsonl"))
    path.write_text(_table_text(fields, rows, fmt))
    return path


def _num(x):
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e17:
        return int(x)
    return x


def _sci(x) -> str:
    return f"{x:.4g}"


def resolve_policy(policy=None, alpha=None):
    if policy is not None and alpha is not None:
        raise UsageError("--policy and --alpha are mutually exclusive")
    if alpha is not None:
        if not 0 <= alpha <= 1:
            raise UsageError(f"--alpha must lie in [0, 1] (got {alpha:g})")
        return fast_policy(alpha)
    if policy is None:
        raise UsageError("one of --policy or --alpha is required")
    try:
        return policy_from_name(policy)
    except LookupError as exc:
        raise UsageError(str(exc.args[0])) from None


def parse_grid(text: str) -> list[float]:
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    if not items:
        raise UsageError("--s-grid is empty")
    try:
        vals = [float(t) for t in items]
    except ValueError:
        raise UsageError(f"--s-grid must be comma-separated numbers (got {text!r})") from None
    if any(not v >= 1 for v in vals):
        raise UsageError("--s-grid values must be ≥ 1")
    vals = sorted(set(vals))
    return [int(v) if v.is_integer() else v for v in vals]


def _complexity_rows(name: str, rep: ComplexityReport):
    rows = [{"name": f"{name}/{k}", "flops": _num(f), "params": _num(p), "acts": _num(a)}
            for k, (f, p, a) in rep.components(1).items()]
    rows.append({"name": name, "flops": _num(rep.flops), "params": _num(rep.params),
                 "acts": _num(rep.acts)})
    return rows


def _stage_table(rows) -> str:
    lines = [f"{'component':<32} {'flops':>12} {'params':>12} {'acts':>12}"]
    for r in rows:
        lines.append(f"{r['name']:<32} {_sci(r['flops']):>12} {_sci(r['params']):>12} {_sci(r['acts']):>12}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands


@_command
def cmd_complexity(model, out=None, fmt: str = "csv") -> CommandResult:
    fmt = _check_format(fmt)
    spec = resolve_spec(model)
    rep = network_complexity(spec)
    rows = _complexity_rows(spec.name, rep)
    path = _write_table(_out_dir(out) / f"{_safe_name(spec.name)}.complexity",
                        ("name", "flops", "params", "acts"), rows, fmt)
    summary = f"{spec.name}: {rep.summary()}\n{_stage_table(rows)}"
    return CommandResult(EXIT_OK, [str(path)], summary)


@_command
def cmd_scale(model, s: float, policy: str | None = None, alpha: float | None = None,
              quantize: bool = True, out=None, fmt: str = "csv") -> CommandResult:
    fmt = _check_format(fmt)
    pol = resolve_policy(policy, alpha)
    if not s >= 1:
        raise UsageError(f"--s must be ≥ 1 (got {s:g})")
    spec = resolve_spec(model)
    scaled = scale_network(spec, ScaleRequest(s, pol, quantize))
    before, after = network_complexity(spec), network_complexity(scaled)
    predicted = predicted_multipliers(pol, s)
    odir = _out_dir(out)
    stem = f"{_safe_name(spec.name)}.{_safe_name(pol.label)}.s{s:g}"
    spec_path = save_spec(scaled, odir / f"{stem}.json")
    rows = []
    for metric, pred in zip(("flops", "params", "acts"), predicted):
        b, a = getattr(before, metric), getattr(after, metric)
        rows.append({"metric": metric, "before": _num(b), "after": _num(a),
                     "predicted_multiplier": pred, "achieved_multiplier": a / b})
    fields = ("metric", "before", "after", "predicted_multiplier", "achieved_multiplier")
    cmp_path = _write_table(odir / f"{stem}.comparison", fields, rows, fmt)
    lines = [f"{spec.name} scaled by s={s:g} with policy {pol.label} "
             f"(e_d={pol.e_d:.4g}, e_w={pol.e_w:.4g}, e_r={pol.e_r:.4g}, "
             f"{'quantized' if quantize else 'continuous'})",
             f"{'metric':<8} {'before':>12} {'after':>12} {'predicted':>10} {'achieved':>10}"]
    for r in rows:
        lines.append(f"{r['metric']:<8} {_sci(r['before']):>12} {_sci(r['after']):>12} "
                     f"{r['predicted_multiplier']:>10.4g} {r['achieved_multiplier']:>10.4g}")
    return CommandResult(EXIT_OK, [str(spec_path), str(cmp_path)], "\n".join(lines))


@_command
def cmd_sweep(model, policies: str = DEFAULT_POLICIES, s_grid: str = DEFAULT_GRID,
              quantize: bool = True, out=None, fmt: str = "csv") -> CommandResult:
    fmt = _check_format(fmt)
    names = [p.strip() for p in str(policies).split(",") if p.strip()]
    if not names:
        raise UsageError("--policies is empty")
    pols = []
    for name in names:
        try:
            pols.append(fast_policy(float(name)))
        except ValueError:
            pols.append(resolve_policy(name, None))
    grid = parse_grid(s_grid)
    spec = resolve_spec(model)
    series = [sweep(spec, pol, grid, quantize) for pol in pols]
    rows = [r for srs in series for r in srs.rows()]
    for r in rows:
        r.update(flops=_num(r["flops"]), params=_num(r["params"]), acts=_num(r["acts"]))
    path = _write_table(_out_dir(out) / f"{_safe_name(spec.name)}.sweep", SWEEP_FIELDS, rows, fmt)
    lines = [f"{spec.name}: {len(rows)} rows, {len(grid)} scale(s) x {len(pols)} polic(ies)"]
    if len(grid) > 1:
        lines.append(f"{'policy':<12} {'acts~flops^':>12} {'params~flops^':>14}")
        for srs in series:
            fl = [p.complexity.flops for p in srs]
            lines.append(f"{srs.policy.label:<12} "
                         f"{loglog_slope(fl, [p.complexity.acts for p in srs]):>12.3f} "
                         f"{loglog_slope(fl, [p.complexity.params for p in srs]):>14.3f}")
    return CommandResult(EXIT_OK, [str(path)], "\n".join(lines))


SAMPLE_FIELDS = ("name", "file", "draw", "d", "w0", "wa", "wm", "g", "b", "r",
                 "flops", "params", "acts")


@_command
def cmd_sample(kind: str = "Y", flops="500MF", tolerance: float = 0.1, count: int = 32,
               seed: int = 0, out=None, fmt: str = "csv", max_draws: int = 10**6) -> CommandResult:
    fmt = _check_format(fmt)
    if kind not in ("Y", "Z"):
        raise UsageError(f"--kind must be Y or Z (got {kind!r})")
    try:
        target = parse_flops(flops)
    except ValueError:
        raise UsageError(f"cannot parse flop target {flops!r}") from None
    if count < 1:
        raise UsageError(f"--count must be ≥ 1 (got {count})")
    if seed < 0:
        raise UsageError(f"--seed must be ≥ 0 (got {seed})")
    ranges = DesignSpaceRanges(flop_target=target, flop_tolerance=tolerance, kind=kind)
    samples = sample_design_space(ranges, count=count, seed=seed, max_draws=max_draws)
    odir = _out_dir(out)
    spec_dir = odir / "specs"
    spec_dir.mkdir(exist_ok=True)
    rows, artifacts = [], []
    for smp in samples:
        rel = f"specs/{_safe_name(smp.spec.name)}.json"
        save_spec(smp.spec, odir / rel)
        artifacts.append(str(odir / rel))
        p, c = smp.params, smp.complexity
        rows.append({"name": smp.spec.name, "file": rel, "draw": smp.draw, "d": p.d,
                     "w0": _num(p.w0), "wa": p.wa, "wm": p.wm, "g": p.g, "b": p.b, "r": p.r,
                     "flops": _num(c.flops), "params": _num(c.params), "acts": _num(c.acts)})
    index = _write_table(odir / "index", SAMPLE_FIELDS, rows, fmt)
    fl = [r["flops"] for r in rows]
    summary = (f"{len(rows)} RegNet{kind} models within {tolerance:.0%} of {target / 1e6:g}MF "
               f"(seed {seed}, {samples[-1].draw + 1} draws); flops {min(fl) / 1e6:.0f}MF"
               f" to {max(fl) / 1e6:.0f}MF")
    return CommandResult(EXIT_OK, [str(index)] + artifacts, summary)


@_command
def cmd_fit_runtime(measurements, features: str = "ActsOnly", out=None,
                    fmt: str = "csv") -> CommandResult:
    fmt = _check_format(fmt)
    try:
        fs = FeatureSet.parse(features)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ms = load_measurements(measurements)
    if len(ms) < 3:
        raise DegenerateDataError(f"{measurements}: need at least 3 measurements, found {len(ms)}")
    model = fit_runtime(ms, fs)
    report = correlation_report(ms)
    diag = compare_metrics(ms)
    odir = _out_dir(out)
    model_path = model.save(odir / "runtime_model.json")
    corr_rows = [{"group": r.group, "n": r.n, "r_flops": r.flops, "r_params": r.params,
                  "r_acts": r.acts} for r in report.rows]
    corr_path = _write_table(odir / "correlation", ("group", "n", "r_flops", "r_params", "r_acts"),
                             corr_rows, fmt)
    terms = [f"{model.intercept:.6g}"]
    for name in fs.columns:
        terms.append(f"{getattr(model, 'coef_' + name):.6g}*{name}")
    lines = [f"fit ({fs.value}, n={model.n}): time = " + " + ".join(terms) + f"  [r={model.fit_r:.4f}]",
             f"single-metric fit r: acts {diag.acts:.4f}, flops {diag.flops:.4f}, params {diag.params:.4f}",
             report.table()]
    return CommandResult(EXIT_OK, [str(model_path), str(corr_path)], "\n".join(lines))


@_command
def cmd_predict(model_path, model_ref) -> CommandResult:
    model = RuntimeModel.load(model_path)
    spec = resolve_spec(model_ref)
    rep = network_complexity(spec)
    minutes = predict_runtime(model, rep)
    return CommandResult(EXIT_OK, [], f"{spec.name}: {minutes:.4f} min/epoch ({rep.summary()})")


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--out", metavar="DIR", default=default("."),
                        help="directory for written artifacts (default: current directory)")
    parser.add_argument("--format", choices=FORMATS, default=default("csv"),
                        help="format of tabular artifacts")
    parser.add_argument("--seed", type=int, default=default(0), help="seed for sampling")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scalekit", description="Complexity, scaling and runtime analysis "
                                                  "of staged convolutional networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("complexity", parents=[common], help="flops, params and acts of a model")
    p.add_argument("model", help="spec file or registry name")

    p = sub.add_parser("scale", parents=[common], help="scale a model by a flop factor")
    p.add_argument("model")
    p.add_argument("--policy", help="named policy: d, w, r, dw, wr, dr, dwr, dWr")
    p.add_argument("--alpha", type=float, help="alpha of the fast family")
    p.add_argument("--s", type=float, required=True, help="flop multiplier (≥ 1)")
    p.add_argument("--no-quantize", action="store_true", help="emit the continuous spec")

    p = sub.add_parser("sweep", parents=[common], help="complexity across a grid of scale factors")
    p.add_argument("model")
    p.add_argument("--policies", default=DEFAULT_POLICIES,
                   help="comma-separated policy names or alpha values")
    p.add_argument("--s-grid", default=DEFAULT_GRID, help="comma-separated scale factors")
    p.add_argument("--no-quantize", action="store_true")

    p = sub.add_parser("sample", parents=[common], help="random RegNets in a flop regime")
    p.add_argument("--kind", choices=("Y", "Z"), default="Y")
    p.add_argument("--flops", default="500MF", help="flop target, e.g. 500MF or 4GF")
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--count", type=int, default=32)

    p = sub.add_parser("fit-runtime", parents=[common], help="fit epoch time from measurements")
    p.add_argument("measurements", help="measurement CSV")
    p.add_argument("--features", default="ActsOnly",
                   choices=[f.value for f in FeatureSet])

    p = sub.add_parser("predict", parents=[common], help="predict epoch time of a model")
    p.add_argument("runtime_model", help="runtime model JSON written by fit-runtime")
    p.add_argument("model", help="spec file or registry name")
    return parser


def run(argv=None) -> CommandResult:
    parser = build_parser()
    args = parser.parse_args(argv)
    common = dict(out=args.out, fmt=args.format)
    if args.command == "complexity":
        return cmd_complexity(args.model, **common)
    if args.command == "scale":
        return cmd_scale(args.model, args.s, policy=args.policy, alpha=args.alpha,
                         quantize=not args.no_quantize, **common)
    if args.command == "sweep":
        return cmd_sweep(args.model, args.policies, args.s_grid,
                         quantize=not args.no_quantize, **common)
    if args.command == "sample":
        return cmd_sample(args.kind, args.flops, args.tolerance, args.count,
                          seed=args.seed, **common)
    if args.command == "fit-runtime":
        return cmd_fit_runtime(args.measurements, args.features, **common)
    if args.command == "predict":
        return cmd_predict(args.runtime_model, args.model)
    raise AssertionError(args.command)


def main(argv=None) -> int:
    try:
        result = run(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    stream = sys.stdout if result.ok else sys.stderr
    if result.summary:
        print(result.summary, file=stream)
    if result.ok:
        for a in result.artifacts:
            print(f"wrote {a}")
    return result.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
