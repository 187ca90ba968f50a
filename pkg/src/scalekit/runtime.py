"""Linear runtime models fit to measured epoch times.

Measurements are rows of ``(model, strategy, flops, params, acts, epoch
time, batch size)``.  A :class:`RuntimeModel` is an ordinary least-squares
fit of epoch time against activations (optionally plus flops) with an
intercept.  :func:`correlation_report` tabulates how well each complexity
metric tracks runtime, within and across scaling strategies.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, SpecParseError

MEASUREMENT_FIELDS = ("model", "strategy", "flops", "params", "acts", "epoch_time_min", "batch_size")
METRICS = ("flops", "params", "acts")
MODEL_SCHEMA = "scalekit-runtime/1"


class FeatureSet(str, Enum):
    ACTS_ONLY = "ActsOnly"
    ACTS_PLUS_FLOPS = "ActsPlusFlops"
    # diagnostics, for comparing how well other metrics explain runtime
    FLOPS_ONLY = "FlopsOnly"
    PARAMS_ONLY = "ParamsOnly"

    @classmethod
    def parse(cls, value) -> "FeatureSet":
        if isinstance(value, cls):
            return value
        for fs in cls:
            if value in (fs.value, fs.name, fs.name.lower(), fs.value.lower()):
                return fs
        raise ValueError(f"unknown feature set {value!r}; expected one of "
                         + ", ".join(f.value for f in cls))

    @property
    def columns(self) -> tuple[str, ...]:
        return {
            FeatureSet.ACTS_ONLY: ("acts",),
            FeatureSet.ACTS_PLUS_FLOPS: ("acts", "flops"),
            FeatureSet.FLOPS_ONLY: ("flops",),
            FeatureSet.PARAMS_ONLY: ("params",),
        }[self]


@dataclass(frozen=True)
class Measurement:
    model_name: str
    strategy: str
    flops: float
    params: float
    acts: float
    epoch_time: float
    batch_size: int

    def __post_init__(self):
        for name in ("flops", "params", "acts", "epoch_time", "batch_size"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number (got {v!r})")

    def metric(self, name: str) -> float:
        return getattr(self, name)


# ---------------------------------------------------------------------------
# CSV ingest


def parse_measurements(text: str, source: str = "<measurements>") -> list[Measurement]:
    """Parse measurement CSV text.  Errors name the offending line."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise SpecParseError("empty measurement file", f"{source}:1")
    header = tuple(c.strip() for c in rows[0])
    if header != MEASUREMENT_FIELDS:
        raise SpecParseError(f"expected header {','.join(MEASUREMENT_FIELDS)}, got {','.join(header)}",
                             f"{source}:1")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        where = f"{source}:{lineno}"
        if len(row) != len(MEASUREMENT_FIELDS):
            raise SpecParseError(f"expected {len(MEASUREMENT_FIELDS)} fields, got {len(row)}", where)
        model, strategy = row[0].strip(), row[1].strip()
        nums = []
        for field, cell in zip(MEASUREMENT_FIELDS[2:], row[2:]):
            try:
                nums.append(float(cell))
            except ValueError:
                raise SpecParseError(f"{field} is not a number: {cell!r}", where) from None
        batch = nums[-1]
        if not batch.is_integer():
            raise SpecParseError(f"batch_size must be an integer: {row[-1]!r}", where)
        try:
            out.append(Measurement(model, strategy, *nums[:-1], int(batch)))
        except ValueError as exc:
            raise SpecParseError(str(exc), where) from None
    return out


def load_measurements(path) -> list[Measurement]:
    path = Path(path)
    return parse_measurements(path.read_text(), source=str(path))


def format_measurements(measurements) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MEASUREMENT_FIELDS)
    for m in measurements:
        w.writerow([m.model_name, m.strategy, _num(m.flops), _num(m.params), _num(m.acts),
                    _num(m.epoch_time), m.batch_size])
    return buf.getvalue()


def _num(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e17 else repr(x)


# ---------------------------------------------------------------------------
# correlation


def pearson(xs, ys) -> float:
    """Product-moment correlation of two equal-length samples."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"pearson needs two 1-d samples of equal length (got {x.shape} and {y.shape})")
    if x.size < 2:
        raise DegenerateDataError("pearson needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    # relative threshold: a constant column can leave rounding residue in dx
    if sx <= 1e-13 * float(np.abs(x).max()) * math.sqrt(x.size):
        raise DegenerateDataError("first sample has zero variance")
    if sy <= 1e-13 * float(np.abs(y).max()) * math.sqrt(y.size):
        raise DegenerateDataError("second sample has zero variance")
    r = float(dx @ dy) / (sx * sy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class CorrelationRow:
    group: str
    n: int
    flops: float
    params: float
    acts: float

    def r(self, metric: str) -> float:
        return getattr(self, metric)


@dataclass(frozen=True)
class CorrelationReport:
    rows: tuple[CorrelationRow, ...]
    notices: tuple[str, ...] = ()

    POOLED = "(pooled)"

    @property
    def pooled(self) -> CorrelationRow | None:
        for row in self.rows:
            if row.group == self.POOLED:
                return row
        return None

    def group(self, name: str) -> CorrelationRow:
        for row in self.rows:
            if row.group == name:
                return row
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("group", "n", "r_flops", "r_params", "r_acts"))
        for row in self.rows:
            w.writerow((row.group, row.n, *(_fmt_r(row.r(m)) for m in METRICS)))
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'group':<16} {'n':>4} {'r(flops)':>9} {'r(params)':>9} {'r(acts)':>9}"]
        for row in self.rows:
            lines.append(f"{row.group:<16} {row.n:>4} "
                         + " ".join(f"{_fmt_r(row.r(m)):>9}" for m in METRICS))
        lines += [f"note: {n}" for n in self.notices]
        return "\n".join(lines)


def _fmt_r(r: float) -> str:
    return "nan" if math.isnan(r) else f"{r:.4f}"


def _safe_r(xs, ys) -> float:
    try:
        return pearson(xs, ys)
    except DegenerateDataError:
        return float("nan")


def _row(group: str, ms) -> CorrelationRow:
    t = [m.epoch_time for m in ms]
    rs = {k: _safe_r([m.metric(k) for m in ms], t) for k in METRICS}
    return CorrelationRow(group, len(ms), **rs)


def group_by_strategy(measurements) -> dict[str, list[Measurement]]:
    groups: dict[str, list[Measurement]] = {}
    for m in measurements:
        groups.setdefault(m.strategy, []).append(m)
    return groups


def correlation_report(measurements) -> CorrelationReport:
    """Per-strategy and pooled Pearson r of flops, params and acts vs epoch time.

    Groups with fewer than two points are skipped with a notice.  A metric
    that is constant within a group gets ``nan`` for that group.
    """
    measurements = list(measurements)
    rows, notices = [], []
    for name, ms in group_by_strategy(measurements).items():
        if len(ms) < 2:
            notices.append(f"group {name!r} skipped: {len(ms)} measurement(s), need at least 2")
            continue
        rows.append(_row(name, ms))
    if len(measurements) >= 2:
        rows.append(_row(CorrelationReport.POOLED, measurements))
    else:
        notices.append("pooled correlation skipped: need at least 2 measurements")
    return CorrelationReport(tuple(rows), tuple(notices))


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class RuntimeModel:
    intercept: float
    coef_acts: float = 0.0
    coef_flops: float = 0.0
    fit_r: float = 1.0
    feature_set: FeatureSet = FeatureSet.ACTS_ONLY
    coef_params: float = 0.0
    n: int = 0

    def __post_init__(self):
        if not -1.0 <= self.fit_r <= 1.0 and not math.isnan(self.fit_r):
            raise ValueError(f"fit_r must lie in [-1, 1] (got {self.fit_r})")
        object.__setattr__(self, "feature_set", FeatureSet.parse(self.feature_set))

    def raw(self, flops=0.0, params=0.0, acts=0.0) -> float:
        return (self.intercept + self.coef_acts * acts + self.coef_flops * flops
                + self.coef_params * params)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feature_set"] = self.feature_set.value
        return {"schema": MODEL_SCHEMA, **d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RuntimeModel":
        if d.get("schema") != MODEL_SCHEMA:
            raise SpecParseError(f"expected {MODEL_SCHEMA!r}, got {d.get('schema')!r}", "schema")
        try:
            return cls(
                intercept=float(d["intercept"]),
                coef_acts=float(d.get("coef_acts", 0.0)),
                coef_flops=float(d.get("coef_flops", 0.0)),
                coef_params=float(d.get("coef_params", 0.0)),
                fit_r=float(d.get("fit_r", float("nan"))),
                feature_set=FeatureSet.parse(d.get("feature_set", "ActsOnly")),
                n=int(d.get("n", 0)),
            )
        except KeyError as exc:
            raise SpecParseError("missing field", exc.args[0]) from None
        except (TypeError, ValueError) as exc:
            raise SpecParseError(str(exc), "runtime model") from None

    @classmethod
    def from_json(cls, text: str) -> "RuntimeModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecParseError(exc.msg, f"line {exc.lineno}:{exc.colno}") from None
        if not isinstance(d, dict):
            raise SpecParseError("expected a JSON object", "runtime model")
        return cls.from_dict(d)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "RuntimeModel":
        return cls.from_json(Path(path).read_text())


def fit_runtime(measurements, feature_set=FeatureSet.ACTS_ONLY) -> RuntimeModel:
    """Least-squares fit of epoch time on the chosen features, with intercept."""
    fs = FeatureSet.parse(feature_set)
    ms = list(measurements)
    if len(ms) < 3:
        raise ValueError(f"fit_runtime needs at least 3 measurements (got {len(ms)})")
    y = np.array([m.epoch_time for m in ms], dtype=float)
    cols = fs.columns
    X = np.array([[m.metric(c) for c in cols] for m in ms], dtype=float)

    # standardize so the conditioning does not depend on units
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    if np.any(sd <= 1e-12 * (np.abs(mu) + 1)):
        bad = [c for c, v, m in zip(cols, sd, mu) if v <= 1e-12 * (abs(m) + 1)]
        raise DegenerateDataError(f"feature(s) {', '.join(bad)} constant across measurements")
    Z = (X - mu) / sd
    A = np.column_stack([np.ones(len(ms)), Z])
    coef, _, rank, sv = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1] or sv[-1] <= 1e-10 * sv[0]:
        raise DegenerateDataError(f"design matrix is rank deficient for features {', '.join(cols)}")

    slopes = coef[1:] / sd
    intercept = float(coef[0] - slopes @ mu)
    by_name = dict(zip(cols, (float(v) for v in slopes)))
    pred = A @ coef
    try:
        r = pearson(pred, y)
    except DegenerateDataError:
        r = float("nan")
    return RuntimeModel(
        intercept=intercept,
        coef_acts=by_name.get("acts", 0.0),
        coef_flops=by_name.get("flops", 0.0),
        coef_params=by_name.get("params", 0.0),
        fit_r=r,
        feature_set=fs,
        n=len(ms),
    )


def predict_runtime(model: RuntimeModel, report) -> float:
    """Predicted epoch time in minutes for a complexity report (or any object
    with ``flops``, ``params`` and ``acts``).  Negative predictions clamp to 0
    with a :class:`RuntimeWarning`."""
    t = model.raw(flops=report.flops, params=report.params, acts=report.acts)
    if t < 0:
        warnings.warn(f"predicted runtime {t:.4g} min is negative; clamped to 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    return float(t)


@dataclass(frozen=True)
class MetricComparison:
    """fit_r of single-metric fits on the same data."""

    acts: float
    flops: float
    params: float

    @property
    def acts_best(self) -> bool:
        return self.acts > self.flops and self.acts > self.params


def compare_metrics(measurements) -> MetricComparison:
    ms = list(measurements)

    def r(fs):
        try:
            return fit_runtime(ms, fs).fit_r
        except DegenerateDataError:
            return float("nan")

    return MetricComparison(
        acts=r(FeatureSet.ACTS_ONLY),
        flops=r(FeatureSet.FLOPS_ONLY),
        params=r(FeatureSet.PARAMS_ONLY),
    )
