"""Scaling strategies as exponent triples, network transforms and quantization.

Every strategy is a triple ``(e_d, e_w, e_r)`` summing to one.  Scaling a
network's flops by ``s`` multiplies depth by ``s**e_d`` and width and input
resolution by ``s**(e_w / 2)`` and ``s**(e_r / 2)`` (flops are quadratic in
width and resolution).  Group widths follow the width multiplier except for
depthwise convs, which keep ``g = 1``.

The simple strategies (``d``, ``w``, ``r``), the uniform compound ones
(``dw``, ``wr``, ``dr``, ``dwr``) and the alpha-parameterized family
(``e_d = e_r = (1 - alpha) / 2``, ``e_w = alpha``) are all rows of this one
representation.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, replace

from .complexity import ComplexityReport, network_complexity
from .errors import DomainError, InvalidSpecError
from .ir import BlockKind, NetworkSpec, StageSpec, validate_network

FAST_ALPHA = 0.8
WIDTH_QUANTUM = 8
_TOL = 1e-12


@dataclass(frozen=True)
class ScalingPolicy:
    e_d: float
    e_w: float
    e_r: float
    alpha: float | None = None
    name: str | None = None

    def __post_init__(self):
        total = self.e_d + self.e_w + self.e_r
        if abs(total - 1.0) > _TOL:
            raise DomainError(f"exponents must sum to 1 (got {total!r})")
        for label, e in (("e_d", self.e_d), ("e_w", self.e_w), ("e_r", self.e_r)):
            if not -_TOL <= e <= 1 + _TOL:
                raise DomainError(f"{label} must lie in [0, 1] (got {e!r})")

    @property
    def exponents(self) -> tuple[float, float, float]:
        return (self.e_d, self.e_w, self.e_r)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.alpha is not None:
            return f"alpha={self.alpha:g}"
        return f"({self.e_d:g},{self.e_w:g},{self.e_r:g})"

    def same_exponents(self, other: "ScalingPolicy", tol: float = _TOL) -> bool:
        return all(abs(a - b) <= tol for a, b in zip(self.exponents, other.exponents))

    def dimension_multipliers(self, s: float) -> tuple[float, float, float]:
        """Multipliers applied to depth, width and resolution for flop factor ``s``."""
        return (s ** self.e_d, s ** (self.e_w / 2), s ** (self.e_r / 2))


def fast_policy(alpha: float) -> ScalingPolicy:
    if not 0 <= alpha <= 1:
        raise DomainError(f"alpha must lie in [0, 1] (got {alpha!r})")
    rest = (1 - alpha) / 2
    name = "dWr" if alpha == FAST_ALPHA else None
    return ScalingPolicy(rest, alpha, rest, alpha=alpha, name=name)


_NAMED = {
    "d": (1.0, 0.0, 0.0),
    "w": (0.0, 1.0, 0.0),
    "r": (0.0, 0.0, 1.0),
    "dw": (0.5, 0.5, 0.0),
    "wr": (0.0, 0.5, 0.5),
    "dr": (0.5, 0.0, 0.5),
    "dwr": (1 / 3, 1 / 3, 1 / 3),
}
POLICY_NAMES = tuple(_NAMED) + ("dWr",)


def policy_from_name(name: str) -> ScalingPolicy:
    if name == "dWr":
        return fast_policy(FAST_ALPHA)
    if name not in _NAMED:
        raise LookupError(f"unknown scaling policy {name!r}; legal names: {', '.join(POLICY_NAMES)}")
    return ScalingPolicy(*_NAMED[name], name=name)


def predicted_multipliers(policy: ScalingPolicy, s: float) -> tuple[float, float, float]:
    """Idealized (flops, params, acts) multipliers of scaling a uniform stage by ``s``."""
    e_d, e_w, e_r = policy.exponents
    return (float(s), s ** (e_d + e_w), s ** (e_d + e_w / 2 + e_r))


@dataclass(frozen=True)
class ScaleRequest:
    s: float
    policy: ScalingPolicy
    quantize: bool = True

    def __post_init__(self):
        if not self.s >= 1:
            raise DomainError(f"scale factor s must be ≥ 1 (got {self.s!r})")


# ---------------------------------------------------------------------------


def scale_network(spec: NetworkSpec, request: ScaleRequest) -> NetworkSpec:
    """Apply the same depth/width/resolution multipliers to every stage.

    Without quantization the result is the continuous spec (float dimensions)
    obtained from the multipliers for ``s`` directly.

    With quantization, ``s`` is honoured as a flop multiplier: stems, heads,
    SE ops, depthwise convs and stage transitions do not scale exactly like a
    uniform stage, so the continuous multipliers are first calibrated (same
    exponents, adjusted factor) until the continuous spec has ``s`` times the
    original flops, then the network is quantized.
    """
    if request.s == 1:
        return spec
    if not request.quantize:
        return apply_multipliers(spec, request.policy, request.s)
    target = request.s * network_complexity(spec).flops
    s_cal = calibrate_scale(spec, request.policy, target)
    out = quantize_network(apply_multipliers(spec, request.policy, s_cal))
    errs = validate_network(out)
    if errs:
        raise InvalidSpecError(errs)
    return out


def apply_multipliers(spec: NetworkSpec, policy: ScalingPolicy, s: float) -> NetworkSpec:
    md, mw, mr = policy.dimension_multipliers(s)
    stages = tuple(
        replace(
            st,
            depth=st.depth * md,
            width=st.width * mw,
            group_width=st.group_width if st.group_width == 1 else st.group_width * mw,
        )
        for st in spec.stages
    )
    stem = None if spec.stem is None else replace(spec.stem, width=spec.stem.width * mw)
    head = None if spec.head is None else replace(spec.head, width=spec.head.width * mw)
    return NetworkSpec(
        name=spec.name,
        input_resolution=spec.input_resolution * mr,
        stem=stem,
        stages=stages,
        head=head,
    )


def calibrate_scale(spec: NetworkSpec, policy: ScalingPolicy, target_flops: float,
                    rtol: float = 1e-9, max_iter: int = 50) -> float:
    """Factor ``s'`` at which the continuous scaled spec has ``target_flops``.

    Secant iteration on ``log flops`` against ``log s'``; continuous flops are
    smooth and increasing in ``s'``.
    """
    base = network_complexity(spec).flops
    log_t = math.log(target_flops)
    x0, y0 = 0.0, math.log(base)
    x1 = log_t - y0
    for _ in range(max_iter):
        y1 = math.log(network_complexity(apply_multipliers(spec, policy, math.exp(x1))).flops)
        if abs(y1 - log_t) <= rtol:
            break
        slope = (y1 - y0) / (x1 - x0) if x1 != x0 else 1.0
        if not slope > 0:
            slope = 1.0
        x0, y0 = x1, y1
        x1 = x1 + (log_t - y1) / slope
    return math.exp(x1)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def round_to_multiple(x: float, q: int, minimum: int | None = None) -> int:
    """Nearest multiple of ``q`` (ties up), never below ``minimum`` (default ``q``)."""
    return max(q if minimum is None else minimum, _round_half_up(x / q) * q)


def round_even(x: float) -> int:
    return max(2, 2 * _round_half_up(x / 2))


def _quantize_stage(st: StageSpec, w_in: int, q: int) -> StageSpec:
    depth = max(1, _round_half_up(st.depth))
    w_c = st.width
    w = round_to_multiple(w_c, q)
    if st.group_width == 1 or st.block_kind is BlockKind.MBCONV:
        return replace(st, depth=depth, width=w, group_width=1)

    b = st.bottleneck_ratio
    inv = 1.0 / b
    integral_inv = inv > 1 and abs(inv - round(inv)) < 1e-9
    if integral_inv:
        # keep g a multiple of the expansion so the outer width stays integral
        # whenever the grouped width is a multiple of g
        g = round_to_multiple(st.group_width, int(round(inv)))
    else:
        g = max(1, _round_half_up(st.group_width))
    inner = max(1, int(round(w * inv)))
    if g >= inner:
        g = inner
    elif inner % g:
        # re-round the continuous width, not the 8-rounded one, so the two
        # roundings do not compound
        m = g if integral_inv or inv == 1 else math.lcm(g, max(1, int(round(inv))))
        inner = round_to_multiple(w_c * inv, m)
        w = int(round(inner * b))
    if st.block_kind is BlockKind.PLAIN_CONV and w % g == 0:
        groups = math.gcd(w // g, w_in)
        g = w // groups
    return replace(st, depth=depth, width=w, group_width=g)


def quantize_network(spec: NetworkSpec, width_quantum: int = WIDTH_QUANTUM,
                     match_flops: bool = True, refine_tol: float = 0.06) -> NetworkSpec:
    """Snap a continuous spec to a concrete network.

    Depths round to the nearest integer (at least 1), widths to the nearest
    multiple of ``width_quantum``, the input resolution to the nearest even
    integer (ties round up).  Group widths are then made compatible: ``g``
    is capped at the grouped conv width, otherwise that width moves to the
    nearest multiple of ``g``.

    Rounding depth in stages of only a few blocks can move flops far from the
    continuous value.  With ``match_flops`` the even input resolution is then
    re-chosen to bring flops closest (in log terms) to those of ``spec``.  If
    that still misses by more than ``refine_tol``, depths may also round the
    other way (each stays the floor or ceiling of its continuous value) and
    the combination closest in flops is kept.
    """
    q = width_quantum
    stem = None
    w_in = None
    if spec.stem is not None:
        stem = replace(spec.stem, width=round_to_multiple(spec.stem.width, q))
        w_in = stem.width
    stages = []
    for st in spec.stages:
        qs = _quantize_stage(st, w_in if w_in is not None else round_to_multiple(st.width, q), q)
        stages.append(qs)
        w_in = qs.width
    head = spec.head
    if head is not None:
        head = replace(head, width=0 if head.width == 0 else round_to_multiple(head.width, q))
    out = NetworkSpec(
        name=spec.name,
        input_resolution=round_even(spec.input_resolution),
        stem=stem,
        stages=tuple(stages),
        head=head,
    )
    if match_flops:
        target = network_complexity(spec).flops
        out = retarget_resolution(out, target)
        if abs(math.log(network_complexity(out).flops / target)) > refine_tol:
            out = _refine_depths(out, spec, target)
    return out


def _log_miss(spec: NetworkSpec, target: float) -> float:
    return abs(math.log(network_complexity(spec).flops / target))


def _refine_depths(out: NetworkSpec, cont: NetworkSpec, target: float,
                   max_combos: int = 64) -> NetworkSpec:
    """Search floor/ceil depth choices (with resolution retargeting) for the best flop match."""
    choices = []
    for q, c in zip(out.stages, cont.stages):
        lo, hi = max(1, math.floor(c.depth)), max(1, math.ceil(c.depth))
        choices.append(sorted({q.depth, lo, hi}, key=lambda v: (v != q.depth, v)))
    # with many stages only the ones carrying the most flops get a choice
    if math.prod(len(c) for c in choices) > max_combos:
        share = network_complexity(out).components(1)
        order = sorted(range(len(choices)), key=lambda i: -share.get(f"stage{i + 1}", (0,))[0])
        keep, n = set(), 1
        for i in order:
            if n * len(choices[i]) > max_combos:
                continue
            keep.add(i)
            n *= len(choices[i])
        choices = [c if i in keep else c[:1] for i, c in enumerate(choices)]

    best, best_key = out, (_log_miss(out, target), 0)
    for depths in itertools.product(*choices):
        changed = sum(d != q.depth for d, q in zip(depths, out.stages))
        if changed == 0:
            continue
        stages = tuple(replace(q, depth=d) for q, d in zip(out.stages, depths))
        cand = retarget_resolution(replace(out, stages=stages), target)
        key = (_log_miss(cand, target), changed)
        if key < best_key:
            best, best_key = cand, key
    return best


def retarget_resolution(spec: NetworkSpec, target_flops: float, band: float = 0.04) -> NetworkSpec:
    """Choose the even input resolution whose flops are closest to ``target_flops``.

    Flops are roughly quadratic in resolution, which gives a first estimate;
    strided "same" convs make them a step function, so the even resolutions
    within ``band`` (relative, at least 8 pixels) of the estimate are then
    searched exhaustively.  Ties keep the resolution nearest the current one.
    """

    def flops(r):
        return network_complexity(replace(spec, input_resolution=r)).flops

    r0 = spec.input_resolution
    est = r0 * math.sqrt(target_flops / flops(r0))
    half = max(8.0, band * est)
    lo, hi = max(2, round_even(est - half)), round_even(est + half)
    best_key, best_r = None, r0
    for r in sorted(set(range(lo, hi + 1, 2)) | {r0}):
        key = (abs(math.log(flops(r) / target_flops)), abs(r - r0))
        if best_key is None or key < best_key:
            best_key, best_r = key, r
    return replace(spec, input_resolution=best_r)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    s: float
    spec: NetworkSpec
    complexity: ComplexityReport


@dataclass(frozen=True)
class ScaledSeries:
    base_name: str
    policy: ScalingPolicy
    quantized: bool
    points: tuple[SweepPoint, ...]

    def __post_init__(self):
        ss = [p.s for p in self.points]
        if any(b <= a for a, b in zip(ss, ss[1:])):
            raise DomainError(f"s values must be strictly increasing (got {ss})")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def rows(self) -> list[dict]:
        return [
            {
                "name": self.base_name,
                "policy": self.policy.label,
                "alpha": "" if self.policy.alpha is None else self.policy.alpha,
                "s": p.s,
                "flops": p.complexity.flops,
                "params": p.complexity.params,
                "acts": p.complexity.acts,
                "quantized": self.quantized,
            }
            for p in self.points
        ]


SWEEP_FIELDS = ("name", "policy", "alpha", "s", "flops", "params", "acts", "quantized")


def sweep(spec: NetworkSpec, policy: ScalingPolicy, s_values, quantize: bool = True) -> ScaledSeries:
    s_values = [float(s) if not isinstance(s, int) else s for s in s_values]
    if not s_values:
        raise DomainError("s_values must be non-empty")
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise DomainError(f"s values must be strictly increasing (got {s_values})")
    points = []
    for s in s_values:
        scaled = scale_network(spec, ScaleRequest(s, policy, quantize))
        points.append(SweepPoint(s, scaled, network_complexity(scaled)))
    return ScaledSeries(spec.name, policy, quantize, tuple(points))


def sweep_csv(series_list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    writer.writeheader()
    for series in series_list:
        for row in series.rows():
            writer.writerow(row)
    return buf.getvalue()


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log(ys)`` against ``log(xs)``."""
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    n = len(lx)
    mx, my = sum(lx) / n, sum(ly) / n
    sxx = sum((x - mx) ** 2 for x in lx)
    sxy = sum((x - mx) * (y - my) for x, y in zip(lx, ly))
    return sxy / sxx
