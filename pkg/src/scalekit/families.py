"""Concrete model families: EfficientNet B0-B5, RegNetY/Z, and design-space sampling."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .complexity import ComplexityReport, network_complexity
from .errors import DesignError, DomainError, ExhaustionError, UnknownModelError
from .ir import (
    BlockKind,
    HeadSpec,
    NetworkSpec,
    StageSpec,
    StemSpec,
    load_spec,
    validate_network,
)

# ---------------------------------------------------------------------------
# EfficientNet

# (depth, width, kernel, stride, expansion) per stage of B0
EFFICIENTNET_B0_STAGES = (
    (1, 16, 3, 1, 1),
    (2, 24, 3, 2, 6),
    (2, 40, 5, 2, 6),
    (3, 80, 3, 2, 6),
    (3, 112, 5, 1, 6),
    (4, 192, 5, 2, 6),
    (1, 320, 3, 1, 6),
)
EFFICIENTNET_B0_STEM = 32
EFFICIENTNET_B0_HEAD = 1280

# variant -> (width coefficient, depth coefficient, resolution)
EFFICIENTNET_VARIANTS = {
    "B0": (1.0, 1.0, 224),
    "B1": (1.0, 1.1, 240),
    "B2": (1.1, 1.2, 260),
    "B3": (1.2, 1.4, 300),
    "B4": (1.4, 1.8, 380),
    "B5": (1.6, 2.2, 456),
}


def round_filters(width: int, mult: float, divisor: int = 8) -> int:
    """Width rounding used by the EfficientNet family (never drops below 90%)."""
    if mult == 1.0:
        return width
    scaled = width * mult
    out = max(divisor, int(scaled + divisor / 2) // divisor * divisor)
    if out < 0.9 * scaled:
        out += divisor
    return int(out)


def round_repeats(depth: int, mult: float) -> int:
    return int(math.ceil(mult * depth))


def build_efficientnet(variant: str = "B0", num_classes: int = 1000) -> NetworkSpec:
    key = variant.upper().replace("EFFICIENTNET-", "").replace("EN-", "")
    if key not in EFFICIENTNET_VARIANTS:
        legal = ", ".join(EFFICIENTNET_VARIANTS)
        raise UnknownModelError(f"unknown EfficientNet variant {variant!r}; known: {legal}")
    wm, dm, res = EFFICIENTNET_VARIANTS[key]
    stages = tuple(
        StageSpec(
            depth=round_repeats(d, dm),
            width=round_filters(w, wm),
            group_width=1,
            bottleneck_ratio=1.0 / e,
            stride=s,
            block_kind=BlockKind.MBCONV,
            kernel=k,
        )
        for d, w, k, s, e in EFFICIENTNET_B0_STAGES
    )
    return NetworkSpec(
        name=f"EfficientNet-{key}",
        input_resolution=res,
        stem=StemSpec(width=round_filters(EFFICIENTNET_B0_STEM, wm), kernel=3, stride=2),
        stages=stages,
        head=HeadSpec(width=round_filters(EFFICIENTNET_B0_HEAD, wm), num_classes=num_classes),
    )


# ---------------------------------------------------------------------------
# RegNet

REGNET_STEM_WIDTH = 32
REGNET_Z_HEAD_WIDTH = 1536
WIDTH_QUANTUM = 8
MAX_STAGES = 4


@dataclass(frozen=True)
class RegNetParams:
    d: int
    w0: int
    wa: float
    wm: float
    g: int
    b: float = 1.0
    r: int = 224
    kind: str = "Y"
    # extension: width of the final 1x1 conv; None picks the per-kind default
    head_width: int | None = None

    def __post_init__(self):
        if self.kind not in ("Y", "Z"):
            raise DesignError(f"kind must be 'Y' or 'Z' (got {self.kind!r})")
        problems = []
        if self.d < 1:
            problems.append(f"d={self.d} < 1")
        if self.w0 < 1:
            problems.append(f"w0={self.w0} < 1")
        if self.wa < 0:
            problems.append(f"wa={self.wa} < 0")
        if not self.wm > 1:
            problems.append(f"wm={self.wm} must be > 1")
        if self.g < 1:
            problems.append(f"g={self.g} < 1")
        if self.r < 32:
            problems.append(f"r={self.r} < 32")
        if not self.b > 0:
            problems.append(f"b={self.b} must be > 0")
        if problems:
            raise DesignError("invalid RegNet parameters: " + ", ".join(problems))

    @property
    def block_kind(self) -> BlockKind:
        if self.kind == "Y":
            return BlockKind.RESIDUAL_BOTTLENECK_Y
        return BlockKind.INVERTED_BOTTLENECK_Z


def regnet_block_widths(d: int, w0: float, wa: float, wm: float, q: int = WIDTH_QUANTUM):
    """Per-block widths from the quantized linear rule.

    Continuous widths ``u_j = w0 + wa * j`` are snapped to the nearest power of
    ``wm`` times ``w0`` (in log space), then to a multiple of ``q``.
    """
    u = w0 + wa * np.arange(d)
    if wa == 0:
        ks = np.zeros(d)
    else:
        ks = np.round(np.log(u / w0) / np.log(wm))
    ws = w0 * np.power(wm, ks)
    ws = np.maximum(q, np.round(ws / q) * q).astype(int)
    return [int(w) for w in ws]


def repair_group_width(w: int, g: int, b: float) -> tuple[int, int]:
    """Make ``g`` divide the grouped conv width ``w / b``.

    ``g`` is capped at the grouped width; otherwise the grouped width moves to
    the nearest multiple of ``g`` (also of ``1/b`` when that is an integer, so
    the block width stays integral).  Returns the new ``(w, g)``.
    """
    inv = 1.0 / b
    v = max(1, int(round(w * inv)))
    g = int(min(g, v))
    m = g
    if inv > 1 and abs(inv - round(inv)) < 1e-9:
        m = math.lcm(g, int(round(inv)))
    v = max(m, int(round(v / m) * m))
    return int(round(v * b)), g


def build_regnet(params: RegNetParams, name: str | None = None, num_classes: int = 1000) -> NetworkSpec:
    ws_all = regnet_block_widths(params.d, params.w0, params.wa, params.wm)
    widths, depths = [], []
    for w in ws_all:
        if widths and widths[-1] == w:
            depths[-1] += 1
        else:
            widths.append(w)
            depths.append(1)
    if len(widths) > MAX_STAGES:
        raise DesignError(
            f"parameters give {len(widths)} distinct stage widths {widths}; at most {MAX_STAGES} allowed"
        )
    stages = []
    for w, d in zip(widths, depths):
        w, g = repair_group_width(w, params.g, params.b)
        stages.append(StageSpec(
            depth=d, width=w, group_width=g, bottleneck_ratio=params.b,
            stride=2, block_kind=params.block_kind, kernel=3,
        ))
    head_w = params.head_width
    if head_w is None:
        head_w = 0 if params.kind == "Y" else REGNET_Z_HEAD_WIDTH
    if name is None:
        name = f"RegNet{params.kind}-custom"
    return NetworkSpec(
        name=name,
        input_resolution=params.r,
        stem=StemSpec(width=REGNET_STEM_WIDTH, kernel=3, stride=2),
        stages=tuple(stages),
        head=HeadSpec(width=head_w, num_classes=num_classes),
    )


# ---------------------------------------------------------------------------
# design-space sampling


@dataclass(frozen=True)
class DesignSpaceRanges:
    """Inclusive sampling ranges and the flop filter for random search.

    ``w0``, ``wa`` and ``wm`` are drawn log-uniformly; ``d``, ``r`` and the
    group width uniformly.  Group widths are drawn from the values in
    ``g`` that are divisors or multiples of 8; resolutions from multiples of 8.
    """

    flop_target: float
    flop_tolerance: float = 0.1
    kind: str = "Y"
    d: tuple[int, int] = (12, 28)
    w0: tuple[int, int] = (16, 256)
    wa: tuple[float, float] = (8.0, 256.0)
    wm: tuple[float, float] = (1.5, 3.0)
    g: tuple[int, int] = (1, 64)
    b: tuple[float, float] | None = None
    r: tuple[int, int] = (224, 224)
    head_width: int | None = None

    def __post_init__(self):
        if not 0 < self.flop_tolerance < 1:
            raise DomainError(f"flop_tolerance must lie in (0, 1) (got {self.flop_tolerance})")
        if not self.flop_target > 0:
            raise DomainError(f"flop_target must be positive (got {self.flop_target})")
        for name in ("d", "w0", "wa", "wm", "g", "r"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise DomainError(f"empty range for {name}: {lo} > {hi}")
        if self.b is not None and self.b[0] > self.b[1]:
            raise DomainError(f"empty range for b: {self.b}")
        if not self.group_choices():
            raise DomainError(f"no usable group width in {self.g}")
        if not self.resolution_choices():
            raise DomainError(f"no multiple of 8 in resolution range {self.r}")

    @property
    def b_range(self) -> tuple[float, float]:
        if self.b is not None:
            return self.b
        return (1.0, 1.0) if self.kind == "Y" else (0.25, 0.25)

    @property
    def flop_bounds(self) -> tuple[float, float]:
        return (self.flop_target * (1 - self.flop_tolerance),
                self.flop_target * (1 + self.flop_tolerance))

    def group_choices(self) -> list[int]:
        lo, hi = self.g
        return [g for g in range(max(1, lo), hi + 1) if 8 % g == 0 or g % 8 == 0]

    def resolution_choices(self) -> list[int]:
        lo, hi = self.r
        return [r for r in range(-(-lo // 8) * 8, hi + 1, 8)]


@dataclass(frozen=True)
class Sample:
    params: RegNetParams
    spec: NetworkSpec
    complexity: ComplexityReport
    draw: int


def draw_rng(seed: int, draw: int) -> np.random.Generator:
    """Independent stream for one draw: Philox keyed by seed, counter at ``draw``.

    Each draw owns its own counter block, so any subset of draws can be
    evaluated in any order (or in parallel) with identical results.
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, draw]))


def _log_uniform(rng, lo, hi):
    if lo == hi:
        return float(lo)
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def draw_params(ranges: DesignSpaceRanges, rng: np.random.Generator) -> RegNetParams:
    d = int(rng.integers(ranges.d[0], ranges.d[1] + 1))
    w0 = _log_uniform(rng, *ranges.w0)
    w0 = int(min(max(round(w0 / 8) * 8, 8), max(ranges.w0[1], 8)))
    wa = round(_log_uniform(rng, *ranges.wa), 2)
    wm = round(_log_uniform(rng, *ranges.wm), 3)
    gs = ranges.group_choices()
    g = gs[int(rng.integers(len(gs)))]
    blo, bhi = ranges.b_range
    b = blo if blo == bhi else float(rng.uniform(blo, bhi))
    rs = ranges.resolution_choices()
    r = rs[int(rng.integers(len(rs)))]
    return RegNetParams(d=d, w0=w0, wa=wa, wm=max(wm, 1.001), g=g, b=b, r=r,
                        kind=ranges.kind, head_width=ranges.head_width)


def _try_build(params):
    try:
        spec = build_regnet(params)
    except DesignError:
        return None
    if validate_network(spec):
        return None
    return spec


def smallest_constructible_flops(ranges: DesignSpaceRanges) -> float | None:
    """Fewest flops over the corners of the range with d, w0, wa and r at their minima."""
    best = None
    for wm in ranges.wm:
        for g in (ranges.group_choices()[0], ranges.group_choices()[-1]):
            for b in ranges.b_range:
                p = RegNetParams(d=ranges.d[0], w0=max(8, ranges.w0[0]), wa=ranges.wa[0], wm=max(wm, 1.001),
                                 g=g, b=b, r=ranges.resolution_choices()[0], kind=ranges.kind,
                                 head_width=ranges.head_width)
                spec = _try_build(p)
                if spec is None:
                    continue
                f = network_complexity(spec).flops
                best = f if best is None else min(best, f)
    return best


def sample_design_space(ranges: DesignSpaceRanges, count: int = 32, seed: int = 0,
                        max_draws: int = 10**6) -> list[Sample]:
    """Rejection-sample RegNets until ``count`` fall inside the flop filter.

    Deterministic in ``seed``.  Raises :class:`ExhaustionError` when the
    smallest model the ranges allow already exceeds the filter, or when
    ``max_draws`` draws yield fewer than ``count`` accepted models.
    """
    if count < 1:
        raise DomainError(f"count must be ≥ 1 (got {count})")
    lo, hi = ranges.flop_bounds
    floor_flops = smallest_constructible_flops(ranges)
    if floor_flops is not None and floor_flops > hi:
        raise ExhaustionError(
            f"smallest constructible model in the ranges has {floor_flops / 1e6:.0f}MF, "
            f"above the filter [{lo / 1e6:.0f}MF, {hi / 1e6:.0f}MF]"
        )
    accepted = []
    for i in range(max_draws):
        params = draw_params(ranges, draw_rng(seed, i))
        spec = _try_build(params)
        if spec is None:
            continue
        rep = network_complexity(spec)
        if lo <= rep.flops <= hi:
            idx = len(accepted)
            spec = replace(spec, name=f"RegNet{ranges.kind}-{flops_label(ranges.flop_target)}-s{seed}-{idx:03d}")
            accepted.append(Sample(params, spec, rep, i))
            if len(accepted) == count:
                return accepted
    raise ExhaustionError(
        f"only {len(accepted)} of {count} models accepted after {max_draws} draws "
        f"(filter [{lo / 1e6:.0f}MF, {hi / 1e6:.0f}MF])"
    )


def flops_label(flops: float) -> str:
    if flops >= 1e9:
        return f"{flops / 1e9:g}GF"
    return f"{flops / 1e6:g}MF"


def parse_flops(text) -> float:
    """Parse ``500MF`` / ``4GF`` / ``1.6e9`` into multiply-adds."""
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().upper()
    for suffix, mult in (("GF", 1e9), ("MF", 1e6)):
        if t.endswith(suffix):
            return float(t[: -len(suffix)]) * mult
    return float(t)


# ---------------------------------------------------------------------------
# registry

# Only the flops/params/acts of these baselines are published.  The parameters
# below were found by random search plus local refinement to reproduce those
# three numbers; they are reconstructions, not the original models.
RECONSTRUCTED_REGNETS = {
    "RegNetY-500MF": RegNetParams(d=15, w0=48, wa=34.93, wm=2.261, g=8, b=1.0, r=224, kind="Y"),
    "RegNetZ-500MF": RegNetParams(d=21, w0=24, wa=10.72, wm=1.975, g=8, b=0.25, r=224, kind="Z",
                                  head_width=2048),
    "RegNetY-4GF": RegNetParams(d=28, w0=80, wa=27.46, wm=2.987, g=16, b=1.0, r=208, kind="Y"),
    "RegNetZ-4GF-224": RegNetParams(d=27, w0=72, wa=12.17, wm=1.774, g=24, b=0.25, r=224, kind="Z",
                                    head_width=2048),
    "RegNetZ-4GF": RegNetParams(d=25, w0=40, wa=18.94, wm=2.227, g=8, b=0.25, r=304, kind="Z",
                                head_width=1280),
}
# the standard RegNetY-4.0GF design at its default resolution
REFERENCE_REGNETS = {
    "RegNetY-4GF-224": RegNetParams(d=22, w0=96, wa=31.41, wm=2.24, g=64, b=1.0, r=224, kind="Y"),
}


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    reconstructed: bool
    source: str
    build: object = field(repr=False, compare=False)


def _builtin_entries() -> dict[str, RegistryEntry]:
    out = {}
    for v in EFFICIENTNET_VARIANTS:
        name = f"EfficientNet-{v}"
        out[name] = RegistryEntry(name, False, "reference EfficientNet stage table",
                                  lambda v=v: build_efficientnet(v))
    for name, p in REFERENCE_REGNETS.items():
        out[name] = RegistryEntry(name, False, "reference RegNet parameters",
                                  lambda p=p, n=name: build_regnet(p, name=n))
    for name, p in RECONSTRUCTED_REGNETS.items():
        out[name] = RegistryEntry(name, True, "reconstructed to match published complexity",
                                  lambda p=p, n=name: build_regnet(p, name=n))
    return out


REGISTRY = _builtin_entries()
ALIASES = {f"EN-{v}": f"EfficientNet-{v}" for v in EFFICIENTNET_VARIANTS}


def _extra_registry() -> dict[str, RegistryEntry]:
    root = os.environ.get("SCALEKIT_REGISTRY")
    if not root:
        return {}
    out = {}
    for path in sorted(Path(root).glob("*.json")):
        spec = load_spec(path)
        entry = RegistryEntry(spec.name, False, str(path), lambda spec=spec: spec)
        out[spec.name] = entry
        out.setdefault(path.stem, entry)
    return out


def registry_names() -> list[str]:
    return sorted(set(REGISTRY) | set(_extra_registry()))


def registry_entry(name: str) -> RegistryEntry:
    name = ALIASES.get(name, name)
    extra = _extra_registry()
    if name in extra:
        return extra[name]
    if name in REGISTRY:
        return REGISTRY[name]
    raise UnknownModelError(f"unknown model {name!r}; known: {', '.join(registry_names())}")


def get_model(name: str) -> NetworkSpec:
    return registry_entry(name).build()
