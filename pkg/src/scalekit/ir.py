"""Network intermediate representation: staged conv networks, validation, files.

A :class:`NetworkSpec` is an input resolution, an optional stem conv, an
ordered list of stages and an optional head.  Per-stage spatial resolution is
never stored; it is derived from ``input_resolution`` and the strides.

Widths, depths and resolutions are integers for concrete networks.  The
scaling code also produces *continuous* specs whose dimensions are floats;
those are valid inputs to the complexity functions (which then use exact
arithmetic instead of rounding) but are not concrete networks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

from .errors import DegenerateResolutionError, SchemaError, SpecParseError

SCHEMA_VERSION = "scalekit/1"
IMAGE_CHANNELS = 3
SE_RATIO = 0.25

Number = Union[int, float]


class BlockKind(str, Enum):
    RESIDUAL_BOTTLENECK_Y = "ResidualBottleneckY"
    INVERTED_BOTTLENECK_Z = "InvertedBottleneckZ"
    MBCONV = "MBConv"
    PLAIN_CONV = "PlainConv"

    @classmethod
    def parse(cls, value: str) -> "BlockKind":
        try:
            return cls(value)
        except ValueError:
            legal = ", ".join(k.value for k in cls)
            raise SchemaError(f"unknown block_kind {value!r}; legal kinds: {legal}") from None


@dataclass(frozen=True)
class StemSpec:
    width: Number
    kernel: int = 3
    stride: int = 2


@dataclass(frozen=True)
class HeadSpec:
    # width of the 1x1 conv before pooling; 0 means pool straight into the classifier
    width: Number = 0
    num_classes: int = 1000


@dataclass(frozen=True)
class StageSpec:
    depth: Number
    width: Number
    group_width: Number
    bottleneck_ratio: float = 1.0
    stride: int = 1
    block_kind: BlockKind = BlockKind.PLAIN_CONV
    kernel: int = 3

    def __post_init__(self):
        if not isinstance(self.block_kind, BlockKind):
            object.__setattr__(self, "block_kind", BlockKind.parse(self.block_kind))

    @property
    def is_depthwise(self) -> bool:
        return self.group_width == 1

    def inner_width(self, w_in: Number | None = None) -> Number:
        """Width of the block's k x k (group) conv.

        Y and Z blocks expand the block's output width by ``1/b``; MBConv
        expands its *input* width, so the first block of a stage differs from
        the rest.  PlainConv has no expansion.
        """
        if self.block_kind is BlockKind.PLAIN_CONV:
            return self.width
        base = self.width
        if self.block_kind is BlockKind.MBCONV and w_in is not None:
            base = w_in
        return expand(base, self.bottleneck_ratio)


def _integral(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def expand(width: Number, ratio: float) -> Number:
    """``width / ratio``, rounded to an integer when ``width`` is one."""
    v = width / ratio
    if _integral(width):
        return max(1, int(round(v)))
    return v


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    input_resolution: Number
    stem: StemSpec | None
    stages: tuple[StageSpec, ...]
    head: HeadSpec | None = field(default_factory=HeadSpec)

    def __post_init__(self):
        if not isinstance(self.stages, tuple):
            object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def is_continuous(self) -> bool:
        """True if any dimension is a float (an unquantized scaled spec)."""
        values = [self.input_resolution]
        if self.stem is not None:
            values.append(self.stem.width)
        if self.head is not None:
            values.append(self.head.width)
        for st in self.stages:
            values += [st.depth, st.width, st.group_width]
        return any(isinstance(v, float) for v in values)

    def input_width(self) -> Number:
        """Channels entering the first stage.

        Without a stem the first stage is fed a map that already has its own
        width, which makes a stem-less network of uniform stages match the
        idealized stage algebra exactly.
        """
        if self.stem is not None:
            return self.stem.width
        return self.stages[0].width if self.stages else IMAGE_CHANNELS


# ---------------------------------------------------------------------------
# resolution


def _divide(r: Number, stride: int, where: str) -> Number:
    """Output resolution of a "same"-padded conv: ``ceil(r / stride)``.

    A strided conv applied to a map smaller than its stride is degenerate.
    Float (continuous) resolutions are divided exactly.
    """
    if r / stride < 1:
        raise DegenerateResolutionError(
            f"{where}: stride {stride} applied to a {r}-pixel map"
        )
    if _integral(r):
        return -(-r // stride)
    return r / stride


def stem_resolution(spec: NetworkSpec) -> Number:
    r = spec.input_resolution
    if r < 1:
        raise DegenerateResolutionError(f"{spec.name}: input resolution {r} < 1")
    if spec.stem is not None:
        r = _divide(r, spec.stem.stride, f"{spec.name}: stem")
    return r


def resolution_schedule(spec: NetworkSpec) -> tuple[Number, ...]:
    """Output resolution of every stage, aligned with ``spec.stages``.

    Integer resolutions follow "same"-padded conv arithmetic (ceiling
    division by each stride); float resolutions are divided exactly.
    """
    r = stem_resolution(spec)
    out = []
    for i, st in enumerate(spec.stages):
        r = _divide(r, st.stride, f"{spec.name}: stage {i}")
        out.append(r)
    return tuple(out)


# ---------------------------------------------------------------------------
# validation


def validate_network(spec: NetworkSpec) -> list[str]:
    """Return every invariant violation of ``spec``; an empty list means valid.

    Divisibility of group widths is only checked for integer (concrete)
    specs; continuous specs keep group counts fixed but fractional widths.
    """
    errs = []
    concrete = not spec.is_continuous
    if not spec.input_resolution >= 1:
        errs.append(f"input_resolution must be ≥ 1 (got {spec.input_resolution})")
    if spec.stem is not None:
        if not spec.stem.width >= 1:
            errs.append(f"stem: width must be ≥ 1 (got {spec.stem.width})")
        if spec.stem.kernel < 1:
            errs.append(f"stem: kernel must be ≥ 1 (got {spec.stem.kernel})")
        if spec.stem.stride < 1:
            errs.append(f"stem: stride must be ≥ 1 (got {spec.stem.stride})")
    if spec.head is not None:
        if spec.head.num_classes < 1:
            errs.append(f"head: num_classes must be ≥ 1 (got {spec.head.num_classes})")
        if not spec.head.width >= 0:
            errs.append(f"head: width must be ≥ 0 (got {spec.head.width})")
    if not spec.stages:
        errs.append("stages must be non-empty")

    w_in = spec.input_width()
    for i, st in enumerate(spec.stages):
        errs += _stage_violations(i, st, w_in, concrete)
        w_in = st.width

    if spec.stages and spec.input_resolution >= 1 and all(st.stride >= 1 for st in spec.stages):
        if spec.stem is None or spec.stem.stride >= 1:
            try:
                resolution_schedule(spec)
            except DegenerateResolutionError as exc:
                errs.append(str(exc))
    return errs


def _stage_violations(i: int, st: StageSpec, w_in: Number, concrete: bool) -> list[str]:
    p = f"stage {i}"
    errs = []
    if not st.depth >= 1:
        errs.append(f"{p}: depth must be ≥ 1")
    if not st.width >= 1:
        errs.append(f"{p}: width must be ≥ 1")
    if st.kernel < 1:
        errs.append(f"{p}: kernel must be ≥ 1")
    if st.stride < 1:
        errs.append(f"{p}: stride must be ≥ 1")
    if concrete and not (_integral(st.depth) and _integral(st.width) and _integral(st.group_width)):
        errs.append(f"{p}: depth, width and group_width must be integers")
    b = st.bottleneck_ratio
    if not b > 0:
        errs.append(f"{p}: bottleneck_ratio must be > 0")
        return errs
    kind = st.block_kind
    if kind is BlockKind.RESIDUAL_BOTTLENECK_Y and b != 1:
        errs.append(f"{p}: ResidualBottleneckY blocks require bottleneck_ratio 1 (got {b})")
    if kind is BlockKind.INVERTED_BOTTLENECK_Z and not b < 1:
        errs.append(f"{p}: InvertedBottleneckZ blocks require bottleneck_ratio < 1 (got {b})")
    if kind is BlockKind.MBCONV and st.group_width != 1:
        errs.append(f"{p}: MBConv blocks are depthwise and require group_width 1 (got {st.group_width})")
    if not st.width >= 1:
        return errs

    g = st.group_width
    inner = st.inner_width()
    if not g >= 1:
        errs.append(f"{p}: group_width must be ≥ 1 (got {g})")
    elif g > inner:
        errs.append(f"{p}: group width {g} exceeds the grouped conv width {inner}")
    if concrete and g >= 1 and _integral(g) and _integral(inner) and inner % g:
        errs.append(f"{p}: group width {g} does not divide the grouped conv width {inner}")
    if (
        concrete
        and kind is BlockKind.PLAIN_CONV
        and _integral(g) and _integral(w_in) and g >= 1
        and st.width % g == 0
        and w_in % (st.width // g)
    ):
        groups = st.width // g
        errs.append(f"{p}: input width {w_in} cannot be split into {groups} groups")
    return errs


# ---------------------------------------------------------------------------
# serialization


def to_dict(spec: NetworkSpec) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "name": spec.name,
        "input_resolution": spec.input_resolution,
        "stem": None if spec.stem is None else {
            "width": spec.stem.width, "kernel": spec.stem.kernel, "stride": spec.stem.stride,
        },
        "stages": [
            {
                "depth": st.depth,
                "width": st.width,
                "group_width": st.group_width,
                "bottleneck_ratio": st.bottleneck_ratio,
                "stride": st.stride,
                "block_kind": st.block_kind.value,
                "kernel": st.kernel,
            }
            for st in spec.stages
        ],
        "head": None if spec.head is None else {
            "width": spec.head.width, "num_classes": spec.head.num_classes,
        },
    }


def serialize(spec: NetworkSpec) -> str:
    """Canonical text form: indented JSON with a fixed key order."""
    return json.dumps(to_dict(spec), indent=2, ensure_ascii=False) + "\n"


def _require(obj, key, path):
    if not isinstance(obj, dict):
        raise SpecParseError(f"expected an object, got {type(obj).__name__}", path or "document")
    if key not in obj:
        where = f"{path}.{key}" if path else key
        raise SpecParseError(f"missing required field {key!r}", where)
    return obj[key]


def _number(obj, key, path, integer=False):
    v = _require(obj, key, path)
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise SchemaError(f"field {key!r} must be {kind}, got {v!r}", f"{path}.{key}" if path else key)
    return v


def from_dict(doc) -> NetworkSpec:
    schema = _require(doc, "schema", "")
    if schema != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema {schema!r}; expected {SCHEMA_VERSION!r}", "schema")
    name = _require(doc, "name", "")
    if not isinstance(name, str):
        raise SchemaError("name must be a string", "name")
    r = _number(doc, "input_resolution", "")

    stem_doc = _require(doc, "stem", "")
    stem = None
    if stem_doc is not None:
        stem = StemSpec(
            width=_number(stem_doc, "width", "stem"),
            kernel=_number(stem_doc, "kernel", "stem", integer=True),
            stride=_number(stem_doc, "stride", "stem", integer=True),
        )

    stages_doc = _require(doc, "stages", "")
    if not isinstance(stages_doc, list):
        raise SchemaError("stages must be a list", "stages")
    stages = []
    for i, sd in enumerate(stages_doc):
        path = f"stages[{i}]"
        kind = _require(sd, "block_kind", path)
        if not isinstance(kind, str):
            raise SchemaError("block_kind must be a string", f"{path}.block_kind")
        try:
            kind = BlockKind.parse(kind)
        except SchemaError as exc:
            raise SchemaError(str(exc), f"{path}.block_kind") from None
        stages.append(StageSpec(
            depth=_number(sd, "depth", path),
            width=_number(sd, "width", path),
            group_width=_number(sd, "group_width", path),
            bottleneck_ratio=_number(sd, "bottleneck_ratio", path),
            stride=_number(sd, "stride", path, integer=True),
            block_kind=kind,
            kernel=_number(sd, "kernel", path, integer=True),
        ))

    head_doc = _require(doc, "head", "")
    head = None
    if head_doc is not None:
        head = HeadSpec(
            width=_number(head_doc, "width", "head"),
            num_classes=_number(head_doc, "num_classes", "head", integer=True),
        )
    return NetworkSpec(name=name, input_resolution=r, stem=stem, stages=tuple(stages), head=head)


def deserialize(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(exc.msg, f"line {exc.lineno}:{exc.colno}") from None
    return from_dict(doc)


def save_spec(spec: NetworkSpec, path) -> Path:
    path = Path(path)
    path.write_text(serialize(spec), encoding="utf-8")
    return path


def load_spec(path) -> NetworkSpec:
    path = Path(path)
    try:
        return deserialize(path.read_text(encoding="utf-8"))
    except SpecParseError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def total_stride(spec: NetworkSpec) -> int:
    s = spec.stem.stride if spec.stem is not None else 1
    return s * math.prod(st.stride for st in spec.stages)
