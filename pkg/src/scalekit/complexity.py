"""Flops, parameters and activations of convs, blocks, stages and networks.

Conventions:

* flops are multiply-adds; parameters are conv/classifier weights only
  (no biases, no normalization parameters);
* activations are the element counts of conv output tensors.  Pooling,
  normalization, nonlinearities and the classifier output contribute none.

A k x k conv with input width ``w_in``, output width ``w_out``, group width
``g`` (input channels per group) and output resolution ``r`` costs
``w_out * g * k^2 * r^2`` flops, ``w_out * g * k^2`` parameters and
``w_out * r^2`` activations.  ``g = w_in`` is a full conv, ``g = 1`` depthwise.
"""

from __future__ import annotations

import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass

from .errors import DivisibilityError
from .ir import (
    IMAGE_CHANNELS,
    SE_RATIO,
    BlockKind,
    NetworkSpec,
    Number,
    StageSpec,
    _integral,
    expand,
    resolution_schedule,
    stem_resolution,
)


@dataclass(frozen=True)
class Entry:
    label: str
    flops: Number
    params: Number
    acts: Number


@dataclass(frozen=True)
class ComplexityReport:
    flops: Number
    params: Number
    acts: Number
    breakdown: tuple[Entry, ...] = ()

    @classmethod
    def from_entries(cls, entries) -> "ComplexityReport":
        entries = tuple(entries)
        return cls(
            flops=sum(e.flops for e in entries),
            params=sum(e.params for e in entries),
            acts=sum(e.acts for e in entries),
            breakdown=entries,
        )

    @classmethod
    def combine(cls, reports) -> "ComplexityReport":
        return cls.from_entries(e for r in reports for e in r.breakdown)

    def prefixed(self, prefix: str) -> "ComplexityReport":
        return ComplexityReport.from_entries(
            Entry(f"{prefix}.{e.label}", e.flops, e.params, e.acts) for e in self.breakdown
        )

    def scaled(self, factor: Number) -> "ComplexityReport":
        return ComplexityReport.from_entries(
            Entry(e.label, e.flops * factor, e.params * factor, e.acts * factor)
            for e in self.breakdown
        )

    def components(self, level: int = 1) -> "OrderedDict[str, tuple]":
        """Totals grouped by the first ``level`` segments of each label."""
        out = OrderedDict()
        for e in self.breakdown:
            key = ".".join(e.label.split(".")[:level])
            f, p, a = out.get(key, (0, 0, 0))
            out[key] = (f + e.flops, p + e.params, a + e.acts)
        return out

    def as_tuple(self) -> tuple[Number, Number, Number]:
        return (self.flops, self.params, self.acts)

    def to_dict(self, name: str | None = None, breakdown: bool = True) -> dict:
        d = {} if name is None else {"name": name}
        d.update(flops=self.flops, params=self.params, acts=self.acts)
        if breakdown:
            d["breakdown"] = [
                {"label": e.label, "flops": e.flops, "params": e.params, "acts": e.acts}
                for e in self.breakdown
            ]
        return d

    def summary(self) -> str:
        return (f"flops {self.flops / 1e9:.3f}B  params {self.params / 1e6:.2f}M  "
                f"acts {self.acts / 1e6:.2f}M")


CSV_FIELDS = ("name", "flops", "params", "acts")


def csv_rows(named_reports) -> str:
    """Flat CSV ``name,flops,params,acts`` for ``(name, report)`` pairs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for name, rep in named_reports:
        writer.writerow([name, _fmt(rep.flops), _fmt(rep.params), _fmt(rep.acts)])
    return buf.getvalue()


def _fmt(x: Number) -> str:
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e17:
        return str(int(x))
    return repr(x)


# ---------------------------------------------------------------------------


def conv_complexity(w_in, w_out, r_out, k=1, g=None, label="conv") -> ComplexityReport:
    """Complexity of one k x k conv with group width ``g`` (default: full conv)."""
    if g is None:
        g = w_in
    if not g > 0:
        raise DivisibilityError(f"group width must be positive (got {g})")
    if _integral(w_in) and _integral(w_out) and _integral(g):
        if w_in % g:
            raise DivisibilityError(f"group width {g} does not divide input width {w_in}")
        groups = w_in // g
        if w_out % groups:
            raise DivisibilityError(
                f"output width {w_out} is not divisible into {groups} groups (g={g}, w_in={w_in})"
            )
    params = w_out * g * k * k
    spatial = r_out * r_out
    return ComplexityReport.from_entries([Entry(label, params * spatial, params, w_out * spatial)])


def se_width(w_in: Number) -> Number:
    """Squeeze width of an SE op: a quarter of the block input width."""
    v = w_in * SE_RATIO
    if _integral(w_in):
        return max(1, math.floor(v + 0.5))
    return v


def block_complexity(stage: StageSpec, r_out, w_in, *, stride=None, r_in=None) -> ComplexityReport:
    """Complexity of one block of ``stage`` fed ``w_in`` channels.

    ``stride`` defaults to the stage stride (i.e. the first block of the
    stage); ``r_in`` defaults to ``r_out * stride``.  The k x k conv carries
    the stride.
    """
    if stride is None:
        stride = stage.stride
    if r_in is None:
        r_in = r_out * stride
    w, k, g = stage.width, stage.kernel, stage.group_width
    kind = stage.block_kind
    convs = []

    if kind is BlockKind.PLAIN_CONV:
        groups = w // g if _integral(w) and _integral(g) else w / g
        if _integral(w) and _integral(g) and w % g:
            raise DivisibilityError(f"group width {g} does not divide width {w}")
        if _integral(w_in) and _integral(groups):
            if w_in % groups:
                raise DivisibilityError(f"input width {w_in} cannot be split into {groups} groups")
            g_in = w_in // groups
        else:
            g_in = w_in / groups
        convs.append(conv_complexity(w_in, w, r_out, k, g_in, "conv"))
        return ComplexityReport.combine(convs)

    if kind is BlockKind.MBCONV:
        w_b = stage.inner_width(w_in)
        if w_b != w_in:
            convs.append(conv_complexity(w_in, w_b, r_in, 1, w_in, "expand"))
        convs.append(conv_complexity(w_b, w_b, r_out, k, 1, "dwconv"))
        convs += _se(w_in, w_b)
        convs.append(conv_complexity(w_b, w, r_out, 1, w_b, "project"))
        return ComplexityReport.combine(convs)

    # Y and Z: 1x1 -> k x k group conv -> SE -> 1x1
    w_b = expand(w, stage.bottleneck_ratio)
    convs.append(conv_complexity(w_in, w_b, r_in, 1, w_in, "conv_a"))
    convs.append(conv_complexity(w_b, w_b, r_out, k, g, "conv_b"))
    convs += _se(w_in, w_b)
    convs.append(conv_complexity(w_b, w, r_out, 1, w_b, "conv_c"))
    if kind is BlockKind.RESIDUAL_BOTTLENECK_Y and (stride != 1 or w_in != w):
        convs.append(conv_complexity(w_in, w, r_out, 1, w_in, "shortcut"))
    return ComplexityReport.combine(convs)


def _se(w_in, w_b):
    w_se = se_width(w_in)
    return [
        conv_complexity(w_b, w_se, 1, 1, w_b, "se_reduce"),
        conv_complexity(w_se, w_b, 1, 1, w_se, "se_expand"),
    ]


def stage_complexity(stage: StageSpec, r_out, w_in, *, r_in=None) -> ComplexityReport:
    """First block maps ``w_in`` with the stage stride; the other ``d - 1`` are uniform.

    ``d`` may be fractional for continuous specs; the uniform blocks are then
    counted ``d - 1`` times.
    """
    d = stage.depth
    first = block_complexity(stage, r_out, w_in, stride=stage.stride, r_in=r_in).prefixed("b0")
    if d == 1:
        return first
    rest = block_complexity(stage, r_out, stage.width, stride=1, r_in=r_out).scaled(d - 1)
    label = f"b1..{d - 1}" if _integral(d) else f"b1..(x{d - 1:.6g})"
    return ComplexityReport.combine([first, rest.prefixed(label)])


def network_complexity(spec: NetworkSpec) -> ComplexityReport:
    """Stem + stages + head; the classifier counts as a 1x1 conv at resolution 1."""
    parts = []
    r_prev = stem_resolution(spec)
    if spec.stem is not None:
        stem = spec.stem
        parts.append(conv_complexity(IMAGE_CHANNELS, stem.width, r_prev, stem.kernel,
                                     IMAGE_CHANNELS, "stem"))
    w_in = spec.input_width()
    for i, (st, r_out) in enumerate(zip(spec.stages, resolution_schedule(spec))):
        parts.append(stage_complexity(st, r_out, w_in, r_in=r_prev).prefixed(f"stage{i + 1}"))
        w_in, r_prev = st.width, r_out
    head = spec.head
    if head is not None:
        if head.width > 0:
            parts.append(conv_complexity(w_in, head.width, r_prev, 1, w_in, "head.conv"))
            w_in = head.width
        fc = conv_complexity(w_in, head.num_classes, 1, 1, w_in, "head.fc").breakdown[0]
        parts.append(ComplexityReport.from_entries([Entry(fc.label, fc.flops, fc.params, 0)]))
    return ComplexityReport.combine(parts)
