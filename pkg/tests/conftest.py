import sys

import pytest

from scalekit.ir import BlockKind, HeadSpec, NetworkSpec, StageSpec, StemSpec


def plain_network(d=2.0, w=64.0, r=56.0, k=3, g=None, stages=1, name="plain"):
    """Uniform PlainConv stages with no stem and no head.

    Float arguments give a continuous spec, ints a concrete one.
    """
    g = w if g is None else g
    st = StageSpec(depth=d, width=w, group_width=g, stride=1,
                   block_kind=BlockKind.PLAIN_CONV, kernel=k)
    return NetworkSpec(name=name, input_resolution=r, stem=None, stages=(st,) * stages, head=None)


def small_regnet_like(name="toy"):
    return NetworkSpec(
        name=name,
        input_resolution=224,
        stem=StemSpec(width=32),
        stages=(
            StageSpec(1, 48, 8, 1.0, 2, BlockKind.RESIDUAL_BOTTLENECK_Y),
            StageSpec(3, 104, 8, 1.0, 2, BlockKind.RESIDUAL_BOTTLENECK_Y),
            StageSpec(6, 208, 8, 1.0, 2, BlockKind.RESIDUAL_BOTTLENECK_Y),
            StageSpec(2, 440, 8, 1.0, 2, BlockKind.RESIDUAL_BOTTLENECK_Y),
        ),
        head=HeadSpec(0, 1000),
    )


@pytest.fixture
def toy_spec():
    return small_regnet_like()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines):
            terminalreporter.write_line(line)
