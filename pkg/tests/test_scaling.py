import math

import pytest

from scalekit.complexity import network_complexity
from scalekit.errors import DomainError
from scalekit.families import get_model, registry_names
from scalekit.ir import BlockKind, NetworkSpec, StageSpec, validate_network
from scalekit.scaling import (
    POLICY_NAMES,
    ScaledSeries,
    ScaleRequest,
    ScalingPolicy,
    apply_multipliers,
    calibrate_scale,
    fast_policy,
    loglog_slope,
    policy_from_name,
    predicted_multipliers,
    quantize_network,
    round_even,
    round_to_multiple,
    scale_network,
    sweep,
    sweep_csv,
    _refine_depths,
)

from conftest import plain_network


@pytest.mark.parametrize("alpha, exps", [
    (1.0, (0.0, 1.0, 0.0)),
    (1 / 3, (1 / 3, 1 / 3, 1 / 3)),
    (0.8, (0.1, 0.8, 0.1)),
    (0.0, (0.5, 0.0, 0.5)),
])
def test_fast_policy_rows(alpha, exps):
    pol = fast_policy(alpha)
    assert pol.exponents == pytest.approx(exps, abs=1e-15)
    assert pol.alpha == alpha


def test_fast_policy_domain():
    for bad in (-0.01, 1.5):
        with pytest.raises(DomainError):
            fast_policy(bad)


def test_dwr_name():
    assert fast_policy(0.8).name == "dWr" and fast_policy(0.8).label == "dWr"
    assert fast_policy(0.5).label == "alpha=0.5"


@pytest.mark.parametrize("name, exps", [
    ("d", (1, 0, 0)), ("w", (0, 1, 0)), ("r", (0, 0, 1)),
    ("dw", (0.5, 0.5, 0)), ("wr", (0, 0.5, 0.5)), ("dr", (0.5, 0, 0.5)),
    ("dwr", (1 / 3, 1 / 3, 1 / 3)), ("dWr", (0.1, 0.8, 0.1)),
])
def test_policy_from_name(name, exps):
    assert policy_from_name(name).exponents == pytest.approx(exps, abs=1e-15)


def test_policy_from_name_unknown_lists_names():
    with pytest.raises(LookupError) as err:
        policy_from_name("xyz")
    for n in POLICY_NAMES:
        assert n in str(err.value)


def test_family_endpoints():
    assert fast_policy(1).same_exponents(policy_from_name("w"))
    assert fast_policy(1 / 3).same_exponents(policy_from_name("dwr"))
    assert fast_policy(0).same_exponents(policy_from_name("dr"))


def test_policy_simplex_enforced():
    with pytest.raises(DomainError):
        ScalingPolicy(0.5, 0.5, 0.5)
    with pytest.raises(DomainError):
        ScalingPolicy(-0.5, 1.0, 0.5)


def test_predicted_examples():
    assert predicted_multipliers(policy_from_name("dwr"), 7.0)[2] == pytest.approx(7 ** (5 / 6), rel=1e-14)
    f, p, a = predicted_multipliers(fast_policy(0.8), 16)
    assert (f, round(p, 3), round(a, 3)) == (16.0, 12.126, 5.278)
    assert predicted_multipliers(fast_policy(0.3), 1) == (1.0, 1.0, 1.0)


def test_predicted_matches_continuous_network():
    # cross-check of the closed form by actually scaling a network
    spec = plain_network(d=2.0, w=48.0, r=28.0)
    base = network_complexity(spec)
    pol = fast_policy(0.8)
    scaled = network_complexity(scale_network(spec, ScaleRequest(16, pol, quantize=False)))
    got = (scaled.flops / base.flops, scaled.params / base.params, scaled.acts / base.acts)
    assert got == pytest.approx(predicted_multipliers(pol, 16), rel=1e-12)


def test_scale_request_requires_s_at_least_one():
    with pytest.raises(DomainError):
        ScaleRequest(0.5, fast_policy(0.8))


def test_scale_identity():
    spec = get_model("RegNetY-500MF")
    assert scale_network(spec, ScaleRequest(1, fast_policy(0.8))) == spec
    assert scale_network(spec, ScaleRequest(1, fast_policy(0.8), quantize=False)) == spec


def test_width_policy_doubles_width():
    spec = plain_network(d=2, w=64, r=56)
    for quantize in (False, True):
        out = scale_network(spec, ScaleRequest(4, policy_from_name("w"), quantize))
        st = out.stages[0]
        assert st.width == 128 and st.depth == 2 and out.input_resolution == 56


def test_dwr_example():
    spec = plain_network(d=2.0, w=64.0, r=224.0)
    out = scale_network(spec, ScaleRequest(8, policy_from_name("dwr"), quantize=False))
    st = out.stages[0]
    assert st.depth == pytest.approx(4.0, rel=1e-12)
    assert st.width == pytest.approx(90.51, abs=0.005)
    assert out.input_resolution == pytest.approx(316.8, abs=0.05)
    ratio = network_complexity(out).flops / network_complexity(spec).flops
    assert ratio == pytest.approx(8, rel=1e-9)


def test_group_width_follows_width_except_depthwise():
    spec = get_model("RegNetY-500MF")
    out = scale_network(spec, ScaleRequest(4, policy_from_name("w"), quantize=False))
    for a, b in zip(spec.stages, out.stages):
        assert b.group_width / a.group_width == pytest.approx(2.0)
    en = scale_network(get_model("EfficientNet-B0"), ScaleRequest(4, policy_from_name("w"), quantize=False))
    assert all(st.group_width == 1 for st in en.stages)


def test_stem_and_head_scale_with_width():
    spec = get_model("EfficientNet-B0")
    out = scale_network(spec, ScaleRequest(4, policy_from_name("w"), quantize=False))
    assert out.stem.width == pytest.approx(64.0) and out.head.width == pytest.approx(2560.0)
    assert out.head.num_classes == 1000


def test_calibrate_scale_hits_target():
    spec = get_model("EfficientNet-B0")
    pol = fast_policy(0.8)
    target = 10 * network_complexity(spec).flops
    s_cal = calibrate_scale(spec, pol, target)
    got = network_complexity(apply_multipliers(spec, pol, s_cal)).flops
    assert got == pytest.approx(target, rel=1e-8)


def test_rounding_helpers():
    assert round_to_multiple(50.0, 8) == 48
    assert round_to_multiple(52.0, 8) == 56  # tie rounds up
    assert round_to_multiple(2.0, 8) == 8
    assert round_even(223.0) == 224 and round_even(225.0) == 226 and round_even(0.4) == 2


def _one_stage(w, g, b=1.0, kind=BlockKind.PLAIN_CONV, d=2.0):
    st = StageSpec(d, w, g, b, 1, kind, 3)
    return NetworkSpec("q", 56.0, None, (st,), None)


def test_quantize_width_to_multiple_of_eight():
    out = quantize_network(_one_stage(50.0, 8.0), match_flops=False)
    assert out.stages[0].width == 48 and out.stages[0].group_width == 8


def test_quantize_caps_group_width():
    # with granularity 8, 20 rounds (ties up) to 24 and g = w = 24
    out = quantize_network(_one_stage(20.0, 24.0), match_flops=False)
    assert (out.stages[0].width, out.stages[0].group_width) == (24, 24)
    out = quantize_network(_one_stage(20.0, 24.0), width_quantum=4, match_flops=False)
    assert (out.stages[0].width, out.stages[0].group_width) == (20, 20)


def test_quantize_rerounds_width_to_group_multiple():
    out = quantize_network(_one_stage(100.0, 48.0, kind=BlockKind.RESIDUAL_BOTTLENECK_Y),
                           match_flops=False)
    st = out.stages[0]
    assert st.width % st.group_width == 0
    assert 3 / 4 <= st.width / 100.0 <= 4 / 3


def test_quantize_z_group_keeps_integer_width():
    out = quantize_network(_one_stage(65.48, 130.97, b=0.25, kind=BlockKind.INVERTED_BOTTLENECK_Z),
                           match_flops=False)
    st = out.stages[0]
    assert (4 * st.width) % st.group_width == 0
    assert 3 / 4 <= st.width / 65.48 <= 4 / 3


def test_quantize_depth_and_resolution():
    spec = plain_network(d=2.5, w=64.0, r=100.9)
    out = quantize_network(spec, match_flops=False)
    assert out.stages[0].depth == 3 and out.input_resolution == 100
    spec = plain_network(d=0.3, w=64.0, r=101.0)
    out = quantize_network(spec, match_flops=False)
    assert out.stages[0].depth == 1 and out.input_resolution == 102
    assert not out.is_continuous


@pytest.mark.parametrize("name", ["EfficientNet-B0", "EfficientNet-B3", "RegNetY-500MF",
                                  "RegNetZ-500MF", "RegNetY-4GF", "RegNetZ-4GF"])
def test_quantize_fixed_point(name):
    spec = get_model(name)
    assert quantize_network(spec) == spec


@pytest.mark.parametrize("name", ["EfficientNet-B0", "RegNetY-500MF", "RegNetZ-500MF"])
@pytest.mark.parametrize("alpha", [0.0, 1 / 3, 0.8, 1.0])
def test_quantized_scaling_close_to_target(name, alpha):
    spec = get_model(name)
    base = network_complexity(spec).flops
    for s in (2, 10, 50):
        out = scale_network(spec, ScaleRequest(s, fast_policy(alpha)))
        assert validate_network(out) == []
        assert abs(network_complexity(out).flops / base / s - 1) < 0.10


def test_sweep_single_point():
    spec = get_model("EfficientNet-B0")
    series = sweep(spec, policy_from_name("dw"), [1])
    assert len(series) == 1
    assert series.points[0].complexity.as_tuple() == network_complexity(spec).as_tuple()


def test_sweep_requires_increasing():
    spec = get_model("EfficientNet-B0")
    with pytest.raises(DomainError):
        sweep(spec, policy_from_name("w"), [2, 1])
    with pytest.raises(DomainError):
        sweep(spec, policy_from_name("w"), [])


def test_width_sweep_acts_grow_as_sqrt():
    spec = get_model("EfficientNet-B0")
    series = sweep(spec, policy_from_name("w"), [1, 2, 4, 8, 16, 32, 64, 128])
    fl = [p.complexity.flops for p in series]
    ac = [p.complexity.acts for p in series]
    assert loglog_slope(fl, ac) == pytest.approx(0.5, abs=0.05)


def test_dwr_vs_dwr_fast_activation_ratio():
    spec = plain_network(d=2.0, w=64.0, r=56.0)
    a1 = sweep(spec, policy_from_name("dwr"), [32], quantize=False).points[0].complexity.acts
    a2 = sweep(spec, policy_from_name("dWr"), [32], quantize=False).points[0].complexity.acts
    assert a1 / a2 == pytest.approx(32 ** (5 / 6 - 3 / 5), rel=1e-9)
    assert round(a1 / a2, 3) == 2.245


def test_sweep_csv_columns():
    spec = get_model("EfficientNet-B0")
    text = sweep_csv([sweep(spec, fast_policy(0.8), [1, 2])])
    lines = text.splitlines()
    assert lines[0] == "name,policy,alpha,s,flops,params,acts,quantized"
    assert lines[1].startswith("EfficientNet-B0,dWr,0.8,1,")
    assert len(lines) == 3


def test_scaled_series_invariant():
    with pytest.raises(DomainError):
        ScaledSeries("x", fast_policy(0.8), True, (
            sweep(get_model("EfficientNet-B0"), fast_policy(0.8), [2]).points[0],
        ) * 2)


def test_loglog_slope_exact():
    xs = [1, 2, 4, 8]
    assert loglog_slope(xs, [3 * x ** 0.7 for x in xs]) == pytest.approx(0.7, rel=1e-12)


def test_registry_models_scale():
    for name in registry_names():
        out = scale_network(get_model(name), ScaleRequest(4, fast_policy(0.8)))
        assert validate_network(out) == []
        assert math.isfinite(network_complexity(out).flops)


def _depth_stack(depths, w=32.0, r=32.0):
    stages = tuple(StageSpec(depth=d, width=w, group_width=w, stride=1,
                             block_kind=BlockKind.PLAIN_CONV) for d in depths)
    return NetworkSpec(name="stack", input_resolution=r, stem=None, stages=stages, head=None)


def test_depth_refinement_beats_nearest_rounding():
    # a single stage at depth 1.5 rounds to 2 (+33% flops); resolution alone
    # can only move in steps of 2 px, so the floor/ceil search should help
    cont = _depth_stack([1.5, 2.5])
    target = network_complexity(cont).flops
    plain = quantize_network(cont, refine_tol=float("inf"))
    refined = quantize_network(cont, refine_tol=0.0)
    miss = lambda s: abs(math.log(network_complexity(s).flops / target))
    assert miss(refined) <= miss(plain)
    for q, c in zip(refined.stages, cont.stages):
        assert math.floor(c.depth) <= q.depth <= math.ceil(c.depth)
    validate_network(refined)


def test_depth_refinement_respects_combination_cap():
    cont = _depth_stack([1.5] * 8)
    out = quantize_network(cont, refine_tol=0.0)
    capped = _refine_depths(quantize_network(cont, match_flops=False), cont,
                            network_complexity(cont).flops, max_combos=4)
    for spec in (out, capped):
        validate_network(spec)
        assert all(st.depth in (1, 2) for st in spec.stages)
