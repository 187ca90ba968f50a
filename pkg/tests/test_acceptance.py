"""End-to-end acceptance checks, one per criterion.

Each check prints a single ``ACCEPTANCE <n> PASS|FAIL`` line.  Run with
``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from scalekit.cli import EXIT_OK, cmd_sample
from scalekit.complexity import conv_complexity, network_complexity
from scalekit.errors import DesignError
from scalekit.families import DesignSpaceRanges, build_efficientnet, build_regnet, draw_params, draw_rng
from scalekit.ir import BlockKind, NetworkSpec, StageSpec, load_spec, validate_network
from scalekit.runtime import FeatureSet, Measurement, fit_runtime
from scalekit.scaling import (
    ScaleRequest,
    apply_multipliers,
    calibrate_scale,
    fast_policy,
    loglog_slope,
    policy_from_name,
    predicted_multipliers,
    quantize_network,
    scale_network,
    sweep,
)

SCALES = (2, 4, 10, 100)


# lines collected here are echoed in pytest's terminal summary (see conftest)
REPORT_LINES = []


def report(n, ok, detail):
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
    REPORT_LINES.append(line)
    if __name__ == "__main__":
        print(line, flush=True)
    return line


def _rel(a, b):
    return abs(a / b - 1)


# 1 ---------------------------------------------------------------------------


def _stage_net(d, w, r):
    st = StageSpec(depth=d, width=w, group_width=w, stride=1, block_kind=BlockKind.PLAIN_CONV, kernel=3)
    return NetworkSpec("stage", r, None, (st, st), None)


def _multipliers(policy, s, d=3.0, w=40.0, r=28.0):
    spec = _stage_net(d, w, r)
    base = network_complexity(spec).as_tuple()
    out = network_complexity(scale_network(spec, ScaleRequest(s, policy, quantize=False))).as_tuple()
    return tuple(x / y for x, y in zip(out, base))


# dimension label -> (e_d, e_w, e_r) exponents of the (f, p, a) multipliers in s
STAGE_ROWS = {
    # simple scaling
    "d": (1, 1, 1), "w": (1, 1, 0.5), "r": (1, 0, 1),
    # uniform compound scaling
    "dw": (1, 1, 0.75), "wr": (1, 0.5, 0.75), "dr": (1, 0.5, 1), "dwr": (1, 2 / 3, 5 / 6),
}
# fast family rows: alpha -> (p exponent, a exponent) as printed to two decimals
FAST_ROWS = {0.0: (0.50, 1.00), 1 / 3: (0.67, 0.83), 0.8: (0.90, 0.60), 1.0: (1.00, 0.50)}
# group conv: (w multiplier, g multiplier as functions of s) -> (f, p, a) exponents
GROUP_ROWS = {
    "w": (lambda s: s, lambda s: 1, (1, 1, 1)),
    "g": (lambda s: 1, lambda s: s, (1, 1, 0)),
    "wg": (lambda s: math.sqrt(s), lambda s: math.sqrt(s), (1, 1, 0.5)),
}


def criterion_1():
    t0 = time.perf_counter()
    worst, bad = 0.0, []
    for s in SCALES:
        assert _multipliers(fast_policy(0.5), 1) == pytest.approx((1, 1, 1), rel=1e-12)  # "none" row
        for name, exps in STAGE_ROWS.items():
            got = _multipliers(policy_from_name(name), s)
            for g, e in zip(got, exps):
                err = _rel(g, s ** e)
                worst = max(worst, err)
                if err > 1e-9:
                    bad.append((name, s))
        for alpha, (pe, ae) in FAST_ROWS.items():
            pol = fast_policy(alpha)
            got = _multipliers(pol, s)
            closed = (s, s ** ((1 + alpha) / 2), s ** ((2 - alpha) / 2))
            for g, c in zip(got, closed):
                err = _rel(g, c)
                worst = max(worst, err)
                if err > 1e-9:
                    bad.append((f"alpha={alpha:.3g}", s))
            if (round((1 + alpha) / 2, 2), round((2 - alpha) / 2, 2)) != (pe, ae):
                bad.append((f"alpha={alpha:.3g} printed", s))
            if not pol.same_exponents(fast_policy(alpha)):
                bad.append((f"alpha={alpha:.3g} exps", s))
        w, g, r = 64.0, 8.0, 14.0
        base = conv_complexity(w, w, r, 3, g).as_tuple()
        for name, (wm, gm, exps) in GROUP_ROWS.items():
            got = conv_complexity(w * wm(s), w * wm(s), r, 3, g * gm(s)).as_tuple()
            for x, y, e in zip(got, base, exps):
                err = _rel(x / y, s ** e)
                worst = max(worst, err)
                if err > 1e-9:
                    bad.append((f"group {name}", s))
    # the named policies are the fast family's endpoints
    for alpha, name in ((1, "w"), (1 / 3, "dwr"), (0, "dr")):
        if not fast_policy(alpha).same_exponents(policy_from_name(name)):
            bad.append((f"endpoint {name}", None))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1.0
    return ok, f"table algebra worst rel err {worst:.2e} over s in {SCALES}, {elapsed:.3f}s" + (
        f", mismatches {bad[:5]}" if bad else "")


# 2 ---------------------------------------------------------------------------


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240602)
    worst = 0.0
    for _ in range(100):
        alpha = float(rng.uniform(0, 1))
        s = float(np.exp(rng.uniform(0, math.log(1e4))))
        got = predicted_multipliers(fast_policy(alpha), s)
        want = (s, s ** ((1 + alpha) / 2), s ** ((2 - alpha) / 2))
        worst = max(worst, max(_rel(g, w) for g, w in zip(got, want)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    return ok, f"fast-family closed form, 100 pairs, worst rel err {worst:.1e}, {elapsed:.3f}s"


# 3 ---------------------------------------------------------------------------

EN_PUBLISHED = {
    "B0": (0.39e9, 5.3e6, 6.7e6),
    "B1": (0.7e9, 7.8e6, 10.9e6),
    "B2": (1.0e9, 9.1e6, 13.8e6),
    "B3": (1.8e9, 12.2e6, 23.8e6),
}


def criterion_3():
    parts, ok = [], True
    for v, (pf, pp, pa) in EN_PUBLISHED.items():
        f, p, a = network_complexity(build_efficientnet(v)).as_tuple()
        ef, ep, ea = _rel(f, pf), _rel(p, pp), _rel(a, pa)
        ok &= ef <= 0.03 and ep <= 0.03 and ea <= 0.10
        parts.append(f"{v} f{ef:+.1%} p{ep:+.1%} a{ea:+.1%}".replace("+", ""))
    return ok, "EfficientNet deviations " + ", ".join(parts)


# 4 ---------------------------------------------------------------------------

SLOPE_TARGETS = {"w": 0.5, "dWr": 0.6, "dwr": 5 / 6, "dw": 0.75}


def criterion_4():
    t0 = time.perf_counter()
    spec = build_efficientnet("B0")
    grid = [2 ** i for i in range(8)]
    slopes, ok = {}, True
    for name, target in SLOPE_TARGETS.items():
        series = sweep(spec, policy_from_name(name), grid, quantize=True)
        slopes[name] = loglog_slope([p.complexity.flops for p in series], [p.complexity.acts for p in series])
        ok &= abs(slopes[name] - target) <= 0.05
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5.0
    return ok, "acts~flops slopes " + ", ".join(
        f"{k} {v:.3f} (target {SLOPE_TARGETS[k]:.3f})" for k, v in slopes.items()) + f", {elapsed:.2f}s"


# 5 ---------------------------------------------------------------------------


def random_regnets(n, seed):
    out, i = [], 0
    while len(out) < n:
        kind = "YZ"[i % 2]
        ranges = DesignSpaceRanges(flop_target=1e9, kind=kind)
        params = draw_params(ranges, draw_rng(seed, i))
        i += 1
        try:
            spec = build_regnet(params)
        except DesignError:
            continue
        if validate_network(spec):
            continue
        out.append(spec)
    return out


def criterion_5():
    rng = np.random.default_rng(5)
    worst_f, lo_w, hi_w, n_fail = 0.0, math.inf, 0.0, 0
    for spec in random_regnets(200, seed=11):
        pol = fast_policy(float(rng.uniform(0, 1)))
        s = float(np.exp(rng.uniform(0, math.log(100))))
        base = network_complexity(spec).flops
        out = scale_network(spec, ScaleRequest(s, pol))
        err = _rel(network_complexity(out).flops / base, s)
        worst_f = max(worst_f, err)
        # the continuous spec that quantization rounds
        cont = apply_multipliers(spec, pol, calibrate_scale(spec, pol, s * base))
        same = quantize_network(cont) == out
        ratios = [q.width / c.width for q, c in zip(out.stages, cont.stages)]
        lo_w, hi_w = min(lo_w, *ratios), max(hi_w, *ratios)
        if err > 0.10 or not same or min(ratios) < 3 / 4 or max(ratios) > 4 / 3:
            n_fail += 1
    ok = n_fail == 0
    return ok, (f"200 random RegNets: worst flop multiplier error {worst_f:.1%}, "
                f"width ratio range [{lo_w:.3f}, {hi_w:.3f}], {n_fail} failing")


# 6 ---------------------------------------------------------------------------


def synthetic_measurements(seed=6, c0=0.5, ca=4e-7, noise=0.01):
    rng = np.random.default_rng(seed)
    base = build_efficientnet("B0")
    grid = [1, 2, 4, 8, 16, 32, 64, 100]
    out = []
    for name in ("w", "dWr", "dwr", "dw"):
        for p in sweep(base, policy_from_name(name), grid):
            c = p.complexity
            t = (c0 + ca * c.acts) * (1 + noise * rng.standard_normal())
            out.append(Measurement(f"EN-B0-{name}-{p.s:g}", name, c.flops, c.params, c.acts, t, 128))
    return out


def criterion_6():
    data = synthetic_measurements()
    acts_fit = fit_runtime(data, FeatureSet.ACTS_ONLY)
    flops_fit = fit_runtime(data, FeatureSet.FLOPS_ONLY)
    err = _rel(acts_fit.coef_acts, 4e-7)
    ok = err <= 0.05 and acts_fit.fit_r >= 0.99 and flops_fit.fit_r < acts_fit.fit_r and len(data) == 32
    return ok, (f"{len(data)} synthetic runs: coef_acts err {err:.2%}, r(acts) {acts_fit.fit_r:.4f}, "
                f"r(flops) {flops_fit.fit_r:.4f}")


# 7 ---------------------------------------------------------------------------


def criterion_7():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        a = cmd_sample("Y", "500MF", 0.1, 32, seed=7, out=Path(tmp) / "a")
        b = cmd_sample("Y", "500MF", 0.1, 32, seed=7, out=Path(tmp) / "b")
        if a.exit_code != EXIT_OK or b.exit_code != EXIT_OK:
            return False, f"cmd_sample failed: {a.summary} / {b.summary}"
        specs = [load_spec(p) for p in a.artifacts[1:]]
        inside = all(450e6 <= network_complexity(s).flops <= 550e6 for s in specs)
        valid = all(validate_network(s) == [] for s in specs)
        same = all(Path(x).read_bytes() == Path(y).read_bytes() for x, y in zip(a.artifacts, b.artifacts))
    elapsed = time.perf_counter() - t0
    ok = len(specs) == 32 and inside and valid and same
    return ok, (f"{len(specs)} specs, inside filter {inside}, valid {valid}, byte-identical {same}, "
                f"{elapsed:.2f}s for two runs")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("n", range(1, 8))
def test_acceptance(n):
    ok, detail = CRITERIA[n - 1]()
    report(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        report(i, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
