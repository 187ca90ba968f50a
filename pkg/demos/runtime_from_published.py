"""Fit epoch time from published model timings.

The published baselines and scaled models come with measured epoch times.
Correlating those times with flops, params and acts shows acts as the best
single predictor; a one-feature linear fit then estimates the time of
models that were never timed.

    python3 demos/runtime_from_published.py
"""
from scalekit import (
    Measurement,
    ScaleRequest,
    correlation_report,
    fast_policy,
    fit_runtime,
    get_model,
    network_complexity,
    predict_runtime,
    scale_network,
)
from scalekit.reference import PUBLISHED
from scalekit.runtime import compare_metrics


def strategy(name):
    if "->" in name:
        return "scaled"
    return "EfficientNet" if name.startswith("Eff") else "RegNet"


def main():
    ms = [Measurement(name, strategy(name), f, p, a, t, 256)
          for name, (f, p, a, t) in PUBLISHED.items()]

    print(correlation_report(ms).table())
    cmp = compare_metrics(ms)
    print(f"\nfit r by feature: acts {cmp.acts:.3f}, flops {cmp.flops:.3f}, params {cmp.params:.3f}")

    model = fit_runtime(ms, "ActsOnly")
    print(f"\nepoch minutes = {model.intercept:.2f} + {model.coef_acts * 1e6:.3f} per million acts"
          f"  (r = {model.fit_r:.3f}, n = {model.n})")

    # estimate a few models that have no timing of their own
    alpha8 = fast_policy(0.8)
    for name, s in (("RegNetY-500MF", 2), ("RegNetY-500MF", 32), ("EfficientNet-B0", 8)):
        spec = scale_network(get_model(name), ScaleRequest(s, alpha8))
        c = network_complexity(spec)
        minutes = predict_runtime(model, c)
        print(f"  {name} x{s:<3} {c.flops / 1e9:6.2f}B flops {c.acts / 1e6:6.1f}M acts"
              f" -> {minutes:5.1f} min/epoch")


if __name__ == "__main__":
    main()
