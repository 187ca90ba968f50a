"""Scale one model with several strategies and fit log-log slopes.

For every policy the model is scaled over a grid of flop multipliers.  The
slope of log(acts) against log(flops) tells how fast activations, and so
runtime, grow with compute.  Width scaling keeps it near 1/2; depth or
resolution push it towards 1.

    python3 demos/scaling_sweep.py [model] [--csv out.csv]
"""
import argparse

from scalekit import get_model, policy_from_name, predicted_multipliers, sweep
from scalekit.scaling import fast_policy, loglog_slope, sweep_csv

GRID = [1, 2, 4, 8, 16, 32, 64, 128]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model", nargs="?", default="RegNetY-500MF")
    ap.add_argument("--csv", help="write the sweep table here")
    args = ap.parse_args()

    base = get_model(args.model)
    policies = [policy_from_name(n) for n in ("w", "dWr", "dwr", "dw", "d", "r")]
    policies += [fast_policy(a) for a in (0.6, 0.9)]

    series_list = []
    print(f"{'policy':<12} {'e_d':>5} {'e_w':>5} {'e_r':>5}  {'acts slope':>10}  {'params slope':>12}")
    for pol in policies:
        series = sweep(base, pol, GRID)
        series_list.append(series)
        f = [p.complexity.flops for p in series]
        a = [p.complexity.acts for p in series]
        p_ = [p.complexity.params for p in series]
        print(f"{pol.label:<12} {pol.e_d:5.2f} {pol.e_w:5.2f} {pol.e_r:5.2f}"
              f"  {loglog_slope(f, a):10.3f}  {loglog_slope(f, p_):12.3f}")

    # idealized growth at s = 16, for comparison with the sweep above
    print("\nidealized multipliers at s = 16 (flops, params, acts):")
    for alpha in (0.0, 0.5, 0.8, 1.0):
        f, p, a = predicted_multipliers(fast_policy(alpha), 16)
        print(f"  alpha {alpha:.1f}: {f:5.2f} {p:5.2f} {a:5.2f}")

    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(sweep_csv(series_list))
        print(f"\nwrote {args.csv}")


if __name__ == "__main__":
    main()
