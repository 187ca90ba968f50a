"""Draw random RegNets in a flop regime and look at their spread.

Sampling is deterministic in the seed, so the same call always yields the
same models.  Models of equal flops can differ a lot in acts, which is
what makes acts worth tracking separately.

    python3 demos/sample_design_space.py [--flops 400MF] [--count 32] [--seed 0]
"""
import argparse

import numpy as np

from scalekit import DesignSpaceRanges, sample_design_space
from scalekit.families import parse_flops


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--flops", default="400MF")
    ap.add_argument("--count", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kind", default="Y", choices=["X", "Y", "Z"])
    args = ap.parse_args()

    ranges = DesignSpaceRanges(flop_target=parse_flops(args.flops), kind=args.kind)
    samples = sample_design_space(ranges, count=args.count, seed=args.seed)

    acts = np.array([s.complexity.acts for s in samples])
    flops = np.array([s.complexity.flops for s in samples])
    print(f"{len(samples)} models, accepted after draw {samples[-1].draw}")
    print(f"flops {flops.min() / 1e6:.0f}M..{flops.max() / 1e6:.0f}M,"
          f" acts {acts.min() / 1e6:.2f}M..{acts.max() / 1e6:.2f}M ({acts.max() / acts.min():.1f}x)")

    order = np.argsort(acts)
    for label, i in (("fewest acts", order[0]), ("most acts", order[-1])):
        s = samples[i]
        depths = [st.depth for st in s.spec.stages]
        widths = [st.width for st in s.spec.stages]
        print(f"\n{label}: draw {s.draw}, {s.complexity.summary()}")
        print(f"  depths {depths} widths {widths}")


if __name__ == "__main__":
    main()
