"""Walk the built-in model registry and compare against published counts.

Each built-in model is rebuilt from its generating parameters, then its
flops, params and acts are set beside the published figures.

    python3 demos/registry_tour.py
"""
from scalekit import get_model, network_complexity, registry_names
from scalekit.reference import PUBLISHED


def pct(ours, theirs):
    return f"{100 * (ours / theirs - 1):+5.1f}%"


def main():
    print(f"{'model':<20} {'flops':>9} {'params':>9} {'acts':>9}   deviation (f / p / a)")
    for name in registry_names():
        c = network_complexity(get_model(name))
        line = f"{name:<20} {c.flops / 1e9:8.3f}B {c.params / 1e6:8.2f}M {c.acts / 1e6:8.2f}M"
        if name in PUBLISHED:
            f, p, a, _ = PUBLISHED[name]
            line += f"   {pct(c.flops, f)} {pct(c.params, p)} {pct(c.acts, a)}"
        print(line)

    # per-stage split of one model, to see where the compute sits
    spec = get_model("RegNetY-500MF")
    print(f"\n{spec.name} by component:")
    for part, (f, p, a) in network_complexity(spec).components(1).items():
        print(f"  {part:<8} flops {f / 1e6:8.1f}M  params {p / 1e6:6.2f}M  acts {a / 1e6:6.2f}M")


if __name__ == "__main__":
    main()
