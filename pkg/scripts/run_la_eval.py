"""Score the link-adaptation controllers on OU SNR trajectories.

    python3 scripts/run_la_eval.py --scenarios 20 --slots 3000
"""

import argparse

from phylink.config import LinkDefaults
from phylink.harness import la_score, stream
from phylink.link import BlerModel, LinkScenario, make_snr_trajectory
from phylink.registry import REGISTRY, la_fixed_lowest


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenarios", type=int, default=20)
    ap.add_argument("--slots", type=int, default=3000)
    ap.add_argument("--ou", type=float, nargs=3, default=[10.0, 4.0, 0.005], metavar=("MEAN", "STD", "THETA"))
    ap.add_argument("--alpha", type=float, default=2.0, help="BLER curve slope")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    model = BlerModel.default(alpha=args.alpha)
    link = LinkDefaults()
    params = dict(zip(("mean", "std", "theta"), args.ou))
    scenarios = [
        LinkScenario(make_snr_trajectory("ou", params, args.slots, stream(args.seed, i, 2)), model, link.target, link.batch)
        for i in range(args.scenarios)
    ]
    controllers = {
        "la-particle": REGISTRY["la-particle"].factory,
        "la-grid": REGISTRY["la-grid"].factory,
        "la-olla": REGISTRY["la-olla"].factory,
        "fixed-lowest": la_fixed_lowest,
    }
    print(f"{'controller':<14}{'mean SE':>9}{'violations':>12}{'BLER min/mean/max':>26}")
    for name, factory in controllers.items():
        s = la_score(factory, scenarios, args.seed, args.workers)
        st = s.bler_stats
        print(f"{name:<14}{s.mean_se:>9.4f}{s.violations:>8}/{len(scenarios):<3}"
              f"{st['min']:>10.4f}{st['mean']:>8.4f}{st['max']:>8.4f}")


if __name__ == "__main__":
    main()
