"""Compare channel estimators by MSE and BLER on the synthetic Kronecker channel.

    python3 scripts/run_ce_comparison.py --trials 200 --snr 6 8 10 12
"""

import argparse
import json

from phylink.channel import build_covariances
from phylink.config import ChannelModelConfig
from phylink.grid import make_pilot_mask
from phylink.harness import mc_bler, mc_mse, stream
from phylink.registry import REGISTRY

ESTIMATORS = ("ls-linear", "lmmse-baseline", "agnostic-omp", "agnostic-graph", "cov-kron", "cov-seq", "perfect-csi")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--snr", type=float, nargs="+", default=[6.0, 8.0, 10.0, 12.0])
    ap.add_argument("--mse-snr", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args()

    cov = build_covariances(ChannelModelConfig())
    mask = make_pilot_mask(cov.dims[1], cov.dims[2], (1, 10))
    results = {}
    print(f"{'estimator':<16}{'MSE':>9}  " + "".join(f"{f'BLER@{s:g}':>11}" for s in args.snr))
    for name in ESTIMATORS:
        est = REGISTRY[name].factory
        mse, _ = mc_mse(est, cov, mask, args.mse_snr, args.trials, stream(args.seed, 0))
        blers = [mc_bler(est, cov, mask, s, args.trials, stream(args.seed, 1, i)).bler for i, s in enumerate(args.snr)]
        results[name] = {"mse": mse, "bler": blers}
        print(f"{name:<16}{mse:>9.4f}  " + "".join(f"{b:>11.4f}" for b in blers))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"snr_db": args.snr, "mse_snr_db": args.mse_snr, "results": results}, fh, indent=1)


if __name__ == "__main__":
    main()
