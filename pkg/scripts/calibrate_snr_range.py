"""Find the SNR range where the uncoded proxy link is informative.

An NVE sweep needs the perfect-CSI BLER strictly inside (0, 1) at every
point; this prints that BLER over a wide sweep so a range can be picked.

    python3 scripts/calibrate_snr_range.py --lo -4 --hi 20 --step 2
"""

import argparse

import numpy as np

from phylink.channel import build_covariances
from phylink.config import ChannelModelConfig
from phylink.grid import make_pilot_mask
from phylink.harness import mc_bler, stream
from phylink.registry import REGISTRY


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lo", type=float, default=-4.0)
    ap.add_argument("--hi", type=float, default=20.0)
    ap.add_argument("--step", type=float, default=2.0)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--band", type=float, nargs=2, default=[0.02, 0.9], help="informative BLER band")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cov = build_covariances(ChannelModelConfig())
    mask = make_pilot_mask(cov.dims[1], cov.dims[2], (1, 10))
    pcsi, ls = REGISTRY["perfect-csi"].factory, REGISTRY["ls-linear"].factory
    lo, hi = args.band
    good = []
    print(f"{'SNR dB':>7}{'pCSI':>9}{'LS':>9}")
    for i, s in enumerate(np.arange(args.lo, args.hi + 1e-9, args.step)):
        p = mc_bler(pcsi, cov, mask, s, args.trials, stream(args.seed, i)).bler
        q = mc_bler(ls, cov, mask, s, args.trials, stream(args.seed, i)).bler
        flag = lo <= p <= hi
        good.extend([s] if flag else [])
        print(f"{s:>7.1f}{p:>9.4f}{q:>9.4f}{'  *' if flag else ''}")
    if good:
        print(f"informative range: {min(good):g} to {max(good):g} dB")


if __name__ == "__main__":
    main()
