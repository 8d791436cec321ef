"""Self-testing bounds per basis preset, plus the scaled segment toward 2*sqrt2.

product13 is the tightest preset but takes minutes per solve.

    python scripts/selftest_sweep.py --bases local2,product12
    python scripts/selftest_sweep.py --segment 12 --bases product12
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from disteer.selftest.bounds import fidelity_lower_bound, selftest_bounds
from disteer.selftest.relaxation import CHSH_MAX


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chsh", default="2.8241,2.8211,2.8189")
    ap.add_argument("--bases", default="local2,product12")
    ap.add_argument("--segment", type=int, default=0, help="grid points on t*2sqrt2, t in [0.71, 1]")
    args = ap.parse_args()

    chsh = [float(c) for c in args.chsh.split(",")]
    print("basis       average   f1        f2        f3        v*       seconds")
    for basis in args.bases.split(","):
        t0 = time.perf_counter()
        b = selftest_bounds(chsh, basis)
        f1, f2, f3 = b.per_j
        print(f"{basis:<10}  {b.average:.5f}   {f1:.5f}   {f2:.5f}   {f3:.5f}   {b.threshold:.4f}   {time.perf_counter() - t0:.1f}")

    if args.segment:
        basis = args.bases.split(",")[-1]
        print(f"\nsegment ({basis})\nt       chsh      average bound")
        for t in np.linspace(0.71, 1.0, args.segment):
            print(f"{t:.4f}  {t * CHSH_MAX:.4f}    {fidelity_lower_bound((t * CHSH_MAX,) * 3, 'average', basis):.6f}")


if __name__ == "__main__":
    main()
