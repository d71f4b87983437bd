"""One-step distance between midpoint and its truncated modified flow on the Kubo oscillator.

Prints RMS local errors over h = 2^-6..2^-10 for every truncation number and
the fitted slopes. Increments are Brownian (H = 1/2) and clamped.
"""

import argparse

import numpy as np

from roughham import Grid, KuboParams, NoiseSpec, make_stepper, sample_fbm_paths, truncate_path
from roughham.harness import estimate_order
from roughham.modified import modified_step, table_midpoint
from roughham.systems import make_kubo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--substeps", type=int, default=2**10)
    ap.add_argument("--sigma", type=float, default=1.0)
    args = ap.parse_args()

    sys_ = make_kubo(KuboParams(1.0, args.sigma))
    table = table_midpoint(sys_)
    stepper = make_stepper("midpoint", sys_)
    y = np.array([1.0, 0.0])[:, None]
    hs = [2.0**-i for i in range(6, 11)]
    errs = {n: [] for n in range(1, table.order_cap + 1)}
    for h in hs:
        path = truncate_path(sample_fbm_paths(NoiseSpec(2, 0.5, args.seed), Grid(h, 1), args.samples))
        row = path.increments[0]
        one = stepper(y, row)
        for n in errs:
            ref = modified_step(table, n, y, row, args.substeps, scheme="midpoint4")
            errs[n].append(float(np.sqrt(np.mean(np.sum((one - ref) ** 2, axis=0)))))
    print("h        " + "  ".join(f"N={n:<8d}" for n in errs))
    for j, h in enumerate(hs):
        print(f"{h:<8.2e} " + "  ".join(f"{errs[n][j]:.3e}" for n in errs))
    for n, e in errs.items():
        slope, resid = estimate_order(hs, e)
        print(f"N={n}: slope {slope:.3f} (residual {resid:.3f})")


if __name__ == "__main__":
    main()
