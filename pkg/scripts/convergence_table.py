"""Run one convergence study and print per-cell RMS errors with their standard errors."""

import argparse
import time

from roughham.harness import ConvergenceConfig, check_convergence, run_convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("example", choices=["example1", "example2"])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--reference", default="midpoint4", choices=["midpoint", "midpoint4"])
    ap.add_argument("--log2-delta", type=int, default=12)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    if args.example == "example1":
        base = dict(system="example1", hurst=(0.4, 0.45, 0.5))
        kind = "multiplicative"
    else:
        base = dict(system="taylor-green", system_params={"sigma": 2.0}, hurst=(0.3, 0.4, 0.5))
        kind = "additive"
    cfg = ConvergenceConfig(**base, n_samples=args.samples, reference=args.reference,
                            log2_delta=args.log2_delta, threads=args.threads)
    start = time.perf_counter()
    report = run_convergence_study(cfg)
    print(f"{args.example}: {time.perf_counter() - start:.0f} s")
    for fit in report.fits:
        cells = report.cell_table(fit.hurst, fit.n_tilde)
        errs = " ".join(f"{c.rmse:.2e}(±{c.stderr:.0e})" for c in cells)
        print(f"H={fit.hurst:<5g} N={fit.n_tilde}: slope {fit.slope:6.3f}  {errs}")
    for line in check_convergence(report, kind, {2: 0.15, 4: 0.2}):
        print("outside band:", line)


if __name__ == "__main__":
    main()
