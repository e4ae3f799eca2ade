#!/usr/bin/env python3
"""Scan the endemic F coefficients over the ingestion rate and print thresholds.

Usage: python scripts/run_stability_scan.py [n_points]
"""

import sys

from siqrb import HAITI, beta_threshold_scan, dfe_stability


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
    report = beta_threshold_scan(HAITI, 1e-6, 5.0, n)
    print("c0 zero crossings:", ", ".join(f"{z:.6e}" for z in report.c0_zeros))
    print("c2 zero crossings:", ", ".join(f"{z:.6e}" for z in report.c2_zeros))
    n_stable = sum(c.startswith("locally") for c in report.classifications)
    print(f"{n_stable}/{n} grid points classified stable for all delays")
    dfe = dfe_stability(HAITI)
    print("DFE:", dfe.classification)
    return 0


if __name__ == "__main__":
    sys.exit(main())
