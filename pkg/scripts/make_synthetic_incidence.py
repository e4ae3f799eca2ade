#!/usr/bin/env python3
"""Regenerate the synthetic incidence fixture in data/.

The shipped series is weekly I(t) sampled from the model itself at the
fitted Haiti parameters (tau=2, delta=0.02, beta=0.7, alpha1=0.012); it is
a self-consistency fixture for the calibration workflow, not a real
dataset.  Real observations go in a user-supplied CSV with the same
``t,I_obs`` schema.
"""

import sys
from pathlib import Path

import numpy as np

from siqrb.calibration import FitSpec, synthetic_incidence

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic_incidence.csv"


def main() -> int:
    spec = FitSpec()
    times = np.arange(0.0, spec.T + 1e-9, 7.0)
    series = synthetic_incidence(spec, (2.0, 0.020, 0.70, 0.0120), times)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    series.to_csv(OUT)
    print(f"wrote {OUT} ({len(series)} observations)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
