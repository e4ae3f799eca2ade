#!/usr/bin/env python3
"""Solve the three weight cases with both solvers and print a comparison table.

Usage: python scripts/run_ocp_cases.py [out_dir]
"""

import sys
from pathlib import Path

from siqrb import (
    HAITI,
    HAITI_INITIAL,
    OcpWeights,
    solve_projected_gradient,
    solve_switch_time,
    verify_pmp,
)
from siqrb.cli import write_solution_csv


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("siqrb_out/ocp_cases")
    out.mkdir(parents=True, exist_ok=True)
    print(f"{'case':>4} {'solver':>8} {'J':>16} {'t_s':>10} {'pmp':>5}")
    for case in (1, 2, 3):
        w = OcpWeights.case(case)
        for name, solver in (("pg", solve_projected_gradient),
                             ("switch", solve_switch_time)):
            sol = solver(HAITI, w, HAITI_INITIAL)
            rep = verify_pmp(sol, HAITI, w)
            ts = sol.switching.switches[0] if sol.switching.switches else float("nan")
            print(f"{case:>4} {name:>8} {sol.cost:16.7e} {ts:10.3f} {str(rep.passed):>5}")
            write_solution_csv(out / f"case{case}_{name}.csv", sol)
    print(f"solution CSVs in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
