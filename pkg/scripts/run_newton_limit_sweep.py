#!/usr/bin/env python3
"""Newtonian-limit sweep: how fast the relativistic corrections die off.

Observes a force-free inertial mass from the standard flat-space observer
while the speed of light doubles through the sweep, then fits the decay
exponents of the clock-rate and force residuals against their
second-order series.  Wraps the same driver as `lightcone newton-limit`.
"""

import argparse
from pathlib import Path

from lightcone.cli import cmd_newton_limit
from lightcone.scenario import load_scenario

PRESET = Path(__file__).resolve().parent.parent / "scenarios" / "sr_limit_sweep.scn"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out")
    parser.add_argument("--scenario", default=str(PRESET))
    parser.add_argument("--c-list", default="1,2,4,8")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scn = load_scenario(args.scenario)
    c_values = [float(p) for p in args.c_list.split(",")]
    cmd_newton_limit(scn, c_values, out)
    print((out / "limit_report.txt").read_text())
    print(f"per-c residuals in {out / 'limit_residuals.csv'}")


if __name__ == "__main__":
    main()
