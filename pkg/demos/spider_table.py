"""Render a force sweep as an ASCII spider table.

Reads the sweep.csv written by `stlwalk sweep --out DIR` and prints the
per-direction maximum recoverable force for both controllers, one block
per push phase.  Run with:  python3 demos/spider_table.py DIR
"""

import csv
import sys
from collections import defaultdict

if len(sys.argv) != 2:
    sys.exit("usage: python3 demos/spider_table.py SWEEP_DIR")

cells = defaultdict(dict)
with open(f"{sys.argv[1]}/sweep.csv") as fh:
    for row in csv.DictReader(fh):
        key = (float(row["phase"]), int(row["direction_index"]))
        cells[key][row["controller"]] = float(row["max_force"])

phases = sorted({ph for ph, _ in cells})
dirs = sorted({d for _, d in cells})

for ph in phases:
    print(f"\nphase {ph:.2f}   (angle = 30 deg x direction, 0 = forward)")
    print(f"{'dir':>4s} {'angle':>6s} {'baseline':>9s} {'stl_mpc':>9s}   ")
    for d in dirs:
        row = cells[(ph, d)]
        base, mpc = row.get("baseline"), row.get("stl_mpc")
        mark = ""
        if base is not None and mpc is not None:
            mark = ">" if mpc > base else ("=" if mpc == base else "<")
        bar = "#" * int((mpc or 0.0) / 20.0)
        print(f"{d:>4d} {30 * d:>5d}d {base:>9.1f} {mpc:>9.1f} {mark} {bar}")

n = sum(1 for k in cells if len(cells[k]) == 2)
dom = sum(1 for k in cells
          if len(cells[k]) == 2
          and cells[k]["stl_mpc"] >= cells[k]["baseline"])
print(f"\nSTL-MPC matches or beats the baseline in {dom}/{n} cells")
