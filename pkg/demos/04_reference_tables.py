"""Reproduce all reference columns and write plot-ready data.

Writes ``demos/out/<case>_m<m>_n<n>.csv`` through the command-line
frontend and prints a summary of the deviations.
"""

from pathlib import Path

from hybridfp import bench_examples as bench
from hybridfp.cli import main

out = Path(__file__).parent / "out"
status = main(["bench", "--all", "--format", "csv", "--out", str(out)])
print("bench exit status:", status, "| files:", len(list(out.glob("*.csv"))))

print(f"{'case':5s} {'m':>2s} {'n':>3s} {'max dev':>10s} {'norm':>12s} {'reference':>12s}")
for cid in bench.CASE_IDS:
    case = bench.load_case(cid)
    for m, n in bench.COLUMNS:
        r = bench.run_case(case, m, n)
        print(f"{cid:5s} {m:2d} {n:3d} {r.max_deviation:10.2e} {r.error_norm:12.6e} {r.expected_error_norm:12.6e}")
