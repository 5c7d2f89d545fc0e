"""Steady-state RMSE floor against step size on a bundled scenario."""
import argparse
import csv
from pathlib import Path

from bearing_swarm.engine import sweep
from bearing_swarm.scenario import load_bundled


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="fig1-like")
    ap.add_argument("--values", default="4e-4,2e-4,1e-4,5e-5,2.5e-5")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/step_size.csv")
    args = ap.parse_args()

    values = [float(v) for v in args.values.split(",")]
    rows = sweep(load_bundled(args.scenario), "h", values, workers=args.workers)
    print(f"{'h':>10} {'RMSE floor':>12} {'RMSE/(beta h)':>14} {'ratio to prev':>14}")
    prev = None
    for r in rows:
        e = r["steady_state_rmse"]
        ratio = "" if prev is None else f"{prev / e:14.2f}"
        print(f"{r['h']:>10.3g} {e:>12.4e} {e / (r['beta'] * r['h']):>14.2f} {ratio}")
        prev = e
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "beta", "steady_state_rmse", "steady_state_msce"])
        for r in rows:
            w.writerow([r["h"], r["beta"], r["steady_state_rmse"], r["steady_state_msce"]])
    print(f"table: {out}")


if __name__ == "__main__":
    main()
