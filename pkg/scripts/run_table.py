"""Run the planner comparison on every scenario and print one table.

Usage: python scripts/run_table.py [--trials N] [--budget M] [--out DIR] [--jobs J]
"""
import argparse
import sys
from pathlib import Path

from roi_nbv.cli import cmd_run
from roi_nbv.config import RunConfig
from roi_nbv.evaluation import parse_results, summarize


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--budget", type=float, default=6.0)
    ap.add_argument("--scenarios", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--out", default="out/table")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    rows = []
    for sc in args.scenarios:
        out = Path(args.out) / f"scenario{sc}"
        cfg = RunConfig(scenario=sc, trials=args.trials, budget=args.budget, output_dir=str(out))
        cmd_run(cfg, args.jobs)
        s = summarize(parse_results((out / "results.csv").read_text(), args.budget))
        c, g = s.groups["combined"], s.groups["global_only"]
        rows.append((sc, c, g, s.test("combined", "global_only", "detected_rois").p_value,
                     s.test("combined", "global_only", "covered_volume").p_value))

    print(f"{'scenario':>8} | {'ROIs combined':>14} {'ROIs global':>14} {'p':>7} | "
          f"{'vol combined':>14} {'vol global':>14} {'p':>7}")
    for sc, c, g, p_r, p_v in rows:
        print(f"{sc:>8} | {c.rois_mean:6.1f} ± {c.rois_std:4.1f}  {g.rois_mean:6.1f} ± {g.rois_std:4.1f}  {p_r:7.3g} | "
              f"{c.volume_mean:6.2f} ± {c.volume_std:4.2f}  {g.volume_mean:6.2f} ± {g.volume_std:4.2f}  {p_v:7.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
