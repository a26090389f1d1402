"""Command-line entry point: ``generate``, ``run`` and ``report``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from roi_nbv.config import ConfigError, RunConfig
from roi_nbv.evaluation import curve_data, parse_results, results_csv, run_trial, summarize
from roi_nbv.scene_sim import SCENARIOS, export_scene, generate_scene

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_STALLED = 0, 1, 2, 3

log = logging.getLogger("roi_nbv")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- commands
def cmd_generate(scenario: int, seed: int, out) -> int:
    if scenario not in SCENARIOS:
        print(f"error: unknown scenario {scenario}; valid ids are {', '.join(map(str, SCENARIOS))}",
              file=sys.stderr)
        return EXIT_USAGE
    scene = generate_scene(scenario, seed)
    try:
        out = Path(out)
        fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.", suffix=".tmp")
        os.close(fd)
        export_scene(scene, tmp)
        os.replace(tmp, out)
    except OSError as e:
        print(f"error: cannot write {out}: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(f"fruits: {scene.fruit_count}")
    return EXIT_OK


def _trial_job(args):
    cfg, planner, seed = args
    return run_trial(cfg.scenario, planner, seed, cfg.budget, scene_seed=cfg.scene_seed,
                     scene_config=cfg.scene_config(), map_config=cfg.map_config(),
                     mts_config=cfg.mts_config(), planner_config=cfg.planner_config(),
                     max_steps=cfg.max_steps)


def cmd_run(cfg: RunConfig, jobs: int = 1) -> int:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    work = [(cfg, p, cfg.seed_base + i) for p in cfg.planners for i in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            trials = list(ex.map(_trial_job, work))
    else:
        trials = []
        for w in work:
            trials.append(_trial_job(w))
            t = trials[-1]
            log.info("%s seed %d: %.2f m, %d ROIs, volume %.3f", t.planner_id, t.seed, *t.final)
    atomic_write(out / "results.csv", results_csv(trials))
    summary = {"config": cfg.to_dict()}
    if cfg.trials >= 2:
        summary.update(json.loads(summarize(trials).to_json()))
    summary["stalled_early"] = [[t.planner_id, t.seed] for t in trials if t.stalled_early()]
    atomic_write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'results.csv'} and {out / 'summary.json'}")
    if summary["stalled_early"]:
        print(f"warning: {len(summary['stalled_early'])} trial(s) stalled before 10% of the budget",
              file=sys.stderr)
        return EXIT_STALLED
    return EXIT_OK


def format_report(trials, curve_step: float = 0.25) -> str:
    s = summarize(trials)
    lines = [f"{'planner':<14} {'n':>3}  {'detected ROIs':>15}  {'covered volume':>15}"]
    for name, g in s.groups.items():
        lines.append(f"{name:<14} {g.n:>3}  {g.rois_mean:>7.2f} ± {g.rois_std:<5.2f}"
                     f"  {g.volume_mean:>7.3f} ± {g.volume_std:<5.3f}")
    lines.append("")
    lines.append("one-sided Mann-Whitney U (first > second)")
    for t in s.tests:
        flag = " (degenerate)" if t.degenerate else ""
        lines.append(f"  {t.greater} > {t.lesser} [{t.metric}]: U = {t.u_statistic:g}, p = {t.p_value:.4g}{flag}")
    grid, curves = curve_data(trials, curve_step)
    lines.append("")
    lines.append("# curves: plan_length_m " + " ".join(f"{p}_rois {p}_volume" for p in curves))
    for i, x in enumerate(grid):
        vals = " ".join(f"{c[i, 0]:.4f} {c[i, 1]:.5f}" for c in curves.values())
        lines.append(f"{x:.2f} {vals}")
    return "\n".join(lines) + "\n"


def cmd_report(results) -> int:
    try:
        text = Path(results).read_text()
    except OSError as e:
        print(f"error: cannot read {results}: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        trials = parse_results(text)
        report = format_report(trials)
    except ValueError as e:
        print(f"error: {results}: {e}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(report)
    return EXIT_OK


# -------------------------------------------------------------------- main
def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="roi-nbv", description="ROI viewpoint planning experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    g = sub.add_parser("generate", help="export a scenario's ground-truth fruits")
    g.add_argument("--scenario", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    r = sub.add_parser("run", help="run trials from a YAML config")
    r.add_argument("--config", required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--trials", type=int, help="override the config's trial count")
    r.add_argument("--budget", type=float, help="override the plan-length budget (m)")
    r.add_argument("--out-dir", help="override the output directory")
    p = sub.add_parser("report", help="summarize a results file")
    p.add_argument("--results", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            return cmd_generate(args.scenario, args.seed, args.out)
        if args.command == "run":
            try:
                cfg = RunConfig.load(args.config)
                overrides = {k: v for k, v in (("trials", args.trials), ("budget", args.budget),
                                               ("output_dir", args.out_dir)) if v is not None}
                if overrides:
                    cfg = RunConfig.from_dict({**cfg.to_dict(), **overrides})
            except ConfigError as e:
                print(f"config error: {e}", file=sys.stderr)
                return EXIT_USAGE
            if args.jobs < 1:
                print("error: --jobs must be at least 1", file=sys.stderr)
                return EXIT_USAGE
            return cmd_run(cfg, args.jobs)
        return cmd_report(args.results)
    except Exception as e:  # noqa: BLE001 - reported as a runtime failure
        log.debug("failure", exc_info=True)
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
