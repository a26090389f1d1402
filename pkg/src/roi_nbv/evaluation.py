"""Ground-truth metrics, budgeted trials and the planner comparison."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from roi_nbv.global_planner import (MtsMove, PlannerConfig, PlannerState, Stalled,
                                    plan_episode)
from roi_nbv.mts import MtsConfig
from roi_nbv.scene_sim import RGBD_CAMERA, CameraModel, SceneConfig, generate_scene, move_cost, \
    render_pointcloud
from roi_nbv.voxel_map import MapConfig, RoiOcTree

log = logging.getLogger(__name__)

PLANNERS = ("combined", "global_only")
MATCH_RADIUS = 0.20
RESULTS_HEADER = ("planner", "seed", "plan_length_m", "detected_rois", "covered_volume")


# ---------------------------------------------------------------- metrics
def match_detected_rois(clusters, fruits, radius: float = MATCH_RADIUS) -> int:
    """Greedy one-to-one matching by ascending centroid distance."""
    if not clusters or not fruits:
        return 0
    c = np.array([cl.centroid for cl in clusters], dtype=float)
    f = np.array([fr.center for fr in fruits], dtype=float)
    d = np.linalg.norm(c[:, None, :] - f[None, :, :], axis=2)
    ci, fi = np.nonzero(d < radius)
    order = np.lexsort((fi, ci, d[ci, fi]))
    used_c, used_f = set(), set()
    for k in order:
        if ci[k] in used_c or fi[k] in used_f:
            continue
        used_c.add(ci[k])
        used_f.add(fi[k])
    return len(used_f)


def union_volume_in_box(lo, hi, boxes) -> float:
    """Exact volume of ``[lo, hi]`` intersected with a union of boxes."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    clipped = []
    for blo, bhi in boxes:
        a = np.maximum(lo, blo)
        b = np.minimum(hi, bhi)
        if np.all(b > a):
            clipped.append((a, b))
    if not clipped:
        return 0.0
    if len(clipped) == 1:
        return float(np.prod(clipped[0][1] - clipped[0][0]))
    axes = [np.unique(np.concatenate([[a[k], b[k]] for a, b in clipped])) for k in range(3)]
    covered = np.zeros([len(ax) - 1 for ax in axes], dtype=bool)
    for a, b in clipped:
        sl = tuple(slice(np.searchsorted(axes[k], a[k]), np.searchsorted(axes[k], b[k])) for k in range(3))
        covered[sl] = True
    widths = [np.diff(ax) for ax in axes]
    cell = widths[0][:, None, None] * widths[1][None, :, None] * widths[2][None, None, :]
    return float(cell[covered].sum())


def covered_roi_volume(clusters, fruits) -> float:
    """Fraction of total fruit bounding-box volume covered by cluster boxes."""
    if not fruits:
        return 0.0
    boxes = [cl.bbox for cl in clusters]
    total = sum(f.bbox_volume for f in fruits)
    covered = sum(union_volume_in_box(*f.bbox, boxes) for f in fruits)
    return min(1.0, covered / total)


# ------------------------------------------------------------------ trials
@dataclass
class TrialRecord:
    planner_id: str
    seed: int
    samples: list  # (plan_length, detected_rois, covered_volume)
    config_snapshot: dict = field(default_factory=dict)
    actions: list = field(default_factory=list)
    stalled_at: float | None = None

    @property
    def budget(self) -> float:
        return float(self.config_snapshot.get("budget", math.nan))

    @property
    def final(self):
        return self.samples[-1]

    def stalled_early(self, fraction: float = 0.1) -> bool:
        return self.stalled_at is not None and self.stalled_at < fraction * self.budget


def _metrics(tree: RoiOcTree, fruits):
    clusters = tree.roi_clusters()
    return match_detected_rois(clusters, fruits), covered_roi_volume(clusters, fruits)


def run_trial(scenario: int, planner_id: str, seed: int, budget: float = 6.0, *,
              scene_seed: int = 0, scene_config: SceneConfig | None = None,
              map_config: MapConfig | None = None, mts_config: MtsConfig | None = None,
              planner_config: PlannerConfig | None = None, camera: CameraModel = RGBD_CAMERA,
              max_steps: int = 400, scene=None) -> TrialRecord:
    """Plan, move, scan and score until the plan-length budget is spent.

    ``seed`` drives the planner's sampling; the scene comes from
    ``scene_seed`` so that trials differ only in planner randomness.
    """
    if planner_id not in PLANNERS:
        raise ValueError(f"unknown planner {planner_id!r}; expected one of {PLANNERS}")
    mts_config = mts_config or MtsConfig()
    planner_config = planner_config or PlannerConfig()
    map_config = map_config or MapConfig()
    if scene is None:
        scene = generate_scene(scenario, scene_seed, scene_config)
    tree = RoiOcTree(map_config, bounds=scene.world_bounds)
    rng = np.random.default_rng(np.random.SeedSequence([planner_config.rng_seed, int(seed)]))
    state = PlannerState(scene.initial_pose, rng, use_mts=planner_id == "combined")
    snapshot = {"scenario": scenario, "planner": planner_id, "seed": int(seed), "budget": float(budget),
                "scene_seed": scene_seed, "max_steps": max_steps,
                "map": asdict(map_config), "mts": asdict(mts_config), "planner_cfg": asdict(planner_config)}
    rec = TrialRecord(planner_id, int(seed), [], snapshot)

    def scan(pose):
        pts, roi = render_pointcloud(scene, pose, camera)
        tree.integrate_scan(pose.position, pts, roi)

    scan(state.pose)
    length = 0.0
    rec.samples.append((length, *_metrics(tree, scene.fruits)))
    for step in range(max_steps):
        action = plan_episode(scene, tree, scene.workspace, mts_config, planner_config, state, camera=camera)
        if isinstance(action, Stalled):
            rec.actions.append(("stalled", None))
            rec.stalled_at = length
            log.info("step %d stalled at %.3f m", step, length)
            break
        cost = move_cost(state.pose, action.pose)
        if length + cost > budget:
            break
        kind = "mts" if isinstance(action, MtsMove) else "global"
        value = action.delta if isinstance(action, MtsMove) else action.viewpoint.utility
        log.debug("step %d %s %.4g pos %s", step, kind, value, np.round(action.pose.position, 3))
        state.pose = action.pose
        length += cost
        scan(state.pose)
        rec.actions.append((kind, float(value)))
        rec.samples.append((length, *_metrics(tree, scene.fruits)))
    return rec


# -------------------------------------------------------------- statistics
@dataclass
class MannWhitneyResult:
    u_statistic: float
    p_value: float
    degenerate: bool = False

    def __iter__(self):
        return iter((self.u_statistic, self.p_value))


def _exact_upper_tail(ranks2: np.ndarray, n_a: int, observed2: int) -> float:
    """P(sum of n_a doubled ranks >= observed) over all equally likely subsets."""
    total = int(ranks2.sum())
    dp = np.zeros((n_a + 1, total + 1))
    dp[0, 0] = 1.0
    for r in ranks2:
        r = int(r)
        for k in range(n_a, 0, -1):
            dp[k, r:] += dp[k - 1, :total + 1 - r]
    counts = dp[n_a]
    return float(counts[observed2:].sum() / counts.sum())


def mann_whitney_one_sided(a, b) -> MannWhitneyResult:
    """U statistic of ``a`` and p-value for "a tends to exceed b"."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n_a, n_b = len(a), len(b)
    if n_a < 1 or n_b < 1:
        raise ValueError("both samples must be non-empty")
    x = np.concatenate([a, b])
    n = n_a + n_b
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(n)
    ties = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        ties.append(j - i + 1)
        i = j + 1
    r_a = ranks[:n_a].sum()
    u = float(r_a - n_a * (n_a + 1) / 2.0)
    if len(ties) == 1:
        return MannWhitneyResult(u, 0.5, True)
    if min(n_a, n_b) >= 8:
        t = np.asarray(ties, dtype=float)
        var = n_a * n_b / 12.0 * ((n + 1) - (t ** 3 - t).sum() / (n * (n - 1)))
        z = (u - n_a * n_b / 2.0 - 0.5) / math.sqrt(var)
        return MannWhitneyResult(u, float(norm.sf(z)))
    ranks2 = np.rint(2 * ranks).astype(np.int64)
    p = _exact_upper_tail(ranks2, n_a, int(round(2 * r_a)))
    return MannWhitneyResult(u, min(1.0, p))


@dataclass
class GroupStats:
    n: int
    rois_mean: float
    rois_std: float
    volume_mean: float
    volume_std: float


@dataclass
class PairTest:
    greater: str
    lesser: str
    metric: str
    u_statistic: float
    p_value: float
    degenerate: bool = False


@dataclass
class ComparisonSummary:
    budget: float
    groups: dict
    tests: list

    def test(self, greater: str, lesser: str, metric: str) -> PairTest:
        for t in self.tests:
            if (t.greater, t.lesser, t.metric) == (greater, lesser, metric):
                return t
        raise KeyError((greater, lesser, metric))

    def to_json(self) -> str:
        return json.dumps({"budget": self.budget,
                           "groups": {k: asdict(v) for k, v in self.groups.items()},
                           "tests": [asdict(t) for t in self.tests]}, indent=2, sort_keys=True)


def _std(x) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def summarize(trials, grouping=None) -> ComparisonSummary:
    """Final-sample statistics per group and one-sided tests for every
    ordered pair of groups. ``grouping`` maps a trial to its group key
    (default: planner id)."""
    grouping = grouping or (lambda t: t.planner_id)
    trials = list(trials)
    budgets = {t.budget for t in trials if not math.isnan(t.budget)}
    if len(budgets) > 1:
        raise ValueError(f"trials were run with different budgets: {sorted(budgets)}")
    groups: dict = {}
    for t in trials:
        groups.setdefault(grouping(t), []).append(t.final)
    for k, v in groups.items():
        if len(v) < 2:
            raise ValueError(f"group {k!r} has {len(v)} trial(s); at least 2 are needed")
    stats, finals = {}, {}
    for k in sorted(groups):
        arr = np.array(groups[k], dtype=float)
        finals[k] = arr
        stats[k] = GroupStats(len(arr), float(arr[:, 1].mean()), _std(arr[:, 1]),
                              float(arr[:, 2].mean()), _std(arr[:, 2]))
    tests = []
    for ga, gb in itertools.permutations(sorted(groups), 2):
        for col, metric in ((1, "detected_rois"), (2, "covered_volume")):
            r = mann_whitney_one_sided(finals[ga][:, col], finals[gb][:, col])
            tests.append(PairTest(ga, gb, metric, r.u_statistic, r.p_value, r.degenerate))
    return ComparisonSummary(budgets.pop() if budgets else math.nan, stats, tests)


# ------------------------------------------------------------- results I/O
def results_csv(trials) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULTS_HEADER)
    for t in trials:
        for length, rois, vol in t.samples:
            w.writerow((t.planner_id, t.seed, repr(float(length)), int(rois), repr(float(vol))))
    return buf.getvalue()


def parse_results(text: str, budget: float = math.nan) -> list[TrialRecord]:
    """Trial records (samples only) from results CSV text."""
    lines = text.splitlines()
    if not lines or not any(ln.strip() for ln in lines):
        raise ValueError("results file is empty")
    if tuple(c.strip() for c in lines[0].split(",")) != RESULTS_HEADER:
        raise ValueError(f"line 1: expected header {','.join(RESULTS_HEADER)}")
    trials: dict = {}
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split(",")
        if len(cols) != len(RESULTS_HEADER):
            raise ValueError(f"line {no}: expected {len(RESULTS_HEADER)} columns, got {len(cols)}")
        try:
            planner, seed = cols[0].strip(), int(cols[1])
            sample = (float(cols[2]), int(cols[3]), float(cols[4]))
        except ValueError as e:
            raise ValueError(f"line {no}: {e}") from None
        rec = trials.setdefault((planner, seed), TrialRecord(planner, seed, [], {"budget": budget}))
        rec.samples.append(sample)
    if not trials:
        raise ValueError("results file has no data rows")
    return list(trials.values())


def curve_data(trials, step: float = 0.25):
    """Per-planner mean metrics on a common plan-length grid (last sample at
    or before each grid point)."""
    trials = list(trials)
    top = max(s[0] for t in trials for s in t.samples)
    grid = np.arange(0.0, top + step / 2, step)
    out = {}
    for planner in sorted({t.planner_id for t in trials}):
        rows = []
        for t in (t for t in trials if t.planner_id == planner):
            s = np.array(t.samples, dtype=float)
            idx = np.searchsorted(s[:, 0], grid, side="right") - 1
            rows.append(s[np.maximum(idx, 0), 1:])
        out[planner] = np.mean(rows, axis=0)
    return grid, out
