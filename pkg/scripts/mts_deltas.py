"""Distribution of the weighted objective change at the first MTS step.

Useful for choosing ``MtsConfig.delta_thresh``: the threshold must sit
below the typical change seen from planning distances or the local
stage never moves.

Usage: python scripts/mts_deltas.py [--scenes N] [--distances 0.3 0.45 0.6]
"""
import argparse
import sys

import numpy as np

from roi_nbv.mts import MtsConfig, MtsDecision, mts_step, reference_objective
from roi_nbv.scene_sim import occluded_fruit_scene


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenes", type=int, default=50)
    ap.add_argument("--distances", type=float, nargs="+", default=[0.3, 0.45, 0.6])
    args = ap.parse_args(argv)
    cfg = MtsConfig(delta_thresh=0.0)
    for dist in args.distances:
        deltas, gains = [], []
        for seed in range(args.scenes):
            s = occluded_fruit_scene(seed, distance=dist)
            step = mts_step(s, s.initial_pose, s.workspace, cfg)
            deltas.append(step.delta)
            if step.decision == MtsDecision.MOVE:
                gains.append(reference_objective(s, step.pose) - reference_objective(s, s.initial_pose))
        d, g = np.array(deltas), np.array(gains)
        q = np.percentile(d, [10, 50, 90])
        print(f"distance {dist:.2f} m: delta p10 {q[0]:.1e} p50 {q[1]:.1e} p90 {q[2]:.1e}; "
              f"improved {(g > 0).sum()}/{len(d)}, mean gain {g.mean() if len(g) else 0.0:+.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
