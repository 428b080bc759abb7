"""Write synthetic prediction/ground-truth files and run the metric report through the CLI."""
import argparse
import json
import tempfile
from pathlib import Path

import numpy as np

from hoiplan.cli import main as cli
from hoiplan.io import load_skeleton, write_features, write_motion
from hoiplan.synthetic import box_surface_points, carry_motion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--jitter", type=float, default=0.02, help="pose noise added to the prediction")
    args = ap.parse_args()

    sk = load_skeleton()
    tmp = Path(tempfile.mkdtemp(prefix="hoiplan-eval-"))
    write_motion(tmp / "gt.jsonl", carry_motion(sk, 60, seed=0))
    write_motion(tmp / "pred.jsonl", carry_motion(sk, 60, seed=1, jitter=args.jitter))
    (tmp / "obj.json").write_text(json.dumps({"points": box_surface_points().tolist()}))
    rng = np.random.default_rng(0)
    write_features(tmp / "fp.txt", rng.standard_normal((64, 8)))
    write_features(tmp / "fg.txt", rng.standard_normal((64, 8)) + 0.2)
    write_features(tmp / "ft.txt", rng.standard_normal((64, 8)))
    argv = ["eval", "--pred", str(tmp / "pred.jsonl"), "--gt", str(tmp / "gt.jsonl"),
            "--object-points", str(tmp / "obj.json"),
            "--features-pred", str(tmp / "fp.txt"), "--features-gt", str(tmp / "fg.txt"),
            "--features-text", str(tmp / "ft.txt")]
    raise SystemExit(cli(argv))


if __name__ == "__main__":
    main()
