"""Write a loss-landscape CSV for a built-in functional and print a coarse text contour."""
import argparse

import numpy as np

from hoiplan.landscape import ParamVector, builtin_loss, landscape


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--loss", default="rosenbrock")
    ap.add_argument("--steps", type=int, default=21)
    ap.add_argument("--r", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="landscape.csv")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    w0 = ParamVector.from_tensors([rng.standard_normal((8, 4)), rng.standard_normal(4)])
    grid = landscape(w0, builtin_loss(args.loss, w0), args.r, args.steps, args.seed)
    with open(args.out, "w") as fh:
        fh.write(grid.to_csv())

    v = np.log1p(grid.values - np.nanmin(grid.values))
    levels = " .:-=+*#%@"
    idx = np.clip((v / max(np.nanmax(v), 1e-12) * (len(levels) - 1)).astype(int), 0, len(levels) - 1)
    for row in idx.T[::-1]:
        print("".join(levels[i] for i in row))
    print(f"wrote {args.out}; center loss {grid.values[args.steps // 2, args.steps // 2]:.4g}")


if __name__ == "__main__":
    main()
