"""Run the corridor scenario and print each re-planning decision."""
import argparse

from hoiplan.scenarios import corridor_scenario, scenario_from_dict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--predictor", default="oracle", choices=["oracle", "constant_velocity"])
    ap.add_argument("--lambda-w", type=float, default=1.0)
    args = ap.parse_args()

    d = corridor_scenario(predictor=args.predictor)
    d["params"] = {"lambda_w": args.lambda_w}
    sc = scenario_from_dict(d)
    tl = sc.run()
    for t, dec in tl.decisions:
        print(f"t={t:3d}  chose wait={dec.wait_steps}  score={dec.score:.3f}")
        for c in dec.candidates:
            length = "-" if c.path is None else f"{c.path.length:.2f}"
            print(f"        k={c.wait_steps:2d}  len={length:>6}  score={c.score:8.3f}  clear={c.clear}")
    print(tl.summary())


if __name__ == "__main__":
    main()
