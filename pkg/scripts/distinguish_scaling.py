"""Distinguisher accuracy and EE query quantiles as m grows (t = 2m)."""
import argparse
import csv
import sys

from bisq.estimators import EstimatorConfig
from bisq.hard import HardInstanceSpec, run_distinguisher


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--log-ms", type=int, nargs="+", default=[16, 18, 20])
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--epsilon", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--out", default="-")
    args = ap.parse_args()

    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(out)
    w.writerow(["m", "t", "trials", "accuracy_yes", "accuracy_no", "ee_p10", "ee_p50", "ee_p90"])
    for lm in args.log_ms:
        m = 2**lm
        spec = HardInstanceSpec(m, 2 * m, "yes", args.seed)
        rep = run_distinguisher(spec, "triangle-est", EstimatorConfig(args.epsilon, seed=args.seed), args.trials)
        w.writerow([m, 2 * m, args.trials, rep.accuracy("yes"), rep.accuracy("no"), *rep.query_quantiles()])
        out.flush()


if __name__ == "__main__":
    main()
