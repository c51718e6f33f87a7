"""Query counts of the High path as T grows at fixed m, and of the Low path as m grows at fixed T."""
import argparse
import csv
import sys

import numpy as np

from bisq.estimators import EstimatorConfig, triangle_est_high, triangle_est_low
from bisq.graph import count_triangles_exact, gen_clique_plus_random_bipartite
from bisq.oracle import OracleHandle
from bisq.primitives import RunCache


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--m", type=int, default=20000, help="fixed edge count for the High sweep")
    ap.add_argument("--ks", type=int, nargs="+", default=[30, 45, 60, 80, 100, 130, 160])
    ap.add_argument("--low-k", type=int, default=20)
    ap.add_argument("--low-ms", type=int, nargs="+", default=[2000, 4000, 8000, 16000, 32000])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--epsilon", type=float, default=0.2)
    ap.add_argument("-o", "--out", default="-")
    args = ap.parse_args()

    cases = [("high", k, args.m) for k in args.ks] + [("low", args.low_k, m) for m in args.low_ms]
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(out)
    w.writerow(["path", "k", "m", "T", "median_bis", "median_rel_error"])
    for path, k, m in cases:
        g = gen_clique_plus_random_bipartite(args.n, k, m, k if path == "high" else m)
        t = count_triangles_exact(g)
        run = triangle_est_high if path == "high" else triangle_est_low
        counts, errs = [], []
        for s in range(args.seeds):
            h = OracleHandle(g)
            est = run(h, EstimatorConfig(args.epsilon, 0.05, s), t, g.m, RunCache(g.n))
            counts.append(h.ledger.bis_count)
            errs.append(abs(est - t) / t)
        w.writerow([path, k, m, t, float(np.median(counts)), round(float(np.median(errs)), 4)])
        out.flush()


if __name__ == "__main__":
    main()
