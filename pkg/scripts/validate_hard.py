"""Check the planted instances' size, count and gap conditions over many seeds."""
import argparse
import collections

from bisq.hard import HardInstanceSpec, gen_hard, validate_instance


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=2**20)
    ap.add_argument("--t", type=int, default=2**21)
    ap.add_argument("--seeds", type=int, default=100)
    args = ap.parse_args()

    for flavor in ("yes", "no"):
        held = collections.Counter()
        for seed in range(args.seeds):
            spec = HardInstanceSpec(args.m, args.t, flavor, seed)
            rep = validate_instance(*gen_hard(spec), spec)
            for name, ok in {**rep.checks, **rep.notes}.items():
                held[name] += ok
        print(f"{flavor}:")
        for name in sorted(held):
            print(f"  {name}: {held[name]}/{args.seeds}")


if __name__ == "__main__":
    main()
