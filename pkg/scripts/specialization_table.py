"""Compare the canonical height of a specialised point with h(t0) times the
generic canonical height over Q(t).

    python scripts/specialization_table.py -b t -P 0,0 --max-exp 6
"""

import argparse
from fractions import Fraction

from henon.core import HenonMap
from henon.funcfield import generic_canonical_height, height_divisors, parse_ff_point, parse_ratfunc, \
    specialization_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-b", default="t")
    ap.add_argument("-P", default="0,0")
    ap.add_argument("--max-exp", type=int, default=6, help="samples t0 = 10^k and 10^k + 1/2 for k <= max-exp")
    args = ap.parse_args()

    phi = HenonMap.quadratic(parse_ratfunc(args.b))
    P = parse_ff_point(args.P)
    Dp, Dm = height_divisors(phi, P)
    g = generic_canonical_height(phi, P)
    print(f"# D+ = {Dp}   D- = {Dm}   generic height = {g}")
    samples = []
    for k in range(1, args.max_exp + 1):
        samples += [Fraction(10 ** k), Fraction(2 * 10 ** k + 1, 2)]
    print("t0,h_t0,hhat,hhat/h_t0,(hhat - g*h_t0)")
    for r in specialization_experiment(phi, P, samples):
        if r.status != "ok":
            print(f"{r.t0},{r.h_t0},,,{r.status}")
            continue
        print(f"{r.t0},{r.h_t0:.6f},{r.hhat:.6f},{r.ratio:.6f},{r.hhat - float(g) * r.h_t0:+.6f}")


if __name__ == "__main__":
    main()
