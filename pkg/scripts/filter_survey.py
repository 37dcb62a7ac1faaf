"""Which parameters does the mod-p period filter fail to settle, and what
does the exhaustive search find there?

    python scripts/filter_survey.py --max-height 40
"""

import argparse
from collections import Counter

from henon.arith import enumerate_rationals
from henon.modp import default_filter_primes, intersect_filters
from henon.search import ALLOWED_PERIODS, find_rational_periodic_points, period_multiset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-height", type=int, default=40)
    ap.add_argument("--primes", type=int, default=8, help="number of filter primes")
    args = ap.parse_args()

    survivors = Counter()
    unresolved = []
    for b in enumerate_rationals(args.max_height, square_denominator_only=True):
        S = intersect_filters(b, default_filter_primes(b, args.primes))
        extra = sorted(S.allowed - ALLOWED_PERIODS)
        survivors.update(extra)
        if extra:
            unresolved.append((b, extra, period_multiset(find_rational_periodic_points(b))))
    print(f"{len(unresolved)} parameters need the search")
    print("surviving disallowed periods:", dict(sorted(survivors.items())))
    for b, extra, periods in unresolved:
        print(f"  b={b!s:>8}  filter leaves {extra}  search finds periods {periods or '-'}")


if __name__ == "__main__":
    main()
