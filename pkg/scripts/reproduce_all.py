#!/usr/bin/env python3
"""Recompute every bundled instance's reference facts and gate on the result.

Prints one PASS/FAIL line per check and exits 0 only if everything passed.
"""

import argparse
import sys
import time

from abconv import catalog_names, reproduce_checks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "names", nargs="*", default=None,
        help="instances to recompute (default: all bundled ones)",
    )
    args = parser.parse_args(argv)
    names = args.names or list(catalog_names())

    total = failed = 0
    t0 = time.perf_counter()
    for name in names:
        print(f"== {name}")
        for row in reproduce_checks(name):
            mark = "PASS" if row.passed else "FAIL"
            total += 1
            failed += not row.passed
            print(f"{mark}  {row.label} ({row.detail})")
    elapsed = time.perf_counter() - t0
    print(f"\n{total - failed}/{total} checks passed in {elapsed:.2f}s")
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
