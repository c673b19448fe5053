"""Bound-state transport along an XY chain: exact CD driving against a compressed bare sweep.

    python3 scripts/spin_transfer.py --n-sites 40 --compression 10
"""
import argparse

from lax_shortcuts.config import DEFAULTS, merge
from lax_shortcuts.scenarios import run_spin_transfer

from _common import print_checks, save_tables


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-sites", type=int, default=40)
    ap.add_argument("--compression", type=float, default=10.0)
    ap.add_argument("--out", default="results/spin_transfer")
    a = ap.parse_args()
    p = merge(DEFAULTS["spin_transfer"], {"n_sites": a.n_sites, "compression": a.compression,
                                           "first_site": -(a.n_sites // 2)})
    res = run_spin_transfer(p)
    print_checks(res)
    print("tables written to", save_tables(res, a.out))


if __name__ == "__main__":
    main()
