#!/usr/bin/env python3
"""Audit every certified aggregation rule against random adversarial
instances and print the claimed vs. empirically measured coefficients.

Usage:
    python3 scripts/audit_rules.py [--n N] [--f F] [--d D] [--trials T] [--seed S]
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from resam.aggregation import CERTIFIED_RULE_NAMES, Rule
from resam.audit import randomized_audit
from resam.rng import RngStream


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=8)
    parser.add_argument("--f", type=int, default=3)
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(
        f"n={args.n} f={args.f} d={args.d} trials={args.trials}\n"
        f"{'rule':22s} {'claimed':>10s} {'measured':>10s} {'violations':>11s}"
    )
    worst = 0
    for name in CERTIFIED_RULE_NAMES:
        rule = Rule(name, q=args.n - args.f) if name == "multi_krum_star" else Rule(name)
        rep = randomized_audit(
            rule,
            n=args.n,
            f=args.f,
            d=args.d,
            trials=args.trials,
            rng=RngStream(args.seed),
        )
        worst = max(worst, rep.violations)
        print(
            f"{rule.label():22s} {rep.lambda_claimed:10.4f} "
            f"{rep.lambda_empirical:10.4f} {rep.violations:11d}"
        )
    return 1 if worst else 0


if __name__ == "__main__":
    sys.exit(main())
