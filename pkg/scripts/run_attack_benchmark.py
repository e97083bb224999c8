#!/usr/bin/env python3
"""Run the logistic attack benchmark sweep and summarize final accuracies.

Executes every run of a sweep config (default: the full benchmark in
configs/attack_benchmark.json, ~320 runs), writes per-run CSV/JSON and a
sweep.json index, then prints a rule x attack table of final accuracies
averaged over replicas.

Usage:
    python3 scripts/run_attack_benchmark.py [--config PATH] [--output-dir DIR]
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import defaultdict

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from resam.config import (
    expand_sweep,
    load_config,
    resolve_output_dir,
    write_json_atomic,
    write_run_outputs,
)
from resam.simulator import run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config",
        default=os.path.join(
            os.path.dirname(__file__), "..", "configs", "attack_benchmark.json"
        ),
    )
    parser.add_argument("--output-dir", default=None)
    args = parser.parse_args()

    cfg = load_config(args.config)
    runs = expand_sweep(cfg)
    out_dir = resolve_output_dir(args.output_dir, cfg)
    print(f"{len(runs)} runs -> {out_dir}")

    entries = []
    for i, (run_id, run_cfg) in enumerate(runs, 1):
        result = run(run_cfg)
        entries.append(write_run_outputs(out_dir, run_id, run_cfg, result))
        if i % 20 == 0 or i == len(runs):
            print(f"  {i}/{len(runs)}")
    write_json_atomic(
        os.path.join(out_dir, "sweep.json"),
        {"schema_version": 1, "runs": entries},
    )

    acc = defaultdict(list)
    for e in entries:
        if e["final_accuracy"] is not None:
            acc[(e["rule"], e["attack"], e["beta"])].append(e["final_accuracy"])
    keys = sorted(acc)
    print(f"\n{'rule':22s} {'attack':12s} {'beta':>6s} {'accuracy':>9s}")
    for rule, attack, beta in keys:
        mean = 100.0 * sum(acc[(rule, attack, beta)]) / len(acc[(rule, attack, beta)])
        print(f"{rule:22s} {str(attack):12s} {beta:6.2f} {mean:8.1f}%")
    return 0


if __name__ == "__main__":
    sys.exit(main())
