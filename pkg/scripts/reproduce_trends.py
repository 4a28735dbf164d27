"""Train the variant grid and the 5-shot depth grid on the synthetic benchmark,
write both result tables and print paired per-seed comparisons.

    python scripts/reproduce_trends.py --out results/
    python scripts/reproduce_trends.py --seeds 0,1 --episodes 1000   # quick look
"""
from __future__ import annotations

import argparse
import logging
import time
from collections import defaultdict
from pathlib import Path

import numpy as np

from mrn.engine import RunConfig, SweepSpec, ablate, write_rows
from mrn.episodes import synth_dataset

HERE = Path(__file__).resolve().parent


def paired(rows, key, field="mean_acc"):
    table = defaultdict(dict)
    for r in rows:
        table[r[key]][r["seed"]] = r[field]
    return table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=HERE / "configs" / "benchmark.cfg")
    ap.add_argument("--out", default="results")
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--episodes", type=int, help="override total training episodes")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    base = RunConfig.from_text(Path(args.config).read_text())
    if args.episodes:
        base = base.with_overrides({"total_episodes": str(args.episodes),
                                    "halve_every": str(max(1, args.episodes // 4))})
    seeds = [int(s) for s in args.seeds.split(",")]
    data = synth_dataset(base.synth)
    out = Path(args.out)

    t0 = time.time()
    variants = ablate(base, SweepSpec({"variant": ["mrn", "mrn_zero", "mrn_mean", "mrn_max"]}, seeds), data)
    write_rows(variants, out / "variants_1shot.csv")
    acc = paired(variants, "variant")
    print(f"1-shot 5-way, {len(seeds)} seeds ({time.time() - t0:.0f}s)")
    for name in ("mrn", "mrn_zero", "mrn_mean", "mrn_max"):
        print(f"  {name:9s} " + " ".join(f"{acc[name][s]:.4f}" for s in seeds)
              + f"   mean {np.mean([acc[name][s] for s in seeds]):.4f}")
    for other in ("mrn_zero", "mrn_mean", "mrn_max"):
        gain = np.mean([acc["mrn"][s] - acc[other][s] for s in seeds])
        print(f"  mrn - {other}: {100 * gain:+.2f} points")

    t0 = time.time()
    depth = ablate(base, SweepSpec({"K": ["5"], "Q": ["10"], "propagation.d": ["1", "2", "3"]}, seeds,
                                   reuse_backbone=True), data)
    write_rows(depth, out / "depth_5shot.csv")
    acc = paired(depth, "d")
    print(f"5-shot 5-way depth sweep ({time.time() - t0:.0f}s)")
    for d in (1, 2, 3):
        print(f"  d={d}  mean {np.mean([acc[d][s] for s in seeds]):.4f}")


if __name__ == "__main__":
    main()
