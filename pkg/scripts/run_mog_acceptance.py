"""Produce the mixture-of-Gaussians acceptance artifacts.

Runs the full protocol (5 seeds of dg with k=10 and 5 seeds of gda,
full batch, learning rate 2e-4) and writes one JSON row per run plus an
aggregate verdict under artifacts/mog_acceptance/.  Training is
deterministic per seed, so re-running reproduces the artifacts bit for
bit; tests/test_acceptance.py asserts the criterion thresholds against
these files.

Usage: python scripts/run_mog_acceptance.py [--iters N] [--seeds a,b,...]
"""

import argparse
import json
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dgopt.mog import train_mog  # noqa: E402

DEFAULT_OUT = os.path.join(os.path.dirname(__file__), "..", "artifacts",
                           "mog_acceptance")


def run_one(alg, seed, iters, out_dir):
    t0 = time.time()
    log = train_mog(alg, seed=seed, iterations=iters, dg_k=10,
                    log_interval=100, dtype=np.float32)
    wall = time.time() - t0
    first, last = log.rows[0], log.rows[-1]
    row = {
        "algorithm": alg,
        "seed": seed,
        "iterations": iters,
        "status": log.status,
        "wall_seconds": wall,
        "initial_dg_metric": first[4],
        "final_dg_metric": last[4],
        "final_mode_fracs": [last[5], last[6], last[7]],
        "final_disc_real_median": last[8],
        "final_disc_fake_median": last[9],
        "final_disc_union_median": log.final_disc_union_median,
        "final_value": last[1],
    }
    log.write_csv(os.path.join(out_dir, f"{alg}_seed{seed}.csv"))
    log.write_samples_csv(os.path.join(out_dir, f"{alg}_seed{seed}_samples.csv"))
    with open(os.path.join(out_dir, f"{alg}_seed{seed}.json"), "w") as fh:
        json.dump(row, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{alg} seed {seed}: {wall:.0f}s status={log.status} "
          f"fracs={row['final_mode_fracs']} dg {row['initial_dg_metric']:.5f}"
          f"->{row['final_dg_metric']:.5f} "
          f"disc_union={row['final_disc_union_median']:.3f}", flush=True)
    return row


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--seeds", type=str, default="1,2,3,4,5")
    ap.add_argument("--algs", type=str, default="gda,dg",
                    help="subset to run; the verdict includes whatever "
                         "artifacts exist afterwards")
    ap.add_argument("--out", type=str, default=DEFAULT_OUT)
    args = ap.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]
    os.makedirs(args.out, exist_ok=True)

    t0 = time.time()
    rows = []
    for alg in ("gda", "dg"):
        if alg not in args.algs.split(","):
            continue
        for seed in seeds:
            marker = os.path.join(args.out, f"{alg}_seed{seed}.json")
            if os.path.exists(marker):
                with open(marker) as fh:
                    rows.append(json.load(fh))
                print(f"{alg} seed {seed}: reusing existing artifact", flush=True)
                continue
            rows.append(run_one(alg, seed, args.iters, args.out))
    verdict = {
        "iterations": args.iters,
        "seeds": seeds,
        "total_wall_seconds": sum(r["wall_seconds"] for r in rows),
        "runs": rows,
    }
    with open(os.path.join(args.out, "verdict.json"), "w") as fh:
        json.dump(verdict, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"total wall: {verdict['total_wall_seconds']:.0f}s "
          f"(this session: {time.time() - t0:.0f}s)")


if __name__ == "__main__":
    main()
