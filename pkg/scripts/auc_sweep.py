"""AUC against observation time, driven entirely through the CLI.

For each (days, seed) it runs ``simulate -> infer -> eval`` in a scratch
directory and prints one CSV table row: ``days,seed,auc``, followed by the
per-days mean. Usage::

    python scripts/auc_sweep.py --days 50 150 450 --seeds 10 --out sweep/
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from infotransfer.cli import main as cli
from infotransfer.simulate import trial_seeds


def run(*argv):
    code = cli([str(a) for a in argv])
    if code:
        sys.exit(code)


def sweep(days_grid, n_seeds, out, master=5, n=20, mean_degree=3.0, gamma_over_mu=2.0):
    rows = []
    for days in days_grid:
        for seed in trial_seeds(master, n_seeds):
            d = Path(out) / f"d{days:g}_s{seed}"
            run("simulate", "--n", n, "--mean-degree", mean_degree, "--gamma-over-mu", gamma_over_mu,
                "--days", days, "--seed", seed, "--out", d / "sim")
            run("infer", "--events", d / "sim" / "events.csv", "--min-events", 0, "--out", d / "infer")
            run("eval", "--scores", d / "infer" / "scores.csv", "--truth", d / "sim" / "truth.csv",
                "--out", d / "eval")
            rows.append((days, seed, json.loads((d / "eval" / "metrics.json").read_text())["auc"]))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--days", type=float, nargs="+", default=[50, 150, 450])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--master-seed", type=int, default=5)
    p.add_argument("--out", default="auc_sweep")
    args = p.parse_args(argv)
    rows = sweep(args.days, args.seeds, args.out, args.master_seed)
    print("days,seed,auc")
    for days, seed, a in rows:
        print(f"{days:g},{seed},{a!r}")
    print("days,mean_auc")
    for days in args.days:
        print(f"{days:g},{float(np.mean([a for d, _, a in rows if d == days]))!r}")


if __name__ == "__main__":
    main()
