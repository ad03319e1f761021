"""Figure recipes from the CSV outputs (needs matplotlib, not a package dependency).

    python scripts/plot_recipes.py roc eval_dir/roc.csv roc.png
    python scripts/plot_recipes.py scatter validate_dir/validation.csv scatter.png
    python scripts/plot_recipes.py influence infer_dir/summary.json influence.png
"""
import csv
import json
import sys


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def roc(src, dst, plt):
    rows = _rows(src)
    plt.plot([float(r["fpr"]) for r in rows], [float(r["tpr"]) for r in rows])
    plt.plot([0, 1], [0, 1], ls=":", c="gray")
    plt.xlabel("false positive rate")
    plt.ylabel("true positive rate")
    plt.savefig(dst, dpi=150)


def scatter(src, dst, plt):
    rows = _rows(src)
    weight = [k for k in rows[0] if k not in ("source", "target", "cascade_count")][0]
    plt.scatter([int(r["cascade_count"]) for r in rows], [float(r[weight]) for r in rows], s=8)
    plt.xlabel("items passed X -> Y")
    plt.ylabel(f"{weight} (bits)")
    plt.savefig(dst, dpi=150)


def influence(src, dst, plt):
    ranking = json.load(open(src))["outgoing_influence"]
    plt.bar(range(len(ranking)), [w for _, w in ranking])
    plt.xticks(range(len(ranking)), [v for v, _ in ranking], rotation=90)
    plt.ylabel("cumulative outgoing TE (bits)")
    plt.tight_layout()
    plt.savefig(dst, dpi=150)


if __name__ == "__main__":
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    kind, src, dst = sys.argv[1:4]
    {"roc": roc, "scatter": scatter, "influence": influence}[kind](src, dst, plt)
