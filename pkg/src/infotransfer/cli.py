"""Command-line interface: ``infotransfer {simulate,te,infer,eval,validate}``.

Every option can also come from a JSON config file (``--config``) whose keys
are the option names with dashes turned into underscores. Command-line flags
override file values; the resolved union is written to ``manifest.json`` in
the output directory.

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .entropy import METHODS, transfer_entropy
from .evaluate import (auc, auc_mann_whitney, count_cascades, pearson, precision_recall_f1, roc,
                       shuffled_correlations, validate)
from .events import PRESETS, BinningScheme, load_events, preset, subsample, write_events
from .infer import (DEFAULT_MIN_EVENTS, EdgeScoreSet, ThresholdPolicy, active_nodes, all_pairs,
                    apply_threshold, default_jobs, f_measure_threshold, outgoing_influence, score_edges,
                    write_edge_list)
from .simulate import HazardModel, NetworkSpec, SimulationConfig, random_network, simulate, trial_seeds

log = logging.getLogger("infotransfer")

SEED_ENV = "TE_NET_SEED"
LARGE_RUN = 2000

_UNITS = {"": 1.0, "s": 1.0, "sec": 1.0, "min": 60.0, "m": 60.0, "h": 3600.0, "hr": 3600.0,
          "hour": 3600.0, "hours": 3600.0, "d": 86400.0, "day": 86400.0, "days": 86400.0}


class ConfigError(Exception):
    pass


def parse_duration(text) -> float:
    """``"10min"`` -> 600.0; bare numbers are seconds."""
    if isinstance(text, (int, float)):
        return float(text)
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-zA-Z]*)\s*", str(text))
    if not m or m.group(2).lower() not in _UNITS:
        raise ConfigError(f"cannot parse duration {text!r}")
    return float(m.group(1)) * _UNITS[m.group(2).lower()]


def parse_widths(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [parse_duration(w) for w in text]
    return [parse_duration(w) for w in str(text).split(",") if w.strip()]


# option defaults per command; None means "not set"
DEFAULTS = {
    "simulate": {"N": 20, "mean_degree": 3.0, "gamma_over_mu": 2.0, "gamma_file": None, "mu_per_day": 1.0,
                 "horizon_days": 500.0, "seed": None, "cascade_labels": False, "subsample_f": 1.0,
                 "prune_days": 7.0, "out": None},
    "te": {"events": None, "format": None, "origin": 0.0, "horizon": None, "pair": None, "candidates": None,
           "preset": None, "widths": None, "uniform_width": None, "lags": None, "source_lags": None,
           "stride": None, "method": "panzeri_treves", "out": None},
    "infer": {"events": None, "format": None, "origin": 0.0, "horizon": None, "candidates": None,
              "preset": None, "widths": None, "uniform_width": None, "lags": None, "source_lags": None,
              "stride": None, "method": "panzeri_treves", "min_events": DEFAULT_MIN_EVENTS,
              "threshold": 0.0, "f_measure": False, "truth": None, "weight": "te_corrected",
              "jobs": None, "allow_large": False, "out": None},
    "eval": {"scores": None, "truth": None, "threshold": 0.0, "f_measure": False, "weight": "te_corrected",
             "events": None, "origin_rule": "global", "out": None},
    "validate": {"events": None, "scores": None, "origin_rule": "global", "weight": "te_corrected",
                 "shuffles": 100, "seed": None, "out": None},
}


def _add_scheme_args(p):
    g = p.add_argument_group("binning scheme")
    g.add_argument("--preset", choices=sorted(PRESETS), help="named scheme (default: synthetic)")
    g.add_argument("--widths", help="now-bin then history widths, e.g. 1s,1h,2h")
    g.add_argument("--uniform-width", help="uniform bins of this width (use with --lags)")
    g.add_argument("--lags", type=int, help="target history lags k for --uniform-width")
    g.add_argument("--source-lags", type=int, help="source history lags l (default k)")
    g.add_argument("--stride", help="spacing of evaluation times for variable schemes (default: now-bin width)")
    g.add_argument("--method", choices=METHODS)


def _add_events_args(p):
    p.add_argument("--events", help="event file (CSV node_id,timestamp[,item_id] or JSONL)")
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--origin", type=float, help="subtract this from every timestamp (seconds)")
    p.add_argument("--horizon", help="observation window end after shifting (default: last event)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infotransfer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--out", help="output directory (created if missing)")
        return p

    p = command("simulate", "generate ground-truth activity on a random network")
    p.add_argument("--n", dest="N", type=int)
    p.add_argument("--mean-degree", type=float)
    p.add_argument("--gamma-over-mu", type=float)
    p.add_argument("--gamma-file", help="CSV source,target,gamma_over_mu; replaces the random network")
    p.add_argument("--mu-per-day", type=float)
    p.add_argument("--days", dest="horizon_days", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--cascade-labels", action="store_const", const=True)
    p.add_argument("--subsample-f", type=float)
    p.add_argument("--prune-days", type=float)

    p = command("te", "transfer entropy for given pairs")
    _add_events_args(p)
    p.add_argument("--pair", nargs=2, action="append", metavar=("SOURCE", "TARGET"))
    p.add_argument("--candidates", help="CSV with source,target columns")
    _add_scheme_args(p)

    p = command("infer", "score candidate edges and threshold into a graph")
    _add_events_args(p)
    p.add_argument("--candidates", help="CSV with source,target columns (default: all active pairs)")
    _add_scheme_args(p)
    p.add_argument("--min-events", type=int)
    p.add_argument("--threshold", type=float, help="fixed T0; edges need weight > T0")
    p.add_argument("--f-measure", action="store_const", const=True, help="choose T0 by F1 against --truth")
    p.add_argument("--truth", help="ground-truth edge CSV source,target[,gamma]")
    p.add_argument("--weight", choices=("te_corrected", "te_raw"))
    p.add_argument("--jobs", type=int)
    p.add_argument("--allow-large", action="store_const", const=True)

    p = command("eval", "ROC/AUC and F1 of scores against ground truth")
    p.add_argument("--scores", help="score CSV from te or infer")
    p.add_argument("--truth")
    p.add_argument("--threshold", type=float)
    p.add_argument("--f-measure", action="store_const", const=True)
    p.add_argument("--weight", choices=("te_corrected", "te_raw"))
    p.add_argument("--events", help="events with item ids, to add pearson_r against cascade counts")
    p.add_argument("--origin-rule", choices=("global", "pairwise"))

    p = command("validate", "correlate scores with traced item cascades")
    p.add_argument("--events")
    p.add_argument("--scores")
    p.add_argument("--origin-rule", choices=("global", "pairwise"))
    p.add_argument("--weight", choices=("te_corrected", "te_raw"))
    p.add_argument("--shuffles", type=int)
    p.add_argument("--seed", type=int)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key == "n":
                key = "N"
            if key not in cfg:
                raise ConfigError(f"unknown config key {key!r} for {args.command}")
            cfg[key] = value
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if "seed" in cfg and cfg["seed"] is None:
        env = os.environ.get(SEED_ENV)
        try:
            cfg["seed"] = int(env) if env is not None else 0
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    if cfg.get("out") is None:
        raise ConfigError("--out is required")
    return cfg


def scheme_from(cfg: dict) -> BinningScheme:
    chosen = [k for k in ("preset", "widths", "uniform_width") if cfg.get(k) is not None]
    if len(chosen) > 1:
        raise ConfigError(f"choose one of --preset, --widths, --uniform-width (got {', '.join(chosen)})")
    stride = parse_duration(cfg["stride"]) if cfg.get("stride") is not None else None
    try:
        if cfg.get("widths") is not None:
            widths = parse_widths(cfg["widths"])
            if len(widths) < 2:
                raise ConfigError("--widths needs the now-bin width and at least one history width")
            return BinningScheme.variable(widths[0], widths[1:], cfg.get("source_lags"), stride)
        if cfg.get("uniform_width") is not None:
            if cfg.get("lags") is None:
                raise ConfigError("--uniform-width needs --lags")
            return BinningScheme.uniform(parse_duration(cfg["uniform_width"]), cfg["lags"], cfg.get("source_lags"))
        name = cfg.get("preset") or "synthetic"
        if name == "digg" and stride is not None:
            raise ConfigError("the digg preset has a fixed stride")
        return preset(name, stride)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _write_manifest(out: Path, command: str, cfg: dict, **extra) -> None:
    manifest = {"command": command, "version": __version__, "config": cfg}
    manifest.update(extra)
    _write_json(out / "manifest.json", manifest)


def _read_pairs(path) -> list[tuple[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"source", "target"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected source,target columns")
        return [(row["source"], row["target"]) for row in reader]


def read_truth(path) -> list[tuple[str, str]]:
    return _read_pairs(path)


def read_scores(path, weight: str) -> dict[tuple[str, str], float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"source", "target", weight} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected source,target,{weight} columns")
        return {(row["source"], row["target"]): float(row[weight]) for row in reader}


def _load(cfg):
    if not cfg.get("events"):
        raise ConfigError("--events is required")
    if not Path(cfg["events"]).exists():
        raise ConfigError(f"events file not found: {cfg['events']}")
    horizon = parse_duration(cfg["horizon"]) if cfg.get("horizon") is not None else None
    return load_events(cfg["events"], cfg.get("format"), cfg.get("origin") or 0.0, horizon)


def cmd_simulate(cfg: dict) -> None:
    if not cfg["horizon_days"] or cfg["horizon_days"] <= 0 or not math.isfinite(cfg["horizon_days"]):
        raise ConfigError("--days must be positive")
    if not 0.0 <= cfg["subsample_f"] <= 1.0:
        raise ConfigError("--subsample-f must lie in [0, 1]")
    if cfg["N"] < 1:
        raise ConfigError("--n must be >= 1")
    if cfg["mu_per_day"] < 0 or cfg["gamma_over_mu"] < 0:
        raise ConfigError("rates must be nonnegative")
    net_seed, sim_seed, sub_seed = trial_seeds(cfg["seed"], 3)
    mu = cfg["mu_per_day"]
    nodes = tuple(str(i) for i in range(cfg["N"]))
    if cfg["gamma_file"]:
        with open(cfg["gamma_file"], newline="") as fh:
            rows = list(csv.DictReader(fh))
        try:
            weights = {(r["source"], r["target"]): float(r["gamma_over_mu"]) * mu for r in rows}
            network = NetworkSpec(nodes, tuple(weights))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad gamma file: {exc}") from None
        model = HazardModel(mu, weights, cfg["prune_days"])
    else:
        if not 0 <= cfg["mean_degree"] <= max(cfg["N"] - 1, 0):
            raise ConfigError("--mean-degree must lie in [0, N-1]")
        network = random_network(cfg["N"], cfg["mean_degree"], net_seed)
        model = HazardModel.relative(network, cfg["gamma_over_mu"], mu, cfg["prune_days"])
    streams = simulate(network, model, SimulationConfig(cfg["horizon_days"], sim_seed, bool(cfg["cascade_labels"])))
    if cfg["subsample_f"] < 1.0:
        seeds = trial_seeds(sub_seed, len(network.nodes))
        streams = {v: subsample(streams[v], cfg["subsample_f"], s) for v, s in zip(network.nodes, seeds)}

    out = _out_dir(cfg)
    write_events(out / "events.csv", streams)
    with open(out / "truth.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "gamma"])
        for (a, b) in network.edges:
            w.writerow([a, b, repr(float(model.gamma[(a, b)]))])
    _write_manifest(out, "simulate", cfg, events=sum(len(s) for s in streams.values()),
                    edges=len(network.edges))


def cmd_te(cfg: dict) -> None:
    scheme = scheme_from(cfg)
    streams = _load(cfg)
    pairs = [tuple(p) for p in cfg.get("pair") or []]
    if cfg.get("candidates"):
        pairs += _read_pairs(cfg["candidates"])
    if not pairs:
        raise ConfigError("give --pair SOURCE TARGET or --candidates")
    missing = sorted({v for p in pairs for v in p} - set(streams))
    if missing:
        raise ConfigError(f"unknown nodes: {', '.join(missing)}")
    horizon = streams.horizon
    out = _out_dir(cfg)
    results = [transfer_entropy(streams[b], streams[a], scheme, cfg["method"], horizon)
               for a, b in sorted(set(pairs))]
    EdgeScoreSet(tuple(results), scheme, cfg["method"], "edge_list").to_csv(out / "te.csv")
    _write_json(out / "te.json", [{"source": r.source, "target": r.target, "n": r.n, "te_raw": r.te_raw,
                                    "te_corrected": r.te_corrected} for r in results])
    _write_manifest(out, "te", cfg, scheme=scheme.as_dict())


def cmd_infer(cfg: dict) -> None:
    scheme = scheme_from(cfg)
    if cfg["f_measure"] and not cfg.get("truth"):
        raise ConfigError("--f-measure needs --truth")
    streams = _load(cfg)
    candidates = _read_pairs(cfg["candidates"]) if cfg.get("candidates") else None
    n_pairs = len(candidates) if candidates is not None else len(all_pairs(active_nodes(streams, cfg["min_events"])))
    if n_pairs > LARGE_RUN and not cfg["allow_large"]:
        raise ConfigError(f"{n_pairs} candidate pairs exceeds {LARGE_RUN}; pass --allow-large to proceed")
    if n_pairs > LARGE_RUN:
        log.warning("scoring %d candidate pairs", n_pairs)
    jobs = cfg["jobs"] or default_jobs()
    scores = score_edges(streams, candidates, scheme, cfg["method"], cfg["min_events"], jobs, streams.horizon)
    truth = read_truth(cfg["truth"]) if cfg.get("truth") else None
    policy = ThresholdPolicy("f_measure") if cfg["f_measure"] else ThresholdPolicy("fixed", cfg["threshold"])
    graph = apply_threshold(scores, policy, truth, cfg["weight"])

    out = _out_dir(cfg)
    scores.to_csv(out / "scores.csv")
    write_edge_list(out / "edges.csv", graph, scores)
    summary = {
        "threshold": graph.threshold,
        "candidates": n_pairs,
        "scored": len(scores),
        "skipped": [list(s) for s in scores.skipped],
        "edges": len(graph.edges),
        "outgoing_influence": [[v, w] for v, w in outgoing_influence(scores, cfg["weight"])],
    }
    if truth is not None:
        p, r, f1 = precision_recall_f1(graph.edges, truth)
        summary.update(precision=p, recall=r, f1=f1)
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "infer", {**cfg, "jobs": jobs}, scheme=scheme.as_dict())


def cmd_eval(cfg: dict) -> None:
    if not cfg.get("truth"):
        raise ConfigError("eval needs --truth")
    if not cfg.get("scores"):
        raise ConfigError("eval needs --scores")
    truth = read_truth(cfg["truth"])
    scores = read_scores(cfg["scores"], cfg["weight"])
    curve = roc(scores, truth)
    if cfg["f_measure"]:
        t0 = f_measure_threshold(scores, truth)[0]
    else:
        t0 = cfg["threshold"]
    p, r, f1 = precision_recall_f1([k for k, v in scores.items() if v > t0], truth)
    metrics = {"auc": auc(curve), "auc_mann_whitney": auc_mann_whitney(scores, truth),
               "threshold": t0, "precision": p, "recall": r, "f1": f1, "pearson_r": None}
    if cfg.get("events"):
        streams = _load({**cfg, "origin": 0.0, "format": None, "horizon": None})
        counts = count_cascades(streams, scores, cfg["origin_rule"])
        metrics["pearson_r"] = validate(scores, counts)[0]
    out = _out_dir(cfg)
    with open(out / "roc.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for row in curve.rows():
            w.writerow([repr(v) for v in row])
    _write_json(out / "metrics.json", metrics)
    _write_manifest(out, "eval", cfg)


def cmd_validate(cfg: dict) -> None:
    if not cfg.get("scores"):
        raise ConfigError("validate needs --scores")
    streams = _load({**cfg, "origin": 0.0, "format": None, "horizon": None})
    scores = read_scores(cfg["scores"], cfg["weight"])
    counts = count_cascades(streams, scores, cfg["origin_rule"])
    r, rows = validate(scores, counts)
    controls = shuffled_correlations([x[2] for x in rows], [x[3] for x in rows], cfg["shuffles"], cfg["seed"])
    out = _out_dir(cfg)
    with open(out / "validation.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "cascade_count", cfg["weight"]])
        for a, b, c, v in rows:
            w.writerow([a, b, c, repr(v)])
    _write_json(out / "metrics.json", {
        "pearson_r": r,
        "pairs": len(rows),
        "shuffle_p95": float(np.percentile(controls, 95)) if controls.size else None,
        "shuffle_exceeded": int((controls >= r).sum()),
        "shuffles": int(controls.size),
    })
    _write_manifest(out, "validate", cfg)


COMMANDS = {"simulate": cmd_simulate, "te": cmd_te, "infer": cmd_infer, "eval": cmd_eval, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"infotransfer {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 1
        log.debug("runtime failure", exc_info=True)
        print(f"infotransfer {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
