"""Edge scoring, thresholding and node influence ranking."""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .entropy import METHODS, TEResult, transfer_entropy
from .evaluate import precision_recall_f1, score_map
from .events import BinningScheme, EventStream

logger = logging.getLogger(__name__)

Pair = tuple[str, str]

DEFAULT_MIN_EVENTS = 10


@dataclass(frozen=True)
class EdgeScoreSet:
    scores: tuple[TEResult, ...]
    scheme: BinningScheme
    method: str
    candidates: str = "all_pairs"
    skipped: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self):
        seen = set()
        for r in self.scores:
            if r.source == r.target:
                raise ValueError(f"self-pair {r.source!r}")
            if (r.source, r.target) in seen:
                raise ValueError(f"duplicate score for {r.source}->{r.target}")
            seen.add((r.source, r.target))

    def __len__(self):
        return len(self.scores)

    def pairs(self) -> list[Pair]:
        return [(r.source, r.target) for r in self.scores]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TEResult.CSV_HEADER)
            for r in self.scores:
                w.writerow(r.csv_row())


def active_nodes(streams: Mapping[str, EventStream], min_events: int = DEFAULT_MIN_EVENTS) -> list[str]:
    return sorted(v for v, s in streams.items() if len(s) >= min_events)


def all_pairs(nodes: Sequence[str]) -> list[Pair]:
    return [(a, b) for a in nodes for b in nodes if a != b]


def _score_one(args):
    target, source, scheme, method, horizon = args
    try:
        return transfer_entropy(target, source, scheme, method, horizon), None
    except ValueError as exc:
        return None, (source.node_id, target.node_id, str(exc))


def score_edges(streams: Mapping[str, EventStream], candidates: Iterable[Pair] | None,
                scheme: BinningScheme, method: str = "panzeri_treves",
                min_events: int = DEFAULT_MIN_EVENTS, jobs: int = 1,
                horizon: float | None = None) -> EdgeScoreSet:
    """Transfer entropy for each candidate ``(source, target)`` pair.

    Without ``candidates`` every ordered pair of nodes with at least
    ``min_events`` events is scored. Pairs whose estimate fails are reported
    in ``skipped`` and the run continues. Output is sorted by pair, so the
    result does not depend on candidate order or on ``jobs``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown bias method {method!r}")
    if candidates is None:
        policy = "all_pairs"
        pairs = all_pairs(active_nodes(streams, min_events))
    else:
        policy = "edge_list"
        pairs = sorted({(str(a), str(b)) for a, b in candidates if a != b})
        missing = sorted({v for p in pairs for v in p} - set(streams))
        if missing:
            raise KeyError(f"candidate pairs reference unknown nodes: {missing[:5]}")
    if horizon is None:
        horizon = max((s.horizon for s in streams.values()), default=0.0)

    tasks = [(streams[b], streams[a], scheme, method, horizon) for a, b in pairs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_score_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = [_score_one(t) for t in tasks]

    scores = tuple(r for r, _ in outcomes if r is not None)
    skipped = tuple(s for _, s in outcomes if s is not None)
    if skipped:
        logger.warning("skipped %d of %d pairs", len(skipped), len(pairs))
    return EdgeScoreSet(scores, scheme, method, policy, skipped)


@dataclass(frozen=True)
class ThresholdPolicy:
    """``fixed`` keeps scores above ``t0``; ``f_measure`` picks ``t0`` against ground truth."""

    kind: str = "fixed"
    t0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "f_measure"):
            raise ValueError(f"unknown threshold policy {self.kind!r}")
        if self.kind == "fixed" and math.isnan(self.t0):
            raise ValueError("threshold must not be NaN")


@dataclass(frozen=True)
class WeightedDigraph:
    nodes: tuple[str, ...]
    edges: dict[Pair, float]
    threshold: float

    def edge_set(self) -> set[Pair]:
        return set(self.edges)


def f_measure_threshold(scores, truth, weight: str = "te_corrected") -> tuple[float, float]:
    """Cut ``t0`` maximizing F1 over all distinct cut points; ties go to the larger ``t0``.

    Returns ``(t0, f1)``. Cutting just below a score value keeps that value.
    """
    smap = score_map(scores, weight)
    if not smap:
        raise ValueError("no scores")
    values = np.unique(list(smap.values()))
    cuts = [float(values[-1])] + [float(np.nextafter(v, -np.inf)) for v in values[::-1]]
    best = None
    for t0 in cuts:
        f1 = precision_recall_f1([p for p, s in smap.items() if s > t0], truth)[2]
        if best is None or f1 > best[1]:
            best = (t0, f1)
    return best


def apply_threshold(scores: EdgeScoreSet, policy: ThresholdPolicy, truth=None,
                    weight: str = "te_corrected") -> WeightedDigraph:
    """Keep the scored pairs whose weight exceeds the policy's threshold."""
    if policy.kind == "f_measure":
        if truth is None:
            raise ValueError("f_measure threshold requires ground truth")
        t0 = f_measure_threshold(scores, truth, weight)[0]
    else:
        t0 = policy.t0
    smap = score_map(scores, weight)
    nodes = sorted({v for p in smap for v in p})
    edges = {p: w for p, w in sorted(smap.items()) if w > t0}
    return WeightedDigraph(tuple(nodes), edges, t0)


def outgoing_influence(scores, weight: str = "te_corrected") -> list[tuple[str, float]]:
    """Nodes ranked by summed outgoing weight, descending; ties by node id."""
    smap = score_map(scores, weight)
    totals = {v: 0.0 for p in smap for v in p}
    for (a, _), w in sorted(smap.items()):
        totals[a] += w
    return sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))


def write_edge_list(path, graph: WeightedDigraph, scores: EdgeScoreSet) -> None:
    by_pair = {(r.source, r.target): r for r in scores.scores}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "te_corrected", "te_raw", "n"])
        for (a, b) in sorted(graph.edges):
            r = by_pair[(a, b)]
            w.writerow([a, b, repr(r.te_corrected), repr(r.te_raw), r.n])


def default_jobs() -> int:
    return os.cpu_count() or 1
