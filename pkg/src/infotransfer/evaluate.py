"""Reconstruction quality against ground truth, and cascade-based validation."""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .events import EventStream

logger = logging.getLogger(__name__)

Pair = tuple[str, str]


class DegenerateTruthError(ValueError):
    pass


class UndefinedCorrelationError(ValueError):
    pass


def score_map(scores, weight: str = "te_corrected") -> dict[Pair, float]:
    """``(source, target) -> score`` from an EdgeScoreSet, TEResults or a plain mapping."""
    if isinstance(scores, Mapping):
        return {tuple(k): float(v) for k, v in scores.items()}
    results = getattr(scores, "scores", scores)
    return {(r.source, r.target): float(getattr(r, weight)) for r in results}


def _truth_edges(truth) -> set[Pair]:
    edges = getattr(truth, "edges", truth)
    return {(str(a), str(b)) for a, b in edges}


@dataclass(frozen=True, eq=False)
class ROCCurve:
    """ROC points; row ``i`` classifies every pair scoring ``>= thresholds[i]`` as an edge."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))


def _labelled(scores, truth, weight):
    smap = score_map(scores, weight)
    positives = _truth_edges(truth)
    pairs = sorted(smap)
    values = np.array([smap[p] for p in pairs], dtype=np.float64)
    labels = np.array([p in positives for p in pairs], dtype=bool)
    if labels.all() or not labels.any():
        raise DegenerateTruthError("degenerate truth: need both edges and non-edges among candidates")
    return values, labels


def roc(scores, truth, weight: str = "te_corrected") -> ROCCurve:
    """ROC sweep over the distinct score values, tied scores entering together."""
    values, labels = _labelled(scores, truth, weight)
    cuts = np.unique(values)[::-1]
    pos, neg = labels.sum(), (~labels).sum()
    tp = np.array([(labels & (values >= c)).sum() for c in cuts])
    fp = np.array([(~labels & (values >= c)).sum() for c in cuts])
    return ROCCurve(np.concatenate(([math.inf], cuts)),
                    np.concatenate(([0.0], fp / neg)),
                    np.concatenate(([0.0], tp / pos)))


def auc(curve: ROCCurve) -> float:
    """Trapezoidal area under the curve."""
    x, y = curve.fpr, curve.tpr
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def auc_mann_whitney(scores, truth, weight: str = "te_corrected") -> float:
    """Probability that a true edge outscores a non-edge, ties counted one half."""
    values, labels = _labelled(scores, truth, weight)
    p, q = values[labels][:, None], values[~labels][None, :]
    return float(((p > q).sum() + 0.5 * (p == q).sum()) / (p.size * q.size))


def precision_recall_f1(predicted: Iterable[Pair], truth) -> tuple[float, float, float]:
    predicted = set(predicted)
    actual = _truth_edges(truth)
    tp = len(predicted & actual)
    precision = tp / len(predicted) if predicted else 0.0
    recall = tp / len(actual) if actual else 0.0
    f1 = 2 * precision * recall / (precision + recall) if tp else 0.0
    return precision, recall, f1


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length 1-d sequences")
    if x.size < 2:
        raise UndefinedCorrelationError("undefined correlation: need at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = (dx * dx).sum(), (dy * dy).sum()
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("undefined correlation: zero variance")
    return float(np.clip((dx * dy).sum() / math.sqrt(sxx * syy), -1.0, 1.0))


def count_cascades(streams: Mapping[str, EventStream] | Iterable[EventStream],
                   candidates: Iterable[Pair] | None = None,
                   origin: str = "global") -> dict[Pair, int]:
    """Distinct items passed from ``X`` to ``Y`` for each ordered pair.

    With ``origin="global"`` an item counts for ``(X, Y)`` when ``X`` is its
    earliest emitter overall (ties go to the smallest node id) and ``Y``
    emits it strictly after ``X`` first did. ``origin="pairwise"`` only asks
    that ``X`` emitted it before ``Y``'s first emission.

    Returns counts for every candidate pair (zeros included) or, when no
    candidates are given, for the pairs with a nonzero count.
    """
    if origin not in ("global", "pairwise"):
        raise ValueError("origin must be 'global' or 'pairwise'")
    if isinstance(streams, Mapping):
        streams = streams.values()
    first: dict[str, dict[str, float]] = defaultdict(dict)
    last: dict[str, dict[str, float]] = defaultdict(dict)
    for s in sorted(streams, key=lambda s: s.node_id):
        if s.item_ids is None:
            if len(s):
                logger.warning("stream %s has no item ids; its cascade counts are 0", s.node_id)
            continue
        for t, item in zip(s.events.tolist(), s.item_ids):
            if not item:
                continue
            first[item].setdefault(s.node_id, t)
            last[item][s.node_id] = t

    counts: dict[Pair, int] = defaultdict(int)
    for item in sorted(first):
        emit = first[item]
        if origin == "global":
            x = min(emit, key=lambda v: (emit[v], v))
            for y, t_last in last[item].items():
                if y != x and t_last > emit[x]:
                    counts[(x, y)] += 1
        else:
            for x, tx in emit.items():
                for y, ty in emit.items():
                    if y != x and tx < ty:
                        counts[(x, y)] += 1
    if candidates is None:
        return dict(sorted(counts.items()))
    return {tuple(p): counts.get(tuple(p), 0) for p in sorted(set(map(tuple, candidates)))}


def validate(scores, cascade_counts: Mapping[Pair, int], weight: str = "te_corrected"):
    """Correlate cascade counts with TE over the scored pairs.

    Returns ``(r, rows)`` with rows ``(source, target, cascade_count, te)``.
    """
    smap = score_map(scores, weight)
    rows = [(a, b, int(cascade_counts.get((a, b), 0)), smap[(a, b)]) for a, b in sorted(smap)]
    r = pearson([row[2] for row in rows], [row[3] for row in rows])
    return r, rows


def shuffled_correlations(x, y, n_shuffles: int, seed: int) -> np.ndarray:
    """Pearson r after randomly re-aligning ``y`` against ``x`` (negative control)."""
    rng = np.random.default_rng(seed)
    y = np.asarray(y, dtype=np.float64)
    return np.array([pearson(x, rng.permutation(y)) for _ in range(n_shuffles)])
