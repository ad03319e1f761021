"""Synthetic experiment protocols: simulate, estimate, summarize.

Each function runs one seeded trial so callers can fan out over seeds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import TEResult, transfer_entropy
from .evaluate import auc, count_cascades, pearson, roc, shuffled_correlations, validate
from .events import BinningScheme, preset, subsample
from .infer import score_edges
from .simulate import HazardModel, NetworkSpec, SimulationConfig, random_network, simulate, trial_seeds


@dataclass(frozen=True)
class PairTrial:
    forward: TEResult   # X -> Y, the direction of influence
    backward: TEResult  # Y -> X


def pair_trial(gamma_over_mu: float, days: float, seed: int, scheme: BinningScheme | None = None,
               method: str = "panzeri_treves", f: float = 1.0, mu: float = 1.0) -> PairTrial:
    """Simulate a single link ``X -> Y`` and estimate TE both ways.

    ``f < 1`` keeps each observed event with probability ``f`` before estimation.
    """
    scheme = scheme or preset("synthetic")
    net = NetworkSpec.pair()
    sim_seed, sx, sy = trial_seeds(seed, 3)
    streams = simulate(net, HazardModel.relative(net, gamma_over_mu, mu), SimulationConfig(days, sim_seed))
    x, y = streams["X"], streams["Y"]
    if f < 1.0:
        x, y = subsample(x, f, sx), subsample(y, f, sy)
    return PairTrial(transfer_entropy(y, x, scheme, method), transfer_entropy(x, y, scheme, method))


def network_trial(n: int, mean_degree: float, gamma_over_mu: float, days: float, seed: int,
                  scheme: BinningScheme | None = None, method: str = "panzeri_treves",
                  cascade_labels: bool = False):
    """Random network, simulated activity and all-pairs scores.

    Returns ``(network, streams, scores)``.
    """
    scheme = scheme or preset("synthetic")
    net_seed, sim_seed = trial_seeds(seed, 2)
    net = random_network(n, mean_degree, net_seed)
    streams = simulate(net, HazardModel.relative(net, gamma_over_mu),
                       SimulationConfig(days, sim_seed, cascade_labels))
    scores = score_edges(streams, None, scheme, method, min_events=0)
    return net, streams, scores


def network_auc(n: int, mean_degree: float, gamma_over_mu: float, days: float, seed: int,
                scheme: BinningScheme | None = None, method: str = "panzeri_treves") -> float:
    net, _, scores = network_trial(n, mean_degree, gamma_over_mu, days, seed, scheme, method)
    return auc(roc(scores, net))


def auc_sweep(days_grid, seeds, n: int = 20, mean_degree: float = 3.0, gamma_over_mu: float = 2.0,
              scheme: BinningScheme | None = None) -> dict[float, list[float]]:
    """AUC per seed for each observation time."""
    return {d: [network_auc(n, mean_degree, gamma_over_mu, d, s, scheme) for s in seeds] for d in days_grid}


def cascade_validation(n: int, mean_degree: float, gamma_over_mu: float, days: float, seed: int,
                       n_shuffles: int = 100, origin: str = "global", true_edges_only: bool = False):
    """Correlation between cascade counts and TE over the scored pairs, with shuffled controls.

    All ordered pairs are candidates, as a follower graph would be on real
    data; ``true_edges_only`` restricts the comparison to the generating
    links. Returns ``(r, shuffled_rs, rows)``.
    """
    net, streams, scores = network_trial(n, mean_degree, gamma_over_mu, days, seed, cascade_labels=True)
    pairs = scores.scores
    if true_edges_only:
        edges = set(net.edges)
        pairs = [r for r in pairs if (r.source, r.target) in edges]
    counts = count_cascades(streams, [(r.source, r.target) for r in pairs], origin)
    r, rows = validate(pairs, counts)
    controls = shuffled_correlations([row[2] for row in rows], [row[3] for row in rows], n_shuffles, seed)
    return r, controls, rows


def mean_std(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=np.float64)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0
