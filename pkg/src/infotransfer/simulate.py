"""Coupled non-homogeneous Poisson activity on a directed influence network.

Node ``Y`` fires at rate ``mu + sum_X gamma_XY * sum_i g(t - t_i)`` where the
inner sum runs over earlier events of each in-neighbour ``X`` and ``g`` is a
power-law kernel capped at one for delays under an hour. Events are drawn by
thinning over all nodes jointly: because ``g`` never increases, the summed
rate just after the latest event bounds the rate until the next one.

Rates are quoted per day and kernel delays in hours at the public surface;
internally everything runs in seconds.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .events import DAY, HOUR, EventCollection, EventStream


def kernel(dt_hours):
    """Influence kernel ``min(1, (1 h / dt)**3)`` for ``dt > 0`` and 0 otherwise."""
    dt = np.asarray(dt_hours, dtype=np.float64)
    with np.errstate(divide="ignore"):
        g = np.minimum(1.0, np.power(1.0 / dt, 3))
    return np.where(dt > 0, g, 0.0)


def kernel_eval(dt_hours: float) -> float:
    return float(kernel(dt_hours))


KERNEL_INTEGRAL_HOURS = 1.5  # int_0^inf g = 1 + int_1^inf x**-3 dx


def _kernel_seconds(dt, right_limit=False):
    # right_limit: value just after an event, i.e. g(0+) = 1
    with np.errstate(divide="ignore"):
        g = np.minimum(1.0, np.power(HOUR / dt, 3))
    if right_limit:
        return np.where(dt >= 0, g, 0.0)
    return np.where(dt > 0, g, 0.0)


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...] = ()
    mean_degree: float | None = None

    def __post_init__(self):
        nodes = tuple(str(v) for v in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node ids")
        edges = tuple((str(a), str(b)) for a, b in self.edges)
        known = set(nodes)
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in known or b not in known:
                raise ValueError(f"edge {a}->{b} references an unknown node")
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @classmethod
    def pair(cls) -> "NetworkSpec":
        """Two nodes with a single link ``X -> Y``."""
        return cls(("X", "Y"), (("X", "Y"),))

    @classmethod
    def isolated(cls, n: int) -> "NetworkSpec":
        return cls(tuple(str(i) for i in range(n)))


def random_network(n: int, mean_degree: float, seed: int) -> NetworkSpec:
    """Include each ordered pair ``i != j`` independently with probability ``mean_degree / (n - 1)``."""
    if n < 1:
        raise ValueError("need at least one node")
    if not 0 <= mean_degree <= max(n - 1, 0):
        raise ValueError("mean_degree must lie in [0, n - 1]")
    nodes = tuple(str(i) for i in range(n))
    if n == 1:
        return NetworkSpec(nodes, (), mean_degree)
    p = mean_degree / (n - 1)
    draw = np.random.default_rng(seed).random((n, n)) < p
    np.fill_diagonal(draw, False)
    edges = tuple((nodes[i], nodes[j]) for i, j in zip(*np.nonzero(draw)))
    return NetworkSpec(nodes, edges, mean_degree)


@dataclass(frozen=True)
class HazardModel:
    """Background rate and per-edge influence weights (both in events/day).

    Source events older than ``prune_days`` are dropped from the rate sum;
    at 7 days each contributes less than ``2e-7`` of its weight.
    """

    mu: float = 1.0
    gamma: Mapping[tuple[str, str], float] = field(default_factory=dict)
    prune_days: float = 7.0

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError("mu must be >= 0")
        if any(not g >= 0 for g in self.gamma.values()):
            raise ValueError("gamma must be >= 0")
        if not self.prune_days > 0:
            raise ValueError("prune_days must be positive")

    @classmethod
    def relative(cls, network: NetworkSpec, gamma_over_mu: float, mu: float = 1.0,
                 prune_days: float = 7.0) -> "HazardModel":
        """Same weight ``gamma_over_mu * mu`` on every edge of ``network``."""
        return cls(mu, {e: gamma_over_mu * mu for e in network.edges}, prune_days)

    def in_weights(self, node: str) -> dict[str, float]:
        return {a: g for (a, b), g in self.gamma.items() if b == node}


def hazard(node: str, t: float, streams: Mapping[str, EventStream], model: HazardModel) -> float:
    """Rate of ``node`` at time ``t`` (seconds) in events/day, from events strictly before ``t``."""
    rate = model.mu
    for src, g in model.in_weights(node).items():
        if src not in streams or g == 0:
            continue
        ev = streams[src].events
        past = ev[ev < t]
        rate += g * float(_kernel_seconds(t - past).sum())
    return rate


@dataclass(frozen=True)
class SimulationConfig:
    horizon_days: float
    seed: int = 0
    cascade_labels: bool = False

    def __post_init__(self):
        if not (self.horizon_days > 0 and math.isfinite(self.horizon_days)):
            raise ValueError("horizon must be positive")


class BoundViolation(AssertionError):
    pass


def simulate(network: NetworkSpec, model: HazardModel, cfg: SimulationConfig) -> EventCollection:
    """Draw one realization of the network activity on ``[0, horizon]``.

    Returns one :class:`EventStream` per node (times in seconds). With
    ``cascade_labels`` each event also carries an item id: it picks its cause
    in proportion to the rate terms, minting a fresh id for background events
    and copying the parent's id otherwise.
    """
    nodes = network.nodes
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    horizon = cfg.horizon_days * DAY
    mu = model.mu / DAY
    weights = np.zeros((n, n))
    for (a, b), g in model.gamma.items():
        if a not in index or b not in index:
            raise ValueError(f"gamma references unknown edge {a}->{b}")
        weights[index[a], index[b]] = g / DAY
    prune = model.prune_days * DAY
    rng = np.random.default_rng(cfg.seed)

    cap = 1024
    times = np.empty(cap)
    src = np.empty(cap, dtype=np.int64)
    items = np.empty(cap, dtype=np.int64)
    count = 0
    oldest = 0
    minted = itertools.count()
    total_mu = mu * n

    def rates(t, right_limit):
        live = slice(oldest, count)
        g = _kernel_seconds(t - times[live], right_limit)
        drive = np.bincount(src[live], weights=g, minlength=n)
        return mu + drive @ weights, g

    t = 0.0
    while True:
        while oldest < count and t - times[oldest] > prune:
            oldest += 1
        bound = rates(t, True)[0].sum() if count > oldest else total_mu
        if bound <= 0:
            break
        t = t + rng.exponential(1.0 / bound)
        if t > horizon:
            break
        lam, g = rates(t, False)
        total = lam.sum()
        if total > bound * (1 + 1e-9):
            raise BoundViolation(f"rate {total} exceeds thinning bound {bound} at t={t}")
        if rng.random() * bound >= total:
            continue
        cum = np.cumsum(lam)
        node = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), n - 1)
        item = -1
        if cfg.cascade_labels:
            parts = weights[src[oldest:count], node] * g
            u = rng.random() * (mu + parts.sum())
            if u < mu or parts.sum() == 0:
                item = next(minted)
            else:
                pick = min(int(np.searchsorted(np.cumsum(parts), u - mu, side="right")), parts.size - 1)
                item = int(items[oldest + pick])
        if count == cap:
            cap *= 2
            times, src, items = (np.resize(a, cap) for a in (times, src, items))
        times[count], src[count], items[count] = t, node, item
        count += 1

    out = EventCollection()
    for i, v in enumerate(nodes):
        sel = src[:count] == i
        ids = tuple(f"item{j}" for j in items[:count][sel]) if cfg.cascade_labels else None
        out[v] = EventStream(v, times[:count][sel], ids, horizon)
    return out


def trial_seeds(master: int, count: int) -> list[int]:
    """Independent per-trial seeds derived from one master seed."""
    return [int(s.generate_state(1, dtype=np.uint64)[0] >> 1)
            for s in np.random.SeedSequence(master).spawn(count)]


def long_run_rate(mu: float, in_gammas: Sequence[float], source_rates: Sequence[float]) -> float:
    """Stationary first moment of a node's rate (events/day) given its sources' rates.

    Each source event adds ``gamma * int g`` expected events on average.
    """
    per_day = KERNEL_INTEGRAL_HOURS / 24.0
    return mu + sum(g * r * per_day for g, r in zip(in_gammas, source_rates))
