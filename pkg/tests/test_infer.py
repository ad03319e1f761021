import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infotransfer.events import DAY, EventStream, preset
from infotransfer.evaluate import precision_recall_f1
from infotransfer.experiments import pair_trial
from infotransfer.infer import (EdgeScoreSet, ThresholdPolicy, apply_threshold, f_measure_threshold,
                                outgoing_influence, score_edges, write_edge_list)
from infotransfer.simulate import HazardModel, SimulationConfig, random_network, simulate
from oracles import best_f1

FOUR = {("a", "b"): 0.9, ("c", "d"): 0.7, ("a", "c"): 0.8, ("b", "d"): 0.1}
FOUR_TRUTH = [("a", "b"), ("c", "d")]


def poisson_streams(names, rate_per_day, days, seed):
    rng = np.random.default_rng(seed)
    T = days * DAY
    return {v: EventStream(v, np.sort(rng.uniform(0, T, rng.poisson(rate_per_day * days))), horizon=T)
            for v in names}


def small_network_scores(seed=3, jobs=1):
    net = random_network(5, 2, seed)
    streams = simulate(net, HazardModel.relative(net, 2.0), SimulationConfig(60, seed))
    return net, streams, score_edges(streams, None, preset("synthetic", stride=60), jobs=jobs)


def test_two_nodes_two_scores():
    streams = poisson_streams("XY", 1.0, 30, 0)
    s = score_edges(streams, None, preset("synthetic", stride=60))
    assert s.pairs() == [("X", "Y"), ("Y", "X")]
    assert s.candidates == "all_pairs"


def test_direction_of_influence_is_recovered():
    trial = pair_trial(2.0, 500, seed=17)
    assert trial.forward.te_corrected > trial.backward.te_corrected
    assert trial.forward.te_raw > trial.backward.te_raw


def test_candidate_list_restricts_scoring_and_order_is_irrelevant():
    streams = poisson_streams("abc", 1.0, 30, 1)
    scheme = preset("synthetic", stride=60)
    one = score_edges(streams, [("b", "c"), ("a", "b")], scheme)
    two = score_edges(streams, [("a", "b"), ("b", "c")], scheme)
    assert one.pairs() == [("a", "b"), ("b", "c")]
    assert one.candidates == "edge_list"
    assert one.scores == two.scores


def test_unknown_candidate_node():
    with pytest.raises(KeyError, match="unknown nodes"):
        score_edges(poisson_streams("ab", 1.0, 10, 0), [("a", "z")], preset("synthetic"))


def test_activity_filter():
    streams = poisson_streams("ab", 1.0, 30, 2)
    streams["quiet"] = EventStream("quiet", [5.0, 9.0], horizon=30 * DAY)
    s = score_edges(streams, None, preset("synthetic", stride=60), min_events=10)
    assert all("quiet" not in p for p in s.pairs())


def test_failed_pairs_are_skipped_not_fatal():
    streams = poisson_streams("ab", 1.0, 30, 3)
    short = {"a": streams["a"], "b": EventStream("b", [1.0], horizon=60.0)}
    s = score_edges(short, [("a", "b"), ("b", "a")], preset("synthetic"), horizon=60.0)
    assert len(s) == 0 and len(s.skipped) == 2
    assert "insufficient window" in s.skipped[0][2]


def test_parallel_scoring_is_bit_identical(tmp_path):
    _, _, serial = small_network_scores(jobs=1)
    _, _, parallel = small_network_scores(jobs=2)
    serial.to_csv(tmp_path / "a.csv")
    parallel.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_score_set_invariants():
    _, _, s = small_network_scores()
    with pytest.raises(ValueError, match="duplicate"):
        EdgeScoreSet(s.scores + s.scores[:1], s.scheme, s.method)


# ---------------------------------------------------------------- thresholds

def test_threshold_extremes():
    _, _, s = small_network_scores()
    top = max(r.te_corrected for r in s.scores)
    assert apply_threshold(s, ThresholdPolicy("fixed", top)).edges == {}
    assert len(apply_threshold(s, ThresholdPolicy("fixed", -math.inf)).edges) == len(s)


def test_f_measure_four_score_example():
    t0, f1 = f_measure_threshold(FOUR, FOUR_TRUTH)
    assert f1 == pytest.approx(0.8)
    assert t0 < 0.7 and t0 == np.nextafter(0.7, -np.inf)


def test_f_measure_requires_truth():
    _, _, s = small_network_scores()
    with pytest.raises(ValueError, match="ground truth"):
        apply_threshold(s, ThresholdPolicy("f_measure"))


def test_f_measure_prefers_sparser_graph_on_ties():
    # keeping {p} or {p, q, u, r} both give F1 = 2/3 for a two-edge truth
    scores = {("p", "x"): 0.9, ("q", "x"): 0.5, ("u", "x"): 0.45, ("r", "x"): 0.4, ("s", "x"): 0.1}
    truth = [("p", "x"), ("r", "x")]
    t0, f1 = f_measure_threshold(scores, truth)
    assert f1 == pytest.approx(2 / 3)
    assert t0 > 0.5


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=2, max_size=12), st.data())
def test_f_measure_threshold_is_optimal(values, data):
    pairs = [(f"s{i}", "t") for i in range(len(values))]
    scores = {p: v / 10 for p, v in zip(pairs, values)}
    truth = set(data.draw(st.lists(st.sampled_from(pairs), min_size=1, unique=True)))
    t0, f1 = f_measure_threshold(scores, truth)
    assert f1 == pytest.approx(best_f1(scores, truth)[0], abs=1e-12)
    assert precision_recall_f1([p for p, s in scores.items() if s > t0], truth)[2] == f1
    # no cut point does better
    for c in set(scores.values()):
        kept = [p for p, s in scores.items() if s >= c]
        assert precision_recall_f1(kept, truth)[2] <= f1 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=15), st.floats(-1, 1), st.floats(-1, 1))
def test_edge_sets_nest_as_threshold_rises(values, a, b):
    scores = {(f"s{i}", "t"): v for i, v in enumerate(values)}
    lo, hi = sorted((a, b))
    keep_lo = apply_threshold(scores, ThresholdPolicy("fixed", lo)).edge_set()
    keep_hi = apply_threshold(scores, ThresholdPolicy("fixed", hi)).edge_set()
    assert keep_hi <= keep_lo


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=15, unique=True), st.data())
def test_threshold_recovers_separable_truth(values, data):
    scores = {(f"s{i}", "t"): v for i, v in enumerate(values)}
    cut = data.draw(st.integers(1, len(values) - 1))
    ranked = sorted(scores, key=scores.get, reverse=True)
    truth = ranked[:cut]
    g = apply_threshold(scores, ThresholdPolicy("f_measure"), truth)
    assert g.edge_set() == set(truth)


def test_graph_edges_subset_of_candidates_and_above_threshold():
    _, _, s = small_network_scores()
    g = apply_threshold(s, ThresholdPolicy("fixed", 0.0))
    assert g.edge_set() <= set(s.pairs())
    assert all(w > g.threshold for w in g.edges.values())


def test_edge_list_csv(tmp_path):
    _, _, s = small_network_scores()
    g = apply_threshold(s, ThresholdPolicy("fixed", -math.inf))
    write_edge_list(tmp_path / "edges.csv", g, s)
    lines = (tmp_path / "edges.csv").read_text().splitlines()
    assert lines[0] == "source,target,te_corrected,te_raw,n"
    assert len(lines) == len(s) + 1


# ---------------------------------------------------------------- influence ranking

def test_outgoing_influence_examples():
    assert outgoing_influence({("X", "Y"): 0.3}) == [("X", 0.3), ("Y", 0.0)]
    assert outgoing_influence({("b", "c"): 0.1, ("a", "c"): 0.1})[:2] == [("a", 0.1), ("b", 0.1)]


def test_one_strong_edge_beats_many_weak_ones():
    scores = {("hub", f"f{i}"): 0.01 for i in range(5)}
    scores[("solo", "g")] = 0.2
    ranking = outgoing_influence(scores)
    assert ranking[0] == ("solo", 0.2)
    assert ranking[1][0] == "hub" and ranking[1][1] == pytest.approx(0.05)
