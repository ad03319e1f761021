"""Transfer-entropy inference of directed influence networks from event timestamps."""

__version__ = "0.1.0"

from .entropy import (EntropyEstimate, JointHistogram, TEResult, bias, conditional_entropy, histogram,
                      pair_histogram, transfer_entropy)
from .events import (BinningScheme, EventStream, SampleSet, bin_uniform, history_counts, history_samples,
                     load_events, preset, subsample, write_events)
from .evaluate import auc, count_cascades, pearson, roc, validate
from .infer import ThresholdPolicy, apply_threshold, outgoing_influence, score_edges
from .simulate import HazardModel, NetworkSpec, SimulationConfig, hazard, kernel_eval, random_network, simulate
