"""Plug-in (conditional) entropies, sampling-bias corrections and transfer entropy.

All values are in bits. Histograms store only the observed outcomes, so the
outcome space ``2**(1 + k + l)`` is never allocated.

Outcome codes pack the sample variables into one integer: bit 0 is the
target's now-bit, bits ``1..k`` its history (most recent first) and bits
``k+1..k+l`` the source history.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .events import BinningScheme, EventStream, SampleSet, history_counts

LN2 = math.log(2.0)
VARIABLES = ("y_now", "y_hist", "x_hist")
METHODS = ("none", "miller_madow", "panzeri_treves")


@dataclass(frozen=True, eq=False)
class JointHistogram:
    """Counts of observed ``(y_now, y_hist, x_hist)`` outcomes."""

    codes: np.ndarray
    counts: np.ndarray
    k: int
    l: int

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if codes.shape != counts.shape:
            raise ValueError("codes and counts must align")
        if np.any(counts < 0):
            raise ValueError("negative count")
        order = np.argsort(codes, kind="stable")
        codes, counts = codes[order], counts[order]
        if codes.size > 1 and np.any(np.diff(codes) == 0):
            raise ValueError("duplicate outcome codes")
        keep = counts > 0
        object.__setattr__(self, "codes", codes[keep])
        object.__setattr__(self, "counts", counts[keep])

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def mask(self, variables: Iterable[str] | str) -> int:
        if isinstance(variables, str):
            variables = (variables,)
        m = 0
        for v in variables:
            if v == "y_now":
                m |= 1
            elif v == "y_hist":
                m |= ((1 << self.k) - 1) << 1
            elif v == "x_hist":
                m |= ((1 << self.l) - 1) << (1 + self.k)
            else:
                raise ValueError(f"unknown variable {v!r}; expected one of {VARIABLES}")
        return m

    def _bits(self, code: int) -> str:
        y_now = str(code & 1)
        y_hist = "".join(str((code >> (1 + i)) & 1) for i in range(self.k))
        x_hist = "".join(str((code >> (1 + self.k + j)) & 1) for j in range(self.l))
        return y_now + y_hist + x_hist

    def as_dict(self) -> dict[str, int]:
        """Counts keyed by bit strings ``y_now + y_hist + x_hist``, e.g. ``"011"``."""
        return {self._bits(int(c)): int(n) for c, n in zip(self.codes, self.counts)}


def histogram(samples: SampleSet) -> JointHistogram:
    """Tally a :class:`SampleSet`."""
    if samples.n == 0:
        raise ValueError("no samples")
    codes, counts = np.unique(samples.codes(), return_counts=True)
    return JointHistogram(codes, counts, samples.k, samples.l)


def pair_histogram(target: EventStream, source: EventStream, scheme: BinningScheme,
                   horizon: float | None = None) -> JointHistogram:
    """Histogram of the history samples of a pair, computed from occupancy intervals."""
    codes, counts, n = history_counts(target, source, scheme, horizon)
    if n == 0:
        raise ValueError("no samples")
    return JointHistogram(codes, counts, scheme.k, scheme.l)


@dataclass(frozen=True)
class EntropyEstimate:
    """Plug-in entropy with its estimated sampling bias.

    Plug-in entropies underestimate, so ``bias_bits`` is the (nonnegative)
    size of that shortfall and the corrected value adds it back.
    """

    raw_bits: float
    bias_bits: float
    method: str
    n: int

    @property
    def corrected_bits(self) -> float:
        return self.raw_bits + self.bias_bits


@dataclass(frozen=True)
class _Strata:
    cell_counts: np.ndarray   # count per observed (stratum, target value) cell
    cell_stratum: np.ndarray  # stratum index of each cell
    cell_value: np.ndarray    # target value of each cell
    stratum_n: np.ndarray     # samples per stratum
    n: int


def _strata(hist: JointHistogram, tmask: int, gmask: int) -> _Strata:
    if tmask & gmask:
        raise ValueError("target and conditioning variables must be disjoint")
    if tmask == 0:
        raise ValueError("empty target")
    cells, inv = np.unique(hist.codes & (tmask | gmask), return_inverse=True)
    cell_counts = np.bincount(inv, weights=hist.counts).astype(np.int64)
    groups, cell_stratum = np.unique(cells & gmask, return_inverse=True)
    stratum_n = np.bincount(cell_stratum, weights=cell_counts).astype(np.int64)
    return _Strata(cell_counts, cell_stratum, cells & tmask, stratum_n, int(stratum_n.sum()))


def _plugin_bits(s: _Strata) -> float:
    # H(T|G) = -(1/n) sum_cells n_cell * log(n_cell / n_stratum)
    ratio = s.cell_counts / s.stratum_n[s.cell_stratum]
    return float(-(s.cell_counts * np.log(ratio)).sum() / (s.n * LN2))


def _occupancy(s: _Strata, method: str) -> np.ndarray:
    """Number of relevant target outcomes per stratum."""
    observed = np.bincount(s.cell_stratum, minlength=s.stratum_n.size).astype(np.float64)
    if method == "miller_madow":
        return observed

    # Outcomes seen somewhere but not in stratum h may still be possible
    # there. With even prior odds that such an outcome is relevant and the
    # pooled frequency q as its rate if so, the chance it went unseen in n_h
    # draws is a = (1 - q)**n_h, giving posterior relevance a / (1 + a).
    values, vinv = np.unique(s.cell_value, return_inverse=True)
    q = np.bincount(vinv, weights=s.cell_counts) / s.n
    with np.errstate(divide="ignore"):
        log_miss = np.log1p(-q)  # -inf when q == 1
    a = np.exp(np.multiply.outer(s.stratum_n, log_miss))
    relevance = a / (1.0 + a)
    unseen = relevance.sum(axis=1) - np.bincount(
        s.cell_stratum, weights=relevance[s.cell_stratum, vinv], minlength=s.stratum_n.size)
    return observed + np.clip(unseen, 0.0, None)


def _bias_bits(s: _Strata, method: str) -> float:
    if method == "none":
        return 0.0
    if method not in METHODS:
        raise ValueError(f"unknown bias method {method!r}; expected one of {METHODS}")
    r = _occupancy(s, method)
    return float((r - 1.0).sum() / (2.0 * s.n * LN2))


def conditional_entropy(hist: JointHistogram, target, given=(), method: str = "none") -> EntropyEstimate:
    """Plug-in ``H(target | given)`` in bits plus the bias of the chosen method.

    ``target`` and ``given`` are variable names (or tuples of them) from
    ``("y_now", "y_hist", "x_hist")``; an empty ``given`` gives the marginal
    entropy.
    """
    s = _strata(hist, hist.mask(target), hist.mask(given))
    return EntropyEstimate(max(_plugin_bits(s), 0.0), _bias_bits(s, method), method, s.n)


def bias(hist: JointHistogram, target, given=(), method: str = "miller_madow") -> float:
    """Stratum-wise first-order bias ``sum_h (R_h - 1) / (2 n ln 2)`` in bits.

    ``R_h`` is the number of observed target outcomes in conditioning stratum
    ``h`` for ``"miller_madow"``. For ``"panzeri_treves"`` it is raised by the
    posterior probability that each outcome missing from the stratum (but
    seen elsewhere) is nonetheless possible there, which matters for thinly
    sampled strata.
    """
    return _bias_bits(_strata(hist, hist.mask(target), hist.mask(given)), method)


@dataclass(frozen=True)
class TEResult:
    source: str
    target: str
    h_self: EntropyEstimate
    h_joint: EntropyEstimate
    te_raw: float
    te_corrected: float
    n: int
    method: str

    CSV_HEADER = ("source", "target", "n", "te_raw", "te_corrected", "h_self", "h_joint", "method")

    def csv_row(self) -> list[str]:
        return [self.source, self.target, str(self.n), repr(self.te_raw), repr(self.te_corrected),
                repr(self.h_self.raw_bits), repr(self.h_joint.raw_bits), self.method]


def te_from_histogram(hist: JointHistogram, method: str = "panzeri_treves", source: str = "",
                      target: str = "") -> TEResult:
    h_self = conditional_entropy(hist, "y_now", "y_hist", method)
    h_joint = conditional_entropy(hist, "y_now", ("y_hist", "x_hist"), method)
    # conditioning cannot raise a plug-in entropy; clip rounding noise only
    te_raw = max(h_self.raw_bits - h_joint.raw_bits, 0.0)
    te_corrected = te_raw - (h_joint.bias_bits - h_self.bias_bits)
    return TEResult(source, target, h_self, h_joint, te_raw, te_corrected, hist.n, method)


def transfer_entropy(target: EventStream, source: EventStream, scheme: BinningScheme,
                     method: str = "panzeri_treves", horizon: float | None = None) -> TEResult:
    """Transfer entropy from ``source`` to ``target`` in bits.

    ``H(Y_t | Y_hist) - H(Y_t | Y_hist, X_hist)`` on the history samples of the
    scheme. ``te_corrected`` subtracts the extra bias of the joint
    conditioning and may come out negative.
    """
    if method not in METHODS:
        raise ValueError(f"unknown bias method {method!r}; expected one of {METHODS}")
    hist = pair_histogram(target, source, scheme, horizon)
    return te_from_histogram(hist, method, source.node_id, target.node_id)
