"""Backward matching of asynchronous event series and lag scans.

Each target event at time t is paired with the last source event whose time
is strictly earlier than ``t - delta_t``. Target events with no such source
event are dropped; since target times are sorted, the dropped events are
always a prefix. The target's own past is always taken from the unshifted
target series.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core import NS_PER_S, EventMatrix, SymbolSeries, event_rows
from .errors import DataError
from .inference import TeTestResult, VuongTestResult, te_significance_test, vuong_compare


def shift_to_ns(delta_t: float) -> int:
    if delta_t < 0 or not math.isfinite(delta_t):
        raise DataError(f"shift must be a non-negative number, got {delta_t!r}")
    return int(round(delta_t * NS_PER_S))


def match_indices(target_ns, source_ns, shift_ns: int) -> np.ndarray:
    """Index of the matched source event for each target event, -1 if none."""
    cut = np.asarray(target_ns, dtype=np.int64) - shift_ns
    return np.searchsorted(np.asarray(source_ns, dtype=np.int64), cut, side="left") - 1


@dataclass(frozen=True, eq=False)
class AlignedPair:
    target: SymbolSeries
    matched_source_states: np.ndarray
    retained_indices: np.ndarray
    delta_t: float
    matched_source_times_ns: np.ndarray
    source_alphabet: int

    @property
    def n_retained(self) -> int:
        return int(self.retained_indices.size)

    def full_states(self) -> np.ndarray:
        """Matched state per target event, -1 for dropped events."""
        out = np.full(len(self.target), -1, dtype=np.int64)
        out[self.retained_indices] = self.matched_source_states
        return out


def backward_match(target: SymbolSeries, source: SymbolSeries, delta_t: float = 0.0) -> AlignedPair:
    """Pair each target event with the last source event before ``t - delta_t``.

    A source event may be matched to several target events and some source
    events may never be matched.
    """
    if len(target) == 0 or len(source) == 0:
        raise DataError("no overlap")
    idx = match_indices(target.times_ns, source.times_ns, shift_to_ns(delta_t))
    retained = np.flatnonzero(idx >= 0)
    if retained.size == 0:
        raise DataError("no overlap")
    src = idx[retained]
    return AlignedPair(
        target=target,
        matched_source_states=source.symbols[src],
        retained_indices=retained,
        delta_t=float(delta_t),
        matched_source_times_ns=source.times_ns[src],
        source_alphabet=source.alphabet_size,
    )


def aligned_event_matrix(
    target: SymbolSeries,
    sources: Sequence[SymbolSeries],
    delta_t: float = 0.0,
    past_window: int = 1,
) -> EventMatrix:
    """Event matrix of the target against one or two backward-matched sources.

    With two sources only target events matched by both are used.
    """
    pairs = [backward_match(target, s, delta_t) for s in sources]
    first = max(int(p.retained_indices[0]) for p in pairs)
    if first >= len(target) - 1:
        raise DataError("no overlap")
    return event_rows(
        target.symbols,
        target.alphabet_size,
        [p.full_states() for p in pairs],
        [p.source_alphabet for p in pairs],
        past_window,
        first_row=first,
    )


def _cutoff(shifts, significant) -> Optional[float]:
    if significant[-1]:
        return None
    i = len(shifts) - 1
    while i > 0 and not significant[i - 1]:
        i -= 1
    return float(shifts[i])


def _check_shifts(shifts):
    shifts = np.asarray(shifts, dtype=float)
    if shifts.ndim != 1 or shifts.size == 0:
        raise DataError("shift grid is empty")
    if np.any(np.diff(shifts) <= 0):
        raise DataError("shifts must be strictly ascending")
    if shifts[0] < 0:
        raise DataError("shifts must be non-negative")
    return shifts


@dataclass(frozen=True, eq=False)
class LagProfile:
    """TE and its chi-square test per tested shift.

    ``cutoff_shift`` is the smallest tested shift from which every larger
    shift is insignificant at ``threshold``; ``None`` when the last shift is
    still significant. Invalid shifts (too few matched events) hold NaN and
    count as insignificant.
    """

    shifts: np.ndarray
    te_values: np.ndarray
    p_values: np.ndarray
    statistics: np.ndarray
    dfs: np.ndarray
    sizes: np.ndarray
    valid: np.ndarray
    threshold: float
    cutoff_shift: Optional[float]

    @property
    def significant(self) -> np.ndarray:
        return self.valid & (self.p_values < self.threshold)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shift", "T", "te_nats", "statistic", "df", "p_value", "valid"])
        for i in range(self.shifts.size):
            w.writerow([
                repr(float(self.shifts[i])),
                int(self.sizes[i]),
                repr(float(self.te_values[i])),
                repr(float(self.statistics[i])),
                int(self.dfs[i]),
                repr(float(self.p_values[i])),
                int(self.valid[i]),
            ])
        return buf.getvalue()


def lag_scan(
    target: SymbolSeries,
    source: SymbolSeries,
    shifts,
    past_window: int = 1,
    threshold: float = 0.01,
) -> LagProfile:
    """TE from source to target as a function of the forward shift."""
    shifts = _check_shifts(shifts)
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    n = shifts.size
    te = np.full(n, np.nan)
    p = np.full(n, np.nan)
    stat = np.full(n, np.nan)
    dfs = np.zeros(n, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    valid = np.zeros(n, dtype=bool)
    for i, dt in enumerate(shifts):
        pair = backward_match(target, source, dt)
        sizes[i] = pair.n_retained
        if pair.n_retained < past_window + 2:
            continue
        try:
            em = aligned_event_matrix(target, [source], dt, past_window)
        except DataError:
            continue
        res: TeTestResult = te_significance_test(em)
        te[i], p[i], stat[i], dfs[i], sizes[i] = res.te, res.p_value, res.statistic, res.df, res.T
        valid[i] = True
    significant = valid & (p < threshold)
    return LagProfile(shifts, te, p, stat, dfs, sizes, valid, threshold, _cutoff(shifts, significant))


@dataclass(frozen=True, eq=False)
class CompareProfile:
    """Per-shift Vuong comparisons of two sources on one target.

    ``bands`` lists maximal runs of consecutive shifts where the two-sided
    p-value is below ``threshold`` and the sign of v is constant, as
    ``(first_shift, last_shift, sign)``; sign +1 means b is more informative.
    """

    shifts: np.ndarray
    results: List[Optional[VuongTestResult]]
    threshold: float
    bands: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shift", "T", "q_stat", "delta_l", "omega", "nu", "v",
                    "p_one_sided", "p_two_sided", "significant"])
        for s, r in zip(self.shifts, self.results):
            if r is None:
                w.writerow([repr(float(s)), 0] + ["nan"] * 7 + [0])
                continue
            w.writerow([
                repr(float(s)), r.T, repr(r.q_stat), repr(r.delta_l), repr(r.omega),
                repr(r.nu), repr(r.v), repr(r.p_one_sided), repr(r.p_two_sided),
                int(r.p_two_sided < self.threshold),
            ])
        return buf.getvalue()


def _bands(shifts, results, threshold):
    bands = []
    current = None
    for s, r in zip(shifts, results):
        sign = 0
        if r is not None and r.p_two_sided < threshold:
            sign = 1 if r.v > 0 else -1
        if sign and current and current[2] == sign:
            current[1] = float(s)
        else:
            if current:
                bands.append(tuple(current))
            current = [float(s), float(s), sign] if sign else None
    if current:
        bands.append(tuple(current))
    return bands


def lag_compare_scan(
    target: SymbolSeries,
    source_b: SymbolSeries,
    source_c: SymbolSeries,
    shifts,
    past_window: int = 1,
    threshold: float = 0.01,
) -> CompareProfile:
    """Vuong comparison of TE(b->a) and TE(c->a) across forward shifts."""
    shifts = _check_shifts(shifts)
    results: List[Optional[VuongTestResult]] = []
    for dt in shifts:
        em = aligned_event_matrix(target, [source_b, source_c], dt, past_window)
        if em.T < 2:
            results.append(None)
            continue
        results.append(vuong_compare(em))
    return CompareProfile(shifts, results, threshold, _bands(shifts, results, threshold))
