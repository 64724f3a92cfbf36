"""Symbolic series, event matrices, empirical distributions and plug-in TE.

All entropies are in nats. Tables are dense numpy arrays laid out as
``(a_plus, a, b)`` or ``(a_plus, a, b, c)``; a leading batch dimension is
accepted by the ``*_from_counts`` helpers so that bootstrap and benchmark
code can evaluate thousands of tables in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

AXES = ("a_plus", "a", "b", "c")
MAX_CELLS = 2 ** 20
NS_PER_S = 1_000_000_000


def _frozen(arr, dtype=np.int64):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SymbolSeries:
    """Timestamped sequence of symbols from ``range(alphabet_size)``.

    Timestamps are held as integer nanoseconds; ``timestamps`` gives seconds.
    """

    times_ns: np.ndarray
    symbols: np.ndarray
    alphabet_size: int
    label: str = ""

    def __post_init__(self):
        times = _frozen(self.times_ns)
        symbols = _frozen(self.symbols)
        if times.ndim != 1 or symbols.ndim != 1:
            raise DataError("timestamps and symbols must be one-dimensional")
        if times.shape != symbols.shape:
            raise DataError("timestamps and symbols differ in length")
        if int(self.alphabet_size) < 1:
            raise DataError("alphabet_size must be positive")
        if symbols.size and (symbols.min() < 0 or symbols.max() >= self.alphabet_size):
            raise DataError(f"symbols outside [0, {self.alphabet_size})")
        if times.size > 1 and np.any(np.diff(times) < 0):
            raise DataError("timestamps must be non-decreasing")
        object.__setattr__(self, "times_ns", times)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "alphabet_size", int(self.alphabet_size))

    @classmethod
    def from_seconds(cls, timestamps, symbols, alphabet_size, label=""):
        ns = np.round(np.asarray(timestamps, dtype=float) * NS_PER_S).astype(np.int64)
        return cls(ns, symbols, alphabet_size, label)

    @property
    def timestamps(self) -> np.ndarray:
        return self.times_ns / NS_PER_S

    def __len__(self):
        return int(self.symbols.size)

    def __eq__(self, other):
        if not isinstance(other, SymbolSeries):
            return NotImplemented
        return (
            self.alphabet_size == other.alphabet_size
            and self.label == other.label
            and np.array_equal(self.times_ns, other.times_ns)
            and np.array_equal(self.symbols, other.symbols)
        )

    __hash__ = None


@dataclass(frozen=True)
class StateSpec:
    """Alphabet sizes of the target future, target past and the sources.

    Sizes of one are accepted so that degenerate inputs reach the tests,
    which reject them with a specific message.
    """

    n_a_plus: int
    n_a: int
    n_b: int
    n_c: Optional[int] = None
    past_window: int = 1

    def __post_init__(self):
        for name in ("n_a_plus", "n_a", "n_b", "n_c"):
            value = getattr(self, name)
            if value is not None and int(value) < 1:
                raise DataError(f"{name} must be a positive integer")
        if self.past_window < 1:
            raise DataError("past_window must be >= 1")
        if self.n_cells > MAX_CELLS:
            raise DataError(
                f"state table has {self.n_cells} cells, above the limit of {MAX_CELLS}"
            )

    @classmethod
    def for_alphabets(cls, target, sources, past_window=1):
        """Spec for a target alphabet and one or two source alphabets."""
        sources = list(sources)
        if not 1 <= len(sources) <= 2:
            raise DataError("one or two sources are supported")
        return cls(
            n_a_plus=target,
            n_a=target ** past_window,
            n_b=sources[0],
            n_c=sources[1] if len(sources) == 2 else None,
            past_window=past_window,
        )

    @property
    def has_c(self) -> bool:
        return self.n_c is not None

    @property
    def shape(self) -> tuple:
        dims = (self.n_a_plus, self.n_a, self.n_b)
        return dims + (self.n_c,) if self.has_c else dims

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    def swapped(self) -> "StateSpec":
        if not self.has_c:
            raise DataError("spec has no second source")
        return StateSpec(self.n_a_plus, self.n_a, self.n_c, self.n_b, self.past_window)


@dataclass(frozen=True, eq=False)
class EventMatrix:
    """T rows of aligned states ``(a_plus, a, b[, c])``."""

    rows: np.ndarray
    spec: StateSpec

    def __post_init__(self):
        rows = _frozen(self.rows)
        width = len(self.spec.shape)
        if rows.ndim != 2 or rows.shape[1] != width:
            raise DataError(f"event rows must have shape (T, {width})")
        if rows.shape[0] < 1:
            raise DataError("event matrix is empty")
        if rows.min() < 0 or np.any(rows.max(axis=0) >= np.array(self.spec.shape)):
            raise DataError("event state outside its alphabet")
        object.__setattr__(self, "rows", rows)

    @property
    def T(self) -> int:
        return int(self.rows.shape[0])

    def column(self, axis: str) -> np.ndarray:
        return self.rows[:, _axis_index(axis, self.spec)]

    def swapped(self) -> "EventMatrix":
        """Same events with the two sources exchanged."""
        return EventMatrix(self.rows[:, [0, 1, 3, 2]], self.spec.swapped())


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Dense probability table over the state tuple space.

    ``counts`` and ``T`` are set for empirical tables and ``None`` for
    population tables built directly from probabilities.
    """

    probabilities: np.ndarray
    spec: StateSpec
    counts: Optional[np.ndarray] = None
    T: Optional[int] = None

    @classmethod
    def from_counts(cls, counts, spec: StateSpec) -> "JointDistribution":
        counts = _frozen(counts)
        if counts.shape != spec.shape:
            raise DataError(f"count table shape {counts.shape} != {spec.shape}")
        total = int(counts.sum())
        if total < 1 or counts.min() < 0:
            raise DataError("count table must be non-negative with positive total")
        return cls(_frozen(counts / total, float), spec, counts, total)

    @classmethod
    def from_probabilities(cls, probabilities, spec: StateSpec) -> "JointDistribution":
        p = np.asarray(probabilities, dtype=float)
        if p.shape != spec.shape:
            raise DataError(f"probability table shape {p.shape} != {spec.shape}")
        if p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
            raise DataError("probabilities must be non-negative and sum to 1")
        return cls(_frozen(p, float), spec)

    @property
    def table(self) -> np.ndarray:
        """Counts when available (exact arithmetic), else probabilities."""
        return self.counts if self.counts is not None else self.probabilities


def _axis_index(axis, spec: StateSpec) -> int:
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")
    idx = AXES.index(axis)
    if idx == 3 and not spec.has_c:
        raise DataError("distribution has no 'c' axis")
    return idx


# --------------------------------------------------------------------------
# Encoding and event matrices
# --------------------------------------------------------------------------

def encode_sign_changes(timestamps, prices, *, label="", unit="s") -> SymbolSeries:
    """Binary symbols for strict price moves: 1 for up, 0 for down.

    Zero-change ticks are dropped and each symbol carries the timestamp of
    the later tick of its change. ``unit`` is ``"s"`` or ``"ns"``.
    """
    prices = np.asarray(prices, dtype=float)
    if unit == "s":
        times = np.round(np.asarray(timestamps, dtype=float) * NS_PER_S).astype(np.int64)
    elif unit == "ns":
        times = np.asarray(timestamps, dtype=np.int64)
    else:
        raise ValueError(f"unit must be 's' or 'ns', got {unit!r}")
    if prices.size < 2 or times.shape != prices.shape:
        raise DataError("series too short")
    step = np.diff(prices)
    moved = step != 0
    if not moved.any():
        raise DataError("series too short")
    symbols = (step[moved] > 0).astype(np.int64)
    return SymbolSeries(times[1:][moved], symbols, 2, label)


def encode_window(symbols: np.ndarray, alphabet: int, past_window: int) -> np.ndarray:
    """Radix code of each length-``past_window`` window ending at index t.

    Entry t (for t >= past_window - 1) encodes symbols t-w+1..t with the
    most recent symbol as the least significant digit. Earlier entries are -1.
    """
    symbols = np.asarray(symbols, dtype=np.int64)
    out = np.full(symbols.shape, -1, dtype=np.int64)
    n = symbols.size
    if n < past_window:
        return out
    code = np.zeros(n - past_window + 1, dtype=np.int64)
    for lag in range(past_window):
        # lag 0 is the newest symbol of each window
        code += symbols[past_window - 1 - lag : n - lag] * alphabet ** lag
    out[past_window - 1 :] = code
    return out


def event_rows(
    target_symbols,
    target_alphabet: int,
    source_states: Sequence[np.ndarray],
    source_alphabets: Sequence[int],
    past_window: int,
    first_row: int = 0,
) -> EventMatrix:
    """Event matrix from arrays already matched to the target's events.

    ``source_states[k][t]`` is the state of source k at target event t, or a
    negative value when no source event was matched. Rows start at the
    later of ``first_row`` and ``past_window - 1`` and stop one short of the
    end, since each row needs the next target symbol.
    """
    target_symbols = np.asarray(target_symbols, dtype=np.int64)
    n = target_symbols.size
    if n <= past_window:
        raise DataError("insufficient history")
    spec = StateSpec.for_alphabets(target_alphabet, source_alphabets, past_window)
    start = max(first_row, past_window - 1)
    if start > n - 2:
        raise DataError("insufficient history")
    idx = np.arange(start, n - 1)
    window = encode_window(target_symbols, target_alphabet, past_window)
    cols = [target_symbols[idx + 1], window[idx]]
    for states in source_states:
        states = np.asarray(states, dtype=np.int64)
        if states.size != n:
            raise DataError("sources must be matched row-wise to the target")
        cols.append(states[idx])
    rows = np.column_stack(cols)
    keep = np.all(rows >= 0, axis=1)
    if not keep.any():
        raise DataError("insufficient history")
    return EventMatrix(rows[keep], spec)


def build_event_matrix(
    target: SymbolSeries, sources: Sequence[SymbolSeries], past_window: int = 1
) -> EventMatrix:
    """Rows ``(a_plus, a, b[, c])`` from row-wise matched series.

    Row t holds the target symbol at t+1, the encoded target window ending
    at t, and the source symbols at t; T = len(target) - past_window.
    """
    if isinstance(sources, SymbolSeries):
        sources = [sources]
    for s in sources:
        if len(s) != len(target):
            raise DataError("sources must have the same length as the target")
    return event_rows(
        target.symbols,
        target.alphabet_size,
        [s.symbols for s in sources],
        [s.alphabet_size for s in sources],
        past_window,
    )


def estimate_joint(em: EventMatrix) -> JointDistribution:
    flat = np.ravel_multi_index(tuple(em.rows.T), em.spec.shape)
    counts = np.bincount(flat, minlength=em.spec.n_cells).reshape(em.spec.shape)
    return JointDistribution.from_counts(counts, em.spec)


# --------------------------------------------------------------------------
# Entropies
# --------------------------------------------------------------------------

def _marginal(table: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    drop = tuple(i for i in range(table.ndim) if i not in keep)
    return table.sum(axis=drop) if drop else table


def conditional_entropy(jd: JointDistribution, condition_on=("a",)) -> float:
    """H(A+ | condition_on) in nats; zero cells contribute nothing."""
    if isinstance(condition_on, str):
        condition_on = (condition_on,)
    if "a_plus" in condition_on:
        raise ValueError("cannot condition the future on itself")
    keep = sorted({0} | {_axis_index(ax, jd.spec) for ax in condition_on})
    joint = np.asarray(_marginal(jd.table, keep), dtype=float)
    total = joint.sum()
    cond = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    ratio = np.divide(joint, cond, out=np.ones_like(joint), where=mask)
    return float(-(joint[mask] * np.log(ratio[mask])).sum() / total)


def te_from_counts(table) -> np.ndarray:
    """TE of the last axis onto the first, for tables shaped ``(..., n_a+, n_a, n_s)``.

    Works for counts or probabilities; leading axes are treated as a batch.
    Evaluated as sum n * log(n * n_a / (n_as * n_a+a)) / N, which is exactly
    zero when the source is constant.
    """
    t = np.asarray(table, dtype=float)
    total = t.sum(axis=(-3, -2, -1))
    n_as = t.sum(axis=-3, keepdims=True)
    n_apa = t.sum(axis=-1, keepdims=True)
    n_a = n_as.sum(axis=-1, keepdims=True)
    mask = t > 0
    num = t * n_a
    den = n_as * n_apa
    ratio = np.divide(num, den, out=np.ones_like(t), where=mask)
    te = (t * np.log(ratio)).sum(axis=(-3, -2, -1)) / total
    return np.where(te > 0, te, 0.0)


def transfer_entropy(jd: JointDistribution, source_axis="b") -> float:
    """Plug-in TE from the named source onto the target, in nats."""
    idx = _axis_index(source_axis, jd.spec)
    if idx < 2:
        raise ValueError("source_axis must be 'b' or 'c'")
    table = jd.table
    if jd.spec.has_c:
        table = table.sum(axis=3 if idx == 2 else 2)
    return float(te_from_counts(table))


def pointwise_table(table) -> np.ndarray:
    """log P(a+|a,b) - log P(a+|a,c) for each cell of a 4-axis table.

    A leading batch axis is allowed. Unobserved cells are set to 0.
    """
    t = np.asarray(table, dtype=float)
    n_apab = t.sum(axis=-1, keepdims=True)
    n_apac = t.sum(axis=-2, keepdims=True)
    n_ab = t.sum(axis=(-4, -1), keepdims=True)
    n_ac = t.sum(axis=(-4, -2), keepdims=True)
    mask = t > 0
    num = n_apab * n_ac
    den = n_ab * n_apac
    num, den = np.broadcast_arrays(num, den)
    ratio = np.divide(num, den, out=np.ones(t.shape), where=mask)
    return np.log(ratio)


def pointwise_loglik_diff(em: EventMatrix, jd: Optional[JointDistribution] = None) -> np.ndarray:
    """Per-row log-likelihood difference between the b- and c-conditioned models."""
    if not em.spec.has_c:
        raise DataError("pointwise difference needs both sources")
    if jd is None:
        jd = estimate_joint(em)
    d = pointwise_table(jd.table)
    return d[tuple(em.rows.T)]
