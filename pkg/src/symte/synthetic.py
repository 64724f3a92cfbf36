"""Asynchronous binary event series with planted lead-lag structure."""

from __future__ import annotations

from typing import List

import numpy as np

from .core import NS_PER_S, SymbolSeries


def poisson_times(rate: float, n: int, rng, start: float = 0.0) -> np.ndarray:
    """``n`` event times (ns) of a Poisson process with ``rate`` events per second."""
    return renewal_times(rate, n, rng, start, regularity=1.0)


def renewal_times(rate, n, rng, start=0.0, regularity=1.0) -> np.ndarray:
    """Event times (ns) with Gamma(regularity) gaps of mean ``1 / rate``.

    ``regularity=1`` is a Poisson process; larger values give more evenly
    spaced events (coefficient of variation ``1 / sqrt(regularity)``).
    """
    gaps = rng.gamma(regularity, 1.0 / (rate * regularity), size=n)
    return np.round((start + np.cumsum(gaps)) * NS_PER_S).astype(np.int64)


def lagged_copy(target: SymbolSeries, lead: float, label: str = "") -> SymbolSeries:
    """Source that announces every target symbol ``lead`` seconds early."""
    shift = int(round(lead * NS_PER_S))
    return SymbolSeries(target.times_ns - shift, target.symbols, target.alphabet_size, label)


def lagged_copy_pair(n_events=5000, rate=4.0, lead=0.5, seed=0):
    """(target, source) with i.i.d. binary target and a source leading by ``lead`` s.

    The source holds information about the target's next symbol only for
    shifts below ``lead``; for larger shifts it reveals only the target's
    own past, so the population TE is zero there.
    """
    rng = np.random.default_rng(seed)
    times = poisson_times(rate, n_events, rng, start=10.0)
    target = SymbolSeries(times, rng.integers(0, 2, n_events), 2, "target")
    return target, lagged_copy(target, lead, "source")


def planted_chain(
    n_nodes=10, n_events=10_000, rate=1.0, fidelity=0.8, delay=0.01, seed=0, regularity=1.0
) -> List[SymbolSeries]:
    """Chain of binary series where node j+1 copies node j.

    Each node has its own renewal event times (Poisson at ``regularity=1``,
    near-periodic for large ``regularity``). At each event of node j+1 its
    symbol copies the state of node j as of ``delay`` seconds earlier with
    probability ``fidelity``, otherwise it is a fair coin.
    """
    rng = np.random.default_rng(seed)
    shift = int(round(delay * NS_PER_S))
    out = []
    prev = None
    for j in range(n_nodes):
        times = renewal_times(rate, n_events, rng, regularity=regularity)
        symbols = rng.integers(0, 2, n_events)
        if prev is not None:
            idx = np.searchsorted(prev.times_ns, times - shift, side="left") - 1
            copy = (rng.random(n_events) < fidelity) & (idx >= 0)
            symbols = np.where(copy, prev.symbols[np.maximum(idx, 0)], symbols)
        prev = SymbolSeries(times, symbols, 2, f"s{j}")
        out.append(prev)
    return out
