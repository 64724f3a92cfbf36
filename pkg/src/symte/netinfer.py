"""Bonferroni-validated lead-lag networks over many asynchronous series."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .align import aligned_event_matrix
from .core import SymbolSeries
from .errors import DataError
from .inference import te_significance_test

log = logging.getLogger(__name__)

EDGE_COLUMNS = ["source", "target", "group_source", "group_target",
                "te_nats", "statistic", "df", "p_value"]


@dataclass(frozen=True, eq=False)
class NetworkJob:
    """Inputs of one network inference run.

    ``n_tests`` overrides the Bonferroni test count, which defaults to
    n(n+1)/2 for n surviving series.
    """

    series: Sequence[SymbolSeries]
    groups: Sequence[str]
    q_conf: float = 0.01
    min_events: int = 1000
    past_window: int = 1
    delta_t: float = 0.0
    n_tests: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.q_conf < 1:
            raise ValueError("q_conf must lie in (0, 1)")
        if self.min_events < self.past_window + 2:
            raise ValueError("min_events must be at least past_window + 2")
        if len(self.series) != len(self.groups):
            raise ValueError("one group label per series is required")


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    group_source: str
    group_target: str
    te: float
    statistic: float
    df: int
    p_value: float


@dataclass(eq=False)
class LeadLagNetwork:
    nodes: List[str]
    groups: Dict[str, str]
    edges: List[Edge]
    n_tests: int
    bonferroni_threshold: float
    n_input: int
    p_matrix: np.ndarray = field(repr=False)

    @property
    def n_pairs(self) -> int:
        n = len(self.nodes)
        return n * (n - 1)

    @property
    def fraction_retained(self) -> float:
        return len(self.edges) / self.n_pairs if self.n_pairs else 0.0

    @property
    def non_isolated_nodes(self) -> int:
        return len({e.source for e in self.edges} | {e.target for e in self.edges})

    def edges_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(EDGE_COLUMNS)
        for e in self.edges:
            w.writerow([e.source, e.target, e.group_source, e.group_target,
                        repr(e.te), repr(e.statistic), e.df, repr(e.p_value)])
        return buf.getvalue()

    def summary(self) -> dict:
        try:
            r = assortativity(self)
        except DataError:
            r = None
        return {
            "n": self.n_input,
            "n_filtered": len(self.nodes),
            "n_t": self.n_tests,
            "threshold": self.bonferroni_threshold,
            "edges_retained": len(self.edges),
            "fraction_retained": self.fraction_retained,
            "non_isolated_nodes": self.non_isolated_nodes,
            "assortativity": r,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def bonferroni_tests(n: int) -> int:
    """Number of tests n(n+1)/2 used to split the family-wise level."""
    return n * (n + 1) // 2


# worker-side state: the filtered series, set once per process
_SERIES: List[SymbolSeries] = []
_PAST = 1
_SHIFT = 0.0


def _init_worker(series, past_window, delta_t):
    global _SERIES, _PAST, _SHIFT
    _SERIES, _PAST, _SHIFT = list(series), past_window, delta_t


def _test_target(j):
    """p-value, TE, statistic and df for every source against target j."""
    out = []
    target = _SERIES[j]
    for i, source in enumerate(_SERIES):
        if i == j:
            continue
        try:
            em = aligned_event_matrix(target, [source], _SHIFT, _PAST)
            res = te_significance_test(em)
        except DataError as exc:
            log.info("pair %s -> %s not testable: %s", source.label, target.label, exc)
            continue
        out.append((i, j, res.p_value, res.te, res.statistic, res.df))
    return out


def infer_network(job: NetworkJob) -> LeadLagNetwork:
    """Test every ordered pair and keep edges with p < q_conf / n_t."""
    keep = [k for k, s in enumerate(job.series) if len(s) >= job.min_events]
    dropped = len(job.series) - len(keep)
    if dropped:
        log.info("%d series below min_events=%d removed", dropped, job.min_events)
    if len(keep) < 2:
        raise DataError("insufficient series")
    series = [job.series[k] for k in keep]
    labels = [s.label or f"series{k}" for k, s in zip(keep, series)]
    if len(set(labels)) != len(labels):
        raise DataError("series labels must be unique")
    groups = {lab: str(job.groups[k]) for lab, k in zip(labels, keep)}
    n = len(series)
    n_tests = job.n_tests if job.n_tests is not None else bonferroni_tests(n)
    threshold = job.q_conf / n_tests

    targets = range(n)
    if job.workers > 1:
        with ProcessPoolExecutor(
            max_workers=job.workers,
            initializer=_init_worker,
            initargs=(series, job.past_window, job.delta_t),
        ) as pool:
            chunks = list(pool.map(_test_target, targets))
    else:
        _init_worker(series, job.past_window, job.delta_t)
        chunks = [_test_target(j) for j in targets]

    p_matrix = np.full((n, n), np.nan)
    edges = []
    for i, j, p, te, stat, df in sorted(r for chunk in chunks for r in chunk):
        p_matrix[i, j] = p
        if p < threshold:
            src, tgt = labels[i], labels[j]
            edges.append(Edge(src, tgt, groups[src], groups[tgt], te, stat, df, p))
    return LeadLagNetwork(labels, groups, edges, n_tests, threshold, len(job.series), p_matrix)


def assortativity_from_pairs(source_groups, target_groups) -> float:
    """Categorical assortativity of directed edges given their end groups."""
    source_groups = list(source_groups)
    target_groups = list(target_groups)
    if not source_groups:
        raise DataError("assortativity needs at least one edge")
    cats = sorted(set(source_groups) | set(target_groups))
    index = {c: k for k, c in enumerate(cats)}
    e = np.zeros((len(cats), len(cats)))
    for s, t in zip(source_groups, target_groups):
        e[index[s], index[t]] += 1
    e /= e.sum()
    ab = float(e.sum(axis=1) @ e.sum(axis=0))
    if math.isclose(ab, 1.0):
        # every edge joins the same single group
        return 1.0
    return (float(np.trace(e)) - ab) / (1.0 - ab)


def assortativity(net: LeadLagNetwork) -> float:
    return assortativity_from_pairs(
        [e.group_source for e in net.edges], [e.group_target for e in net.edges]
    )


@dataclass(frozen=True)
class CoarseGraph:
    """One node per group, one edge per linked ordered group pair.

    ``node_sizes`` and ``edge_widths`` are natural logs of member and link counts.
    """

    node_counts: Dict[str, int]
    edge_counts: Dict[tuple, int]

    @property
    def node_sizes(self) -> Dict[str, float]:
        return {g: math.log(c) for g, c in self.node_counts.items()}

    @property
    def edge_widths(self) -> Dict[tuple, float]:
        return {k: math.log(c) for k, c in self.edge_counts.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group_source", "group_target", "links", "log_links"])
        for (gs, gt), c in sorted(self.edge_counts.items()):
            w.writerow([gs, gt, c, repr(math.log(c))])
        return buf.getvalue()


def coarse_grain(net: LeadLagNetwork) -> CoarseGraph:
    nodes = Counter(net.groups[n] for n in net.nodes)
    links = Counter((e.group_source, e.group_target) for e in net.edges)
    return CoarseGraph(dict(sorted(nodes.items())), dict(sorted(links.items())))
