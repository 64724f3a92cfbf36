"""Resampling p-values used as reference for the asymptotic tests.

Two procedures are provided:

* ``shuffle_pvalue`` permutes the source column against fixed target rows,
  which keeps H(A+|A) and H(B) while breaking any transfer;
* ``resample_compare_pvalue`` redraws whole events with replacement and
  counts how often TE from b fails to exceed TE from c.

Both statistics depend on the events only through their count table, so by
default resamples are drawn directly as tables (hypergeometric for a
permutation, multinomial for a bootstrap). ``method="rows"`` runs the
literal row-level procedure instead; the two are equal in distribution.

Random streams are derived per block of ``block_size`` resample indices from
``SeedSequence(seed, spawn_key=(block,))`` feeding a Philox counter-based
generator, so the result for a given seed does not depend on ``workers``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import EventMatrix, JointDistribution, estimate_joint, te_from_counts

TIE_TOL = 1e-12


@dataclass(frozen=True)
class BootstrapConfig:
    q: int = 10_000
    seed: int = 0
    mode: str = "shuffle"
    method: str = "table"
    block_size: int = 1024
    workers: int = 1

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.mode not in ("shuffle", "resample"):
            raise ValueError("mode must be 'shuffle' or 'resample'")
        if self.method not in ("table", "rows"):
            raise ValueError("method must be 'table' or 'rows'")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _run_blocks(cfg: BootstrapConfig, task) -> int:
    sizes = [min(cfg.block_size, cfg.q - start) for start in range(0, cfg.q, cfg.block_size)]
    jobs = [(k, size) for k, size in enumerate(sizes)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            hits = list(pool.map(lambda job: task(block_rng(cfg.seed, job[0]), job[1]), jobs))
    else:
        hits = [task(block_rng(cfg.seed, k), size) for k, size in jobs]
    return int(sum(hits))


def permuted_tables(row_margins, col_margins, size, rng) -> np.ndarray:
    """Random contingency tables with fixed margins, shape ``(size, m, k)``.

    Equivalent to tabulating a uniformly permuted column against fixed rows:
    each cell is drawn as a hypergeometric given the cells already filled.
    """
    row_margins = np.asarray(row_margins, dtype=np.int64)
    col_margins = np.asarray(col_margins, dtype=np.int64)
    m, k = row_margins.size, col_margins.size
    out = np.zeros((size, m, k), dtype=np.int64)
    remaining = np.tile(col_margins, (size, 1))
    for i in range(m):
        if i == m - 1:
            out[:, i, :] = remaining
            break
        need = np.full(size, row_margins[i], dtype=np.int64)
        if row_margins[i] == 0:
            continue
        left = remaining.sum(axis=1)
        for j in range(k - 1):
            good = remaining[:, j]
            left = left - good
            drawn = rng.hypergeometric(good, left, need)
            out[:, i, j] = drawn
            need -= drawn
        out[:, i, k - 1] = need
        remaining -= out[:, i, :]
    return out


def _joint(em) -> JointDistribution:
    if isinstance(em, EventMatrix):
        return estimate_joint(em)
    if em.counts is None:
        raise ValueError("resampling needs an empirical (count) table")
    return em


def _needs_rows(em, cfg):
    if cfg.method == "rows" and not isinstance(em, EventMatrix):
        raise ValueError("method='rows' needs an EventMatrix")


def shuffle_pvalue(em, cfg: BootstrapConfig) -> float:
    """Permutation p-value for TE(b->a) > 0.

    ``em`` is an :class:`EventMatrix` or an empirical :class:`JointDistribution`.
    Returns ``(1 + #{S_r >= S}) / (q + 1)``; ties count against rejection.
    """
    if cfg.mode != "shuffle":
        raise ValueError("shuffle_pvalue needs mode='shuffle'")
    _needs_rows(em, cfg)
    jd = _joint(em)
    counts = jd.counts.sum(axis=3) if jd.spec.has_c else jd.counts
    observed = float(te_from_counts(counts))
    threshold = observed - TIE_TOL
    n_ap, n_a, n_b = counts.shape
    row_margins = counts.sum(axis=2).ravel()
    col_margins = counts.sum(axis=(0, 1))

    if cfg.method == "table":
        def task(rng, size):
            tables = permuted_tables(row_margins, col_margins, size, rng)
            te = te_from_counts(tables.reshape(size, n_ap, n_a, n_b))
            return int(np.count_nonzero(te >= threshold))
    else:
        rows = em.rows
        shape = (n_ap, n_a, n_b)
        fixed = np.ravel_multi_index((rows[:, 0], rows[:, 1], np.zeros(em.T, np.int64)), shape)

        def task(rng, size):
            hits = 0
            for _ in range(size):
                b = rng.permutation(rows[:, 2])
                table = np.bincount(fixed + b, minlength=n_ap * n_a * n_b).reshape(shape)
                hits += bool(te_from_counts(table) >= threshold)
            return hits

    return (1 + _run_blocks(cfg, task)) / (cfg.q + 1)


def resample_compare_pvalue(em, cfg: BootstrapConfig) -> float:
    """Bootstrap p-value for TE(b->a) > TE(c->a).

    Each resample draws T events with replacement; the p-value is the
    fraction of resamples with S_b <= S_c. Events are treated as
    exchangeable, so serial dependence between rows is not preserved.
    """
    if cfg.mode != "resample":
        raise ValueError("resample_compare_pvalue needs mode='resample'")
    _needs_rows(em, cfg)
    jd = _joint(em)
    if not jd.spec.has_c:
        raise ValueError("comparison needs both sources")
    shape = jd.spec.shape
    T = jd.T

    def compare(tables):
        s_b = te_from_counts(tables.sum(axis=-1))
        s_c = te_from_counts(tables.sum(axis=-2))
        return int(np.count_nonzero(s_b <= s_c + TIE_TOL))

    if cfg.method == "table":
        counts = jd.counts.ravel()
        cells = np.flatnonzero(counts)
        probs = counts[cells] / T

        def task(rng, size):
            draws = rng.multinomial(T, probs, size=size)
            tables = np.zeros((size, counts.size), dtype=np.int64)
            tables[:, cells] = draws
            return compare(tables.reshape((size,) + shape))
    else:
        flat = np.ravel_multi_index(tuple(em.rows.T), shape)
        n_cells = int(np.prod(shape))

        def task(rng, size):
            tables = np.empty((size, n_cells), dtype=np.int64)
            for r in range(size):
                pick = flat[rng.integers(0, T, size=T)]
                tables[r] = np.bincount(pick, minlength=n_cells)
            return compare(tables.reshape((size,) + shape))

    return _run_blocks(cfg, task) / cfg.q
