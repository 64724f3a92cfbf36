"""Monte-Carlo benchmark campaigns over grids of dims, T and alpha or S.

Each replicate draws its own generator from ``(seed, cell key, replicate)``
where the cell key is a CRC of the grid cell, so records do not depend on
grid order or on the number of workers. Events are sampled as count tables
(multinomial), which has the same law as tabulating i.i.d. sampled rows.
"""

from __future__ import annotations

import csv
import io
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import product
from typing import List, Optional, Sequence

import numpy as np

from .benchgen import (
    EqualTeTarget,
    construct_equal_te,
    false_null_table,
    sample_counts,
    true_null_table,
)
from .bootstrap import BootstrapConfig, resample_compare_pvalue, shuffle_pvalue
from .core import MAX_CELLS, JointDistribution, StateSpec, te_from_counts
from .errors import DataError, NonConvergenceError
from .inference import te_test_from_counts, vuong_from_counts

KINDS = ("true-null", "false-null", "equal-te")
RESTARTS = 10


@dataclass(frozen=True)
class CampaignRecord:
    campaign: str
    dims: str
    alpha: float
    s_b: float
    s_c: float
    T: int
    seed: int
    replicate: int
    statistic: float
    df: float
    te: float
    p_analytic: float
    p_one_sided: float
    p_bootstrap: float
    population_te: float


FIELDS = list(CampaignRecord.__dataclass_fields__)


def dims_label(dims: Sequence[int]) -> str:
    return "x".join(str(d) for d in dims)


def cell_key(kind, dims, T, param) -> int:
    return zlib.crc32(f"{kind}|{dims_label(dims)}|{T}|{param!r}".encode())


def replicate_rng(seed, key, replicate) -> np.random.Generator:
    return np.random.default_rng([seed, key, replicate])


def check_dims(kind: str, dims: Sequence[int]) -> StateSpec:
    want = 4 if kind == "equal-te" else 3
    if len(dims) != want:
        raise DataError(f"{kind} campaigns need {want} alphabet sizes, got {len(dims)}")
    if min(dims) < 2:
        raise DataError("alphabet sizes must be >= 2")
    cells = int(np.prod(dims))
    if cells > MAX_CELLS:
        raise DataError(f"dims {dims_label(dims)} give {cells} cells, above the limit of {MAX_CELLS}")
    return StateSpec(*dims)


def _null_replicate(kind, dims, T, alpha, seed, rep, q):
    spec = StateSpec(*dims)
    rng = replicate_rng(seed, cell_key(kind, dims, T, alpha), rep)
    if kind == "true-null":
        table = true_null_table(alpha, spec, rng)
        pop_te = 0.0
    else:
        table = false_null_table(alpha, spec, rng)
        pop_te = float(te_from_counts(table))
    counts = sample_counts(table, T, rng)
    res = te_test_from_counts(counts, spec)
    p_boot = float("nan")
    if q:
        cfg = BootstrapConfig(q=q, seed=int(rng.integers(2 ** 63)), mode="shuffle")
        p_boot = shuffle_pvalue(JointDistribution.from_counts(counts, spec), cfg)
    return CampaignRecord(kind, dims_label(dims), alpha, float("nan"), float("nan"), T, seed, rep,
                          res.statistic, res.df, res.te, res.p_value, res.p_value, p_boot, pop_te)


def equal_te_tables(dims, s_b, s_c, n_tables, seed, tolerance=1e-20) -> List[JointDistribution]:
    """Pool of population tables with TE pair (s_b, s_c); restarts on failure."""
    spec = StateSpec(*dims)
    key = cell_key("equal-te-table", dims, 0, (s_b, s_c))
    tables = []
    for k in range(n_tables):
        err = None
        for attempt in range(RESTARTS):
            table_seed = int(replicate_rng(seed, key, k * RESTARTS + attempt).integers(2 ** 63))
            target = EqualTeTarget(s_b, spec, tolerance=tolerance, seed=table_seed, s_target_c=s_c)
            try:
                tables.append(construct_equal_te(target))
                break
            except NonConvergenceError as exc:
                err = exc
        else:
            raise err
    return tables


def _equal_te_replicate(dims, T, s_b, s_c, table, seed, rep, q):
    spec = StateSpec(*dims)
    rng = replicate_rng(seed, cell_key("equal-te", dims, T, (s_b, s_c)), rep)
    counts = sample_counts(table, T, rng)
    res = vuong_from_counts(counts, spec)
    p_boot = float("nan")
    if q:
        cfg = BootstrapConfig(q=q, seed=int(rng.integers(2 ** 63)), mode="resample")
        p_boot = resample_compare_pvalue(JointDistribution.from_counts(counts, spec), cfg)
    return CampaignRecord("equal-te", dims_label(dims), float("nan"), s_b, s_c, T, seed, rep,
                          res.v, res.nu, res.q_stat, res.p_two_sided, res.p_one_sided, p_boot, s_b)


def _run_task(task):
    kind, args = task
    if kind == "equal-te":
        return _equal_te_replicate(*args)
    return _null_replicate(kind, *args)


def _execute(tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    return [_run_task(t) for t in tasks]


def run_campaign(
    kind: str,
    dims_grid: Sequence[Sequence[int]],
    T_grid: Sequence[int],
    params: Sequence,
    replicates: int,
    seed: int = 0,
    bootstrap_q: int = 0,
    workers: int = 1,
    n_tables: int = 20,
    s_c: Optional[float] = None,
) -> List[CampaignRecord]:
    """Records for every (dims, T, param) cell and replicate.

    ``params`` holds Dirichlet alphas for the null campaigns and target TE
    values S for ``equal-te``; ``s_c`` fixes TE(c->a) while S varies TE(b->a)
    (by default both equal S). Equal-TE replicates cycle over a pool of
    ``n_tables`` constructed tables per cell.
    """
    if kind not in KINDS:
        raise DataError(f"unknown campaign {kind!r}; expected one of {KINDS}")
    if replicates < 1:
        raise DataError("replicates must be >= 1")
    tasks = []
    for dims, T, param in product(dims_grid, T_grid, params):
        dims = tuple(int(d) for d in dims)
        T, param = int(T), float(param)
        check_dims(kind, dims)
        if T < 1:
            raise DataError("T must be >= 1")
        if kind == "equal-te":
            sc = param if s_c is None else s_c
            pool = equal_te_tables(dims, param, sc, n_tables, seed)
            for rep in range(replicates):
                table = pool[rep % len(pool)].probabilities
                tasks.append((kind, (dims, T, param, sc, table, seed, rep, bootstrap_q)))
        else:
            if not param > 0:
                raise DataError("alpha must be positive")
            for rep in range(replicates):
                tasks.append((kind, (dims, T, param, seed, rep, bootstrap_q)))
    return _execute(tasks, workers)


def records_csv(records: Sequence[CampaignRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    return buf.getvalue()


def cdf_area(p_values) -> float:
    """Area under the empirical CDF of p-values on [0, 1], i.e. 1 - mean(p)."""
    return float(1.0 - np.mean(np.asarray(p_values, dtype=float)))
