"""Asymptotic tests: Wilks chi-square test of TE > 0 and the Vuong comparison.

Under the no-transfer null, 2 T TE is asymptotically chi-square with
``n_a * (n_a+ - 1) * (n_b - 1)`` degrees of freedom. To compare two sources
on the same target, the summed pointwise log-likelihood difference dL = T Q
is centred by ``nu = (n_b - n_c) n_a (n_a+ - 1) / 2`` and scaled by
sqrt(T) * omega, giving a statistic that is standard normal when both
sources carry the same TE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    EventMatrix,
    StateSpec,
    estimate_joint,
    pointwise_table,
    te_from_counts,
)
from .errors import DataError, DegenerateVarianceError
from .special import chi2_sf, normal_cdf, normal_sf

# expected count per cell below which the chi-square limit is not trusted
MIN_EXPECTED_PER_CELL = 5
OMEGA_ZERO = 1e-12


@dataclass(frozen=True)
class TeTestResult:
    te: float
    statistic: float
    df: int
    p_value: float
    T: int
    small_sample: bool = False

    @property
    def te_bits(self) -> float:
        return self.te / math.log(2.0)


@dataclass(frozen=True)
class VuongTestResult:
    delta_l: float
    q_stat: float
    omega: float
    nu: float
    v: float
    p_one_sided: float
    p_two_sided: float
    T: int


def df_te(spec: StateSpec) -> int:
    return spec.n_a * (spec.n_a_plus - 1) * (spec.n_b - 1)


def df_vuong(spec: StateSpec) -> float:
    if not spec.has_c:
        raise DataError("Vuong centering needs two sources")
    return (spec.n_b - spec.n_c) * spec.n_a * (spec.n_a_plus - 1) / 2.0


def _check_alphabets(spec: StateSpec):
    if min(spec.shape) < 2:
        raise DataError("degenerate alphabet, zero degrees of freedom")


def te_test_from_counts(counts, spec: StateSpec, source_axis: str = "b") -> TeTestResult:
    """Chi-square test on a count table (3 or 4 axes) for the named source."""
    _check_alphabets(spec)
    counts = np.asarray(counts)
    if spec.has_c:
        counts = counts.sum(axis=3 if source_axis == "b" else 2)
        if source_axis == "c":
            spec = StateSpec(spec.n_a_plus, spec.n_a, spec.n_c, None, spec.past_window)
    T = int(counts.sum())
    te = float(te_from_counts(counts))
    stat = 2.0 * T * te
    df = df_te(spec)
    small = T < MIN_EXPECTED_PER_CELL * spec.n_a_plus * spec.n_a * spec.n_b
    return TeTestResult(te, stat, df, chi2_sf(stat, df), T, small)


def te_significance_test(em, source_axis: str = "b") -> TeTestResult:
    """Test H0: TE = 0 against TE > 0 with the Wilks chi-square limit.

    Accepts an :class:`EventMatrix` or an empirical :class:`JointDistribution`.
    ``small_sample`` flags T below five expected events per cell.
    """
    if isinstance(em, EventMatrix):
        _check_alphabets(em.spec)
        jd = estimate_joint(em)
    else:
        jd = em
    if jd.counts is None:
        raise DataError("significance test needs an empirical (count) table")
    return te_test_from_counts(jd.counts, jd.spec, source_axis)


def vuong_from_counts(counts, spec: StateSpec) -> VuongTestResult:
    """Vuong comparison of TE from b versus TE from c on a 4-axis count table."""
    counts = np.asarray(counts)
    T = int(counts.sum())
    if T < 2:
        raise DataError("Vuong comparison needs T >= 2")
    d = pointwise_table(counts)
    n = counts.astype(float)
    delta_l = float((n * d).sum())
    mean = delta_l / T
    omega = math.sqrt(float((n * (d - mean) ** 2).sum()) / T)
    nu = df_vuong(spec)
    q = delta_l / T
    if omega < OMEGA_ZERO:
        if math.isclose(delta_l, nu, rel_tol=1e-12, abs_tol=1e-9):
            return VuongTestResult(delta_l, q, 0.0, nu, 0.0, 0.5, 1.0, T)
        raise DegenerateVarianceError("degenerate variance")
    v = (delta_l - nu) / (math.sqrt(T) * omega)
    p_two = min(1.0, 2.0 * min(normal_cdf(v), normal_sf(v)))
    return VuongTestResult(delta_l, q, omega, nu, v, normal_sf(v), p_two, T)


def vuong_compare(em) -> VuongTestResult:
    """Vuong test of H0: TE(b->a) = TE(c->a).

    ``p_one_sided`` is for the alternative TE(b->a) > TE(c->a). When the
    pointwise differences have zero spread and dL equals its centring the
    models are indistinguishable and v = 0, p_two_sided = 1.
    """
    if isinstance(em, EventMatrix):
        if not em.spec.has_c:
            raise DataError("Vuong comparison needs both sources")
        jd = estimate_joint(em)
    else:
        jd = em
    if jd.counts is None:
        raise DataError("Vuong comparison needs an empirical (count) table")
    return vuong_from_counts(jd.counts, jd.spec)
