"""Synthetic benchmarks with known transfer entropy.

True-null tables are products P(a+, a) P(b) of symmetric Dirichlet draws,
so their population TE is exactly zero. False-null tables draw the full
joint from a symmetric Dirichlet. Tables with two prescribed source TEs are
built by Levenberg-Marquardt descent on a softmax parametrisation of the
4-axis joint, starting from a Dirichlet(0.5) draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import EventMatrix, JointDistribution, StateSpec, te_from_counts
from .errors import DataError, NonConvergenceError


@dataclass(frozen=True)
class DirichletSpec:
    alpha: float
    dims: StateSpec
    T: int
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")


@dataclass(frozen=True)
class EqualTeTarget:
    """Target TEs for a 4-axis table.

    ``s_target`` is the common value S; ``s_target_c`` overrides the value
    for source c when an unequal pair is wanted.
    """

    s_target: float
    dims: StateSpec
    tolerance: float = 1e-8
    max_iters: int = 10_000
    seed: int = 0
    s_target_c: Optional[float] = None

    def __post_init__(self):
        if self.s_target < 0 or (self.s_target_c is not None and self.s_target_c < 0):
            raise ValueError("target TE must be non-negative")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.dims.has_c:
            raise ValueError("dims must include both sources")

    @property
    def targets(self) -> tuple:
        s_c = self.s_target if self.s_target_c is None else self.s_target_c
        return self.s_target, s_c


@dataclass(frozen=True, eq=False)
class BenchmarkDraw:
    """Sampled events together with the generating population table."""

    events: EventMatrix
    population: JointDistribution
    population_te: float


def sample_dirichlet(alpha: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric Dirichlet draw from normalised Gamma(alpha, 1) variates."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if k < 2:
        raise ValueError("k must be >= 2")
    while True:
        g = rng.standard_gamma(alpha, size=k)
        total = g.sum()
        if total > 0:
            return g / total


def sample_rows(table: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """T i.i.d. cell tuples drawn by inverse CDF over the flattened table."""
    cdf = np.cumsum(np.asarray(table, dtype=float).ravel())
    u = rng.random(T) * cdf[-1]
    flat = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return np.column_stack(np.unravel_index(flat, table.shape))


def sample_counts(table: np.ndarray, T: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Count tables of T i.i.d. draws; same law as tabulating ``sample_rows``."""
    p = np.asarray(table, dtype=float).ravel()
    draws = rng.multinomial(T, p / p.sum(), size=size)
    shape = table.shape if size is None else (size,) + table.shape
    return draws.reshape(shape)


def true_null_table(alpha: float, dims: StateSpec, rng) -> np.ndarray:
    p_target = sample_dirichlet(alpha, dims.n_a_plus * dims.n_a, rng)
    p_source = sample_dirichlet(alpha, dims.n_b, rng)
    return np.outer(p_target, p_source).reshape(dims.n_a_plus, dims.n_a, dims.n_b)


def false_null_table(alpha: float, dims: StateSpec, rng) -> np.ndarray:
    shape = (dims.n_a_plus, dims.n_a, dims.n_b)
    return sample_dirichlet(alpha, int(np.prod(shape)), rng).reshape(shape)


def _three_axis(dims: StateSpec) -> StateSpec:
    return StateSpec(dims.n_a_plus, dims.n_a, dims.n_b, None, dims.past_window)


def _draw(table, spec: DirichletSpec, rng) -> BenchmarkDraw:
    dims = _three_axis(spec.dims)
    population = JointDistribution.from_probabilities(table / table.sum(), dims)
    events = EventMatrix(sample_rows(table, spec.T, rng), dims)
    return BenchmarkDraw(events, population, float(te_from_counts(table)))


def gen_true_null(spec: DirichletSpec) -> BenchmarkDraw:
    rng = np.random.default_rng(spec.seed)
    table = true_null_table(spec.alpha, spec.dims, rng)
    draw = _draw(table, spec, rng)
    # product measure: TE is zero by construction, not up to rounding
    return BenchmarkDraw(draw.events, draw.population, 0.0)


def gen_false_null(spec: DirichletSpec) -> BenchmarkDraw:
    rng = np.random.default_rng(spec.seed)
    return _draw(false_null_table(spec.alpha, spec.dims, rng), spec, rng)


# --------------------------------------------------------------------------
# Tables with prescribed TE pairs
# --------------------------------------------------------------------------

def _softmax(theta):
    z = np.exp(theta - theta.max())
    return z / z.sum()


def _te_pair_and_jacobian(theta, shape):
    """TE_b, TE_c of softmax(theta) and their gradients w.r.t. theta."""
    p = _softmax(theta).reshape(shape)
    p_apab = p.sum(axis=3, keepdims=True)
    p_apac = p.sum(axis=2, keepdims=True)
    p_ab = p.sum(axis=(0, 3), keepdims=True)
    p_ac = p.sum(axis=(0, 2), keepdims=True)
    p_apa = p.sum(axis=(2, 3), keepdims=True)
    p_a = p_apa.sum(axis=0, keepdims=True)
    # d TE_b / d p_cell = log p(a+|a,b) - log p(a+|a); the +1 terms cancel
    g_b = np.broadcast_to(np.log(p_apab / p_ab) - np.log(p_apa / p_a), shape).ravel()
    g_c = np.broadcast_to(np.log(p_apac / p_ac) - np.log(p_apa / p_a), shape).ravel()
    pf = p.ravel()
    te = np.array([pf @ g_b, pf @ g_c])
    # chain rule through softmax: dTE/dtheta_k = p_k (g_k - p.g)
    jac = np.vstack([pf * (g_b - te[0]), pf * (g_c - te[1])])
    return np.maximum(te, 0.0), jac


def equal_te_objective(theta, shape, targets):
    te, _ = _te_pair_and_jacobian(theta, shape)
    r = te - np.asarray(targets)
    return float(r @ r)


def equal_te_gradient(theta, shape, targets):
    te, jac = _te_pair_and_jacobian(theta, shape)
    return 2.0 * jac.T @ (te - np.asarray(targets))


def construct_equal_te(target: EqualTeTarget, return_trace=False):
    """Joint table over (a+, a, b, c) whose source TEs hit the targets.

    Minimises (TE_b - S_b)^2 + (TE_c - S_c)^2 over softmax logits with
    minimum-norm Levenberg-Marquardt steps; only objective-decreasing steps
    are accepted. Raises :class:`NonConvergenceError` with the best
    objective if the tolerance is not met within ``max_iters``.
    """
    dims = target.dims
    shape = dims.shape
    s_b, s_c = target.targets
    limit = np.log(dims.n_a_plus)
    if max(s_b, s_c) >= limit:
        raise DataError(f"target TE must be below ln(n_a_plus) = {limit:.6g}")
    rng = np.random.default_rng(target.seed)
    p0 = sample_dirichlet(0.5, int(np.prod(shape)), rng)
    theta = np.log(np.maximum(p0, 1e-300))
    theta -= theta.mean()
    goal = np.array([s_b, s_c])

    te, jac = _te_pair_and_jacobian(theta, shape)
    r = te - goal
    f = float(r @ r)
    mu = 1e-3 * float(np.trace(jac @ jac.T)) + 1e-12
    trace = [f]
    it = 0
    while f > target.tolerance and it < target.max_iters:
        it += 1
        jjt = jac @ jac.T
        try:
            step = -jac.T @ np.linalg.solve(jjt + mu * np.eye(2), r)
        except np.linalg.LinAlgError:
            mu *= 10.0
            continue
        cand = theta + step
        te_new, jac_new = _te_pair_and_jacobian(cand, shape)
        r_new = te_new - goal
        f_new = float(r_new @ r_new)
        if np.isfinite(f_new) and f_new < f:
            theta, jac, r, f = cand - cand.mean(), jac_new, r_new, f_new
            mu = max(mu / 3.0, 1e-15)
            trace.append(f)
        else:
            mu *= 4.0
            if mu > 1e12:
                break
    if f > target.tolerance:
        raise NonConvergenceError(
            f"equal-TE construction did not converge (objective {f:.3g})", best_residual=f
        )
    p = _softmax(theta).reshape(shape)
    jd = JointDistribution.from_probabilities(p / p.sum(), dims)
    return (jd, trace) if return_trace else jd


def population_te_pair(jd: JointDistribution) -> tuple:
    table = jd.probabilities
    return float(te_from_counts(table.sum(axis=3))), float(te_from_counts(table.sum(axis=2)))
