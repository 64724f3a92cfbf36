import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_conditional_entropy, brute_te_entropy, brute_te_ratio
from symte.core import (
    EventMatrix,
    JointDistribution,
    StateSpec,
    SymbolSeries,
    build_event_matrix,
    conditional_entropy,
    encode_sign_changes,
    encode_window,
    estimate_joint,
    pointwise_loglik_diff,
    te_from_counts,
    transfer_entropy,
)
from symte.errors import DataError


def series(symbols, alphabet=2, times=None):
    n = len(symbols)
    times = np.arange(n) if times is None else times
    return SymbolSeries.from_seconds(times, symbols, alphabet)


# -- encoding ---------------------------------------------------------------

def test_sign_encoding_up_then_down():
    s = encode_sign_changes([1.0, 2.0, 3.0], [10.0, 10.5, 10.2])
    assert s.symbols.tolist() == [1, 0]
    assert s.timestamps.tolist() == [2.0, 3.0]
    assert s.alphabet_size == 2


def test_sign_encoding_drops_zero_change():
    s = encode_sign_changes([1.0, 2.0, 3.0], [10.0, 10.0, 10.1])
    assert s.symbols.tolist() == [1]
    assert s.timestamps.tolist() == [3.0]


def test_sign_encoding_increasing():
    s = encode_sign_changes(np.arange(100.0), np.arange(100.0) + 1)
    assert len(s) == 99 and s.symbols.all()


@pytest.mark.parametrize("prices", [[1.0], [5.0, 5.0, 5.0]])
def test_sign_encoding_too_short(prices):
    with pytest.raises(DataError, match="series too short"):
        encode_sign_changes(np.arange(len(prices), dtype=float), prices)


def test_series_validation():
    with pytest.raises(DataError):
        series([0, 2])
    with pytest.raises(DataError):
        series([0, 1], times=[2.0, 1.0])
    with pytest.raises(DataError):
        SymbolSeries.from_seconds([0.0], [0, 1], 2)


def test_statespec_cell_limit():
    with pytest.raises(DataError):
        StateSpec(1024, 1024, 1024)


# -- event matrix -----------------------------------------------------------

def test_event_matrix_rows():
    em = build_event_matrix(series([0, 1, 1, 0]), [series([1, 0, 1, 0])], past_window=1)
    assert em.rows.tolist() == [[1, 0, 1], [1, 1, 0], [0, 1, 1]]
    assert em.T == 3


def test_window_radix_encoding():
    codes = encode_window(np.array([0, 1, 1, 0]), 2, 2)
    assert codes[1:3].tolist() == [1, 3]
    em = build_event_matrix(series([0, 1, 1, 0]), [series([0, 0, 0, 0])], past_window=2)
    assert em.column("a").tolist() == [1, 3]
    assert em.T == 2
    assert em.spec.n_a == 4


def test_insufficient_history():
    with pytest.raises(DataError, match="insufficient history"):
        build_event_matrix(series([0, 1]), [series([1, 0])], past_window=2)


def test_event_matrix_rejects_out_of_range():
    with pytest.raises(DataError):
        EventMatrix(np.array([[0, 0, 2]]), StateSpec(2, 2, 2))


# -- joint distribution -----------------------------------------------------

def test_joint_single_cell():
    jd = estimate_joint(EventMatrix(np.array([[0, 0, 0], [0, 0, 0]]), StateSpec(2, 2, 2)))
    assert jd.probabilities[0, 0, 0] == 1.0
    assert jd.probabilities.sum() == 1.0


def test_joint_two_cells():
    jd = estimate_joint(EventMatrix(np.array([[0, 0, 0], [1, 0, 0]]), StateSpec(2, 2, 2)))
    assert jd.probabilities[0, 0, 0] == jd.probabilities[1, 0, 0] == 0.5


def test_joint_uniform_enumeration():
    rows = np.array(list(np.ndindex(2, 2, 2)))
    jd = estimate_joint(EventMatrix(rows, StateSpec(2, 2, 2)))
    assert np.all(jd.probabilities == 0.125)


# -- entropies --------------------------------------------------------------

def test_deterministic_copy_has_zero_conditional_entropy():
    rows = np.array([[b, a, b] for a in range(2) for b in range(2)])
    jd = estimate_joint(EventMatrix(rows, StateSpec(2, 2, 2)))
    assert conditional_entropy(jd, ("a", "b")) == 0.0
    assert transfer_entropy(jd) == pytest.approx(math.log(2), abs=1e-15)


def test_independent_uniform_future():
    rows = np.array(list(np.ndindex(2, 2, 2)))
    jd = estimate_joint(EventMatrix(rows, StateSpec(2, 2, 2)))
    assert conditional_entropy(jd) == pytest.approx(math.log(2), abs=1e-15)


def test_three_state_uniform_against_direct_sum():
    p = np.full((3, 3, 3), 1 / 27)
    jd = JointDistribution.from_probabilities(p, StateSpec(3, 3, 3))
    direct = brute_conditional_entropy(p, [1])
    assert direct == pytest.approx(math.log(3), abs=1e-14)
    assert conditional_entropy(jd) == pytest.approx(direct, abs=1e-14)


def test_product_measure_has_exactly_zero_te():
    p_target = np.array([[1, 2], [3, 4]]) / 10
    p_source = np.array([1, 3]) / 4
    table = np.einsum("ij,k->ijk", p_target, p_source)
    # float probabilities round; integer counts are exact
    assert te_from_counts(table) < 1e-15
    counts = np.einsum("ij,k->ijk", np.array([[1, 2], [3, 4]]), np.array([1, 3]))
    assert te_from_counts(counts) == 0.0


def test_constant_source_gives_exact_zero(rng):
    counts = np.zeros((3, 4, 2), dtype=np.int64)
    counts[:, :, 1] = rng.integers(0, 50, size=(3, 4))
    assert te_from_counts(counts) == 0.0


def test_te_on_two_source_table_marginalises(rng):
    counts = rng.integers(0, 20, size=(2, 3, 2, 4))
    spec = StateSpec(2, 3, 2, 4)
    jd = JointDistribution.from_counts(counts, spec)
    assert transfer_entropy(jd, "b") == pytest.approx(brute_te_ratio(counts.sum(axis=3)), abs=1e-13)
    assert transfer_entropy(jd, "c") == pytest.approx(brute_te_ratio(counts.sum(axis=2)), abs=1e-13)


def test_te_batch_matches_loop(rng):
    tables = rng.integers(0, 10, size=(5, 2, 3, 3))
    batch = te_from_counts(tables)
    assert batch.shape == (5,)
    for k in range(5):
        assert batch[k] == te_from_counts(tables[k])


# -- pointwise likelihood difference ---------------------------------------

def test_pointwise_identical_sources_is_zero(rng):
    rows3 = rng.integers(0, 2, size=(200, 3))
    rows = np.column_stack([rows3, rows3[:, 2]])
    d = pointwise_loglik_diff(EventMatrix(rows, StateSpec(2, 2, 2, 2)))
    assert np.all(d == 0.0)


def test_pointwise_sum_equals_t_times_q(rng):
    rows = rng.integers(0, 3, size=(500, 4))
    em = EventMatrix(rows, StateSpec(3, 3, 3, 3))
    jd = estimate_joint(em)
    q = conditional_entropy(jd, ("a", "c")) - conditional_entropy(jd, ("a", "b"))
    assert pointwise_loglik_diff(em).sum() == pytest.approx(em.T * q, abs=1e-10)


def test_pointwise_two_rows_by_hand():
    # rows (a+,a,b,c): (0,0,0,0) and (1,0,1,0)
    # b separates the two futures: P(a+|a,b) = 1 for both rows.
    # c is constant: P(a+|a,c) = 1/2 for both rows.
    em = EventMatrix(np.array([[0, 0, 0, 0], [1, 0, 1, 0]]), StateSpec(2, 2, 2, 2))
    assert np.allclose(pointwise_loglik_diff(em), [math.log(2), math.log(2)], atol=1e-15)


# -- properties -------------------------------------------------------------

small_tables = st.tuples(
    st.integers(2, 4), st.integers(2, 4), st.integers(2, 4), st.integers(0, 2 ** 31)
)


@settings(max_examples=200, deadline=None)
@given(small_tables)
def test_entropy_and_ratio_formulas_agree(args):
    n_ap, n_a, n_b, seed = args
    r = np.random.default_rng(seed)
    counts = r.integers(0, 6, size=(n_ap, n_a, n_b))
    if counts.sum() == 0:
        counts[0, 0, 0] = 1
    te = float(te_from_counts(counts))
    assert te >= 0.0
    assert te == pytest.approx(brute_te_entropy(counts), abs=1e-12)
    assert te == pytest.approx(brute_te_ratio(counts), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_row_permutation_invariance(seed):
    r = np.random.default_rng(seed)
    rows = r.integers(0, 2, size=(60, 3))
    spec = StateSpec(2, 2, 2)
    a = estimate_joint(EventMatrix(rows, spec))
    b = estimate_joint(EventMatrix(rows[r.permutation(60)], spec))
    assert np.array_equal(a.counts, b.counts)
    assert transfer_entropy(a) == transfer_entropy(b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_conditional_entropy_relabeling_invariance(seed):
    r = np.random.default_rng(seed)
    counts = r.integers(0, 9, size=(3, 3, 3))
    spec = StateSpec(3, 3, 3)
    perm = [r.permutation(3) for _ in range(3)]
    relabeled = counts[np.ix_(*perm)]
    h = conditional_entropy(JointDistribution.from_counts(counts, spec), ("a", "b"))
    h2 = conditional_entropy(JointDistribution.from_counts(relabeled, spec), ("a", "b"))
    assert h == pytest.approx(h2, abs=1e-13)
