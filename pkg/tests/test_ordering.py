"""Equal-variance ordering: Schur complements, greedy order, consensus."""

import numpy as np
import pytest

from fredom.ordering import (
    OrderMatrix,
    TopologicalOrder,
    conditional_variance,
    consensus_order,
    order_per_frequency,
)
from fredom.spectral import SpectralStack


def random_hermitian_psd(p, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(p, p)) + 1j * rng.normal(size=(p, p))
    return A @ A.conj().T + 0.1 * np.eye(p)


def stack_of(mats):
    mats = np.asarray(mats, dtype=complex)
    M = mats.shape[0]
    freqs = (np.arange(M) + 1.0) / (M + 1)
    return SpectralStack(mats=mats, freqs=freqs, m_t=1, n_window=3)


def test_conditional_variance_matches_schur_complement():
    for seed in range(10):
        S = random_hermitian_psd(5, seed)
        sel = [0, 3]
        j = 2
        want = S[j, j] - S[sel, j].conj() @ np.linalg.solve(S[np.ix_(sel, sel)], S[sel, j])
        got = conditional_variance(S, sel, j)
        assert abs(got - want.real) < 1e-10
    assert conditional_variance(S, [], 1) == pytest.approx(S[1, 1].real)


def test_conditional_variance_rejects_selected_index():
    S = random_hermitian_psd(3, 0)
    with pytest.raises(ValueError):
        conditional_variance(S, [1], 1)


def test_conditional_variance_singular_block():
    # duplicated selected rows make the block singular; pinv keeps going
    S = np.ones((3, 3), dtype=complex) + np.eye(3) * 1e-15
    val = conditional_variance(S, [0, 1], 2)
    assert np.isfinite(val)


def chain_covariance(p, coef):
    """Population covariance of x_j = coef * x_{j-1} + eps, equal variances."""
    B = np.zeros((p, p))
    for j in range(1, p):
        B[j, j - 1] = coef
    K = np.linalg.inv(np.eye(p) - B)
    return K @ K.T


def test_greedy_order_recovers_chain():
    S = chain_covariance(4, 0.8)
    stack = stack_of([S, S])
    order = order_per_frequency(stack)
    assert np.array_equal(order.rows[0], [0, 1, 2, 3])


def test_greedy_order_permutation_equivariant():
    S = chain_covariance(4, 0.8)
    perm = np.array([2, 0, 3, 1])
    Sp = S[np.ix_(perm, perm)]
    row = order_per_frequency(stack_of([Sp, Sp])).rows[0]
    # node perm[i] of the permuted system is original node i
    inv = np.argsort(perm)
    assert np.array_equal(row, inv[[0, 1, 2, 3]])


def test_consensus_is_majority_vote():
    S_chain = chain_covariance(3, 0.9)
    rev = np.array([2, 1, 0])
    S_rev = S_chain[np.ix_(rev, rev)]
    order = order_per_frequency(stack_of([S_chain, S_chain, S_rev]))
    top = consensus_order(order)
    assert top.perm == (0, 1, 2)
    assert top.support == pytest.approx(2 / 3)


def test_consensus_tie_goes_to_earliest_frequency():
    rows = np.array([[1, 0, 2], [0, 1, 2], [1, 0, 2], [0, 1, 2]])
    top = consensus_order(OrderMatrix(rows=rows))
    assert top.perm == (1, 0, 2)
    assert top.support == pytest.approx(0.5)


def test_consensus_respects_weights():
    rows = np.array([[0, 1], [1, 0]])
    top = consensus_order(OrderMatrix(rows=rows, weights=np.array([0.2, 0.8])))
    assert top.perm == (1, 0)
    assert top.support == pytest.approx(0.8)


def test_order_matrix_validation():
    with pytest.raises(ValueError, match="permutation"):
        OrderMatrix(rows=np.array([[0, 0, 1]]))
    with pytest.raises(ValueError, match="weights"):
        OrderMatrix(rows=np.array([[0, 1]]), weights=np.array([-1.0]))
    with pytest.raises(ValueError, match="perm"):
        TopologicalOrder(perm=(0, 0), support=1.0)
    with pytest.raises(ValueError, match="support"):
        TopologicalOrder(perm=(0, 1), support=1.5)


def test_equal_variance_identifies_all_small_dags():
    """Population check: with unit noise the greedy order is topological.

    Exhaustive over the 3-node DAGs with coefficients 0.7 on every edge.
    """
    p = 3
    pairs = [(i, j) for j in range(p) for i in range(p) if i != j]
    for mask in range(2 ** len(pairs)):
        B = np.zeros((p, p))
        for b, (child, parent) in enumerate(pairs):
            if mask >> b & 1:
                B[child, parent] = 0.7
        # keep only acyclic supports, child index above parent
        if np.any(np.triu(B) != 0):
            continue
        K = np.linalg.inv(np.eye(p) - B)
        S = K @ K.T
        row = order_per_frequency(stack_of([S, S])).rows[0]
        pos = np.argsort(row)
        for child, parent in zip(*np.nonzero(B)):
            assert pos[parent] < pos[child]
