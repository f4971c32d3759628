"""Tests for the simulation ground-truth generators.

The transfer generator is checked through an exact frequency-domain
identity (same seed, filtered vs unfiltered draw); the SVAR generators
through recovered structural residuals and the whitening-filter algebra.
"""

import numpy as np
import numpy.testing as npt
import pytest

from fredom.dag import is_acyclic, topological_sort
from fredom.ordering import TopologicalOrder
from fredom.simgen import (
    FrequencyDagModel,
    SvarModel,
    generate_cscm,
    generate_nonlinear_svar,
    generate_svar,
    generate_transfer_ts,
    make_experiment1_model,
    make_experimentA_model,
    make_experimentB_model,
    svar_whitening_filter,
    transfer_spectrum,
)
from fredom.spectral import dft


def zero_model(p, T):
    return FrequencyDagModel(
        B=np.zeros((T, p, p), dtype=complex),
        support=np.zeros((p, p), dtype=np.int8),
        order=TopologicalOrder(perm=tuple(range(p)), support=1.0),
    )


# -------------------------------------------------------- FrequencyDagModel


def test_frequency_dag_model_validation():
    T, p = 8, 3
    B = np.zeros((T, p, p), dtype=complex)
    B[:, 1, 0] = 0.5
    sup = np.zeros((p, p), dtype=np.int8)
    with pytest.raises(ValueError, match="outside the declared support"):
        FrequencyDagModel(B=B, support=sup,
                          order=TopologicalOrder(perm=(0, 1, 2), support=1.0))
    sup[1, 0] = 1
    m = FrequencyDagModel(B=B, support=sup,
                          order=TopologicalOrder(perm=(0, 1, 2), support=1.0))
    assert m.n_freqs == T and m.n_series == p
    with pytest.raises(ValueError, match="not strictly lower"):
        FrequencyDagModel(B=B, support=sup,
                          order=TopologicalOrder(perm=(1, 0, 2), support=1.0))


def test_hermitian_property_detects_pairing():
    T, p = 8, 2
    sup = np.zeros((p, p), dtype=np.int8)
    sup[1, 0] = 1
    B = np.zeros((T, p, p), dtype=complex)
    w = np.arange(1, T + 1) / T
    B[:, 1, 0] = np.cos(2 * np.pi * w) + 1j * np.sin(2 * np.pi * w)
    order = TopologicalOrder(perm=(0, 1), support=1.0)
    assert FrequencyDagModel(B=B, support=sup, order=order).hermitian
    B2 = B.copy()
    B2[0, 1, 0] += 0.3j  # break the conjugate pairing at one frequency
    assert not FrequencyDagModel(B=B2, support=sup, order=order).hermitian


def test_experiment1_model_structure():
    T = 64
    m = make_experiment1_model(K=6, s=0.4, T=T, seed=3)
    assert m.hermitian
    assert np.triu(m.support).max() == 0
    # at w = 0.5 the cosine term is 1 and the sine term vanishes: B = c1
    c1 = m.B[T // 2 - 1].real
    edges = m.support == 1
    assert ((np.abs(c1[edges]) >= 0.1) & (np.abs(c1[edges]) <= 1.0)).all()
    # at w = 0.25 the edge value is -c1 + 1.2i c2
    c2 = (m.B[T // 4 - 1] + c1).imag / 1.2
    assert ((np.abs(c2[edges]) >= 0.1) & (np.abs(c2[edges]) <= 1.0)).all()
    assert np.abs(m.B[:, ~edges]).max() == 0.0
    with pytest.raises(ValueError, match="sparsity"):
        make_experiment1_model(K=4, s=1.5, T=T, seed=0)


def test_transfer_spectrum_identity_model():
    m = zero_model(3, 16)
    npt.assert_allclose(transfer_spectrum(m, 5), np.eye(3))


# ------------------------------------------------------ generate_transfer_ts


def test_transfer_ts_is_filtered_noise():
    # same seed: DFT of the filtered draw equals (I-B)^{-1} times the DFT
    # of the unfiltered draw at every non-DC frequency
    T, p = 64, 4
    model = make_experiment1_model(K=p, s=0.5, T=T, seed=21)
    base = generate_transfer_ts(zero_model(p, T), T, seed=99)
    out = generate_transfer_ts(model, T, seed=99)
    d0 = dft(base.series).coeffs
    d1 = dft(out.series).coeffs
    for k in range(1, T):
        K = np.linalg.inv(np.eye(p) - model.B[k - 1])
        npt.assert_allclose(d1[k - 1], K @ d0[k - 1], atol=1e-10)


def test_transfer_ts_real_and_deterministic():
    T = 32
    model = make_experiment1_model(K=3, s=0.5, T=T, seed=4)
    a = generate_transfer_ts(model, T, seed=7)
    b = generate_transfer_ts(model, T, seed=7)
    c = generate_transfer_ts(model, T, seed=8)
    assert a.series.data.dtype == np.float64
    npt.assert_array_equal(a.series.data, b.series.data)
    assert np.abs(a.series.data - c.series.data).max() > 1e-3
    npt.assert_array_equal(a.dag.adj, model.support)


def test_transfer_ts_validation():
    model = zero_model(2, 16)
    with pytest.raises(ValueError, match="even"):
        generate_transfer_ts(model, 15, seed=0)
    with pytest.raises(ValueError, match="frequency count"):
        generate_transfer_ts(model, 32, seed=0)


# ---------------------------------------------------------------- SvarModel


def test_svar_model_validation():
    with pytest.raises(ValueError, match="acyclic"):
        SvarModel(B0=np.array([[0.0, 0.5], [0.5, 0.0]]), lags=())
    with pytest.raises(ValueError, match="nonstationary"):
        SvarModel(B0=np.zeros((2, 2)), lags=(1.5 * np.eye(2),))
    with pytest.raises(ValueError, match="noise_scale"):
        SvarModel(B0=np.zeros((2, 2)), lags=(), noise_scale=0.0)
    with pytest.raises(ValueError, match="square"):
        SvarModel(B0=np.zeros((2, 3)), lags=())


def test_companion_radius_diagonal_ar1():
    model = SvarModel(B0=np.zeros((2, 2)), lags=(0.6 * np.eye(2),))
    npt.assert_allclose(SvarModel.companion_radius(model.B0, model.lags), 0.6)


# ------------------------------------------------------------- generate_svar


def test_svar_residuals_recover_structural_noise():
    model = make_experimentA_model()
    sim = generate_svar(model, T=4000, seed=22)
    x = sim.series.data
    q = len(model.lags)
    eps = x[q:] @ (np.eye(5) - model.B0).T
    for j, Bj in enumerate(model.lags, start=1):
        eps -= x[q - j : -j] @ Bj.T
    # structural residuals: mean zero, std noise_scale, uncorrelated
    assert abs(eps.std() - model.noise_scale) < 0.02
    corr = np.corrcoef(eps.T)
    assert np.abs(corr - np.eye(5)).max() < 0.06


def test_svar_truth_is_lag_union_when_acyclic():
    sim = generate_svar(make_experimentA_model(), T=200, seed=0)
    expect = np.zeros((5, 5), dtype=np.int8)
    for i, j in [(0, 1), (3, 2), (4, 3), (0, 2), (1, 2), (3, 0)]:
        expect[i, j] = 1
    npt.assert_array_equal(sim.dag.adj, expect)


def test_svar_truth_falls_back_to_b0_on_cyclic_union():
    B0 = np.zeros((2, 2))
    B0[1, 0] = 0.5
    B1 = np.zeros((2, 2))
    B1[0, 1] = 0.3  # lag edge closes a 2-cycle in the union
    sim = generate_svar(SvarModel(B0=B0, lags=(B1,)), T=100, seed=1)
    npt.assert_array_equal(sim.dag.adj, (B0 != 0).astype(np.int8))


def test_svar_deterministic_and_burn_in_dropped():
    model = make_experimentA_model()
    a = generate_svar(model, T=150, seed=5)
    b = generate_svar(model, T=150, seed=5)
    npt.assert_array_equal(a.series.data, b.series.data)
    assert a.series.data.shape == (150, 5)


# ------------------------------------------------------------ fixed designs


def test_experimentA_model_pattern():
    m = make_experimentA_model()
    b0_edges = {(0, 1), (3, 2), (4, 3)}
    assert {tuple(e) for e in zip(*np.nonzero(m.B0))} == b0_edges
    assert (m.B0[m.B0 != 0] == 1.0).all()
    lag_edges = {(0, 1), (0, 2), (1, 2), (3, 0), (4, 3)}
    assert {tuple(e) for e in zip(*np.nonzero(m.lags[0]))} == lag_edges
    npt.assert_allclose(m.lags[0][m.lags[0] != 0], 0.35)
    assert m.noise_scale == 0.4


def test_experimentB_model_structure():
    K = 15
    m = make_experimentB_model(K, seed=6)
    blocks = np.kron(np.eye(3, dtype=bool), np.ones((5, 5), dtype=bool))
    assert (m.B0[~blocks] == 0).all()
    vals = np.abs(m.B0[m.B0 != 0])
    assert ((vals >= 0.25) & (vals <= 0.6)).all()
    assert is_acyclic((m.B0 != 0).astype(np.int8))
    assert len(m.lags) == 3
    # every lag couples each node to itself (AR(3) diagonal dynamics)
    for Bj in m.lags:
        assert (np.diag(Bj) != 0).all()
    with pytest.raises(ValueError, match="divisible by 3"):
        make_experimentB_model(10, seed=0)
    with pytest.raises(ValueError, match="3 lags"):
        make_experimentB_model(15, seed=0, q=2)


def test_whitening_filter_gives_inverse_spectrum():
    # S(w) = C(w)^{-1} C(w)^{-H} for the reduced VAR transfer function
    model = make_experimentB_model(6, seed=7)
    p = model.n_series
    inv0 = np.linalg.inv(np.eye(p) - model.B0)
    for omega in (0.3, 1.1, 2.9):
        A = np.eye(p, dtype=complex)
        for j, Bj in enumerate(model.lags, start=1):
            A -= inv0 @ Bj * np.exp(-1j * j * omega)
        H = np.linalg.inv(A) @ inv0
        S = H @ H.conj().T
        C = svar_whitening_filter(model, omega)
        npt.assert_allclose(np.linalg.inv(S), C.conj().T @ C, atol=1e-10)


# --------------------------------------------------- nonlinear and iid data


def test_nonlinear_svar_truth_and_shape():
    sim = generate_nonlinear_svar(T=300, seed=8)
    assert sim.series.data.shape == (300, 4)
    assert np.isfinite(sim.series.data).all()
    expect = np.zeros((4, 4), dtype=np.int8)
    expect[0, 1] = expect[2, 0] = expect[2, 1] = expect[3, 2] = 1
    npt.assert_array_equal(sim.dag.adj, expect)
    assert tuple(sim.order.perm) == (1, 0, 2, 3)
    again = generate_nonlinear_svar(T=300, seed=8)
    npt.assert_array_equal(sim.series.data, again.series.data)


def test_cscm_coefficients_and_truth():
    sim = generate_cscm(p=8, n=50, seed=9)
    assert sim.series.data.shape == (50, 8)
    assert np.iscomplexobj(sim.series.data)
    assert topological_sort(sim.dag.adj) is not None
    # support must respect the stored causal order
    pos = np.empty(8, dtype=int)
    pos[list(sim.order.perm)] = np.arange(8)
    for i, j in zip(*np.nonzero(sim.dag.adj)):
        assert pos[j] < pos[i]
    with pytest.raises(ValueError, match="at least 2"):
        generate_cscm(p=1, n=10, seed=0)


def test_cscm_weight_ranges():
    # least squares on the true parents recovers each row of B; the
    # drawn coefficients keep |Re|, |Im| inside [0.5, 2]
    sim = generate_cscm(p=6, n=100000, seed=9)
    Y = sim.series.data
    checked = 0
    for i in range(6):
        pa = np.nonzero(sim.dag.adj[i])[0]
        if len(pa) == 0:
            continue
        b, *_ = np.linalg.lstsq(Y[:, pa], Y[:, i], rcond=None)
        for v in b:
            assert 0.45 <= abs(v.real) <= 2.05 and 0.45 <= abs(v.imag) <= 2.05
            checked += 1
    assert checked > 0


def test_cscm_root_variance_is_one():
    # rows are (I - B)^{-1} eps with E|eps_i|^2 = 1, so roots keep unit
    # variance while any node with a parent gains at least |b|^2 >= 0.5
    sim = generate_cscm(p=6, n=200000, seed=10)
    Y = sim.series.data
    var = np.mean(np.abs(Y) ** 2, axis=0)
    roots = sim.dag.adj.sum(axis=1) == 0
    assert roots.any() and (~roots).any()
    npt.assert_allclose(var[roots], 1.0, rtol=0.03)
    assert (var[~roots] > 1.4).all()
