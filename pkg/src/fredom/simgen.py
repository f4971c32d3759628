"""Ground-truth generators for the simulation studies.

Covers four data regimes: complex/real series with a prescribed spectrum
and frequency-constant DAG (transfer-function model), linear SVARs with
contemporaneous effects, a small nonlinear SVAR, and iid complex
structural data.  All generators are pure functions of (model, T, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dag import SummaryDag, topological_sort
from .ordering import TopologicalOrder
from .spectral import TimeSeriesMatrix, _default_labels, _freeze

__all__ = [
    "FrequencyDagModel",
    "SvarModel",
    "GroundTruth",
    "generate_transfer_ts",
    "transfer_spectrum",
    "make_experiment1_model",
    "generate_svar",
    "make_experimentA_model",
    "make_experimentB_model",
    "svar_whitening_filter",
    "generate_nonlinear_svar",
    "generate_cscm",
]


@dataclass(frozen=True)
class FrequencyDagModel:
    """Frequency-indexed coefficients B(w_k) sharing one DAG support.

    B[k-1] holds B(w_k) for k = 1..T; entry (i, j) is the weight of j in
    the equation for i, so the support matrix reads adj[i][j] = 1 for an
    edge j -> i.
    """

    B: np.ndarray
    support: np.ndarray
    order: TopologicalOrder

    def __post_init__(self):
        B = np.ascontiguousarray(np.asarray(self.B, dtype=complex))
        support = np.asarray(self.support, dtype=np.int8)
        if B.ndim != 3 or B.shape[1] != B.shape[2]:
            raise ValueError("B must be a T x p x p stack")
        p = B.shape[1]
        if support.shape != (p, p):
            raise ValueError("support shape does not match B")
        if ((B != 0) & (support[None] == 0)).any():
            raise ValueError("nonzero coefficient outside the declared support")
        pos = np.empty(p, dtype=int)
        pos[np.asarray(self.order.perm)] = np.arange(p)
        rows, cols = np.nonzero(support)
        if (pos[rows] <= pos[cols]).any():
            raise ValueError("support is not strictly lower triangular in the given order")
        object.__setattr__(self, "B", _freeze(B))
        object.__setattr__(self, "support", _freeze(support))

    @property
    def n_freqs(self) -> int:
        return self.B.shape[0]

    @property
    def n_series(self) -> int:
        return self.B.shape[1]

    @property
    def hermitian(self) -> bool:
        """True when B(w_k) = conj(B(w_{T-k})), so a real series results."""
        B = self.B
        T = B.shape[0]
        k = np.arange(1, T)
        paired = np.abs(B[k - 1] - np.conj(B[T - k - 1])).max() if T > 1 else 0.0
        ends = max(np.abs(B[T - 1].imag).max(), 0.0)
        scale = max(np.abs(B).max(), 1.0)
        return bool(max(paired, ends) <= 1e-12 * scale)


@dataclass(frozen=True)
class SvarModel:
    """Linear SVAR with instantaneous matrix B0 and lag matrices B_1..B_q."""

    B0: np.ndarray
    lags: tuple
    noise_scale: float = 1.0

    def __post_init__(self):
        B0 = np.asarray(self.B0, dtype=float)
        lags = tuple(np.asarray(L, dtype=float) for L in self.lags)
        p = B0.shape[0]
        if B0.shape != (p, p):
            raise ValueError("B0 must be square")
        if any(L.shape != (p, p) for L in lags):
            raise ValueError("lag matrices must match B0's shape")
        if self.noise_scale <= 0:
            raise ValueError("noise_scale must be positive")
        if topological_sort((B0 != 0).astype(int)) is None:
            raise ValueError("B0 support must be acyclic")
        radius = self.companion_radius(B0, lags)
        if radius >= 1.0:
            raise ValueError(f"nonstationary model: companion spectral radius {radius:.4f} >= 1")
        object.__setattr__(self, "B0", _freeze(B0))
        object.__setattr__(self, "lags", tuple(_freeze(L) for L in lags))

    @staticmethod
    def companion_radius(B0: np.ndarray, lags: tuple) -> float:
        p = B0.shape[0]
        q = len(lags)
        if q == 0:
            return 0.0
        inv = np.linalg.inv(np.eye(p) - B0)
        A = [inv @ L for L in lags]
        comp = np.zeros((p * q, p * q))
        comp[:p] = np.hstack(A)
        if q > 1:
            comp[p:, : p * (q - 1)] = np.eye(p * (q - 1))
        return float(np.abs(np.linalg.eigvals(comp)).max())

    @property
    def n_series(self) -> int:
        return self.B0.shape[0]


@dataclass(frozen=True)
class GroundTruth:
    series: TimeSeriesMatrix
    dag: SummaryDag
    order: TopologicalOrder
    seed: int

    def __post_init__(self):
        topological_sort(self.dag.adj)


def _support_dag(support: np.ndarray, labels=None) -> SummaryDag:
    p = support.shape[0]
    return SummaryDag(adj=np.asarray(support, dtype=np.int8), labels=labels or _default_labels(p))


def transfer_spectrum(model: FrequencyDagModel, k: int) -> np.ndarray:
    """Covariance of the DFT row d(w_k) under the transfer model, K K^H."""
    p = model.n_series
    K = np.linalg.inv(np.eye(p) - model.B[k - 1])
    return K @ K.conj().T


def generate_transfer_ts(model: FrequencyDagModel, T: int, seed: int) -> GroundTruth:
    """Draw X(t) = sum_k (I - B(w_k))^{-1} e^{2 pi i w_k t} eps(k).

    eps(k) ~ N_c(0, (1/T) I) for k = 1..T/2-1 with eps(T-k) = conj(eps(k));
    real N(0, (1/T) I) at k = T/2 and k = T.  Under the Hermitian pairing
    of B the output is real.
    """
    if T % 2 != 0:
        raise ValueError("T must be even")
    if model.n_freqs != T:
        raise ValueError("model frequency count does not match T")
    p = model.n_series
    rng = np.random.default_rng(seed)
    eps = np.zeros((T, p), dtype=complex)  # row k-1 is eps(k)
    half = T // 2
    scale = 1.0 / np.sqrt(2 * T)
    for k in range(1, half):
        z = rng.normal(size=p) * scale + 1j * rng.normal(size=p) * scale
        eps[k - 1] = z
        eps[T - k - 1] = np.conj(z)
    eps[half - 1] = rng.normal(size=p) / np.sqrt(T)
    eps[T - 1] = rng.normal(size=p) / np.sqrt(T)

    rows = np.empty_like(eps)
    for k in range(1, T + 1):
        K = np.linalg.inv(np.eye(p) - model.B[k - 1])
        rows[k - 1] = K @ eps[k - 1]
    # X(t) = sum_k e^{2 pi i k t / T} rows[k-1]; k = T plays the role k = 0
    shifted = np.roll(rows, 1, axis=0)
    x = T * np.roll(np.fft.ifft(shifted, axis=0), -1, axis=0)
    if model.hermitian:
        resid = np.abs(x.imag).max()
        if resid > 1e-9 * max(np.abs(x.real).max(), 1.0):
            raise AssertionError(f"imaginary residual {resid:.3e} on a real-series model")
        x = x.real
    series = TimeSeriesMatrix(data=x)
    return GroundTruth(
        series=series,
        dag=_support_dag(model.support),
        order=model.order,
        seed=seed,
    )


def _signed_uniform(rng, lo: float, hi: float, size) -> np.ndarray:
    mag = rng.uniform(lo, hi, size=size)
    sign = rng.integers(0, 2, size=size) * 2 - 1
    return mag * sign


def make_experiment1_model(K: int, s: float, T: int, seed: int) -> FrequencyDagModel:
    """Random lower-triangular support with trigonometric frequency response.

    Support entries are Bernoulli(s); each edge carries
    c1 cos(4 pi w) + 1.2 i c2 sin(2 pi w) with c1, c2 drawn once per edge
    from U(+-[0.1, 1]), which keeps the DAG fixed across frequencies and
    pairs conjugately at mirrored frequencies.
    """
    if not 0 < s < 1:
        raise ValueError("sparsity must be in (0, 1)")
    rng = np.random.default_rng(seed)
    support = np.tril(rng.random(size=(K, K)) < s, -1).astype(np.int8)
    c1 = _signed_uniform(rng, 0.1, 1.0, (K, K)) * support
    c2 = _signed_uniform(rng, 0.1, 1.0, (K, K)) * support
    w = np.arange(1, T + 1) / T
    B = (
        c1[None] * np.cos(4 * np.pi * w)[:, None, None]
        + 1.2j * c2[None] * np.sin(2 * np.pi * w)[:, None, None]
    )
    order = TopologicalOrder(perm=tuple(range(K)), support=1.0)
    return FrequencyDagModel(B=B, support=support, order=order)


def generate_svar(model: SvarModel, T: int, seed: int, burn_in: int = 500) -> GroundTruth:
    """Simulate X(t) = (I - B0)^{-1} (sum_j B_j X(t-j) + eps(t)).

    The stored truth is the frequency-domain summary DAG.  The noise
    covariance is a scalar multiple of the identity, so the inverse
    spectrum is C(w)^H C(w) up to scale, with C the whitening filter; C
    is a matrix trig polynomial, and an entry vanishes at every
    frequency only when all its lag coefficients do.  Whenever the
    off-diagonal union of the instantaneous and lag supports is acyclic,
    C(w) is triangular under the union's order and the summary DAG is
    exactly that union (for the clustered design the union collapses to
    B0's own pattern).  For union graphs with cycles no triangular
    reduction exists and the B0-support DAG is kept as a proxy.
    """
    p = model.n_series
    q = len(model.lags)
    rng = np.random.default_rng(seed)
    inv = np.linalg.inv(np.eye(p) - model.B0)
    total = T + burn_in
    x = np.zeros((total + q, p))
    noise = rng.normal(size=(total, p)) * model.noise_scale
    for t in range(total):
        drive = noise[t].copy()
        for j, Bj in enumerate(model.lags, start=1):
            drive += Bj @ x[q + t - j]
        x[q + t] = inv @ drive
    series = TimeSeriesMatrix(data=x[q + burn_in :])
    union = model.B0 != 0
    for Bj in model.lags:
        union |= Bj != 0
    np.fill_diagonal(union, False)
    support = union.astype(np.int8)
    perm = topological_sort(support)
    if perm is None:
        support = (model.B0 != 0).astype(np.int8)
        perm = topological_sort(support)
    return GroundTruth(
        series=series,
        dag=_support_dag(support),
        order=TopologicalOrder(perm=tuple(perm), support=1.0),
        seed=seed,
    )


def make_experimentA_model(scale: float = 0.35) -> SvarModel:
    """Fixed 5-node lag-1 design with instantaneous edges 2->1, 3->4, 4->5.

    B0 carries the adjacency pattern with unit weights; the lag matrix
    carries its pattern scaled by `scale`, keeping the frequency
    variation of the factor moderate next to the instantaneous effects.
    The union of the two graphs is acyclic, so the companion matrix is
    nilpotent and the process is stationary at any scale.
    """
    B0 = np.zeros((5, 5))
    B0[0, 1] = 1.0
    B0[3, 2] = 1.0
    B0[4, 3] = 1.0
    B1 = np.zeros((5, 5))
    for i, j in [(0, 1), (0, 2), (1, 2), (3, 0), (4, 3)]:
        B1[i, j] = scale
    return SvarModel(B0=B0, lags=(B1,), noise_scale=0.4)


def make_experimentB_model(
    K: int,
    seed: int,
    q: int = 3,
    density: float = 0.7,
    b0_range: tuple = (0.25, 0.6),
    lag_gain: float = 0.35,
) -> SvarModel:
    """Clustered SVAR(q): 3 blocks of K/3 nodes, no cross-cluster edges.

    Every lag matrix shares B0's within-cluster pattern plus a diagonal,
    so with unit noise the inverse spectrum carries the coefficient
    pattern and its triangular factor the instantaneous pattern; the
    frequency-domain summary DAG therefore equals the B0 DAG.

    Each node gets its own AR(3) diagonal dynamics built from a real
    root and a damped oscillatory pair; oscillation radii are drawn
    bimodally (fast near 1, slow near 0.3) so per-node spectra differ
    sharply.  The reduced form stays triangular, hence the companion
    eigenvalues are exactly these roots and the process is stationary
    by construction.
    """
    if K % 3 != 0:
        raise ValueError("K must be divisible by 3")
    if q < 3:
        raise ValueError("the design needs at least 3 lags")
    rng = np.random.default_rng(seed)
    m = K // 3
    B0 = np.zeros((K, K))
    for c in range(3):
        lo = c * m
        block = np.tril(rng.random(size=(m, m)) < density, -1)
        vals = _signed_uniform(rng, b0_range[0], b0_range[1], (m, m))
        B0[lo : lo + m, lo : lo + m] = block * vals
    pattern = (B0 != 0).astype(float)
    # (1 - a L)(1 - 2 r cos(th) L + r^2 L^2) expanded per node
    a = rng.uniform(0.1, 0.5, size=K)
    fast = rng.random(K) < 0.6
    r = np.where(fast, rng.uniform(0.9, 0.98, K), rng.uniform(0.2, 0.4, K))
    th = rng.uniform(np.pi / 2, 5 * np.pi / 6, size=K)
    selfs = [
        a + 2 * r * np.cos(th),
        -(2 * a * r * np.cos(th) + r**2),
        a * r**2,
    ]
    lags = []
    for j in range(1, q + 1):
        Bj = pattern * _signed_uniform(rng, 0.5, 1.0, (K, K)) * lag_gain
        Bj += np.diag(selfs[j - 1]) if j <= 3 else 0.0
        lags.append(Bj)
    return SvarModel(B0=B0, lags=tuple(lags), noise_scale=1.0)


def svar_whitening_filter(model: SvarModel, omega: float) -> np.ndarray:
    """C(w) = (I - B0) - sum_j B_j e^{-i j w}; the inverse spectrum at w
    is C^H C when the structural noise covariance is the identity."""
    p = model.n_series
    C = (np.eye(p) - model.B0).astype(complex)
    for j, Bj in enumerate(model.lags, start=1):
        C -= Bj * np.exp(-1j * j * omega)
    return C


def generate_nonlinear_svar(T: int, seed: int, burn_in: int = 500) -> GroundTruth:
    """Four-variable nonlinear system with summary edges 2->1, 1->3, 2->3, 3->4."""
    rng = np.random.default_rng(seed)
    b = _signed_uniform(rng, 0.1, 0.4, 9)
    b11, b12, b13, b22, b31, b32, b33, b41, b42 = b
    total = T + burn_in
    x = np.zeros((total + 1, 4))
    u = rng.normal(size=(total, 4))
    for t in range(1, total + 1):
        prev = x[t - 1]
        x2 = b22 * prev[1] + u[t - 1, 1]
        x1 = b11 * x2**2 + b12 * prev[0] + b13 * prev[1] ** 2 + u[t - 1, 0]
        x3 = b31 * x1**3 + b32 * prev[1] ** 2 + b33 * prev[2] + u[t - 1, 2]
        x4 = np.exp(np.clip(b41 * x3, -10.0, 10.0)) + b42 * prev[3] + u[t - 1, 3]
        x[t] = (x1, x2, x3, x4)
    adj = np.zeros((4, 4), dtype=np.int8)
    adj[0, 1] = 1  # 2 -> 1
    adj[2, 0] = 1  # 1 -> 3
    adj[2, 1] = 1  # 2 -> 3
    adj[3, 2] = 1  # 3 -> 4
    return GroundTruth(
        series=TimeSeriesMatrix(data=x[1 + burn_in :]),
        dag=_support_dag(adj),
        order=TopologicalOrder(perm=(1, 0, 2, 3), support=1.0),
        seed=seed,
    )


def generate_cscm(p: int, n: int, seed: int) -> GroundTruth:
    """iid rows Y = (I - B)^{-1} eps with eps ~ N_c(0, I).

    The DAG is Erdos-Renyi with expected edge count p; coefficient real
    and imaginary parts are drawn from +-[0.5, 2].
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(p)
    prob = min(2.0 / (p - 1), 1.0)
    B = np.zeros((p, p), dtype=complex)
    support = np.zeros((p, p), dtype=np.int8)
    for a in range(p):
        for b_ in range(a):
            # perm[b_] precedes perm[a]; candidate edge perm[b_] -> perm[a]
            if rng.random() < prob:
                i, j = perm[a], perm[b_]
                support[i, j] = 1
                B[i, j] = _signed_uniform(rng, 0.5, 2.0, ()) + 1j * _signed_uniform(rng, 0.5, 2.0, ())
    K = np.linalg.inv(np.eye(p) - B)
    eps = (rng.normal(size=(n, p)) + 1j * rng.normal(size=(n, p))) / np.sqrt(2)
    Y = eps @ K.T
    return GroundTruth(
        series=TimeSeriesMatrix(data=Y),
        dag=_support_dag(support),
        order=TopologicalOrder(perm=tuple(perm), support=1.0),
        seed=seed,
    )
