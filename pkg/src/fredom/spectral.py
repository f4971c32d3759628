"""Discrete Fourier transforms and smoothed spectral density estimation.

The DFT convention used throughout is

    d(w_k) = T**-0.5 * sum_{t=1..T} X(t) * exp(-2i*pi*(k/T)*t),   k = 1..T,

so Parseval holds with constant 1 and, for real input, d(w_k) equals the
conjugate of d(w_{T-k}).  Column means are subtracted before transforming,
which zeroes the DC row (k = T).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeSeriesMatrix",
    "FourierStack",
    "SpectralStack",
    "dft",
    "sample_spectral_stack",
    "choose_window",
]


def _default_labels(p: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(p))


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """T x p array of observations, rows indexed by time t = 1..T."""

    data: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim != 2:
            raise ValueError(f"series must be 2-d (T x p), got shape {a.shape}")
        if not np.iscomplexobj(a):
            a = a.astype(float, copy=True)
        else:
            a = a.astype(complex, copy=True)
        if not np.all(np.isfinite(a.view(float) if np.iscomplexobj(a) else a)):
            raise ValueError("series contains NaN or Inf")
        object.__setattr__(self, "data", _freeze(a))
        labels = self.labels or _default_labels(a.shape[1])
        if len(labels) != a.shape[1]:
            raise ValueError("label count does not match column count")
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def n_times(self) -> int:
        return self.data.shape[0]

    @property
    def n_series(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class FourierStack:
    """DFT coefficients; row k-1 holds d(w_k) at w_k = k/T for k = 1..T."""

    coeffs: np.ndarray
    is_real_input: bool
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2:
            raise ValueError("coefficient stack must be 2-d (T x p)")
        object.__setattr__(self, "coeffs", _freeze(c))
        labels = self.labels or _default_labels(c.shape[1])
        object.__setattr__(self, "labels", tuple(labels))
        if self.is_real_input:
            T = c.shape[0]
            k = np.arange(1, T)  # pairs (k, T-k); row T-1 is DC
            mism = np.abs(c[k - 1] - np.conj(c[T - k - 1])).max() if T > 1 else 0.0
            scale = max(np.abs(c).max(), 1.0)
            if mism > 1e-8 * scale:
                raise ValueError(
                    "conjugate symmetry violated for allegedly real input "
                    f"(max deviation {mism:.3e})"
                )

    @property
    def n_freqs(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_series(self) -> int:
        return self.coeffs.shape[1]

    def frequency(self, k: int) -> float:
        """Frequency w_k = k/T for the 1-based row index k."""
        return k / self.coeffs.shape[0]


@dataclass(frozen=True)
class SpectralStack:
    """Smoothed sample spectral matrices on the window-center grid.

    mats[k] averages N = 2*m_t + 1 periodogram outer products around the
    center frequency freqs[k] = ((k)*N + m_t + 1)/T (0-based k); every
    matrix is Hermitian positive semidefinite.
    """

    mats: np.ndarray
    freqs: np.ndarray
    m_t: int
    n_window: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.mats, dtype=complex)
        f = np.asarray(self.freqs, dtype=float)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ValueError("mats must be M x p x p")
        if f.shape != (m.shape[0],):
            raise ValueError("freqs length must match number of matrices")
        herm = np.abs(m - np.conj(np.transpose(m, (0, 2, 1)))).max()
        if herm > 1e-10 * max(np.abs(m).max(), 1.0):
            raise ValueError(f"spectral matrices not Hermitian (dev {herm:.3e})")
        eigs = np.linalg.eigvalsh(m)
        scale = max(eigs.max(initial=0.0), 1.0)
        if eigs.min() < -1e-10 * scale:
            raise ValueError(
                f"spectral matrices not PSD (min eigenvalue {eigs.min():.3e})"
            )
        if eigs.min() < 0:
            # clip tiny negative eigenvalues from floating-point noise
            w, V = np.linalg.eigh(m)
            w = np.clip(w, 0.0, None)
            m = np.einsum("kij,kj,klj->kil", V, w, np.conj(V))
            m = 0.5 * (m + np.conj(np.transpose(m, (0, 2, 1))))
        object.__setattr__(self, "mats", _freeze(m))
        object.__setattr__(self, "freqs", _freeze(f))
        labels = self.labels or _default_labels(m.shape[1])
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def n_freqs(self) -> int:
        return self.mats.shape[0]

    @property
    def n_series(self) -> int:
        return self.mats.shape[1]


def dft(x: TimeSeriesMatrix) -> FourierStack:
    """Transform a series to its DFT coefficient stack.

    Column means are removed first, so the DC row (k = T) is zero.
    """
    a = x.data
    T = a.shape[0]
    if T < 2:
        raise ValueError("need at least two time points")
    centered = a - a.mean(axis=0, keepdims=True)
    F = np.fft.fft(centered, axis=0)
    k = np.arange(1, T + 1)
    rows = F[k % T]
    phase = np.exp(-2j * np.pi * k / T)
    coeffs = phase[:, None] * rows / np.sqrt(T)
    return FourierStack(
        coeffs=coeffs,
        is_real_input=not np.iscomplexobj(a),
        labels=x.labels,
    )


def sample_spectral_stack(d: FourierStack, m_t: int) -> SpectralStack:
    """Average periodogram outer products over disjoint windows of length
    N = 2*m_t + 1.

    Window k (1-based) covers raw rows (k-1)*N + m_t + 1 + l for
    l = -m_t..m_t, i.e. raw rows (k-1)*N + 1 .. k*N, and is centered at
    w = ((k-1)*N + m_t + 1)/T.  The number of windows is
    M = floor((T/2 - m_t - 1)/N), which keeps the Nyquist and DC rows out
    of every window.
    """
    if m_t < 0:
        raise ValueError("m_t must be non-negative")
    c = d.coeffs
    T, p = c.shape
    N = 2 * m_t + 1
    M = int(np.floor((T / 2 - m_t - 1) / N))
    if M < 2:
        raise ValueError(
            f"m_t={m_t} too large for T={T}: only {M} smoothing windows fit; "
            "need at least 2"
        )
    if m_t < p - 1:
        warnings.warn(
            f"m_t={m_t} < p-1={p - 1}: sample spectral matrices may be "
            "singular or badly conditioned",
            UserWarning,
            stacklevel=2,
        )
    # raw rows 1..M*N (1-based) -> coeff indices 0..M*N-1, grouped per window
    block = c[: M * N].reshape(M, N, p)
    mats = np.einsum("mni,mnj->mij", block, np.conj(block)) / N
    mats = 0.5 * (mats + np.conj(np.transpose(mats, (0, 2, 1))))
    centers = (np.arange(M) * N + m_t + 1) / T
    return SpectralStack(mats=mats, freqs=centers, m_t=m_t, n_window=N, labels=d.labels)


def choose_window(T: int, M_target: int) -> int:
    """Largest half-window m_t whose window count still reaches M_target."""
    if M_target < 2:
        raise ValueError("M_target must be at least 2")
    best = -1
    for m_t in range(T // 2 + 1):
        N = 2 * m_t + 1
        M = int(np.floor((T / 2 - m_t - 1) / N))
        if M >= M_target:
            best = m_t
    if best < 0:
        raise ValueError(
            f"no window size achieves {M_target} windows for T={T}; "
            "need T >= 4*M_target"
        )
    return best
