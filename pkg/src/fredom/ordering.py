"""Equal-variance topological ordering from spectral matrices.

At each frequency the next source is the unselected component whose
conditional variance given the already-selected set is smallest; the
per-frequency orderings are then reduced to a single consensus permutation
by (weighted) majority vote.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import SpectralStack, _freeze

__all__ = [
    "OrderMatrix",
    "TopologicalOrder",
    "conditional_variance",
    "order_per_frequency",
    "consensus_order",
]

# two conditional variances closer than this (relatively) count as tied
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class OrderMatrix:
    """Per-frequency orderings; rows[k] is the greedy order at frequency k."""

    rows: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=int)
        if r.ndim != 2:
            raise ValueError("rows must be M x p")
        p = r.shape[1]
        for row in r:
            if not np.array_equal(np.sort(row), np.arange(p)):
                raise ValueError("every row must be a permutation of 0..p-1")
        object.__setattr__(self, "rows", _freeze(r))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (r.shape[0],) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("weights must be non-negative with positive sum")
            object.__setattr__(self, "weights", _freeze(w))


@dataclass(frozen=True)
class TopologicalOrder:
    """Consensus permutation and the vote fraction that supports it."""

    perm: tuple[int, ...]
    support: float

    def __post_init__(self):
        p = len(self.perm)
        if sorted(self.perm) != list(range(p)):
            raise ValueError("perm must be a permutation of 0..p-1")
        if not (0.0 <= self.support <= 1.0):
            raise ValueError("support must lie in [0, 1]")


def conditional_variance(S: np.ndarray, selected: Sequence[int], j: int) -> float:
    """Schur complement S_jj - S_{j,sel} S_{sel,sel}^-1 S_{sel,j} (real).

    A Moore-Penrose pseudo-inverse with cutoff 1e-10 * largest singular
    value stands in for the inverse, so singular selected blocks degrade
    gracefully instead of failing.
    """
    S = np.asarray(S)
    sel = list(selected)
    if j in sel:
        raise ValueError(f"index {j} already selected")
    if not sel:
        return float(S[j, j].real)
    A = S[np.ix_(sel, sel)]
    b = S[sel, j]
    Ainv = np.linalg.pinv(A, rcond=1e-10, hermitian=True)
    val = S[j, j] - np.conj(b) @ Ainv @ b
    return float(val.real)


def _greedy_order(S: np.ndarray) -> np.ndarray:
    p = S.shape[0]
    remaining = list(range(p))
    order = []
    for _ in range(p):
        vals = np.array([conditional_variance(S, order, j) for j in remaining])
        m = vals.min()
        tied = [
            remaining[i]
            for i, v in enumerate(vals)
            if v - m <= _TIE_RTOL * max(abs(m), abs(v))
        ]
        pick = min(tied)
        order.append(pick)
        remaining.remove(pick)
    return np.array(order, dtype=int)


def order_per_frequency(
    stack: SpectralStack, weights: Sequence[float] | None = None
) -> OrderMatrix:
    """Run the greedy minimum-conditional-variance order at every frequency."""
    rows = np.stack([_greedy_order(S) for S in stack.mats])
    w = None if weights is None else np.asarray(weights, dtype=float)
    return OrderMatrix(rows=rows, weights=w)


def consensus_order(theta: OrderMatrix) -> TopologicalOrder:
    """Modal row of the order matrix; ties go to the earliest frequency."""
    rows = theta.rows
    M = rows.shape[0]
    w = theta.weights if theta.weights is not None else np.full(M, 1.0 / M)
    total = float(w.sum())
    tally: dict[tuple[int, ...], float] = {}
    first_seen: dict[tuple[int, ...], int] = {}
    for k in range(M):
        key = tuple(int(v) for v in rows[k])
        tally[key] = tally.get(key, 0.0) + float(w[k])
        first_seen.setdefault(key, k)
    best = max(tally, key=lambda key: (tally[key], -first_seen[key]))
    return TopologicalOrder(perm=best, support=tally[best] / total)
