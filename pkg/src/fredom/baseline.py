"""Time-domain two-step baseline: VAR residuals, equal-variance ordering,
then SVAR coefficient recovery and a collapsed summary graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dag import SummaryDag, break_cycles
from .ordering import TopologicalOrder, _greedy_order
from .spectral import TimeSeriesMatrix, _default_labels, _freeze

__all__ = ["VarFit", "fit_var", "eqvar_dag", "tseqvar"]


@dataclass(frozen=True)
class VarFit:
    A: tuple
    residuals: np.ndarray
    q: int
    ridge_fallback: bool = False

    def __post_init__(self):
        A = tuple(np.asarray(m, dtype=float) for m in self.A)
        resid = np.asarray(self.residuals, dtype=float)
        if len(A) != self.q:
            raise ValueError("coefficient count must equal the lag order")
        object.__setattr__(self, "A", tuple(_freeze(m) for m in A))
        object.__setattr__(self, "residuals", _freeze(resid))


def fit_var(x: TimeSeriesMatrix, q: int) -> VarFit:
    """Per-equation OLS with intercept on q lags of every component."""
    a = np.asarray(x.data, dtype=float)
    T, p = a.shape
    if q < 0:
        raise ValueError("lag order must be nonnegative")
    if T <= q * p + p:
        raise ValueError("series too short for the requested lag order")
    if q == 0:
        resid = a - a.mean(axis=0)
        return VarFit(A=(), residuals=resid, q=0)
    rows = T - q
    design = np.empty((rows, 1 + q * p))
    design[:, 0] = 1.0
    for j in range(1, q + 1):
        design[:, 1 + (j - 1) * p : 1 + j * p] = a[q - j : T - j]
    target = a[q:]
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    ridge = False
    if rank < design.shape[1]:
        gram = design.T @ design + 1e-8 * np.eye(design.shape[1])
        coef = np.linalg.solve(gram, design.T @ target)
        ridge = True
    resid = target - design @ coef
    A = tuple(coef[1 + (j - 1) * p : 1 + j * p].T.copy() for j in range(1, q + 1))
    return VarFit(A=A, residuals=resid, q=q, ridge_fallback=ridge)


def eqvar_dag(residuals: np.ndarray, prune: float = 0.1) -> tuple[TopologicalOrder, np.ndarray]:
    """Order by iterated minimum conditional variance, then per-node OLS.

    Coefficients with magnitude below `prune` are zeroed, which defines
    the recovered instantaneous support.
    """
    r = np.asarray(residuals, dtype=float)
    n, p = r.shape
    if n <= p:
        raise ValueError("need more rows than components")
    centered = r - r.mean(axis=0)
    cov = centered.T @ centered / n
    selected = _greedy_order(cov).tolist()
    B0 = np.zeros((p, p))
    for m, v in enumerate(selected):
        if m == 0:
            continue
        pred = selected[:m]
        coef, *_ = np.linalg.lstsq(centered[:, pred], centered[:, v], rcond=None)
        coef[np.abs(coef) < prune] = 0.0
        B0[v, pred] = coef
    return TopologicalOrder(perm=tuple(selected), support=1.0), B0


def tseqvar(
    x: TimeSeriesMatrix,
    q: int = 1,
    prune: float = 0.1,
    lag_thresh: float = 0.1,
) -> tuple[SummaryDag, list]:
    """VAR + equal-variance recovery of B0, then B_i = (I - B0) A_i.

    The returned graph collapses instantaneous and thresholded lag
    supports; cycles introduced by lag edges are broken by dropping the
    lowest-magnitude lag edges.
    """
    vf = fit_var(x, q)
    order, B0 = eqvar_dag(vf.residuals, prune=prune)
    p = B0.shape[0]
    eye = np.eye(p)
    B = [(eye - B0) @ Ai for Ai in vf.A]
    inst = B0 != 0
    lag_strength = np.zeros((p, p))
    for Bi in B:
        lag_strength = np.maximum(lag_strength, np.abs(Bi))
    np.fill_diagonal(lag_strength, 0.0)
    lagged = lag_strength > lag_thresh
    adj = (inst | lagged).astype(np.int8)
    adj, _ = break_cycles(adj, lag_strength, droppable=~inst)
    labels = x.labels or _default_labels(p)
    dag = SummaryDag(adj=adj, labels=tuple(labels))
    return dag, [B0] + B
