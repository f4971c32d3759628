"""Summary DAG container and small graph utilities.

Adjacency convention everywhere: ``adj[i][j] == 1`` means there is an edge
j -> i (row = child, column = parent).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import _default_labels, _freeze

__all__ = [
    "SummaryDag",
    "is_acyclic",
    "topological_sort",
    "reachability",
    "break_cycles",
]


def is_acyclic(adj: np.ndarray) -> bool:
    return topological_sort(adj) is not None


def topological_sort(adj: np.ndarray) -> list[int] | None:
    """Kahn's algorithm; returns None when the graph has a cycle.

    Among simultaneously available nodes the smallest index goes first, so
    the result is deterministic.
    """
    a = np.asarray(adj) != 0
    p = a.shape[0]
    indeg = a.sum(axis=1)  # parents of i sit in row i
    out: list[int] = []
    avail = sorted(np.flatnonzero(indeg == 0).tolist())
    indeg = indeg.copy()
    while avail:
        n = avail.pop(0)
        out.append(n)
        for child in np.flatnonzero(a[:, n]):
            indeg[child] -= 1
            if indeg[child] == 0:
                avail.append(int(child))
        avail.sort()
    return out if len(out) == p else None


def reachability(adj: np.ndarray) -> np.ndarray:
    """reach[a, b] is True when a directed path a -> ... -> b exists."""
    child = (np.asarray(adj) != 0).T  # child[a, b]: edge a -> b
    p = child.shape[0]
    reach = child.copy()
    for _ in range(p):
        new = reach | (reach @ child)
        if np.array_equal(new, reach):
            break
        reach = new
    return reach


def break_cycles(
    adj: np.ndarray,
    weight: np.ndarray,
    droppable: np.ndarray | None = None,
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Remove lowest-|weight| droppable edges until the graph is acyclic.

    Only edges on some directed cycle are candidates; returns the pruned
    adjacency and the dropped (child, parent) pairs.
    """
    a = (np.asarray(adj) != 0).astype(int)
    w = np.abs(np.asarray(weight, dtype=complex))
    drop_ok = np.ones_like(a, dtype=bool) if droppable is None else np.asarray(droppable, dtype=bool)
    dropped: list[tuple[int, int]] = []
    while not is_acyclic(a):
        reach = reachability(a)
        # edge j -> i lies on a cycle iff i reaches j, i.e. reach[i, j]
        on_cycle = (a != 0) & reach & drop_ok
        if not on_cycle.any():
            raise ValueError("cycle cannot be broken with the allowed edges")
        cand = np.where(on_cycle, w, np.inf)
        i, j = np.unravel_index(np.argmin(cand), cand.shape)
        a[i, j] = 0
        dropped.append((int(i), int(j)))
    return a, dropped


@dataclass(frozen=True)
class SummaryDag:
    """Directed acyclic summary graph over the series components."""

    adj: np.ndarray
    labels: tuple[str, ...] = ()
    weights: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.adj)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        a = (a != 0).astype(np.int8)
        if np.any(np.diag(a)):
            raise ValueError("self-loops are not allowed")
        if not is_acyclic(a):
            raise ValueError("adjacency contains a directed cycle")
        object.__setattr__(self, "adj", _freeze(a))
        labels = self.labels or _default_labels(a.shape[0])
        if len(labels) != a.shape[0]:
            raise ValueError("label count does not match adjacency size")
        object.__setattr__(self, "labels", tuple(labels))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=complex)
            if w.shape != a.shape:
                raise ValueError("weights shape must match adjacency")
            object.__setattr__(self, "weights", _freeze(w))

    @property
    def n_nodes(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum())

    def edges(self) -> list[tuple[int, int]]:
        """Edges as (parent, child) index pairs, sorted."""
        child, parent = np.nonzero(self.adj)
        return sorted(zip(parent.tolist(), child.tolist()))

    def parents(self, i: int) -> list[int]:
        return np.flatnonzero(self.adj[i]).tolist()
