"""Sparse simplex selection.

Two routers:

* expert choice: the top-k tokens by a linear score get the (expensive)
  simplicial update, weighted by their score; the rest pass through.
* simplicial path sparse attention: per-token top-k pairwise selections
  (DSA-style scores) are chained along the tuple, so a simplex
  ``(k0; k1, ..., kN)`` is kept iff ``k_i`` selected ``k_{i+1}`` for every
  consecutive pair.

Pair masks here mark the *selected* pairs (1 = kept).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .hypergraph import SimplicialMask, dumps_mask
from .tensor import as_matrix

__all__ = [
    "top_k_indices",
    "expert_choice_step",
    "dsa_scores",
    "pairwise_topk",
    "path_sparse_mask",
    "count_paths",
    "RouterState",
]


def top_k_indices(scores, k: int) -> np.ndarray:
    """Indices of the ``k`` largest finite scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    admissible = np.flatnonzero(np.isfinite(scores))
    if k <= 0 or admissible.size == 0:
        return np.empty(0, dtype=np.int64)
    # stable sort on the negated score keeps lower indices first among ties
    order = admissible[np.argsort(-scores[admissible], kind="stable")]
    return np.sort(order[:k])


def expert_choice_step(
    X,
    omega,
    k: int,
    layer_fn: Callable[[np.ndarray], np.ndarray],
    selected_only: bool = False,
) -> np.ndarray:
    """``X_i + s_i * f(X)_i`` for the top-k tokens by ``s = X @ omega``; other rows untouched.

    With ``selected_only`` the layer sees only the selected rows (in their
    original order), which is what saves compute in practice.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    out = X.copy()
    if k == 0:
        return out
    s = X @ np.asarray(omega, dtype=np.float64).reshape(-1)
    sel = top_k_indices(s, k)
    if selected_only:
        update = np.asarray(layer_fn(X[sel]))
    else:
        update = np.asarray(layer_fn(X))[sel]
    out[sel] = X[sel] + s[sel, None] * update
    return out


def dsa_scores(Q, K, w, causal: SimplicialMask) -> np.ndarray:
    """``s_ij = w_i * relu(<Q_i, K_j>)`` on the edges of an order-1 mask, ``-inf`` elsewhere."""
    Q = as_matrix(Q, "Q")
    K = as_matrix(K, "K")
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    n = Q.shape[0]
    if K.shape != Q.shape or w.shape != (n,):
        raise ValueError(f"inconsistent shapes Q{Q.shape}, K{K.shape}, w{w.shape}")
    if causal.order != 1 or causal.n != n:
        raise ValueError("admissibility mask must be order 1 over the same tokens")
    raw = w[:, None] * np.maximum(Q @ K.T, 0.0)
    return np.where(causal.to_dense(), raw, -np.inf)


def pairwise_topk(scores, k: int) -> np.ndarray:
    """Row-wise selection of the ``k`` best admissible (finite) scores as a 0/1 matrix."""
    scores = as_matrix(scores, "scores")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sel = np.zeros(scores.shape, dtype=np.int8)
    for i, row in enumerate(scores):
        sel[i, top_k_indices(row, k)] = 1
    return sel


def _chains(pair_mask: np.ndarray, order: int):
    succ = [np.flatnonzero(row) for row in pair_mask]

    def extend(path):
        if len(path) == order + 1:
            yield tuple(path)
            return
        for nxt in succ[path[-1]]:
            path.append(int(nxt))
            yield from extend(path)
            path.pop()

    for k0 in range(pair_mask.shape[0]):
        yield from extend([k0])


def path_sparse_mask(pair_mask, order: int) -> SimplicialMask:
    pair_mask = np.asarray(pair_mask) != 0
    n = pair_mask.shape[0]
    if pair_mask.shape != (n, n):
        raise ValueError(f"pair mask must be square, got {pair_mask.shape}")
    empty = np.flatnonzero(~pair_mask.any(axis=1))
    if empty.size:
        raise ValueError(f"token {int(empty[0])} selected no pair; its query would be orphaned")
    return SimplicialMask(n, order, tuple(_chains(pair_mask, order)))


def count_paths(pair_mask, order: int) -> int:
    """Number of length-``order`` chains, by repeated matrix-vector products."""
    a = (np.asarray(pair_mask) != 0).astype(np.int64)
    v = np.ones(a.shape[0], dtype=np.int64)
    for _ in range(order):
        v = a @ v
    return int(v.sum())


@dataclass
class RouterState:
    scores: np.ndarray
    pair_mask: np.ndarray
    k: int
    order: int
    token_scores: np.ndarray | None = None
    weights: np.ndarray | None = None

    @classmethod
    def build(cls, Q, K, w, causal: SimplicialMask, k: int, order: int) -> "RouterState":
        s = dsa_scores(Q, K, w, causal)
        return cls(s, pairwise_topk(s, k), k, order, weights=np.asarray(w, dtype=np.float64))

    def mask(self) -> SimplicialMask:
        return path_sparse_mask(self.pair_mask, self.order)

    def scores_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema=1\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j", "score", "selected"])
        for i in range(self.scores.shape[0]):
            for j in range(self.scores.shape[1]):
                s = self.scores[i, j]
                writer.writerow([i, j, repr(float(s)) if np.isfinite(s) else "-inf", int(self.pair_mask[i, j])])
        return buf.getvalue()

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "router_mask.txt").write_text(dumps_mask(self.mask()))
        (directory / "router_scores.csv").write_text(self.scores_csv())
