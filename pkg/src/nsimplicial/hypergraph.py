"""Simplicial masks as N-uniform directed hypergraphs.

An edge is an (N+1)-tuple ``(target, source_1, ..., source_N)``. Node ``j``
is one step reachable from a node set ``S`` when some edge has target ``j``
and at least one source in ``S``.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "SimplicialMask",
    "causal_mask",
    "full_mask",
    "mask_from_graph",
    "reachable_from",
    "distances_from",
    "is_quasi_strongly_connected",
    "radius",
    "has_center_self_loop",
    "clique_projection",
    "normalized_laplacian_gap",
    "Tradeoff",
    "tradeoff_diagnostic",
    "dumps_mask",
    "loads_mask",
    "save_mask",
    "load_mask",
]

# Dense boolean views are only materialised below this many entries.
DENSE_LIMIT = 2**24


@dataclass(frozen=True)
class SimplicialMask:
    n: int
    order: int
    edges: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        clean = set()
        for e in self.edges:
            e = tuple(int(v) for v in e)
            if len(e) != self.order + 1:
                raise ValueError(f"edge {e} has {len(e)} entries, expected {self.order + 1}")
            if any(v < 0 or v >= self.n for v in e):
                raise ValueError(f"edge {e} has an index outside [0, {self.n})")
            clean.add(e)
        object.__setattr__(self, "edges", tuple(sorted(clean)))

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, edge) -> bool:
        edge = tuple(edge)
        i = bisect.bisect_left(self.edges, edge)
        return i < len(self.edges) and self.edges[i] == edge

    def targets(self) -> set[int]:
        return {e[0] for e in self.edges}

    def uncovered_targets(self) -> list[int]:
        """Nodes that are the target of no edge (their softmax row would be empty)."""
        covered = self.targets()
        return [v for v in range(self.n) if v not in covered]

    def to_dense(self) -> np.ndarray:
        size = self.n ** (self.order + 1)
        if size > DENSE_LIMIT:
            raise MemoryError(f"dense mask would hold {size} entries (limit {DENSE_LIMIT})")
        dense = np.zeros((self.n,) * (self.order + 1), dtype=bool)
        if self.edges:
            dense[tuple(np.array(self.edges).T)] = True
        return dense

    @classmethod
    def from_dense(cls, dense) -> "SimplicialMask":
        dense = np.asarray(dense, dtype=bool)
        n = dense.shape[0]
        if dense.shape != (n,) * dense.ndim or dense.ndim < 2:
            raise ValueError(f"dense mask must be cubical with >= 2 axes, got {dense.shape}")
        edges = [tuple(int(v) for v in idx) for idx in np.argwhere(dense)]
        return cls(n, dense.ndim - 1, tuple(edges))


def causal_mask(n: int, order: int) -> SimplicialMask:
    """Every simplex whose sources are all at or before its target."""
    edges = []
    for target in range(n):
        for sources in itertools.product(range(target + 1), repeat=order):
            edges.append((target,) + sources)
    return SimplicialMask(n, order, tuple(edges))


def full_mask(n: int, order: int) -> SimplicialMask:
    return SimplicialMask(n, order, tuple(itertools.product(range(n), repeat=order + 1)))


def mask_from_graph(n: int, pairs: Iterable[tuple[int, int]], self_loops: bool = True) -> SimplicialMask:
    """Order-1 mask of an undirected graph: both directions of every edge."""
    edges = set()
    for u, v in pairs:
        edges.add((u, v))
        edges.add((v, u))
    if self_loops:
        edges.update((v, v) for v in range(n))
    return SimplicialMask(n, 1, tuple(edges))


def _successors(mask: SimplicialMask) -> list[set[int]]:
    succ: list[set[int]] = [set() for _ in range(mask.n)]
    for e in mask.edges:
        for s in e[1:]:
            succ[s].add(e[0])
    return succ


def distances_from(mask: SimplicialMask, source: int, _succ=None) -> list[float]:
    """Hop distance from ``source`` to every node (``inf`` if unreachable)."""
    succ = _succ if _succ is not None else _successors(mask)
    dist = [math.inf] * mask.n
    dist[source] = 0
    frontier = [source]
    hops = 0
    while frontier:
        hops += 1
        nxt = []
        for u in frontier:
            for v in succ[u]:
                if dist[v] == math.inf:
                    dist[v] = hops
                    nxt.append(v)
        frontier = nxt
    return dist


def reachable_from(mask: SimplicialMask, source: int) -> set[int]:
    return {v for v, d in enumerate(distances_from(mask, source)) if d < math.inf}


def is_quasi_strongly_connected(mask: SimplicialMask) -> tuple[bool, set[int]]:
    """Return whether some node reaches every node, and the set of all such centers."""
    succ = _successors(mask)
    centers = {
        c for c in range(mask.n) if all(d < math.inf for d in distances_from(mask, c, succ))
    }
    return bool(centers), centers


def radius(mask: SimplicialMask) -> int:
    """Smallest eccentricity over the center nodes."""
    succ = _successors(mask)
    best = None
    for c in range(mask.n):
        ecc = max(distances_from(mask, c, succ))
        if ecc < math.inf and (best is None or ecc < best):
            best = int(ecc)
    if best is None:
        raise ValueError("mask is not quasi-strongly connected; radius is undefined")
    return best


def has_center_self_loop(mask: SimplicialMask, c: int) -> bool:
    if not 0 <= c < mask.n:
        raise ValueError(f"node {c} outside [0, {mask.n})")
    return any(e[0] == c and c in e[1:] for e in mask.edges)


def clique_projection(mask: SimplicialMask) -> np.ndarray:
    """Undirected adjacency joining every pair of distinct nodes that share an edge."""
    adj = np.zeros((mask.n, mask.n))
    for e in mask.edges:
        nodes = sorted(set(e))
        for u, v in itertools.combinations(nodes, 2):
            adj[u, v] = adj[v, u] = 1.0
    return adj


def normalized_laplacian_gap(adj: np.ndarray) -> float:
    """Second-smallest eigenvalue of ``I - D^-1/2 A D^-1/2``."""
    adj = np.asarray(adj, dtype=np.float64)
    deg = adj.sum(axis=1)
    if np.any(deg == 0):
        raise ValueError("graph has an isolated node; normalized Laplacian gap is 0")
    inv = 1.0 / np.sqrt(deg)
    lap = np.eye(len(deg)) - inv[:, None] * adj * inv[None, :]
    eig = np.linalg.eigvalsh(lap)
    return float(eig[1])


class Tradeoff(NamedTuple):
    radius: int
    lambda2: float
    bound: float
    holds: bool


def tradeoff_diagnostic(mask: SimplicialMask) -> Tradeoff:
    """Check ``radius <= 96 ln(n) / lambda2`` on the undirected clique projection."""
    if mask.n < 2:
        raise ValueError("trade-off diagnostic needs at least two nodes")
    adj = clique_projection(mask)
    lam = normalized_laplacian_gap(adj)
    if lam <= 1e-12:
        raise ValueError("undirected projection is disconnected (lambda2 = 0)")
    r = radius(mask)
    bound = 96.0 * math.log(mask.n) / lam
    return Tradeoff(r, lam, bound, r <= bound)


def dumps_mask(mask: SimplicialMask) -> str:
    lines = [f"{mask.n} {mask.order}"]
    for e in mask.edges:
        lines.append(f"{e[0]}: " + " ".join(str(s) for s in e[1:]))
    return "\n".join(lines) + "\n"


def loads_mask(text: str) -> SimplicialMask:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError("empty mask file")
    try:
        n, order = (int(t) for t in rows[0].split())
    except ValueError as exc:
        raise ValueError(f"bad mask header {rows[0]!r}, expected 'n N'") from exc
    edges = []
    for ln in rows[1:]:
        head, sep, tail = ln.partition(":")
        if not sep:
            raise ValueError(f"bad mask line {ln!r}, expected 'target: sources...'")
        edges.append((int(head),) + tuple(int(t) for t in tail.split()))
    return SimplicialMask(n, order, tuple(edges))


def save_mask(mask: SimplicialMask, path) -> None:
    Path(path).write_text(dumps_mask(mask))


def load_mask(path) -> SimplicialMask:
    return loads_mask(Path(path).read_text())
