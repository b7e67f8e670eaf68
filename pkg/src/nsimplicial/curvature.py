"""Line graphs and combinatorial Forman curvature.

For an unweighted graph without 2-cells the Forman curvature of an edge is
``4 - deg(u) - deg(v)``. Low (negative) values flag bottleneck edges.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
import numpy as np

__all__ = [
    "SimpleGraph",
    "path_graph",
    "cycle_graph",
    "star_graph",
    "complete_graph",
    "random_tree",
    "random_sparse_graph",
    "line_graph",
    "forman_curvature",
    "CurvatureReport",
    "curvature_report",
    "loads_graph",
    "dumps_graph",
    "load_graph",
]


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.n})")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    @property
    def density(self) -> float:
        if self.n < 2:
            return 0.0
        return len(self.edges) / (self.n * (self.n - 1) / 2)

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


def path_graph(n: int) -> SimpleGraph:
    return SimpleGraph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> SimpleGraph:
    if n < 3:
        raise ValueError("a simple cycle needs n >= 3")
    return SimpleGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


def star_graph(leaves: int) -> SimpleGraph:
    return SimpleGraph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def complete_graph(n: int) -> SimpleGraph:
    return SimpleGraph(n, tuple(itertools.combinations(range(n), 2)))


def random_tree(rng: np.random.Generator, n: int) -> SimpleGraph:
    """Uniform labelled tree on ``n`` nodes via a random Pruefer sequence."""
    if n < 2:
        return SimpleGraph(n, ())
    if n == 2:
        return SimpleGraph(2, ((0, 1),))
    seq = [int(v) for v in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = next(u for u in range(n) if degree[u] == 1)
        edges.append((leaf, v))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = (i for i in range(n) if degree[i] == 1)
    edges.append((u, w))
    return SimpleGraph(n, tuple(edges))


def random_sparse_graph(rng: np.random.Generator, n: int, density: float = 0.12) -> SimpleGraph:
    """Connected graph: a random spanning tree plus random extra edges up to ``density``."""
    tree = random_tree(rng, n)
    target = max(len(tree.edges), int(round(density * n * (n - 1) / 2)))
    edges = set(tree.edges)
    missing = [e for e in itertools.combinations(range(n), 2) if e not in edges]
    extra = target - len(edges)
    if extra > 0 and missing:
        pick = rng.choice(len(missing), size=min(extra, len(missing)), replace=False)
        edges.update(missing[int(i)] for i in sorted(pick))
    return SimpleGraph(n, tuple(edges))


def line_graph(G: SimpleGraph) -> SimpleGraph:
    """Nodes are the edges of ``G`` (in sorted order); adjacent iff they share an endpoint."""
    if not G.edges:
        raise ValueError("line graph of an edgeless graph is empty")
    incident: list[list[int]] = [[] for _ in range(G.n)]
    for idx, (u, v) in enumerate(G.edges):
        incident[u].append(idx)
        incident[v].append(idx)
    pairs = set()
    for group in incident:
        pairs.update(itertools.combinations(group, 2))
    return SimpleGraph(len(G.edges), tuple(pairs))


def forman_curvature(G: SimpleGraph, triangles: bool = False) -> dict[tuple[int, int], int]:
    """``4 - deg(u) - deg(v)`` per edge.

    With ``triangles`` every triangle through the edge is treated as a 2-cell
    and adds 3, the usual augmented variant.
    """
    deg = G.degrees()
    if not triangles:
        return {(u, v): int(4 - deg[u] - deg[v]) for u, v in G.edges}
    adj: list[set[int]] = [set() for _ in range(G.n)]
    for u, v in G.edges:
        adj[u].add(v)
        adj[v].add(u)
    return {(u, v): int(4 - deg[u] - deg[v] + 3 * len(adj[u] & adj[v])) for u, v in G.edges}


@dataclass(frozen=True)
class CurvatureReport:
    avg_G: float
    min_G: int
    avg_L: float
    min_L: int
    density: float
    avg_increased: bool
    min_increased: bool


def curvature_report(G: SimpleGraph, triangles: bool = False) -> CurvatureReport:
    if len(G.edges) < 2:
        raise ValueError("curvature report needs at least two edges")
    if not G.is_connected():
        raise ValueError("curvature report needs a connected graph")
    fg = list(forman_curvature(G, triangles).values())
    fl = list(forman_curvature(line_graph(G), triangles).values())
    avg_g, avg_l = sum(fg) / len(fg), sum(fl) / len(fl)
    return CurvatureReport(
        avg_G=avg_g,
        min_G=min(fg),
        avg_L=avg_l,
        min_L=min(fl),
        density=G.density,
        avg_increased=avg_l > avg_g,
        min_increased=min(fl) > min(fg),
    )


def dumps_graph(G: SimpleGraph) -> str:
    return "\n".join([str(G.n)] + [f"{u} {v}" for u, v in G.edges]) + "\n"


def loads_graph(text: str) -> SimpleGraph:
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln]
    if not rows:
        raise ValueError("empty graph file")
    n = int(rows[0])
    edges = []
    for ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line {ln!r}, expected 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    return SimpleGraph(n, tuple(edges))


def load_graph(path) -> SimpleGraph:
    return loads_graph(Path(path).read_text())
