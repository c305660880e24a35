"""Undirected simple graphs, seeded Erdos-Renyi sampling and cohesiveness."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np


class GraphError(ValueError):
    pass


class RedrawBudgetExhausted(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"no connected graph after {attempts} draws")
        self.attempts = attempts


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset
    adjacency: np.ndarray = field(repr=False, compare=False)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @property
    def is_connected(self) -> bool:
        return is_connected(self)


def build_graph(n: int, edge_list: Iterable[tuple[int, int]]) -> Graph:
    """Build a graph on nodes 0..n-1. Duplicate and reversed edges collapse."""
    if n < 1:
        raise GraphError(f"graph needs at least one node, got n={n}")
    edges = set()
    for u, v in edge_list:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
        if u == v:
            raise GraphError(f"self-loop ({u}, {v}) not allowed")
        edges.add((min(u, v), max(u, v)))
    adj = np.zeros((n, n), dtype=np.int64)
    for u, v in edges:
        adj[u, v] = adj[v, u] = 1
    adj.setflags(write=False)
    return Graph(n, frozenset(edges), adj)


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n: int) -> Graph:
    """Node 0 is the hub."""
    return build_graph(n, [(0, i) for i in range(1, n)])


def is_connected(g: Graph) -> bool:
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in g.neighbors(i):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def _pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def erdos_renyi(n: int, p: float, seed: int, require_connected: bool = True,
                max_redraws: int = 1000) -> Graph:
    """G(n, p) from a Philox stream keyed by ``seed``.

    Attempt k consumes the k-th block of C(n, 2) uniforms, so the edge
    indicator of pair index m in attempt k depends only on (seed, k, m).
    """
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"edge probability must lie in [0, 1], got {p}")
    if max_redraws < 1:
        raise GraphError("max_redraws must be at least 1")
    rows, cols = _pair_index(n)
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(max_redraws if require_connected else 1):
        keep = rng.random(rows.size) < p
        g = build_graph(n, zip(rows[keep], cols[keep]))
        if not require_connected or is_connected(g):
            return g
    raise RedrawBudgetExhausted(max_redraws)


@dataclass(frozen=True)
class Cohesion:
    value: Fraction
    subset: frozenset

    def __float__(self):
        return float(self.value)


def cohesiveness(g: Graph, subset: Iterable[int]) -> Cohesion:
    """Smallest share of a member's neighbours that lie inside ``subset``.

    Exact integer arithmetic; the result is a reduced Fraction.
    """
    members = frozenset(int(i) for i in subset)
    if not members:
        raise GraphError("cohesiveness of an empty subset is undefined")
    mask = np.zeros(g.n, dtype=np.int64)
    mask[list(members)] = 1
    best = None
    for i in sorted(members):
        d = int(g.adjacency[i].sum())
        if d == 0:
            raise GraphError(f"node {i} is isolated")
        share = Fraction(int(g.adjacency[i] @ mask), d)
        if best is None or share < best:
            best = share
    return Cohesion(best, members)


def eigenvector_centrality(g: Graph, tol: float = 1e-12, max_iter: int = 100_000):
    """Principal adjacency eigenvector by power iteration.

    Iterates on A + I so that bipartite graphs (eigenvalues +k and -k) do not
    oscillate. Returns ``(v, kappa)`` with v >= 0 and ||v||_2 = 1.
    """
    if not is_connected(g):
        raise GraphError("eigenvector centrality requires a connected graph")
    a = g.adjacency.astype(float)
    if g.n == 1:
        return np.ones(1), 0.0
    v = np.full(g.n, 1.0 / np.sqrt(g.n))
    for _ in range(max_iter):
        w = a @ v + v
        w /= np.linalg.norm(w)
        av = a @ w
        kappa = float(w @ av)
        if np.max(np.abs(av - kappa * w)) <= tol:
            return w, kappa
        v = w
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def write_edgelist(g: Graph) -> str:
    lines = [f"{g.n} {len(g.edges)}"]
    lines += [f"{u} {v}" for u, v in g.edge_list()]
    return "\n".join(lines) + "\n"


def read_edgelist(text: str) -> Graph:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge list must start with a 'n m' header line")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise GraphError(f"header announces {m} edges, found {len(body)}")
    return build_graph(n, [(int(u), int(v)) for u, v in body])


def max_cohesive_subset(g: Graph, subset: Iterable[int], r) -> frozenset:
    """Largest subset of ``subset`` whose cohesiveness is at least ``r`` (may be empty).

    Unions of r-cohesive sets are r-cohesive, so pruning members whose share
    of neighbours inside falls below r until none remain gives the maximum.
    """
    r = Fraction(r) if not isinstance(r, float) else r
    members = set(int(i) for i in subset)
    changed = True
    while changed and members:
        changed = False
        mask = np.zeros(g.n, dtype=np.int64)
        mask[list(members)] = 1
        for i in sorted(members):
            d = int(g.adjacency[i].sum())
            if d == 0 or Fraction(int(g.adjacency[i] @ mask), d) < r:
                members.discard(i)
                changed = True
                break
    return frozenset(members)
