"""Hidden-graph representation, seeded generators and brute-force ground truth.

Adjacency is kept as packed 64-bit rows (one bit-set per vertex) plus a CSR
neighbour index. Everything the oracles answer, and everything the tests
compare against, comes from here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ._rng import make_rng


class GraphError(ValueError):
    pass


_CHUNK = 1 << 18


def _pack_rows(dense: np.ndarray) -> np.ndarray:
    n = dense.shape[0]
    packed = np.packbits(dense, axis=1, bitorder="little")
    words = max(1, math.ceil(n / 64))
    out = np.zeros((n, words * 8), dtype=np.uint8)
    out[:, : packed.shape[1]] = packed
    return out.view(np.uint64)


class Graph:
    """Immutable simple undirected graph on vertices ``0..n-1``."""

    def __init__(self, n: int, us: np.ndarray, vs: np.ndarray):
        # us < vs, deduplicated, sorted; callers go through build_graph/from_dense
        self.n = int(n)
        self._us = us
        self._vs = vs
        self.m = int(len(us))
        both_src = np.concatenate([us, vs])
        both_dst = np.concatenate([vs, us])
        order = np.lexsort((both_dst, both_src))
        self.indices = both_dst[order]
        counts = np.bincount(both_src, minlength=self.n) if self.n else np.zeros(0, np.int64)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        for arr in (self._us, self._vs, self.indices, self.indptr):
            arr.setflags(write=False)
        self._dense: np.ndarray | None = None
        self._bits: np.ndarray | None = None

    @classmethod
    def from_dense(cls, adj: np.ndarray) -> "Graph":
        adj = np.asarray(adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphError("adjacency matrix must be square")
        if adj.diagonal().any():
            raise GraphError("self-loop in adjacency matrix")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency matrix is not symmetric")
        us, vs = np.nonzero(np.triu(adj, 1))
        g = cls(adj.shape[0], us.astype(np.int64), vs.astype(np.int64))
        g._dense = adj.copy()
        g._dense.setflags(write=False)
        return g

    # -- access -----------------------------------------------------------
    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.dense()[u, v])

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, lexicographically sorted."""
        return np.stack([self._us, self._vs], axis=1)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self._us.tolist(), self._vs.tolist()))

    def dense(self) -> np.ndarray:
        if self._dense is None:
            d = np.zeros((self.n, self.n), dtype=bool)
            d[self._us, self._vs] = True
            d[self._vs, self._us] = True
            d.setflags(write=False)
            self._dense = d
        return self._dense

    @property
    def bits(self) -> np.ndarray:
        if self._bits is None:
            b = _pack_rows(self.dense())
            b.setflags(write=False)
            self._bits = b
        return self._bits

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self._us, other._us)
            and np.array_equal(self._vs, other._vs)
        )

    __hash__ = None  # type: ignore[assignment]


def build_graph(n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> Graph:
    """Build a graph, merging ``{u,v}`` and ``{v,u}``; rejects loops and bad ids."""
    n = int(n)
    if n < 0:
        raise GraphError("vertex count must be non-negative")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GraphError("edges must be pairs")
    if len(arr):
        bad = (arr < 0) | (arr >= n)
        if bad.any():
            i = int(np.flatnonzero(bad.any(axis=1))[0])
            raise GraphError(f"edge {tuple(arr[i])} has an endpoint outside 0..{n - 1}")
        loops = arr[:, 0] == arr[:, 1]
        if loops.any():
            i = int(np.flatnonzero(loops)[0])
            raise GraphError(f"self-loop at vertex {arr[i, 0]}")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    if len(lo):
        key = np.unique(lo * n + hi)
        lo, hi = key // n, key % n
    return Graph(n, lo.astype(np.int64), hi.astype(np.int64))


def complete_graph(n: int) -> Graph:
    adj = ~np.eye(n, dtype=bool)
    return Graph.from_dense(adj)


def complete_bipartite(a: int, b: int) -> Graph:
    adj = np.zeros((a + b, a + b), dtype=bool)
    adj[:a, a:] = True
    adj[a:, :a] = True
    return Graph.from_dense(adj)


def star_graph(leaves: int) -> Graph:
    """Centre 0 joined to leaves 1..leaves."""
    return build_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def disjoint_union(*graphs: Graph) -> Graph:
    parts = []
    offset = 0
    for g in graphs:
        parts.append(g.edges() + offset)
        offset += g.n
    edges = np.concatenate(parts) if parts else np.zeros((0, 2), np.int64)
    return build_graph(offset, edges)


def gen_er(n: int, p: float, seed: int) -> Graph:
    """G(n, p), reproducible from ``seed``."""
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"edge probability {p} outside [0, 1]")
    if n < 0:
        raise GraphError("vertex count must be non-negative")
    iu, iv = np.triu_indices(n, 1)
    keep = make_rng(seed, 0xE5).random(len(iu)) < p
    return Graph(n, iu[keep].astype(np.int64), iv[keep].astype(np.int64))


def gen_clique_plus_biclique(k: int, a: int, b: int) -> Graph:
    """K_k disjoint from K_{a,b}; T = C(k,3) with m = C(k,2) + a*b."""
    parts = [complete_graph(k)]
    if a and b:
        parts.append(complete_bipartite(a, b))
    return disjoint_union(*parts)



def gen_clique_plus_random_bipartite(n: int, k: int, m: int, seed: int) -> Graph:
    """K_k on vertices ``0..k-1`` plus random edges between two halves of the rest.

    The total edge count is exactly ``m`` and T = C(k,3), so T can be varied
    at fixed m (or m at fixed T).
    """
    ck = k * (k - 1) // 2
    rest = np.arange(k, n)
    left, right = rest[: len(rest) // 2], rest[len(rest) // 2 :]
    extra = m - ck
    if extra < 0 or extra > len(left) * len(right):
        raise GraphError(f"cannot place m={m} edges with k={k} on n={n}")
    pick = make_rng(seed, 0xCB).choice(len(left) * len(right), size=extra, replace=False)
    bip = np.stack([left[pick // len(right)], right[pick % len(right)]], axis=1)
    iu, iv = np.triu_indices(k, 1)
    return build_graph(n, np.concatenate([np.stack([iu, iv], axis=1), bip]))

# -- ground truth ------------------------------------------------------------

def common_neighbors(g: Graph, x: int, y: int) -> np.ndarray:
    if x == y:
        raise GraphError("common neighbours need two distinct vertices")
    return np.intersect1d(g.neighbors(x), g.neighbors(y), assume_unique=True)


def triangles_per_edge(g: Graph) -> np.ndarray:
    """|Γ(e)| for every edge, in ``g.edges()`` order."""
    e = g.edges()
    out = np.zeros(len(e), dtype=np.int64)
    if not len(e):
        return out
    bits = g.bits
    for s in range(0, len(e), _CHUNK):
        chunk = e[s : s + _CHUNK]
        out[s : s + len(chunk)] = np.bitwise_count(bits[chunk[:, 0]] & bits[chunk[:, 1]]).sum(axis=1)
    return out


def count_triangles_exact(g: Graph) -> int:
    total = int(triangles_per_edge(g).sum())
    assert total % 3 == 0
    return total // 3


def count_triangles_from_edges(n: int, edges: np.ndarray) -> int:
    return count_triangles_exact(build_graph(n, edges))


# -- edge-list files -----------------------------------------------------------

def write_edge_list(g: Graph, path: str | Path) -> None:
    e = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.m}\n")
        np.savetxt(fh, e, fmt="%d")


def read_edge_list(path: str | Path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise GraphError(f"{path}: header must be 'n m'")
        n, m = int(header[0]), int(header[1])
        rows = [line.split() for line in fh if line.strip()]
    if any(len(r) != 2 for r in rows):
        raise GraphError(f"{path}: every edge line must hold two vertex ids")
    arr = np.array(rows, dtype=np.int64).reshape(-1, 2)
    if len(arr) != m:
        raise GraphError(f"{path}: header announces {m} edges, found {len(arr)}")
    if len(arr):
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        key = lo * max(n, 1) + hi
        if len(np.unique(key)) != len(key):
            raise GraphError(f"{path}: duplicate edge")
    return build_graph(n, arr)


@dataclass(frozen=True)
class GraphSpec:
    """Generator recipe used by the CLI and sweep files."""

    kind: str
    params: dict

    def build(self, seed: int) -> Graph:
        p = self.params
        if self.kind == "er":
            return gen_er(int(p["n"]), float(p["p"]), seed)
        if self.kind == "complete":
            return complete_graph(int(p["n"]))
        if self.kind == "clique-biclique":
            return gen_clique_plus_biclique(int(p["k"]), int(p["a"]), int(p["b"]))
        if self.kind == "file":
            return read_edge_list(p["path"])
        raise GraphError(f"unknown generator kind {self.kind!r}")
