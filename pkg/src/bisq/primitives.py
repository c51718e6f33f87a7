"""Edge enumeration, counting and sampling through the BIS oracle only.

All procedures share one structure: a *rectangle tree*. A root is a pair of
disjoint vertex ranges ``(A, B)`` in some fixed ordering; a node is split by
halving its larger side, so every leaf is a single pair and the depth is at
most ``ceil(log2|A|) + ceil(log2|B|)``. Emptiness of a node is one BIS query.

* enumeration: breadth-first over nonempty nodes (right child is known
  nonempty for free when the left one is empty);
* estimation: root-to-leaf walks that step into a uniformly chosen nonempty
  child; ``2**(binary choices)`` is an unbiased count;
* sampling: the same walk, accepted with probability ``2**(choices - depth)``,
  which makes the output exactly uniform.

Induced sets ``E(G[X])`` use a forest: the halving tree of ``X`` contributes
one bipartite root per internal node, and those roots partition ``E(G[X])``.

A :class:`RunCache` memoises answers inside each tree and remembers fully
enumerated neighbourhoods, so a run never pays twice for the same fact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rng import make_rng
from .oracle import BisGrid, OracleError, OracleHandle, _vertex_array

COARSE_WALKS = 16
_MEMO_LIMIT = 1 << 27
_WALK_CHUNK = 1 << 18


class EmptyEdgeSet(ValueError):
    pass


@dataclass(frozen=True)
class ApproxParams:
    epsilon: float = 0.1
    delta: float = 0.05
    seed: int = 0
    c_var: float = 48.0
    # enumerate whenever the walk budget would exceed the coarse edge count
    cost_cap: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon={self.epsilon} must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta={self.delta} must lie in (0, 1)")
        if self.c_var <= 0:
            raise ValueError("c_var must be positive")

    @property
    def groups(self) -> int:
        return math.ceil(8 * math.log(2 / self.delta))

    @property
    def walks_per_group(self) -> int:
        return math.ceil(self.c_var / self.epsilon**2)

    @property
    def enumeration_threshold(self) -> float:
        if self.cost_cap:
            return float(self.groups * self.walks_per_group)
        return 4 / self.epsilon**2


@dataclass(frozen=True)
class WalkTrace:
    leaf_pair: tuple[int, int]
    probability: Fraction
    queries_used: int


def _ceil_log2(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros(x.shape, dtype=np.int64)
    big = x > 1
    out[big] = np.ceil(np.log2(x[big])).astype(np.int64)
    # guard against float rounding at exact powers of two
    over = big & ((1 << np.maximum(out - 1, 0)) >= x)
    out[over] -= 1
    return out


def _split(r0, r1, c0, c1):
    a = r1 - r0
    b = c1 - c0
    rows = a >= b
    rmid = r0 + (a + 1) // 2
    cmid = c0 + (b + 1) // 2
    left = (r0, np.where(rows, rmid, r1), c0, np.where(rows, c1, cmid))
    right = (np.where(rows, rmid, r0), r1, np.where(rows, c0, cmid), c1)
    return left, right


class RectForest:
    """Rectangle trees over one :class:`BisGrid`, with per-node memo."""

    def __init__(self, grid: BisGrid, r0, r1, c0, c1):
        self.grid = grid
        self.r0, self.r1, self.c0, self.c1 = (np.asarray(x, dtype=np.int64) for x in (r0, r1, c0, c1))
        self.depth = _ceil_log2(self.r1 - self.r0) + _ceil_log2(self.c1 - self.c0)
        sizes = np.left_shift(np.int64(2), self.depth)
        self.offset = np.zeros(len(sizes), dtype=np.int64)
        if len(sizes) > 1:
            np.cumsum(sizes[:-1], out=self.offset[1:])
        total = int(sizes.sum()) if len(sizes) else 0
        self._memo = np.full(total, -1, dtype=np.int8) if total <= _MEMO_LIMIT else None
        self.capacity = np.ldexp(1.0, self.depth)  # 2**depth per root
        self.edges: np.ndarray | None = None  # (k, 2) vertex pairs once enumerated

    @property
    def n_roots(self) -> int:
        return len(self.r0)

    def _lookup(self, ri, hid, r0, r1, c0, c1) -> np.ndarray:
        if self._memo is None:
            return self.grid.query(r0, r1, c0, c1)
        gid = self.offset[ri] + hid
        known = self._memo[gid]
        unknown = known < 0
        if unknown.any():
            ug, first = np.unique(gid[unknown], return_index=True)
            idx = np.flatnonzero(unknown)[first]
            ans = self.grid.query(r0[idx], r1[idx], c0[idx], c1[idx])
            self._memo[ug] = ans
            known = self._memo[gid]
        return known == 1

    def _mark(self, ri, hid) -> None:
        if self._memo is not None and len(ri):
            self._memo[self.offset[ri] + hid] = 1

    def _roots(self, ri):
        return (ri, np.ones(len(ri), dtype=np.int64), self.r0[ri], self.r1[ri], self.c0[ri], self.c1[ri])

    def _children(self, ri, hid, r0, r1, c0, c1):
        """Nonempty children of nonempty non-leaf nodes, plus a both-flag."""
        (lr0, lr1, lc0, lc1), (rr0, rr1, rc0, rc1) = _split(r0, r1, c0, c1)
        lhid = 2 * hid
        left_ok = self._lookup(ri, lhid, lr0, lr1, lc0, lc1)
        right_ok = np.ones(len(ri), dtype=bool)
        need = left_ok
        if need.any():
            right_ok[need] = self._lookup(ri[need], lhid[need] + 1, rr0[need], rr1[need], rc0[need], rc1[need])
        forced = ~left_ok
        self._mark(ri[forced], lhid[forced] + 1)
        return (lhid, (lr0, lr1, lc0, lc1), left_ok), (lhid + 1, (rr0, rr1, rc0, rc1), right_ok)

    def vertex_pairs(self, r: np.ndarray, c: np.ndarray) -> np.ndarray:
        return np.stack([self.grid.rows[r], self.grid.cols[c]], axis=1)

    # -- enumeration ------------------------------------------------------------
    def enumerate(self) -> np.ndarray:
        if self.edges is None:
            _, self.edges = self.enumerate_roots(np.arange(self.n_roots))
        return self.edges

    def enumerate_roots(self, roots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All edges under the given roots, as (root index, vertex pair)."""
        ri, hid, r0, r1, c0, c1 = self._roots(np.asarray(roots, dtype=np.int64))
        ok = self._lookup(ri, hid, r0, r1, c0, c1)
        front = [x[ok] for x in (ri, hid, r0, r1, c0, c1)]
        out_ri, out_r, out_c = [], [], []
        while len(front[0]):
            ri, hid, r0, r1, c0, c1 = front
            leaf = ((r1 - r0) == 1) & ((c1 - c0) == 1)
            out_ri.append(ri[leaf])
            out_r.append(r0[leaf])
            out_c.append(c0[leaf])
            ri, hid, r0, r1, c0, c1 = (x[~leaf] for x in front)
            if not len(ri):
                break
            (lh, lrect, lok), (rh, rrect, rok) = self._children(ri, hid, r0, r1, c0, c1)
            front = [
                np.concatenate([ri[lok], ri[rok]]),
                np.concatenate([lh[lok], rh[rok]]),
                *(np.concatenate([lrect[k][lok], rrect[k][rok]]) for k in range(4)),
            ]
        empty = np.zeros(0, np.int64)
        cat = lambda xs: np.concatenate(xs) if xs else empty  # noqa: E731
        return cat(out_ri), self.vertex_pairs(cat(out_r), cat(out_c))

    # -- walks -----------------------------------------------------------------
    def walk(self, ri: np.ndarray, rng: np.random.Generator):
        """Root-to-leaf walks from roots ``ri``.

        Returns ``(ok, r, c, nb)``: whether the root was nonempty, the leaf
        indices and the number of two-way choices taken.
        """
        k = len(ri)
        ri, hid, r0, r1, c0, c1 = self._roots(np.asarray(ri, dtype=np.int64))
        ok = self._lookup(ri, hid, r0, r1, c0, c1)
        nb = np.zeros(k, dtype=np.int64)
        active = ok & ~(((r1 - r0) == 1) & ((c1 - c0) == 1))
        hid = hid.copy()
        r0, r1, c0, c1 = r0.copy(), r1.copy(), c0.copy(), c1.copy()
        while active.any():
            a = np.flatnonzero(active)
            (lh, lrect, lok), (rh, rrect, rok) = self._children(ri[a], hid[a], r0[a], r1[a], c0[a], c1[a])
            both = lok & rok
            go_left = lok.copy()
            coin = rng.random(int(both.sum())) < 0.5
            go_left[both] = coin
            nb[a] += both
            hid[a] = np.where(go_left, lh, rh)
            r0[a] = np.where(go_left, lrect[0], rrect[0])
            r1[a] = np.where(go_left, lrect[1], rrect[1])
            c0[a] = np.where(go_left, lrect[2], rrect[2])
            c1[a] = np.where(go_left, lrect[3], rrect[3])
            active[a] = ~(((r1[a] - r0[a]) == 1) & ((c1[a] - c0[a]) == 1))
        return ok, r0, c0, nb

    def root_weights(self) -> np.ndarray:
        return self.capacity / self.capacity.sum()

    def walk_estimates(self, k: int, rng: np.random.Generator) -> np.ndarray:
        """``k`` independent unbiased estimates of the total edge count."""
        out = np.empty(k)
        w = self.root_weights()
        for s in range(0, k, _WALK_CHUNK):
            kk = min(_WALK_CHUNK, k - s)
            ri = rng.choice(self.n_roots, size=kk, p=w) if self.n_roots > 1 else np.zeros(kk, np.int64)
            ok, _, _, nb = self.walk(ri, rng)
            out[s : s + kk] = np.where(ok, np.ldexp(1.0, nb) / w[ri], 0.0)
        return out

    def accepted_samples(self, k: int, rng: np.random.Generator) -> np.ndarray:
        """One batch of ``k`` walks; returns the pairs that pass rejection."""
        w = self.root_weights()
        ri = rng.choice(self.n_roots, size=k, p=w) if self.n_roots > 1 else np.zeros(k, np.int64)
        ok, r, c, nb = self.walk(ri, rng)
        acc = ok & (rng.random(k) < np.ldexp(1.0, nb - self.depth[ri]))
        return self.vertex_pairs(r[acc], c[acc])


def _induced_roots(size: int):
    r0, r1, c0, c1 = [], [], [], []
    stack = [(0, size)]
    while stack:
        i0, i1 = stack.pop()
        if i1 - i0 < 2:
            continue
        mid = i0 + (i1 - i0 + 1) // 2
        r0.append(i0)
        r1.append(mid)
        c0.append(mid)
        c1.append(i1)
        stack.append((mid, i1))
        stack.append((i0, mid))
    return r0, r1, c0, c1


class RunCache:
    """Memory of one algorithm run.

    Holds the rectangle forests built so far (with their per-node memo) and
    a dense record of every vertex whose full neighbourhood has been
    enumerated. Anything derivable from that record is answered without a
    new query.
    """

    def __init__(self, n: int):
        self.n = n
        self.forests: dict[tuple, RectForest] = {}
        self.adj = np.zeros((n, n), dtype=bool)
        self.known = np.zeros(n, dtype=bool)
        self.deg_hat = np.full(n, np.nan)  # walk-based degree estimates, fixed once drawn
        self._grid: BisGrid | None = None

    def forest(self, key: tuple, factory) -> RectForest:
        f = self.forests.get(key)
        if f is None:
            f = self.forests[key] = factory()
        return f

    def full_grid(self, h: OracleHandle) -> BisGrid:
        if self._grid is None:
            self._grid = h.grid(np.arange(h.n, dtype=np.int64))
        return self._grid

    @property
    def all_known(self) -> bool:
        return bool(self.known.all())

    def learn_all_edges(self, edges: np.ndarray) -> None:
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.adj[e[:, 0], e[:, 1]] = True
        self.adj[e[:, 1], e[:, 0]] = True
        self.known[:] = True

    def learn_neighbors(self, v: int, nbrs: np.ndarray) -> None:
        self.adj[v, nbrs] = True
        self.adj[nbrs, v] = True
        self.known[v] = True

    def learn_pairs(self, vs: np.ndarray, pairs: np.ndarray) -> None:
        """Mark ``vs`` as fully known given all their incident ``pairs``."""
        self.adj[pairs[:, 0], pairs[:, 1]] = True
        self.adj[pairs[:, 1], pairs[:, 0]] = True
        self.known[vs] = True

    def known_neighbors(self, v: int) -> np.ndarray | None:
        if not self.known[v]:
            return None
        return np.flatnonzero(self.adj[v])

    def known_degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def known_edges(self) -> np.ndarray:
        r, c = np.nonzero(np.triu(self.adj, 1))
        return np.stack([r, c], axis=1).astype(np.int64)



    def neighbourhood_forest(self, h: OracleHandle) -> "NeighbourhoodForest":
        f = self.forests.get(("nbr",))
        if f is None:
            f = self.forests[("nbr",)] = NeighbourhoodForest(self.full_grid(h))
        return f


class NeighbourhoodForest(RectForest):
    """Roots ``{v} x [0, v)`` and ``{v} x [v+1, n)`` for every vertex ``v``.

    Together they cover ``{v} x (V - v)``, so per-vertex neighbourhood work
    for many vertices runs as one vectorized pass on the full grid.
    """

    def __init__(self, grid: BisGrid):
        n = len(grid.rows)
        v = np.arange(n, dtype=np.int64)
        has_lo = v > 0
        has_hi = v < n - 1
        r0 = np.concatenate([v[has_lo], v[has_hi]])
        c0 = np.concatenate([np.zeros(int(has_lo.sum()), np.int64), v[has_hi] + 1])
        c1 = np.concatenate([v[has_lo], np.full(int(has_hi.sum()), n, np.int64)])
        super().__init__(grid, r0, r0 + 1, c0, c1)
        self.lo = np.full(n, -1, np.int64)
        self.hi = np.full(n, -1, np.int64)
        self.lo[has_lo] = np.arange(int(has_lo.sum()))
        self.hi[has_hi] = int(has_lo.sum()) + np.arange(int(has_hi.sum()))
        cap = self.capacity
        self.vertex_capacity = np.where(self.lo >= 0, cap[self.lo], 0.0) + np.where(self.hi >= 0, cap[self.hi], 0.0)

    def roots_of(self, vs: np.ndarray) -> np.ndarray:
        r = np.concatenate([self.lo[vs], self.hi[vs]])
        return r[r >= 0]

    def vertex_walks(self, vs: np.ndarray, rng: np.random.Generator):
        """One walk per entry of ``vs``; root picked with weight ``2**depth``.

        Returns ``(ok, nbr, nb, weight, depth)`` for the chosen roots.
        """
        vs = np.asarray(vs, dtype=np.int64)
        lo, hi = self.lo[vs], self.hi[vs]
        cap_lo = np.where(lo >= 0, self.capacity[np.maximum(lo, 0)], 0.0)
        w_lo = cap_lo / np.maximum(self.vertex_capacity[vs], 1.0)
        pick_lo = rng.random(len(vs)) < w_lo
        ri = np.where(pick_lo, lo, hi)
        weight = np.where(pick_lo, w_lo, 1.0 - w_lo)
        ok, _, c, nb = self.walk(ri, rng)
        return ok, self.grid.cols[c], nb, weight, self.depth[ri]


def _canonical(edges: np.ndarray) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    e = np.stack([e.min(axis=1), e.max(axis=1)], axis=1)
    if len(e):
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
    return e


def canonical_edges(edges) -> np.ndarray:
    """Rows as (min, max), lexicographically sorted."""
    return _canonical(edges)


def _two_sets(h: OracleHandle, a_set, b_set):
    a = _vertex_array(a_set, h.n, "first set")
    b = _vertex_array(b_set, h.n, "second set")
    if not len(a) or not len(b):
        raise OracleError("vertex sets must be nonempty")
    if np.intersect1d(a, b, assume_unique=True).size:
        raise OracleError("vertex sets must be disjoint")
    return a, b


def _cache(h: OracleHandle, cache: RunCache | None) -> RunCache:
    return cache if cache is not None else RunCache(h.n)


def _rng_for(ap: ApproxParams, rng, tag: int) -> np.random.Generator:
    return rng if rng is not None else make_rng(ap.seed, tag)


def _bip_forest(h, a, b, cache: RunCache) -> RectForest:
    return cache.forest(("bip", a.tobytes(), b.tobytes()),
                        lambda: RectForest(h.grid(a, b), [0], [len(a)], [0], [len(b)]))


def _ind_forest(h, x, cache: RunCache) -> RectForest:
    if len(x) == h.n:
        grid = cache.full_grid(h)
        return cache.forest(("ind",), lambda: RectForest(grid, *_induced_roots(len(x))))
    return cache.forest(("ind", x.tobytes()), lambda: RectForest(h.grid(x), *_induced_roots(len(x))))


def _known_bipartite(cache: RunCache, a, b) -> np.ndarray | None:
    if cache.known[a].all():
        r, c = np.nonzero(cache.adj[np.ix_(a, b)])
        return np.stack([a[r], b[c]], axis=1)
    if cache.known[b].all():
        r, c = np.nonzero(cache.adj[np.ix_(a, b)])
        return np.stack([a[r], b[c]], axis=1)
    return None


def _z_set(h, v, z_set) -> np.ndarray | None:
    """``Z`` as an array, or None when it is every other vertex."""
    if not 0 <= v < h.n:
        raise OracleError(f"vertex {v} outside the graph")
    if z_set is None:
        return None
    z = _vertex_array(z_set, h.n, "Z")
    if not len(z):
        raise OracleError("Z must be nonempty")
    if np.any(z == v):
        raise OracleError("v must not belong to Z")
    return None if len(z) == h.n - 1 else z


# -- enumeration -----------------------------------------------------------------

def enum_edges_bipartite(h: OracleHandle, a_set, b_set, cache: RunCache | None = None) -> np.ndarray:
    """All edges between disjoint ``a_set`` and ``b_set`` (canonical rows)."""
    a, b = _two_sets(h, a_set, b_set)
    cache = _cache(h, cache)
    known = _known_bipartite(cache, a, b)
    if known is not None:
        return _canonical(known)
    return _canonical(_bip_forest(h, a, b, cache).enumerate())


def enum_edges_induced(h: OracleHandle, x_set, cache: RunCache | None = None) -> np.ndarray:
    """All edges with both endpoints in ``x_set`` (canonical rows).

    Edges at vertices with a known neighbourhood come from the cache; only
    the rest of ``X`` is enumerated through the oracle.
    """
    x = _vertex_array(x_set, h.n, "set")
    if len(x) < 2:
        raise OracleError("induced enumeration needs at least two vertices")
    cache = _cache(h, cache)
    k = cache.known[x]
    parts = []
    if k.any():
        sub = cache.adj[np.ix_(x, x)] & (k[:, None] | k[None, :])
        r, c = np.nonzero(np.triu(sub, 1))
        parts.append(np.stack([x[r], x[c]], axis=1))
    rest = x[~k]
    if len(rest) >= 2:
        e = _ind_forest(h, rest, cache).enumerate()
        parts.append(e)
        if len(rest) == h.n:
            cache.learn_all_edges(e)
    return _canonical(np.concatenate(parts) if parts else np.zeros((0, 2), np.int64))


def neighborhoods(h: OracleHandle, vs, cache: RunCache) -> None:
    """Enumerate the full neighbourhood of every vertex in ``vs`` into ``cache``."""
    vs = _vertex_array(vs, h.n, "vertex list")
    todo = vs[~cache.known[vs]]
    if not len(todo) or h.n < 2:
        cache.known[vs] = True
        return
    nf = cache.neighbourhood_forest(h)
    _, pairs = nf.enumerate_roots(nf.roots_of(todo))
    cache.learn_pairs(todo, pairs)


def neighbors_of(h: OracleHandle, v: int, z_set=None, cache: RunCache | None = None) -> np.ndarray:
    """``N(v) ∩ Z`` exactly; ``Z`` defaults to every other vertex."""
    v = int(v)
    z = _z_set(h, v, z_set)
    cache = _cache(h, cache)
    if z is None:
        neighborhoods(h, [v], cache)
        return cache.known_neighbors(v)
    known = _known_bipartite(cache, np.array([v]), z)
    if known is None:
        known = _bip_forest(h, np.array([v]), z, cache).enumerate()
    return np.sort(known[:, 1])


# -- estimation ----------------------------------------------------------------

def _estimate_forest(f: RectForest, ap: ApproxParams, rng) -> tuple[float, bool]:
    """(estimate, exact?) for the forest's total edge count."""
    if f.edges is not None:
        return float(len(f.edges)), True
    coarse = f.walk_estimates(COARSE_WALKS, rng).mean()
    if coarse <= ap.enumeration_threshold:
        return float(len(f.enumerate())), True
    g, w = ap.groups, ap.walks_per_group
    means = np.array([f.walk_estimates(w, rng).mean() for _ in range(g)])
    return float(np.median(means)), False


def estimate_edges(h: OracleHandle, a_set, b_set, ap: ApproxParams, cache: RunCache | None = None,
                   rng: np.random.Generator | None = None) -> float:
    """(1±ε)-estimate of ``|E(G[A,B])|`` with probability ≥ 1-δ."""
    a, b = _two_sets(h, a_set, b_set)
    cache = _cache(h, cache)
    known = _known_bipartite(cache, a, b)
    if known is not None:
        return float(len(known))
    f = _bip_forest(h, a, b, cache)
    return _estimate_forest(f, ap, _rng_for(ap, rng, 0xE1))[0]


def estimate_induced_edges(h: OracleHandle, x_set, ap: ApproxParams, cache: RunCache | None = None,
                           rng: np.random.Generator | None = None) -> float:
    """(1±ε)-estimate of ``|E(G[X])|``."""
    x = _vertex_array(x_set, h.n, "set")
    if len(x) < 2:
        return 0.0
    cache = _cache(h, cache)
    if cache.known[x].all():
        return float(np.triu(cache.adj[np.ix_(x, x)], 1).sum())
    f = _ind_forest(h, x, cache)
    est, exact = _estimate_forest(f, ap, _rng_for(ap, rng, 0xE2))
    if exact and len(x) == h.n:
        cache.learn_all_edges(f.edges)
    return est


def approx_degrees(h: OracleHandle, vs, ap: ApproxParams, cache: RunCache | None = None,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """(1±ε)-estimates of ``deg(v)`` for each ``v`` in ``vs`` (in order)."""
    vs = np.asarray(vs, dtype=np.int64)
    cache = _cache(h, cache)
    rng = _rng_for(ap, rng, 0xD0)
    uniq = np.unique(vs)
    todo = uniq[~cache.known[uniq] & np.isnan(cache.deg_hat[uniq])]
    if len(todo) and h.n > 1:
        nf = cache.neighbourhood_forest(h)
        rep = np.repeat(todo, COARSE_WALKS)
        ok, _, nb, w, _ = nf.vertex_walks(rep, rng)
        coarse = np.where(ok, np.ldexp(1.0, nb) / w, 0.0).reshape(-1, COARSE_WALKS).mean(axis=1)
        small = coarse <= ap.enumeration_threshold
        neighborhoods(h, todo[small], cache)
        g, k = ap.groups, ap.walks_per_group
        for v in todo[~small]:
            vals = np.empty(g * k)
            for s in range(0, g * k, _WALK_CHUNK):
                kk = min(_WALK_CHUNK, g * k - s)
                ok, _, nb, w, _ = nf.vertex_walks(np.full(kk, v), rng)
                vals[s : s + kk] = np.where(ok, np.ldexp(1.0, nb) / w, 0.0)
            cache.deg_hat[v] = np.median(vals.reshape(g, k).mean(axis=1))
    deg = cache.adj[vs].sum(axis=1).astype(float)
    walked = ~cache.known[vs]
    deg[walked] = cache.deg_hat[vs[walked]]
    return deg


def approx_degree(h: OracleHandle, v: int, z_set, ap: ApproxParams, cache: RunCache | None = None,
                  rng: np.random.Generator | None = None) -> float:
    """(1±ε)-estimate of ``|N(v) ∩ Z|``."""
    v = int(v)
    z = _z_set(h, v, z_set)
    if z is None:
        return float(approx_degrees(h, [v], ap, cache, rng)[0])
    return estimate_edges(h, [v], z, ap, cache, _rng_for(ap, rng, 0xD1))


# -- sampling --------------------------------------------------------------------

def _sample_forest(f: RectForest, size: int, ap: ApproxParams, rng) -> np.ndarray:
    if f.edges is None:
        coarse = f.walk_estimates(COARSE_WALKS, rng).mean()
        if coarse <= f.capacity.sum() / 8 or (ap.cost_cap and size >= coarse):
            f.enumerate()
    if f.edges is not None:
        if not len(f.edges):
            raise EmptyEdgeSet("no edges to sample from")
        return f.edges[rng.integers(0, len(f.edges), size)]
    rate = coarse / f.capacity.sum()
    got: list[np.ndarray] = []
    have = 0
    while have < size:
        k = int(min(_WALK_CHUNK, math.ceil(1.25 * (size - have) / rate) + 16))
        pairs = f.accepted_samples(k, rng)
        got.append(pairs)
        have += len(pairs)
    return np.concatenate(got)[:size]


def sample_edge(h: OracleHandle, a_set, b_set, ap: ApproxParams, size: int | None = None,
                cache: RunCache | None = None, rng: np.random.Generator | None = None):
    """Uniform edge(s) of ``E(G[A,B])`` as ``(a, b)`` with ``a ∈ A``.

    Returns one tuple, or a ``(size, 2)`` array when ``size`` is given.
    """
    a, b = _two_sets(h, a_set, b_set)
    cache = _cache(h, cache)
    k = 1 if size is None else int(size)
    rng = _rng_for(ap, rng, 0x5A)
    known = _known_bipartite(cache, a, b)
    if known is not None:
        if not len(known):
            raise EmptyEdgeSet("no edges between the sets")
        out = known[rng.integers(0, len(known), k)]
    else:
        out = _sample_forest(_bip_forest(h, a, b, cache), k, ap, rng)
    return tuple(int(x) for x in out[0]) if size is None else out


def _canonical_rows(e: np.ndarray) -> np.ndarray:
    return np.stack([e.min(axis=1), e.max(axis=1)], axis=1)


def sample_induced_edges(h: OracleHandle, x_set, size: int, ap: ApproxParams, cache: RunCache | None = None,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """``size`` independent uniform draws from ``E(G[X])`` (canonical rows)."""
    x = _vertex_array(x_set, h.n, "set")
    cache = _cache(h, cache)
    rng = _rng_for(ap, rng, 0x5B)
    if size <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    if len(x) < 2:
        raise EmptyEdgeSet("no edges inside the set")
    if cache.known[x].all():
        r, c = np.nonzero(np.triu(cache.adj[np.ix_(x, x)], 1))
        if not len(r):
            raise EmptyEdgeSet("no edges inside the set")
        i = rng.integers(0, len(r), size)
        return np.stack([x[r[i]], x[c[i]]], axis=1)
    f = _ind_forest(h, x, cache)
    out = _sample_forest(f, size, ap, rng)
    if f.edges is not None and len(x) == h.n:
        cache.learn_all_edges(f.edges)
    return _canonical_rows(out)


def adjacent_pairs(h: OracleHandle, us, vs, cache: RunCache | None = None) -> np.ndarray:
    """Edge test for each pair; one singleton BIS query unless already known."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    cache = _cache(h, cache)
    out = np.zeros(len(us), dtype=bool)
    known = cache.known[us] | cache.known[vs]
    out[known] = cache.adj[us[known], vs[known]]
    ask = ~known
    if ask.any():
        out[ask] = h.bis_pairs(us[ask], vs[ask])
    return out


def random_neighbors(h: OracleHandle, us, ap: ApproxParams, cache: RunCache | None = None,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """One independent uniform neighbour for every entry of ``us``."""
    us = np.asarray(us, dtype=np.int64)
    if h.n < 2 and len(us):
        raise EmptyEdgeSet("a one-vertex graph has no neighbours")
    cache = _cache(h, cache)
    rng = _rng_for(ap, rng, 0xAB)
    out = np.full(len(us), -1, dtype=np.int64)
    if not len(us):
        return out
    uniq, inv, counts = np.unique(us, return_inverse=True, return_counts=True)
    todo = ~cache.known[uniq]
    if todo.any() and h.n > 1:
        nf = cache.neighbourhood_forest(h)
        tv = uniq[todo]
        ok, _, nb, w, _ = nf.vertex_walks(np.repeat(tv, COARSE_WALKS), rng)
        coarse = np.where(ok, np.ldexp(1.0, nb) / w, 0.0).reshape(-1, COARSE_WALKS).mean(axis=1)
        enum = (coarse <= nf.vertex_capacity[tv] / 8) | (ap.cost_cap & (counts[todo] >= coarse))
        neighborhoods(h, tv[enum], cache)
    known = cache.known[us]
    if (~known).any():
        # rejection walks for the rest; accepted leaves are exactly uniform
        pend = np.flatnonzero(~known)
        while len(pend):
            ok, nbr, nb, _, depth = nf.vertex_walks(us[pend], rng)
            acc = ok & (rng.random(len(pend)) < np.ldexp(1.0, nb - depth))
            out[pend[acc]] = nbr[acc]
            pend = pend[~acc]
    kn = np.flatnonzero(cache.known[uniq])
    if len(kn):
        rows, cols = np.nonzero(cache.adj[uniq[kn]])
        deg = np.bincount(rows, minlength=len(kn))
        if (deg == 0).any():
            raise EmptyEdgeSet(f"vertex {uniq[kn][deg == 0][0]} has no neighbours")
        start = np.concatenate([[0], np.cumsum(deg)[:-1]])
        slot_of = np.full(len(uniq), -1)
        slot_of[kn] = np.arange(len(kn))
        take = np.flatnonzero(slot_of[inv] >= 0)
        j = slot_of[inv[take]]
        out[take] = cols[start[j] + (rng.random(len(take)) * deg[j]).astype(np.int64)]
    return out


def random_neighbor(h: OracleHandle, v: int, z_set, ap: ApproxParams, size: int | None = None,
                    cache: RunCache | None = None, rng: np.random.Generator | None = None):
    """Uniform neighbour(s) of ``v`` inside ``Z`` (``None`` means all other vertices)."""
    v = int(v)
    z = _z_set(h, v, z_set)
    k = 1 if size is None else int(size)
    rng = _rng_for(ap, rng, 0xAC)
    if z is None:
        out = random_neighbors(h, np.full(k, v), ap, cache, rng)
    else:
        out = sample_edge(h, [v], z, ap, size=k, cache=cache, rng=rng)[:, 1].copy()
    return int(out[0]) if size is None else out


# -- inspection helpers ----------------------------------------------------------------

def walk_once(h: OracleHandle, a_set, b_set, rng: np.random.Generator) -> WalkTrace:
    """A single estimator walk, with its exact leaf probability."""
    a, b = _two_sets(h, a_set, b_set)
    before = h.ledger.total
    f = RectForest(h.grid(a, b), [0], [len(a)], [0], [len(b)])
    ok, r, c, nb = f.walk(np.zeros(1, np.int64), rng)
    if not ok[0]:
        raise EmptyEdgeSet("no edges between the sets")
    pair = (int(a[r[0]]), int(b[c[0]]))
    return WalkTrace(pair, Fraction(1, 2 ** int(nb[0])), h.ledger.total - before)


def walk_distribution(h: OracleHandle, a_set, b_set) -> tuple[dict[tuple[int, int], Fraction], int]:
    """Exact leaf distribution of one walk, and the depth bound D."""
    a, b = _two_sets(h, a_set, b_set)
    f = RectForest(h.grid(a, b), [0], [len(a)], [0], [len(b)])
    depth = int(f.depth[0])
    dist: dict[tuple[int, int], Fraction] = {}
    zero = np.zeros(1, np.int64)
    if not f._lookup(zero, np.ones(1, np.int64), f.r0, f.r1, f.c0, f.c1)[0]:
        return dist, depth
    stack = [(1, int(f.r0[0]), int(f.r1[0]), int(f.c0[0]), int(f.c1[0]), Fraction(1))]
    while stack:
        hid, r0, r1, c0, c1, pr = stack.pop()
        if r1 - r0 == 1 and c1 - c0 == 1:
            dist[(int(a[r0]), int(b[c0]))] = pr
            continue
        arr = [np.array([x]) for x in (hid, r0, r1, c0, c1)]
        (lh, lrect, lok), (rh, rrect, rok) = f._children(zero, *arr)
        kids = [(int(lh[0]), *(int(x[0]) for x in lrect))] if lok[0] else []
        if rok[0]:
            kids.append((int(rh[0]), *(int(x[0]) for x in rrect)))
        for kid in kids:
            stack.append((*kid, pr / len(kids)))
    return dist, depth
