"""Triangle estimators over the BIS oracle.

``triangle_est_high`` targets graphs with many triangles relative to edges:
sample an edge, orient it from its lower-ranked endpoint ``u``, pick a random
neighbour ``w`` of ``u`` and check whether ``w`` closes a triangle in which
``u`` is lowest and ``v`` is middle. Each success is worth ``m * deg(u)``.

``triangle_est_low`` builds a query sketch (a vertex sample ``S`` with its
edges and the edges among its neighbours, plus an edge sample ``F`` with the
edges that close wedges inside ``V(F)``) and then estimates from the sketch
alone. Triangles with a heavy edge are counted through ``S``; all-light
triangles through wedges formed by pairs of ``F`` draws.

``triangle_est`` searches the guess ``L`` downward by halving until an
estimate is consistent with it.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse

from ._rng import make_rng
from .graph import count_triangles_from_edges
from .oracle import OracleHandle
from .primitives import (
    ApproxParams,
    EmptyEdgeSet,
    RunCache,
    adjacent_pairs,
    approx_degrees,
    enum_edges_induced,
    estimate_induced_edges,
    neighborhoods,
    random_neighbors,
    sample_induced_edges,
)


@dataclass(frozen=True)
class EstimatorConfig:
    epsilon: float = 0.2
    delta: float | None = None  # None: 1/n
    seed: int = 0
    c_high: float = 2.0
    c_s: float = 1.0
    c_f: float = 0.1
    c_heavy: float = 1.0
    l_floor: float = 1.0
    c_var: float = 48.0
    deg_epsilon: float = 0.5
    cost_cap: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon={self.epsilon} must lie in (0, 1)")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError(f"delta={self.delta} must lie in (0, 1)")
        for name in ("c_high", "c_s", "c_f", "c_heavy", "l_floor", "c_var"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.deg_epsilon < 1:
            raise ValueError("deg_epsilon must lie in (0, 1)")

    def resolved_delta(self, n: int) -> float:
        return self.delta if self.delta is not None else min(0.5, 1 / max(n, 1))

    def approx(self, n: int, epsilon: float | None = None) -> ApproxParams:
        return ApproxParams(epsilon or self.epsilon, self.resolved_delta(n), self.seed, self.c_var, self.cost_cap)


@dataclass
class GuessState:
    l_guess: float
    history: list[tuple[float, float, int]] = field(default_factory=list)

    def record(self, estimate: float, queries: int) -> None:
        self.history.append((self.l_guess, estimate, queries))

    def halve(self) -> None:
        self.l_guess /= 2


@dataclass
class EstimateReport:
    t_hat: float
    algorithm: str
    l_used: float
    ledger: dict[str, int]
    seed: int
    m_hat: float = 0.0
    history: list[tuple[float, float, int]] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"t_hat": self.t_hat, "algorithm": self.algorithm, "l_used": self.l_used,
                           "ledger": self.ledger, "seed": self.seed}, sort_keys=True)


def rank_below(deg: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a`` ranks below ``b`` under (degree estimate, id)."""
    da, db = deg[a], deg[b]
    return (da < db) | ((da == db) & (a < b))


# -- high -------------------------------------------------------------------------

def high_groups(delta: float) -> int:
    """Odd number of median-of-means groups, about ln(2/δ)."""
    return 2 * int(math.log(2 / delta) // 2) + 1


def high_trial_count(cfg: EstimatorConfig, l_guess: float, m_hat: float, delta: float) -> int:
    scale = max(1.0, m_hat**1.5 / max(l_guess, 1e-12))
    return math.ceil(cfg.c_high * scale * math.log(2 / delta) / cfg.epsilon**2)


def high_trial_values(m_hat: float, deg_u, w_is_v, closes, v_below_w) -> np.ndarray:
    """Per-trial contribution ``m * deg(u) * [w closes, ranked above v]``."""
    success = ~np.asarray(w_is_v, bool) & np.asarray(closes, bool) & np.asarray(v_below_w, bool)
    return m_hat * np.asarray(deg_u, float) * success


def triangle_est_high(h: OracleHandle, cfg: EstimatorConfig, l_guess: float, m_hat: float,
                      cache: RunCache | None = None, rng: np.random.Generator | None = None) -> float:
    if m_hat <= 0:
        return 0.0
    n = h.n
    cache = cache if cache is not None else RunCache(n)
    rng = rng if rng is not None else make_rng(cfg.seed, 0x41)
    delta = cfg.resolved_delta(n)
    ap = cfg.approx(n)
    ap_deg = cfg.approx(n, cfg.deg_epsilon)
    r = high_trial_count(cfg, l_guess, m_hat, delta)
    try:
        e = sample_induced_edges(h, np.arange(n), r, ap, cache, rng)
    except EmptyEdgeSet:
        return 0.0
    deg = np.zeros(n)
    ends = np.unique(e)
    deg[ends] = approx_degrees(h, ends, ap_deg, cache, rng)
    first_low = rank_below(deg, e[:, 0], e[:, 1])
    u = np.where(first_low, e[:, 0], e[:, 1])
    v = np.where(first_low, e[:, 1], e[:, 0])
    w = random_neighbors(h, u, ap, cache, rng)
    w_is_v = w == v
    closes = np.zeros(r, dtype=bool)
    ask = ~w_is_v
    closes[ask] = adjacent_pairs(h, v[ask], w[ask], cache)
    above = np.zeros(r, dtype=bool)
    if closes.any():
        ws = np.unique(w[closes])
        deg[ws] = approx_degrees(h, ws, ap_deg, cache, rng)
        above[closes] = rank_below(deg, v[closes], w[closes])
    x = high_trial_values(m_hat, deg[u], w_is_v, closes, above)
    means = [g.mean() for g in np.array_split(x, min(high_groups(delta), r))]
    return float(np.median(means))


# -- low ---------------------------------------------------------------------------

@dataclass
class LowSketch:
    n: int
    s_set: np.ndarray
    e_s: np.ndarray
    e_s_prime: np.ndarray
    f_multiset: np.ndarray
    e_f: np.ndarray
    p_rate: float
    f_target: int
    fingerprint: tuple = ()

    @property
    def v_f(self) -> np.ndarray:
        return np.unique(self.f_multiset)


def sketch_fingerprint(cfg: EstimatorConfig, l_guess: float, m_hat: float) -> tuple:
    return (cfg.epsilon, cfg.c_s, cfg.c_f, cfg.c_heavy, cfg.seed, float(l_guess), float(m_hat))


def low_rates(cfg: EstimatorConfig, n: int, l_guess: float, m_hat: float) -> tuple[float, int]:
    ln = math.log(max(n, 2))
    root = math.sqrt(max(l_guess, 1.0))
    p = min(1.0, cfg.c_s * ln / (cfg.epsilon**2 * root))
    f = math.ceil(cfg.c_f * m_hat * ln / (cfg.epsilon**2 * root))
    return p, f


def heaviness_threshold(cfg: EstimatorConfig, n: int) -> float:
    return cfg.c_heavy * math.log(max(n, 2)) / cfg.epsilon**2


def _triu_edges(mat: np.ndarray, ids: np.ndarray | None = None) -> np.ndarray:
    r, c = np.nonzero(np.triu(mat, 1))
    if ids is not None:
        r, c = ids[r], ids[c]
    return np.stack([r, c], axis=1).astype(np.int64)


def _closing_edges(adj_sub: np.ndarray) -> np.ndarray:
    """Edges of the subgraph that have a common neighbour inside it."""
    f = adj_sub.astype(np.float32)
    return adj_sub & ((f @ f) > 0)


def build_low_sketch(h: OracleHandle, cfg: EstimatorConfig, l_guess: float, m_hat: float,
                     cache: RunCache | None = None, rng: np.random.Generator | None = None) -> LowSketch:
    n = h.n
    cache = cache if cache is not None else RunCache(n)
    rng = rng if rng is not None else make_rng(cfg.seed, 0x10)
    p, f_target = low_rates(cfg, n, l_guess, m_hat)
    s = np.flatnonzero(rng.random(n) < p)

    # E_S: every edge at a vertex of S
    neighborhoods(h, s, cache)
    in_s = np.zeros(n, dtype=bool)
    in_s[s] = True
    adj = cache.adj
    e_s = _triu_edges(adj & (in_s[:, None] | in_s[None, :]))

    # E_S': edges inside N(v) for v in S
    reach = adj[s].any(axis=0) if len(s) else np.zeros(n, bool)
    if cache.known[reach].all():
        a = adj & reach[:, None] & reach[None, :]
        sub = adj[:, s].astype(np.float32)
        e_sp = _triu_edges(a & ((sub @ sub.T) > 0))
    else:
        parts = [np.zeros((0, 2), np.int64)]
        for v in s:
            nv = np.flatnonzero(cache.adj[v])
            if len(nv) >= 2:
                parts.append(enum_edges_induced(h, nv, cache))
        e_sp = np.unique(np.concatenate(parts), axis=0)

    # F: uniform edge draws; E_F: edges closing a wedge inside V(F)
    if m_hat > 0 and f_target > 0:
        try:
            fm = sample_induced_edges(h, np.arange(n), f_target, cfg.approx(n), cache, rng)
        except EmptyEdgeSet:
            fm = np.zeros((0, 2), np.int64)
    else:
        fm = np.zeros((0, 2), np.int64)
    vf = np.unique(fm)
    neighborhoods(h, vf, cache)
    e_f = _triu_edges(_closing_edges(cache.adj[np.ix_(vf, vf)]), vf) if len(vf) else np.zeros((0, 2), np.int64)

    return LowSketch(n, s, e_s, e_sp, fm, e_f, p, f_target, sketch_fingerprint(cfg, l_guess, m_hat))


def _dense(n: int, edges: np.ndarray) -> np.ndarray:
    d = np.zeros((n, n), dtype=bool)
    d[edges[:, 0], edges[:, 1]] = True
    d[edges[:, 1], edges[:, 0]] = True
    return d


def _sym_sparse(n: int, edges: np.ndarray, weights=None) -> sparse.csr_matrix:
    w = np.ones(len(edges)) if weights is None else np.asarray(weights, float)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    return sparse.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))


def heavy_channel_count(n: int, s_set: np.ndarray, e_s: np.ndarray, e_s_prime: np.ndarray,
                        heavy: np.ndarray) -> float:
    """Triangles ``{x, y, v}`` with ``v ∈ S`` whose lexicographically least
    heavy edge is ``{x, y}``. ``heavy`` is a dense symmetric bool matrix."""
    if not len(e_s_prime):
        return 0.0
    xs, ys = e_s_prime[:, 0], e_s_prime[:, 1]
    keep = heavy[xs, ys]
    xs, ys = xs[keep], ys[keep]
    if not len(xs):
        return 0.0
    in_s = np.zeros(n, dtype=bool)
    in_s[s_set] = True
    a_s = _dense(n, e_s) & in_s[None, :]  # x -> apex v in S
    nh = a_s & ~heavy
    ux, ix = np.unique(xs, return_inverse=True)
    uy, iy = np.unique(ys, return_inverse=True)

    def pair_sum(fm, gm):
        f = fm[ux].astype(np.float32)
        g = gm[uy].astype(np.float32)
        return (f @ g.T)[ix, iy]

    # apex above y, between x and y, or below x (x < y)
    c3 = pair_sum(a_s, np.triu(a_s, 1))
    c2 = pair_sum(np.triu(nh, 1), np.tril(a_s, -1))
    c1 = pair_sum(np.tril(nh, -1), np.tril(nh, -1))
    return float((c1 + c2 + c3).sum())


def light_wedge_pairs(n: int, f_multiset: np.ndarray, f_light: np.ndarray, e_f: np.ndarray,
                      ef_light: np.ndarray) -> float:
    """Unordered pairs of F draws forming a wedge whose closing edge is a light E_F edge."""
    fl = f_multiset[f_light]
    if len(fl) < 2 or not ef_light.any():
        return 0.0
    w = _sym_sparse(n, fl)
    k = _sym_sparse(n, e_f[ef_light])
    return 0.5 * float((w @ w).multiply(k).sum())


def estimate_from_sketch(sk: LowSketch, cfg: EstimatorConfig, l_guess: float, m_hat: float) -> float:
    """Estimate T from the sketch alone; issues no oracle queries."""
    if sk.fingerprint != sketch_fingerprint(cfg, l_guess, m_hat):
        raise ValueError("sketch was built with a different configuration")
    n = sk.n
    if n < 3:
        return 0.0
    in_s = np.zeros(n, dtype=bool)
    in_s[sk.s_set] = True
    b = (_dense(n, sk.e_s) & in_s[None, :]).astype(np.float32)
    load = b @ b.T  # |Γ(x, y) ∩ S| for every pair
    theta = heaviness_threshold(cfg, n)
    heavy = load >= theta
    np.fill_diagonal(heavy, False)

    heavy_part = heavy_channel_count(n, sk.s_set, sk.e_s, sk.e_s_prime, heavy) / sk.p_rate

    f = len(sk.f_multiset)
    light_part = 0.0
    if f >= 2:
        fm = sk.f_multiset
        f_light = ~heavy[fm[:, 0], fm[:, 1]]
        ef_light = ~heavy[sk.e_f[:, 0], sk.e_f[:, 1]] if len(sk.e_f) else np.zeros(0, bool)
        pairs = light_wedge_pairs(n, fm, f_light, sk.e_f, ef_light)
        light_part = pairs * m_hat**2 / (3 * f * (f - 1))
    return heavy_part + light_part


def triangle_est_low(h: OracleHandle, cfg: EstimatorConfig, l_guess: float, m_hat: float,
                     cache: RunCache | None = None, rng: np.random.Generator | None = None) -> float:
    sk = build_low_sketch(h, cfg, l_guess, m_hat, cache, rng)
    return estimate_from_sketch(sk, cfg, l_guess, m_hat)


# -- wrapper -----------------------------------------------------------------------

def triangle_est(h: OracleHandle, cfg: EstimatorConfig) -> EstimateReport:
    n = h.n
    cache = RunCache(n)
    x = np.arange(n)
    m_hat = estimate_induced_edges(h, x, cfg.approx(n, cfg.epsilon / 4), cache, make_rng(cfg.seed, 0x3E))
    state = GuessState(math.comb(n, 3) / 2)
    it = 0
    while state.l_guess >= cfg.l_floor:
        rng = make_rng(cfg.seed, 0x7E, it)
        before = h.ledger.total
        if state.l_guess >= m_hat:
            algo, t_hat = "high", triangle_est_high(h, cfg, state.l_guess, m_hat, cache, rng)
        else:
            algo, t_hat = "low", triangle_est_low(h, cfg, state.l_guess, m_hat, cache, rng)
        state.record(t_hat, h.ledger.total - before)
        if t_hat >= state.l_guess / 2:
            return EstimateReport(t_hat, algo, state.l_guess, h.ledger.snapshot(), cfg.seed, m_hat, state.history)
        state.halve()
        it += 1
    edges = enum_edges_induced(h, x, cache) if n >= 2 else np.zeros((0, 2), np.int64)
    t = float(count_triangles_from_edges(n, edges))
    return EstimateReport(t, "exact-fallback", state.l_guess, h.ledger.snapshot(), cfg.seed, m_hat, state.history)


def config_dict(cfg: EstimatorConfig) -> dict:
    return asdict(cfg)
