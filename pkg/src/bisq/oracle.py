"""Metered BIS / IS / EE oracles over a sealed hidden graph.

Algorithms receive an :class:`OracleHandle` and nothing else. Every answer is
charged to the handle's :class:`QueryLedger` before it is returned.

Two batched forms of the BIS query exist for speed: :meth:`OracleHandle.bis_pairs`
(many ``bis({u}, {v})`` calls) and :class:`BisGrid`, which answers
``bis(rows[r0:r1], cols[c0:c1])`` for many index rectangles at once. Each pair
or rectangle is one BIS query and is charged as such.
"""
from __future__ import annotations

import json
import math
import threading
from typing import Iterable

import numpy as np

from ._rng import make_rng
from .graph import Graph


class OracleError(ValueError):
    """Malformed query (empty or overlapping sets, bad vertex ids)."""


class QueryLedger:
    KINDS = ("bis", "is", "ee")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counts = dict.fromkeys(self.KINDS, 0)

    def charge(self, kind: str, k: int = 1) -> None:
        if k < 0:
            raise ValueError("ledger counters never decrease")
        with self._lock:
            self._counts[kind] += int(k)

    @property
    def bis_count(self) -> int:
        return self._counts["bis"]

    @property
    def is_count(self) -> int:
        return self._counts["is"]

    @property
    def ee_count(self) -> int:
        return self._counts["ee"]

    @property
    def total(self) -> int:
        return sum(self._counts.values())

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def to_json(self) -> str:
        return json.dumps(self.snapshot())


def _vertex_array(s: Iterable[int] | np.ndarray, n: int, what: str) -> np.ndarray:
    arr = np.unique(np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise OracleError(f"{what} contains a vertex outside 0..{n - 1}")
    return arr


class OracleHandle:
    """Query access to a hidden graph.

    ``route="ee"`` answers every BIS-interface query through the EE
    simulation (one EE query per BIS query), so algorithms written against
    BIS run unchanged with all charges landing on ``ee``.
    """

    def __init__(self, graph: Graph, route: str = "bis"):
        if route not in ("bis", "ee"):
            raise ValueError(f"unknown route {route!r}")
        self.__graph = graph
        self.route = route
        self.ledger = QueryLedger()

    @property
    def n(self) -> int:
        return self.__graph.n

    def _charge_bis(self, k: int = 1) -> None:
        self.ledger.charge("ee" if self.route == "ee" else "bis", k)

    def _two_sets(self, u_set, v_set) -> tuple[np.ndarray, np.ndarray]:
        u = _vertex_array(u_set, self.n, "first set")
        v = _vertex_array(v_set, self.n, "second set")
        if not len(u) or not len(v):
            raise OracleError("BIS needs two nonempty sets")
        if np.intersect1d(u, v, assume_unique=True).size:
            raise OracleError("BIS sets must be disjoint")
        return u, v

    # -- single queries ------------------------------------------------------
    def bis(self, u_set, v_set) -> bool:
        if self.route == "ee":
            return self.bis_via_ee(u_set, v_set)
        u, v = self._two_sets(u_set, v_set)
        self.ledger.charge("bis")
        return bool(self.__graph.dense()[np.ix_(u, v)].any())

    def is_query(self, u_set) -> bool:
        u = _vertex_array(u_set, self.n, "set")
        if len(u) < 2:
            raise OracleError("IS needs at least two vertices")
        self.ledger.charge("is")
        return bool(self.__graph.dense()[np.ix_(u, u)].any())

    def ee(self, pairs) -> bool:
        p = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.int64)
        if p.size == 0:
            raise OracleError("EE needs a nonempty pair set")
        p = p.reshape(-1, 2)
        if ((p < 0) | (p >= self.n)).any():
            raise OracleError(f"pair with a vertex outside 0..{self.n - 1}")
        if (p[:, 0] == p[:, 1]).any():
            raise OracleError("EE pairs must join distinct vertices")
        self.ledger.charge("ee")
        return bool(self.__graph.dense()[p[:, 0], p[:, 1]].any())

    def bis_via_ee(self, u_set, v_set) -> bool:
        u, v = self._two_sets(u_set, v_set)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        return self.ee(np.stack([uu.ravel(), vv.ravel()], axis=1))

    def is_via_bis(self, u_set, rounds: int | None = None, seed: int = 0) -> bool:
        """One-sided IS simulation by random proper bipartitions of ``u_set``."""
        u = _vertex_array(u_set, self.n, "set")
        if len(u) < 2:
            raise OracleError("IS needs at least two vertices")
        if rounds is None:
            rounds = max(1, math.ceil(3 * math.log2(max(self.n, 2))))
        if rounds < 1:
            raise ValueError("rounds must be at least 1")
        rng = make_rng(seed, 0x15)
        for _ in range(rounds):
            side = rng.integers(0, 2, len(u)).astype(bool)
            while side.all() or not side.any():
                side = rng.integers(0, 2, len(u)).astype(bool)
            if self.bis(u[side], u[~side]):
                return True
        return False

    # -- batched BIS -------------------------------------------------------------
    def bis_pairs(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        """``bis({u}, {v})`` for each pair; one query each."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        if us.shape != vs.shape:
            raise OracleError("pair arrays differ in length")
        if us.size == 0:
            return np.zeros(0, dtype=bool)
        if ((us < 0) | (us >= self.n) | (vs < 0) | (vs >= self.n)).any():
            raise OracleError("pair with a vertex outside the graph")
        if (us == vs).any():
            raise OracleError("BIS sets must be disjoint")
        self._charge_bis(len(us))
        return self.__graph.dense()[us, vs].copy()

    def grid(self, rows, cols=None) -> "BisGrid":
        """Rectangle-query view over fixed orderings ``rows`` x ``cols``.

        With ``cols=None`` both sides use ``rows`` and every queried rectangle
        must use disjoint index ranges.
        """
        r = np.asarray(rows, dtype=np.int64)
        c = r if cols is None else np.asarray(cols, dtype=np.int64)
        for arr in (r, c):
            if arr.size and ((arr < 0).any() or (arr >= self.n).any()):
                raise OracleError("grid ordering has a vertex outside the graph")
        symmetric = cols is None
        if not symmetric and np.intersect1d(r, c).size:
            raise OracleError("grid row and column sets must be disjoint")
        sub = self.__graph.dense()[np.ix_(r, c)]
        pref = np.zeros((len(r) + 1, len(c) + 1), dtype=np.int32)
        if sub.size:
            np.cumsum(sub, axis=0, dtype=np.int32, out=pref[1:, 1:])
            np.cumsum(pref[1:, 1:], axis=1, out=pref[1:, 1:])
        return BisGrid(self, r, c, symmetric, pref)


class BisGrid:
    __slots__ = ("_handle", "rows", "cols", "symmetric", "_pref")

    def __init__(self, handle: OracleHandle, rows, cols, symmetric, pref):
        self._handle = handle
        self.rows = rows
        self.cols = cols
        self.symmetric = symmetric
        self._pref = pref

    def query(self, r0, r1, c0, c1) -> np.ndarray:
        r0, r1, c0, c1 = (np.asarray(x, dtype=np.int64) for x in (r0, r1, c0, c1))
        if r0.size == 0:
            return np.zeros(0, dtype=bool)
        if ((r1 <= r0) | (c1 <= c0)).any():
            raise OracleError("empty rectangle side")
        if (r0 < 0).any() or (c0 < 0).any() or (r1 > len(self.rows)).any() or (c1 > len(self.cols)).any():
            raise OracleError("rectangle outside the grid")
        if self.symmetric and ((r0 < c1) & (c0 < r1)).any():
            raise OracleError("overlapping ranges in a symmetric grid")
        self._handle._charge_bis(r0.size)
        p = self._pref
        return (p[r1, c1] - p[r0, c1] - p[r1, c0] + p[r0, c0]) > 0


# module-level spellings ---------------------------------------------------------

def bis(h: OracleHandle, u_set, v_set) -> bool:
    return h.bis(u_set, v_set)


def is_query(h: OracleHandle, u_set) -> bool:
    return h.is_query(u_set)


def ee(h: OracleHandle, pairs) -> bool:
    return h.ee(pairs)


def bis_via_ee(h: OracleHandle, u_set, v_set) -> bool:
    return h.bis_via_ee(u_set, v_set)


def is_via_bis(h: OracleHandle, u_set, rounds: int | None = None, seed: int = 0) -> bool:
    return h.is_via_bis(u_set, rounds, seed)
