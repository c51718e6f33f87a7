"""Planted two-biclique instances whose triangle counts straddle a factor-2 gap.

Vertices are split uniformly into parts A, B, C, D. ``A x B`` and ``C x D``
are complete; each pair in ``(A ∪ B) x C`` is an edge with probability
``sqrt(t / (16 m^1.5))``. The No flavour also picks ``C' ⊆ C`` at rate
``32 t / m^1.5`` and joins ``C'`` to all of ``A ∪ B``. Both flavours share the
same random stream for everything except ``C'``, so a No instance is its Yes
twin plus the ``C' x (A ∪ B)`` completion.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng
from .graph import Graph, build_graph, complete_bipartite, count_triangles_exact, disjoint_union
from .oracle import OracleHandle

LABELS = ("A", "B", "C", "C'", "D", "pad")
A, B, C, CP, D, PAD = range(6)


class HardInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class HardInstanceSpec:
    m: int
    t: int
    flavor: str = "yes"
    seed: int = 0

    def __post_init__(self):
        flavor = self.flavor.lower()
        if flavor not in ("yes", "no"):
            raise HardInstanceError(f"flavor must be yes or no, got {self.flavor!r}")
        object.__setattr__(self, "flavor", flavor)
        root = math.isqrt(self.m) if self.m > 0 else 0
        if self.m <= 0 or root * root != self.m:
            raise HardInstanceError(f"sqrt(m) must be a positive integer (m={self.m})")
        lo = self.m * math.log2(self.n) / 8
        if self.t < lo:
            raise HardInstanceError(f"t >= m*log2(n)/8 violated: t={self.t} < {lo:g}")
        hi = self.m**1.5 / 128
        if self.t > hi:
            raise HardInstanceError(f"t <= m^(3/2)/128 violated: t={self.t} > {hi:g}")

    @property
    def n(self) -> int:
        return 4 * math.isqrt(self.m)

    @property
    def cross_p(self) -> float:
        return math.sqrt(self.t / (16 * self.m**1.5))

    @property
    def c_prime_rate(self) -> float:
        return 32 * self.t / self.m**1.5

    def with_flavor(self, flavor: str) -> "HardInstanceSpec":
        return HardInstanceSpec(self.m, self.t, flavor, self.seed)


@dataclass(frozen=True)
class PartitionLabels:
    codes: np.ndarray  # one entry of LABELS (by index) per vertex

    def members(self, *parts: int) -> np.ndarray:
        return np.flatnonzero(np.isin(self.codes, parts))

    def count(self, part: int) -> int:
        return int((self.codes == part).sum())

    def sizes(self) -> dict[str, int]:
        # C' is reported separately but is part of C
        return {
            "A": self.count(A),
            "B": self.count(B),
            "C": self.count(C) + self.count(CP),
            "C'": self.count(CP),
            "D": self.count(D),
        }

    def names(self) -> list[str]:
        return [LABELS[c] for c in self.codes]


def gen_hard(spec: HardInstanceSpec) -> tuple[Graph, PartitionLabels]:
    n = spec.n
    rng = make_rng(spec.seed, 0x4A)
    codes = rng.integers(0, 4, n).astype(np.int8)
    codes[codes == 3] = D
    codes[codes == 2] = C
    a, b, c, d = (np.flatnonzero(codes == x) for x in (A, B, C, D))
    ab = np.concatenate([a, b])
    cross = rng.random((len(ab), len(c))) < spec.cross_p
    # C' comes from its own stream so both flavours share every other coin
    in_cp = make_rng(spec.seed, 0x4C).random(len(c)) < spec.c_prime_rate
    if spec.flavor == "no":
        codes[c[in_cp]] = CP
        cross[:, in_cp] = True
    pieces = [_biclique(a, b), _biclique(c, d)]
    ri, ci = np.nonzero(cross)
    pieces.append(np.stack([ab[ri], c[ci]], axis=1))
    return build_graph(n, np.concatenate(pieces)), PartitionLabels(codes)


def _biclique(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


@dataclass
class ValidationReport:
    sizes: dict[str, int]
    edges: int
    triangles: int
    checks: dict[str, bool] = field(default_factory=dict)
    notes: dict[str, bool] = field(default_factory=dict)  # logged, not gating

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def validate_instance(g: Graph, labels: PartitionLabels, spec: HardInstanceSpec,
                      triangles: int | None = None) -> ValidationReport:
    m, t = spec.m, spec.t
    root = math.sqrt(m)
    sizes = labels.sizes()
    tri = count_triangles_exact(g) if triangles is None else int(triangles)
    rep = ValidationReport(sizes, g.m, tri)
    for part in ("A", "B", "C", "D"):
        rep.checks[f"|{part}| in [sqrt(m)/2, 2 sqrt(m)]"] = root / 2 <= sizes[part] <= 2 * root
    rep.checks["edges in [m/4, 16m]"] = m / 4 <= g.m <= 16 * m
    if spec.flavor == "yes":
        rep.checks["C' empty"] = sizes["C'"] == 0
        rep.checks["T <= t"] = tri <= t
    else:
        rep.checks["T >= 2t"] = tri >= 2 * t
        # the upper end appears as both 64t/m and 32t/m; the looser one is checked
        rep.checks["|C'| in [8t/m, 64t/m]"] = 8 * t / m <= sizes["C'"] <= 64 * t / m
        rep.notes["|C'| <= 32t/m"] = sizes["C'"] <= 32 * t / m
    return rep


@dataclass(frozen=True)
class PaddedSpec:
    base: HardInstanceSpec

    @property
    def pad_side(self) -> int:
        s = math.isqrt(self.base.t)
        return s if s * s == self.base.t else s + 1


def gen_padded(ps: PaddedSpec) -> tuple[Graph, PartitionLabels]:
    """Hard instance plus a disjoint, triangle-free ``K_{s,s}`` with ``s = ceil(sqrt t)``."""
    g, labels = gen_hard(ps.base)
    s = ps.pad_side
    out = disjoint_union(g, complete_bipartite(s, s))
    codes = np.concatenate([labels.codes, np.full(2 * s, PAD, dtype=np.int8)])
    return out, PartitionLabels(codes)


# -- distinguishing experiment ---------------------------------------------------

CSV_COLUMNS = ("flavor", "seed", "m", "t", "n", "edges", "triangles", "t_hat", "classified", "ee_queries")


@dataclass
class ExperimentReport:
    rows: list[dict] = field(default_factory=list)

    def accuracy(self, flavor: str | None = None) -> float:
        rows = [r for r in self.rows if flavor is None or r["flavor"] == flavor]
        if not rows:
            return float("nan")
        return sum(r["classified"] == r["flavor"] for r in rows) / len(rows)

    def query_quantiles(self, qs=(0.1, 0.5, 0.9), flavor: str | None = None) -> list[float]:
        vals = [r["ee_queries"] for r in self.rows if flavor is None or r["flavor"] == flavor]
        return [float(x) for x in np.quantile(vals, qs)] if vals else []

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: r[k] for k in CSV_COLUMNS})
        return buf.getvalue()


def _exact_estimate(h: OracleHandle, cfg) -> float:
    from .primitives import enum_edges_induced

    e = enum_edges_induced(h, np.arange(h.n))
    return float(count_triangles_exact(build_graph(h.n, e)))


def _wrapper_estimate(h: OracleHandle, cfg) -> float:
    from .estimators import triangle_est

    return triangle_est(h, cfg).t_hat


ESTIMATORS = {"exact": _exact_estimate, "triangle-est": _wrapper_estimate}


def run_distinguisher(spec: HardInstanceSpec, algorithm: str, cfg, trials: int,
                      progress=None) -> ExperimentReport:
    """``trials`` instances per flavour, every query routed through EE.

    Instance ``i`` uses seed ``spec.seed + i`` for both flavours; the
    estimator seed is ``cfg.seed + i``.
    """
    from dataclasses import replace

    if algorithm not in ESTIMATORS:
        raise ValueError(f"unknown estimator {algorithm!r}; choose from {sorted(ESTIMATORS)}")
    run = ESTIMATORS[algorithm]
    rep = ExperimentReport()
    for flavor in ("yes", "no"):
        for i in range(trials):
            inst = HardInstanceSpec(spec.m, spec.t, flavor, spec.seed + i)
            g, _ = gen_hard(inst)
            h = OracleHandle(g, route="ee")
            t_hat = run(h, replace(cfg, seed=cfg.seed + i))
            snap = h.ledger.snapshot()
            assert snap["bis"] == 0 and snap["is"] == 0
            rep.rows.append({
                "flavor": flavor, "seed": inst.seed, "m": spec.m, "t": spec.t, "n": g.n,
                "edges": g.m, "triangles": count_triangles_exact(g), "t_hat": t_hat,
                "classified": "yes" if t_hat < 1.5 * spec.t else "no",
                "ee_queries": snap["ee"],
            })
            if progress is not None:
                progress(rep.rows[-1])
    return rep
