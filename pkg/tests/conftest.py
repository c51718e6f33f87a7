import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bisq.graph import build_graph

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_graphs(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return build_graph(n, [p for p, k in zip(pairs, keep) if k])


def naive_triangles(g) -> int:
    d = g.dense()
    return sum(1 for a, b, c in itertools.combinations(range(g.n), 3) if d[a, b] and d[a, c] and d[b, c])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
