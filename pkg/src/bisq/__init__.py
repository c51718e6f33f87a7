"""Triangle counting through metered emptiness oracles."""
from .graph import Graph, GraphError, build_graph, count_triangles_exact, gen_er
from .oracle import OracleError, OracleHandle, QueryLedger

__all__ = [
    "Graph",
    "GraphError",
    "OracleError",
    "OracleHandle",
    "QueryLedger",
    "build_graph",
    "count_triangles_exact",
    "gen_er",
]
