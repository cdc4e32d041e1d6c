"""Geodesic and resistance metrics between points of a metric graph.

Query points are handled by refining the graph at them, so loops, parallel
edges and same-edge pairs all go through the same code path.

The resistance metric is the usual effective resistance of the refined graph
with every piece acting as a resistor of resistance equal to its length. For
graphs without Euclidean edges this is the standard extension of the
definition rather than something the isotropic-field literature guarantees.
"""

import logging
from typing import Iterable

import networkx as nx
import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import BadParams, SingularLaplacian
from .graph import GraphPoint, MetricGraph, PointSet, RefinedGraph, refine
from .linalg import LabeledMatrix

logger = logging.getLogger(__name__)

METRICS = ("geodesic", "resistance")


def _query(graph: MetricGraph, points: PointSet | Iterable[GraphPoint]) -> tuple[PointSet, RefinedGraph, list[int]]:
    labels = PointSet.of(graph.canonical(p) for p in points)
    refined = refine(graph, labels)
    return labels, refined, [refined.nodes.index(p) for p in labels]


def geodesic_matrix(graph: MetricGraph, points: PointSet | Iterable[GraphPoint]) -> LabeledMatrix:
    """Shortest-path distances between the given points."""
    labels, refined, rows = _query(graph, points)
    G = refined.to_networkx()

    D = np.zeros((len(rows), len(rows)))
    for i, source in enumerate(rows):
        lengths = nx.single_source_dijkstra_path_length(G, source, weight="length")
        D[i] = [lengths[target] for target in rows]

    logger.debug(f"Geodesic distances for {len(rows)} points on {refined.node_count} refined nodes")
    return LabeledMatrix(labels, D, "distance")


def laplacian(refined: RefinedGraph) -> np.ndarray:
    """Weighted Laplacian with conductance 1/length; parallel pieces add, loops vanish."""
    n = refined.node_count
    L = np.zeros((n, n))
    for e in refined.edges:
        if e.a == e.b:
            continue
        c = 1.0 / e.length
        L[e.a, e.a] += c
        L[e.b, e.b] += c
        L[e.a, e.b] -= c
        L[e.b, e.a] -= c
    return L


def laplacian_pinv(L: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse of a connected-graph Laplacian.

    Grounds node 0, inverts the reduced (PD) system and projects the result
    onto the complement of the constant vector.

    Raises:
        SingularLaplacian: The reduced Laplacian is singular (disconnected graph)
    """
    n = L.shape[0]
    grounded = np.zeros((n, n))
    if n > 1:
        try:
            factor = cho_factor(L[1:, 1:], lower=True)
        except LinAlgError:
            raise SingularLaplacian("Grounded Laplacian is singular; the refined graph is disconnected")
        grounded[1:, 1:] = cho_solve(factor, np.eye(n - 1))
    J = np.eye(n) - 1.0 / n
    pinv = J @ grounded @ J
    return 0.5 * (pinv + pinv.T)


def resistance_matrix(graph: MetricGraph, points: PointSet | Iterable[GraphPoint]) -> LabeledMatrix:
    """Effective resistances between the given points."""
    labels, refined, rows = _query(graph, points)
    pinv = laplacian_pinv(laplacian(refined))

    diag = np.diag(pinv)
    R = diag[:, None] + diag[None, :] - 2.0 * pinv
    R = np.maximum(R[np.ix_(rows, rows)], 0.0)
    np.fill_diagonal(R, 0.0)
    return LabeledMatrix(labels, R, "distance")


def distance_matrix(graph: MetricGraph, points: PointSet | Iterable[GraphPoint], metric: str) -> LabeledMatrix:
    if metric == "geodesic":
        return geodesic_matrix(graph, points)
    if metric == "resistance":
        return resistance_matrix(graph, points)
    raise BadParams(f"Unknown metric {metric!r}; expected one of {', '.join(METRICS)}")
