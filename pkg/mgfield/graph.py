"""Metric-graph data model: construction, point sets, refinement, admissibility and separation."""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import BadIndex, BadParams, BadPoint, Disconnected, NonPositiveLength
from .report import CheckReport

logger = logging.getLogger(__name__)

GRAPH_FAMILIES = ("path", "cycle", "tree", "star", "tadpole", "two_cycles", "lattice")


@dataclass(frozen=True)
class Edge:
    edge_id: int
    u: int
    v: int
    length: float

    @property
    def is_loop(self) -> bool:
        return self.u == self.v


@dataclass(frozen=True)
class GraphPoint:
    """A location on a metric graph.

    Canonical form: a vertex point carries only `vertex`; an interior point
    carries `edge_id` and an offset strictly inside the edge. Use
    `MetricGraph.point` to obtain canonical points from (edge, offset) pairs.
    """

    vertex: int | None = None
    edge_id: int | None = None
    offset: float = 0.0

    @classmethod
    def at_vertex(cls, vertex: int) -> "GraphPoint":
        return cls(vertex=int(vertex))

    @classmethod
    def interior(cls, edge_id: int, offset: float) -> "GraphPoint":
        return cls(edge_id=int(edge_id), offset=float(offset))

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def sort_key(self) -> tuple:
        if self.is_vertex:
            return (0, self.vertex, 0.0)
        return (1, self.edge_id, self.offset)

    def label(self) -> str:
        if self.is_vertex:
            return str(self.vertex)
        return f"e{self.edge_id}:{self.offset:.17g}"

    @classmethod
    def from_label(cls, text: str) -> "GraphPoint":
        text = text.strip()
        try:
            if text.startswith("e"):
                edge_part, offset_part = text[1:].split(":", 1)
                return cls.interior(int(edge_part), float(offset_part))
            return cls.at_vertex(int(text))
        except ValueError:
            raise BadPoint(f"Cannot parse point label {text!r}")

    def __repr__(self) -> str:
        return f"GraphPoint({self.label()})"


@dataclass(frozen=True)
class PointSet:
    """Ordered, duplicate-free set of canonical points.

    Order: vertex points by index, then interior points by (edge_id, offset).
    This order fixes row/column order of every matrix built downstream.
    """

    points: tuple[GraphPoint, ...]

    def __post_init__(self):
        keys = [p.sort_key() for p in self.points]
        for previous, current in zip(keys, keys[1:]):
            if not previous < current:
                raise BadPoint("PointSet points must be distinct and in canonical order; use PointSet.of")

    @classmethod
    def of(cls, points: Iterable[GraphPoint]) -> "PointSet":
        unique = {p.sort_key(): p for p in points}
        return cls(tuple(unique[key] for key in sorted(unique)))

    @classmethod
    def vertices(cls, vertex_count: int) -> "PointSet":
        return cls(tuple(GraphPoint.at_vertex(v) for v in range(vertex_count)))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i: int) -> GraphPoint:
        return self.points[i]

    def __contains__(self, point: GraphPoint) -> bool:
        return point in self._positions

    @cached_property
    def _positions(self) -> dict[GraphPoint, int]:
        return {p: i for i, p in enumerate(self.points)}

    def index(self, point: GraphPoint) -> int:
        try:
            return self._positions[point]
        except KeyError:
            raise BadIndex(f"Point {point.label()} is not in the point set")

    def index_of_label(self, label: str) -> int:
        return self.index(GraphPoint.from_label(label))

    def labels(self) -> list[str]:
        return [p.label() for p in self.points]

    def union(self, points: Iterable[GraphPoint]) -> "PointSet":
        return PointSet.of(list(self.points) + list(points))

    def subset(self, indices: Sequence[int]) -> "PointSet":
        return PointSet.of(self.points[i] for i in indices)


@dataclass(frozen=True)
class MetricGraph:
    """Vertices 0..vertex_count-1 and edges with positive lengths.

    Loops and parallel edges are allowed. Build through `build_graph` so that
    positivity and connectivity are enforced.
    """

    vertex_count: int
    edges: tuple[Edge, ...]

    @cached_property
    def _edges_by_id(self) -> dict[int, Edge]:
        return {e.edge_id: e for e in self.edges}

    def edge(self, edge_id: int) -> Edge:
        try:
            return self._edges_by_id[edge_id]
        except KeyError:
            raise BadPoint(f"Unknown edge id {edge_id}")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    def degrees(self) -> np.ndarray:
        """Multigraph degrees; a loop adds 2."""
        degrees = np.zeros(self.vertex_count, dtype=int)
        for e in self.edges:
            degrees[e.u] += 1
            degrees[e.v] += 1
        return degrees

    def has_loops(self) -> bool:
        return any(e.is_loop for e in self.edges)

    def point(self, edge_id: int, offset: float) -> GraphPoint:
        """Canonical point at arclength `offset` from the edge's first endpoint."""
        e = self.edge(edge_id)
        offset = float(offset)
        if not (0.0 <= offset <= e.length):
            raise BadPoint(f"Offset {offset} outside [0, {e.length}] on edge {edge_id}")
        if offset == 0.0:
            return GraphPoint.at_vertex(e.u)
        if offset == e.length:
            return GraphPoint.at_vertex(e.v)
        return GraphPoint.interior(edge_id, offset)

    def canonical(self, point: GraphPoint) -> GraphPoint:
        if point.is_vertex:
            if not 0 <= point.vertex < self.vertex_count:
                raise BadPoint(f"Vertex {point.vertex} out of range")
            return point
        return self.point(point.edge_id, point.offset)

    def vertex_points(self) -> PointSet:
        return PointSet.vertices(self.vertex_count)

    def to_networkx(self) -> nx.MultiGraph:
        G = nx.MultiGraph()
        G.add_nodes_from(range(self.vertex_count))
        for e in self.edges:
            G.add_edge(e.u, e.v, key=e.edge_id, length=e.length)
        return G

    def is_uniform(self, ell: float, rtol: float = 1e-12) -> bool:
        return all(math.isclose(e.length, ell, rel_tol=rtol, abs_tol=0.0) for e in self.edges)

    def is_tree(self) -> bool:
        return self.edge_count == self.vertex_count - 1

    def is_cycle(self) -> bool:
        return self.edge_count == self.vertex_count and bool(np.all(self.degrees() == 2))

    def contains_cycle(self) -> bool:
        return self.edge_count >= self.vertex_count


@dataclass(frozen=True)
class RefinedEdge:
    """A piece [lo, hi] of a parent edge joining refined nodes a and b."""

    a: int
    b: int
    length: float
    parent_id: int
    lo: float
    hi: float


@dataclass(frozen=True)
class RefinedGraph:
    """Combinatorial graph obtained by promoting a point set to vertices."""

    nodes: PointSet
    edges: tuple[RefinedEdge, ...]

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @cached_property
    def _adjacency(self) -> np.ndarray:
        A = np.zeros((self.node_count, self.node_count), dtype=bool)
        for e in self.edges:
            if e.a != e.b:
                A[e.a, e.b] = A[e.b, e.a] = True
        A.setflags(write=False)
        return A

    def adjacency(self) -> np.ndarray:
        """Simple boolean adjacency (parallel edges collapsed, loops dropped)."""
        return self._adjacency

    def to_networkx(self) -> nx.MultiGraph:
        G = nx.MultiGraph()
        G.add_nodes_from(range(self.node_count))
        for e in self.edges:
            G.add_edge(e.a, e.b, length=e.length, parent=e.parent_id)
        return G

    @property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    def components_without(self, removed: Iterable[int]) -> np.ndarray:
        """Component label per node after deleting `removed`; deleted nodes get -1."""
        keep = np.ones(self.node_count, dtype=bool)
        keep[list(removed)] = False
        labels = np.full(self.node_count, -1, dtype=int)
        kept = np.flatnonzero(keep)
        if kept.size:
            sub = csr_matrix(self._adjacency[np.ix_(kept, kept)])
            _, sub_labels = connected_components(sub, directed=False)
            labels[kept] = sub_labels
        return labels


def build_graph(vertex_count: int, edges: Iterable[tuple[int, int, int, float]]) -> MetricGraph:
    """Validate and build a metric graph.

    Args:
        vertex_count: Number of vertices (at least 1)
        edges: (edge_id, u, v, length) tuples

    Raises:
        BadIndex: Invalid endpoint or duplicate edge id
        NonPositiveLength: Non-finite or non-positive length
        Disconnected: Some vertex is unreachable from vertex 0
    """
    if not isinstance(vertex_count, (int, np.integer)) or vertex_count < 1:
        raise BadIndex(f"vertex_count must be a positive integer, got {vertex_count!r}")
    vertex_count = int(vertex_count)

    built = []
    seen_ids = set()
    for edge_id, u, v, length in edges:
        if edge_id in seen_ids:
            raise BadIndex(f"Duplicate edge id {edge_id}")
        seen_ids.add(edge_id)
        for endpoint in (u, v):
            if not isinstance(endpoint, (int, np.integer)) or not 0 <= endpoint < vertex_count:
                raise BadIndex(f"Edge {edge_id}: endpoint {endpoint!r} is not a vertex index")
        length = float(length)
        if not math.isfinite(length) or length <= 0.0:
            raise NonPositiveLength(f"Edge {edge_id}: length must be positive and finite, got {length}")
        built.append(Edge(int(edge_id), int(u), int(v), length))

    graph = MetricGraph(vertex_count, tuple(built))
    reachable = nx.node_connected_component(graph.to_networkx(), 0)
    if len(reachable) != vertex_count:
        missing = sorted(set(range(vertex_count)) - reachable)
        raise Disconnected(f"Vertices {missing} are not reachable from vertex 0")

    logger.debug(f"Built graph with {vertex_count} vertices and {len(built)} edges")
    return graph


def _sequential(vertex_count: int, pairs: Iterable[tuple[int, int, float]]) -> MetricGraph:
    return build_graph(vertex_count, [(i, u, v, l) for i, (u, v, l) in enumerate(pairs)])


def _positive_int(params: dict[str, Any], key: str, default: int | None = None) -> int:
    value = params.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise BadParams(f"Parameter {key!r} must be an integer >= 1, got {value!r}")
    return int(value)


def _positive_float(params: dict[str, Any], key: str, default: float) -> float:
    value = params.get(key, default)
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise BadParams(f"Parameter {key!r} must be a number, got {value!r}")
    if not math.isfinite(value) or value <= 0.0:
        raise BadParams(f"Parameter {key!r} must be positive, got {value}")
    return value


def generate_graph(family: str, params: dict[str, Any] | None = None) -> MetricGraph:
    """Generate a graph from a named family.

    Families and their parameters:
        path: n edges, length
        cycle: n edges, length
        tree: n vertices, seed, min_length, max_length (or a fixed length)
        star: n leaves, length
        tadpole: length (two 4-cycles sharing vertex 3)
        two_cycles: n1, n2 edges per cycle, length
        lattice: rows, cols, length

    Raises:
        BadParams: Unknown family or invalid parameters
    """
    params = dict(params or {})
    length = _positive_float(params, "length", 1.0)

    if family == "path":
        n = _positive_int(params, "n")
        return _sequential(n + 1, ((i, i + 1, length) for i in range(n)))

    if family == "cycle":
        n = _positive_int(params, "n")
        return _sequential(n, ((i, (i + 1) % n, length) for i in range(n)))

    if family == "star":
        n = _positive_int(params, "n")
        return _sequential(n + 1, ((0, i + 1, length) for i in range(n)))

    if family == "tree":
        n = _positive_int(params, "n")
        seed = params.get("seed", 0)
        rng = np.random.default_rng(seed)
        if "length" in params:
            lo = hi = length
        else:
            lo = _positive_float(params, "min_length", 0.5)
            hi = _positive_float(params, "max_length", 2.0)
            if hi < lo:
                raise BadParams(f"max_length {hi} is below min_length {lo}")
        pairs = []
        for child in range(1, n):
            parent = int(rng.integers(0, child))
            pairs.append((parent, child, float(rng.uniform(lo, hi)) if hi > lo else lo))
        return _sequential(n, pairs)

    if family == "tadpole":
        cycle = generate_graph("cycle", {"n": 4, "length": length})
        return one_sum(cycle, cycle, 3, 0)

    if family == "two_cycles":
        first = generate_graph("cycle", {"n": _positive_int(params, "n1", 4), "length": length})
        second = generate_graph("cycle", {"n": _positive_int(params, "n2", 4), "length": length})
        return one_sum(first, second, first.vertex_count - 1, 0)

    if family == "lattice":
        rows = _positive_int(params, "rows")
        cols = _positive_int(params, "cols")
        grid = nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering="sorted")
        pairs = sorted((min(u, v), max(u, v)) for u, v in grid.edges())
        return _sequential(rows * cols, ((u, v, length) for u, v in pairs))

    raise BadParams(f"Unknown graph family {family!r}; expected one of {', '.join(GRAPH_FAMILIES)}")


def one_sum(g1: MetricGraph, g2: MetricGraph, v1: int, v2: int) -> MetricGraph:
    """Glue g2 onto g1 by identifying vertex v2 of g2 with vertex v1 of g1.

    Vertices of g1 keep their indices; the remaining vertices of g2 follow in
    order. Edge ids of g2 are shifted past the largest id of g1.
    """
    if not 0 <= v1 < g1.vertex_count:
        raise BadIndex(f"Glue vertex {v1} is not a vertex of the first graph")
    if not 0 <= v2 < g2.vertex_count:
        raise BadIndex(f"Glue vertex {v2} is not a vertex of the second graph")

    mapping = {}
    next_index = g1.vertex_count
    for v in range(g2.vertex_count):
        if v == v2:
            mapping[v] = v1
        else:
            mapping[v] = next_index
            next_index += 1

    shift = max((e.edge_id for e in g1.edges), default=-1) + 1 - min((e.edge_id for e in g2.edges), default=0)
    edges = [(e.edge_id, e.u, e.v, e.length) for e in g1.edges]
    edges += [(e.edge_id + shift, mapping[e.u], mapping[e.v], e.length) for e in g2.edges]
    return build_graph(g1.vertex_count + g2.vertex_count - 1, edges)


def one_sum_chain(graphs: Sequence[MetricGraph], glue: Sequence[tuple[int, int]]) -> MetricGraph:
    """k-step 1-sum: glue graphs[i+1] onto the running sum at glue[i] = (vertex of sum, vertex of graph)."""
    if not graphs:
        raise BadParams("one_sum_chain needs at least one graph")
    if len(glue) != len(graphs) - 1:
        raise BadParams(f"Expected {len(graphs) - 1} glue pairs, got {len(glue)}")
    result = graphs[0]
    for graph, (v_sum, v_next) in zip(graphs[1:], glue):
        result = one_sum(result, graph, v_sum, v_next)
    return result


def refine(graph: MetricGraph, points: PointSet | Iterable[GraphPoint]) -> RefinedGraph:
    """Split every edge at the interior points lying on it.

    The node set is points ∪ vertices in canonical order.

    Raises:
        BadPoint: A point refers to an unknown edge or lies outside it
    """
    canonical = [graph.canonical(p) for p in points]
    nodes = PointSet.of(canonical + list(graph.vertex_points()))

    offsets_by_edge = defaultdict(list)
    for p in nodes:
        if not p.is_vertex:
            offsets_by_edge[p.edge_id].append(p.offset)

    pieces = []
    for e in graph.edges:
        stops = [(0.0, nodes.index(GraphPoint.at_vertex(e.u)))]
        for offset in sorted(offsets_by_edge.get(e.edge_id, [])):
            stops.append((offset, nodes.index(GraphPoint.interior(e.edge_id, offset))))
        stops.append((e.length, nodes.index(GraphPoint.at_vertex(e.v))))
        for (lo, a), (hi, b) in zip(stops, stops[1:]):
            pieces.append(RefinedEdge(a, b, hi - lo, e.edge_id, lo, hi))

    logger.debug(f"Refined {graph.edge_count} edges into {len(pieces)} pieces over {len(nodes)} nodes")
    return RefinedGraph(nodes, tuple(pieces))


def _edge_groups(refined: RefinedGraph) -> dict[tuple[int, int], list[RefinedEdge]]:
    groups = defaultdict(list)
    for e in refined.edges:
        groups[(min(e.a, e.b), max(e.a, e.b))].append(e)
    return groups


def is_admissible(refined: RefinedGraph) -> CheckReport:
    """Pass iff the refined graph has neither parallel edges nor self-loops."""
    violations = []
    for (a, b), group in sorted(_edge_groups(refined).items()):
        if a == b:
            kind = "self-loop"
        elif len(group) > 1:
            kind = "parallel"
        else:
            continue
        violations.append({
            "kind": kind,
            "pair": [refined.nodes[a].label(), refined.nodes[b].label()],
            "count": len(group),
        })
    return CheckReport(
        check="admissibility",
        passed=not violations,
        violations=violations,
        summary={"nodes": refined.node_count, "edges": len(refined.edges)},
    )


def make_admissible(graph: MetricGraph, points: PointSet | Iterable[GraphPoint]) -> PointSet:
    """Smallest superset of `points` ∪ vertices whose refinement is admissible.

    Each parallel group of k pieces gets a midpoint on all but its first piece;
    each remaining self-loop piece gets its two third-points.
    """
    points = PointSet.of(graph.canonical(p) for p in points)
    refined = refine(graph, points)

    extra = []
    for (a, b), group in sorted(_edge_groups(refined).items()):
        group = sorted(group, key=lambda e: (e.parent_id, e.lo))
        if a == b:
            for piece in group:
                span = piece.hi - piece.lo
                extra.append(graph.point(piece.parent_id, piece.lo + span / 3.0))
                extra.append(graph.point(piece.parent_id, piece.lo + 2.0 * span / 3.0))
        else:
            for piece in group[1:]:
                extra.append(graph.point(piece.parent_id, 0.5 * (piece.lo + piece.hi)))

    if extra:
        logger.info(f"Added {len(extra)} points to make the point set admissible")
    return refined.nodes.union(extra)


def separates(refined: RefinedGraph, S: Iterable[int], t: int, s: int) -> bool:
    """True iff every path from node t to node s meets S."""
    S = set(int(i) for i in S)
    n = refined.node_count
    for i in list(S) + [t, s]:
        if not 0 <= i < n:
            raise BadIndex(f"Node index {i} out of range for {n} nodes")
    if t == s:
        raise BadIndex("separates needs two distinct nodes")
    if t in S or s in S:
        raise BadIndex("The separating set must not contain t or s")
    labels = refined.components_without(S)
    return bool(labels[t] != labels[s])


def random_point_set(graph: MetricGraph, count: int, seed: int, margin: float = 0.05) -> PointSet:
    """All vertices plus `count` seeded interior points.

    Offsets are drawn uniformly from [margin * l, (1 - margin) * l] on an edge
    chosen uniformly at random.
    """
    if count < 0:
        raise BadParams(f"count must be non-negative, got {count}")
    if count and not graph.edges:
        raise BadParams("Cannot place interior points on a graph without edges")
    if not 0.0 <= margin < 0.5:
        raise BadParams(f"margin must lie in [0, 0.5), got {margin}")
    rng = np.random.default_rng(seed)
    extra = []
    for _ in range(count):
        e = graph.edges[int(rng.integers(0, graph.edge_count))]
        extra.append(graph.point(e.edge_id, float(rng.uniform(margin, 1.0 - margin)) * e.length))
    return graph.vertex_points().union(extra)
