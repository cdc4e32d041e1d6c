import numpy as np
import pytest

from mgfield.errors import BadIndex, BadParams, BadPoint, Disconnected, NonPositiveLength
from mgfield.graph import (
    GraphPoint,
    PointSet,
    build_graph,
    generate_graph,
    is_admissible,
    make_admissible,
    one_sum,
    one_sum_chain,
    random_point_set,
    refine,
    separates,
)


class TestBuildGraph:
    def test_valid(self, path3):
        assert path3.vertex_count == 3
        assert path3.edge_count == 2
        assert path3.total_length == pytest.approx(1.5)

    @pytest.mark.parametrize("length", [0.0, -1.0, float("inf"), float("nan")])
    def test_rejects_bad_length(self, length):
        with pytest.raises(NonPositiveLength):
            build_graph(2, [(0, 0, 1, length)])

    def test_rejects_disconnected(self):
        with pytest.raises(Disconnected):
            build_graph(3, [(0, 0, 1, 1.0)])

    def test_rejects_bad_endpoint(self):
        with pytest.raises(BadIndex):
            build_graph(2, [(0, 0, 2, 1.0)])

    def test_rejects_duplicate_edge_id(self):
        with pytest.raises(BadIndex):
            build_graph(2, [(0, 0, 1, 1.0), (0, 0, 1, 2.0)])

    def test_loops_and_parallel_edges_allowed(self):
        graph = build_graph(2, [(0, 0, 1, 1.0), (1, 0, 1, 3.0), (2, 1, 1, 2.0)])
        assert graph.has_loops()
        assert graph.degrees().tolist() == [2, 4]


class TestPoints:
    def test_endpoints_become_vertices(self, path3):
        assert path3.point(1, 0.0) == GraphPoint.at_vertex(1)
        assert path3.point(1, 0.5) == GraphPoint.at_vertex(2)
        assert not path3.point(1, 0.25).is_vertex

    @pytest.mark.parametrize("offset", [-0.1, 0.6])
    def test_offset_outside_edge(self, path3, offset):
        with pytest.raises(BadPoint):
            path3.point(1, offset)

    def test_unknown_edge(self, path3):
        with pytest.raises(BadPoint):
            path3.point(7, 0.1)

    def test_canonical_order(self, path3):
        points = PointSet.of([path3.point(0, 0.5), GraphPoint.at_vertex(2), path3.point(0, 0.25)])
        assert points.labels() == ["2", "e0:0.25", "e0:0.5"]

    def test_label_round_trip(self):
        point = GraphPoint.interior(3, 0.1)
        assert GraphPoint.from_label(point.label()) == point
        assert GraphPoint.from_label("4") == GraphPoint.at_vertex(4)

    def test_bad_label(self):
        with pytest.raises(BadPoint):
            GraphPoint.from_label("e1")

    def test_unsorted_point_set_rejected(self):
        with pytest.raises(BadPoint):
            PointSet((GraphPoint.at_vertex(1), GraphPoint.at_vertex(0)))


class TestGenerate:
    def test_tadpole_layout(self, tadpole):
        assert tadpole.vertex_count == 7
        pairs = [(e.edge_id, e.u, e.v) for e in tadpole.edges]
        assert pairs == [(0, 0, 1), (1, 1, 2), (2, 2, 3), (3, 3, 0), (4, 3, 4), (5, 4, 5), (6, 5, 6), (7, 6, 3)]

    def test_lattice(self):
        graph = generate_graph("lattice", {"rows": 2, "cols": 3})
        assert graph.vertex_count == 6
        assert graph.edge_count == 7

    def test_tree_is_deterministic(self):
        a = generate_graph("tree", {"n": 10, "seed": 5})
        b = generate_graph("tree", {"n": 10, "seed": 5})
        assert a == b
        assert a.is_tree()
        assert all(0.5 <= e.length <= 2.0 for e in a.edges)

    def test_star_and_two_cycles(self):
        star = generate_graph("star", {"n": 4})
        assert star.degrees().tolist() == [4, 1, 1, 1, 1]
        two = generate_graph("two_cycles", {"n1": 3, "n2": 5})
        assert (two.vertex_count, two.edge_count) == (7, 8)

    def test_unknown_family(self):
        with pytest.raises(BadParams):
            generate_graph("hypercube", {"n": 3})

    def test_missing_size(self):
        with pytest.raises(BadParams):
            generate_graph("path", {})

    def test_predicates(self, tadpole, cycle4, tree8):
        assert tree8.is_tree() and not tree8.contains_cycle()
        assert cycle4.is_cycle() and cycle4.contains_cycle()
        assert tadpole.contains_cycle() and not tadpole.is_cycle() and not tadpole.is_tree()


class TestOneSum:
    def test_counts(self, cycle4):
        path = generate_graph("path", {"n": 2})
        glued = one_sum(cycle4, path, 2, 0)
        assert glued.vertex_count == cycle4.vertex_count + path.vertex_count - 1
        assert glued.edge_count == cycle4.edge_count + path.edge_count
        assert sorted(e.edge_id for e in glued.edges) == list(range(6))

    def test_chain(self, cycle4):
        chain = one_sum_chain([cycle4, cycle4, cycle4], [(3, 0), (6, 0)])
        assert (chain.vertex_count, chain.edge_count) == (10, 12)

    def test_bad_glue_vertex(self, cycle4):
        with pytest.raises(BadIndex):
            one_sum(cycle4, cycle4, 9, 0)


class TestRefine:
    def test_splits_edges(self):
        graph = build_graph(2, [(0, 0, 1, 2.0)])
        refined = refine(graph, [graph.point(0, 1.5), graph.point(0, 0.5)])
        assert refined.nodes.labels() == ["0", "1", "e0:0.5", "e0:1.5"]
        assert sorted(e.length for e in refined.edges) == [0.5, 0.5, 1.0]
        assert refined.total_length == pytest.approx(graph.total_length)

    def test_vertices_only(self, tadpole):
        refined = refine(tadpole, [])
        assert refined.node_count == 7
        assert refined.adjacency().sum() == 16


class TestAdmissibility:
    def test_parallel_edges(self):
        graph = build_graph(2, [(0, 0, 1, 1.0), (1, 0, 1, 3.0)])
        report = is_admissible(refine(graph, []))
        assert not report.passed
        assert report.violations[0]["kind"] == "parallel"

        points = make_admissible(graph, [])
        assert len(points) == 3
        assert is_admissible(refine(graph, points)).passed

    def test_self_loop(self):
        graph = build_graph(1, [(0, 0, 0, 3.0)])
        assert is_admissible(refine(graph, [])).violations[0]["kind"] == "self-loop"
        # a single interior point leaves two parallel pieces
        assert not is_admissible(refine(graph, [graph.point(0, 1.0)])).passed

        points = make_admissible(graph, [])
        assert points.labels() == ["0", "e0:1", "e0:2"]
        assert is_admissible(refine(graph, points)).passed

    def test_simple_graph_is_admissible(self, tadpole):
        assert is_admissible(refine(tadpole, [])).passed


class TestSeparates:
    def test_path(self, path3):
        refined = refine(path3, [])
        assert separates(refined, [1], 0, 2)
        assert not separates(refined, [], 0, 2)

    def test_cycle_needs_both_sides(self, cycle4):
        refined = refine(cycle4, [])
        assert not separates(refined, [1], 0, 2)
        assert separates(refined, [1, 3], 0, 2)

    def test_rejects_endpoint_in_set(self, path3):
        with pytest.raises(BadIndex):
            separates(refine(path3, []), [0], 0, 2)

    def test_rejects_out_of_range(self, path3):
        with pytest.raises(BadIndex):
            separates(refine(path3, []), [5], 0, 2)


def test_random_point_set_is_seeded(tree8):
    a = random_point_set(tree8, 4, seed=11)
    b = random_point_set(tree8, 4, seed=11)
    assert a == b
    assert len(a) == tree8.vertex_count + 4
    interior = [p for p in a if not p.is_vertex]
    assert all(0.0 < p.offset < tree8.edge(p.edge_id).length for p in interior)


def test_components_without(cycle4):
    labels = refine(cycle4, []).components_without([0, 2])
    assert labels[0] == labels[2] == -1
    assert labels[1] != labels[3]
    assert np.all(labels[[1, 3]] >= 0)


def random_multigraph(rng):
    """Connected multigraph on up to 5 vertices, loops and parallel edges included."""
    n = int(rng.integers(1, 6))
    pairs = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    pairs += [tuple(int(x) for x in rng.integers(0, n, size=2)) for _ in range(int(rng.integers(0, 4)))]
    if not pairs:
        pairs = [(0, 0)]
    return build_graph(n, [(k, u, v, float(rng.uniform(0.5, 2.0))) for k, (u, v) in enumerate(pairs)])


def test_make_admissible_on_random_multigraphs():
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        graph = random_multigraph(rng)
        sample = random_point_set(graph, int(rng.integers(0, 4)), seed=trial, margin=0.1)
        interior = [p for p in sample if not p.is_vertex]

        points = make_admissible(graph, interior)
        assert all(GraphPoint.at_vertex(v) in points for v in range(graph.vertex_count)), trial
        assert all(p in points for p in interior), trial
        assert is_admissible(refine(graph, points)).passed, trial
        assert make_admissible(graph, points) == points, trial


def test_make_admissible_keeps_admissible_sets(tadpole):
    points = random_point_set(tadpole, 3, seed=5)
    assert make_admissible(tadpole, points) == points
    assert make_admissible(tadpole, []) == tadpole.vertex_points()


class TestTadpoleSeparation:
    @pytest.fixture
    def refined(self, tadpole):
        return refine(tadpole, [])

    def test_shared_vertex_splits_cycles(self, refined):
        assert separates(refined, [3], 0, 4)

    def test_opposite_vertex_needs_both_neighbours(self, refined):
        assert separates(refined, [4, 6], 3, 5)
        assert not separates(refined, [4], 3, 5)


def test_separates_is_monotone(tadpole):
    rng = np.random.default_rng(17)
    refined = refine(tadpole, random_point_set(tadpole, 4, seed=17))
    n = refined.node_count
    checked = 0
    for _ in range(300):
        t, s = (int(x) for x in rng.choice(n, size=2, replace=False))
        others = [k for k in range(n) if k not in (t, s)]
        S = [k for k in others if rng.random() < 0.4]
        if not separates(refined, S, t, s):
            continue
        for k in others:
            if k not in S:
                assert separates(refined, S + [k], t, s)
        checked += 1
    assert checked > 0


def test_tadpole_is_one_sum_of_unit_cycles(cycle4):
    assert one_sum(cycle4, cycle4, 3, 0) == generate_graph("tadpole")
    explicit = build_graph(7, [
        (0, 0, 1, 1.0), (1, 1, 2, 1.0), (2, 2, 3, 1.0), (3, 3, 0, 1.0),
        (4, 3, 4, 1.0), (5, 4, 5, 1.0), (6, 5, 6, 1.0), (7, 6, 3, 1.0),
    ])
    assert generate_graph("tadpole") == explicit
