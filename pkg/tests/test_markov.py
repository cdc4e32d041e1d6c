import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgfield import config
from mgfield.errors import BadIndex, BadParams, NotAdmissible
from mgfield.graph import build_graph, generate_graph, make_admissible, random_point_set, refine
from mgfield.linalg import LabeledMatrix, invert_spd, schur_complement
from mgfield.markov import (
    borisov_defect,
    check_mtp2,
    conditional_field,
    geodesic_obstruction,
    independence_graph,
    isotropy_markov_conflict,
    markov_consistency,
    pair_conditional_from_precision,
    relative_deviation,
    subgraph_reduction_check,
    tadpole_reference_precision,
    verify_faithfulness,
    verify_tadpole,
)
from mgfield.models import ExpKernelParams, ModelSpec, WmParams, wm_alpha1_precision

TADPOLE_EXTRA_EDGES = {("0", "2"), ("1", "3"), ("3", "5"), ("4", "6")}


def exp_model(graph, metric="geodesic", kappa=1.0, points=None):
    return ModelSpec("exp", kappa=kappa, metric=metric).covariance(graph, points)


class TestMtp2:
    def test_wm_precision_is_mtp2(self, tadpole):
        report = check_mtp2(wm_alpha1_precision(tadpole, WmParams(1.0, 1.0, 1.0)))
        assert report.passed
        assert report.positive_offdiagonal == []

    def test_positive_offdiagonal(self):
        labels = generate_graph("path", {"n": 1}).vertex_points()
        Q = LabeledMatrix(labels, np.array([[2.0, 0.5], [0.5, 2.0]]), "precision")
        report = check_mtp2(Q)
        assert not report.passed
        assert report.positive_offdiagonal == [(0, 1, 0.5)]
        assert report.violations[0]["pair"] == ["0", "1"]

    def test_geodesic_tadpole_fails(self, tadpole):
        report = check_mtp2(invert_spd(exp_model(tadpole)))
        assert not report.passed
        pairs = {tuple(v["pair"]) for v in report.violations}
        assert pairs == TADPOLE_EXTRA_EDGES

    def test_resistance_tadpole_passes(self, tadpole):
        assert check_mtp2(invert_spd(exp_model(tadpole, "resistance"))).passed

    def test_needs_precision(self, tadpole):
        with pytest.raises(BadParams):
            check_mtp2(exp_model(tadpole))


class TestIndependenceGraph:
    def test_wm_pattern_is_graph(self, tadpole):
        found = independence_graph(wm_alpha1_precision(tadpole, WmParams(1.0, 1.0, 1.0)))
        expected = sorted(tuple(sorted((e.u, e.v))) for e in tadpole.edges)
        assert found.edges() == expected

    def test_threshold_is_relative(self, tadpole):
        Q = wm_alpha1_precision(tadpole, WmParams(1.0, 1.0, 1.0))
        assert independence_graph(Q, zero_tol=2.0).edges() == []


class TestMarkovConsistency:
    def test_wm1_is_markov(self, tadpole):
        sigma = ModelSpec("wm1", kappa=1.0).covariance(tadpole)
        assert markov_consistency(sigma, refine(tadpole, [])).passed

    def test_exp_on_tree_is_markov(self, tree8):
        points = random_point_set(tree8, 3, seed=4)
        sigma = exp_model(tree8, kappa=0.5, points=points)
        report = markov_consistency(sigma, refine(tree8, points))
        assert report.passed, report.violations

    def test_geodesic_tadpole_has_extra_edges(self, tadpole):
        report = markov_consistency(exp_model(tadpole), refine(tadpole, []))
        assert not report.passed
        assert report.summary["missing_edges"] == 0
        assert {tuple(v["pair"]) for v in report.violations} == TADPOLE_EXTRA_EDGES
        assert all(v["kind"] == "extra" for v in report.violations)

    def test_labels_must_match_refined_nodes(self, tadpole):
        sigma = exp_model(tadpole, points=[tadpole.point(0, 0.5)])
        with pytest.raises(BadIndex):
            markov_consistency(sigma, refine(tadpole, []))

    def test_inadmissible_rejected(self):
        graph = build_graph(2, [(0, 0, 1, 1.0), (1, 0, 1, 2.0)])
        sigma = exp_model(graph)
        with pytest.raises(NotAdmissible):
            markov_consistency(sigma, refine(graph, []))


@settings(max_examples=15, deadline=None)
@given(n=st.integers(min_value=3, max_value=9), seed=st.integers(min_value=0, max_value=1000))
def test_exp_geodesic_on_random_trees_is_markov(n, seed):
    tree = generate_graph("tree", {"n": n, "seed": seed})
    sigma = exp_model(tree, kappa=0.5)
    assert markov_consistency(sigma, refine(tree, [])).passed


class TestFaithfulness:
    def test_wm1_on_cycle(self, cycle4):
        sigma = ModelSpec("wm1", kappa=1.0).covariance(cycle4)
        report = verify_faithfulness(sigma, refine(cycle4, []))
        assert report.passed
        assert report.params["mode"] == "exhaustive"
        # 6 pairs with 4 subsets each (both others in or out independently)
        assert report.tested == 24

    def test_exp_on_tree_with_points(self, tree8):
        points = random_point_set(tree8, 2, seed=9)
        sigma = exp_model(tree8, kappa=0.5, points=points)
        report = verify_faithfulness(sigma, refine(tree8, points))
        assert report.passed, report.violations[:3]

    def test_geodesic_tadpole_counterexample(self, tadpole):
        report = verify_faithfulness(exp_model(tadpole), refine(tadpole, []))
        assert not report.passed
        found = {(c.t, c.s, c.subset): c for c in report.counterexamples}
        example = found[(1, 3, (0, 2))]
        assert example.separated
        assert abs(example.partial_correlation) > 1e-3

    def test_sampled_mode_is_seeded(self, cycle4, monkeypatch):
        monkeypatch.setattr(config, "EXHAUSTIVE_MAX_NODES", 2)
        sigma = ModelSpec("wm1", kappa=1.0).covariance(cycle4)
        a = verify_faithfulness(sigma, refine(cycle4, []), subset_budget=5, seed=1)
        b = verify_faithfulness(sigma, refine(cycle4, []), subset_budget=5, seed=1)
        assert a.params["mode"] == "sampled"
        assert a.tested == b.tested == 6 * 5
        assert a.passed and b.passed


class TestConflict:
    @pytest.mark.parametrize("metric", ["geodesic", "resistance"])
    def test_tadpole_conflict(self, tadpole, metric):
        report = isotropy_markov_conflict(tadpole, metric, ExpKernelParams(1.0, 1.0))
        assert not report.passed
        assert report.summary["verdict"] == "conflict"
        assert report.summary["extra_edges"] == 4

    def test_tree_consistent(self, tree8):
        report = isotropy_markov_conflict(tree8, "geodesic", ExpKernelParams(0.5, 1.0))
        assert report.passed
        assert report.summary["verdict"] == "consistent"

    def test_obstruction(self, tadpole, cycle4, tree8):
        assert geodesic_obstruction(tree8).summary["verdict"] == "tree"
        assert geodesic_obstruction(cycle4).summary["verdict"] == "cycle"
        report = geodesic_obstruction(tadpole)
        assert not report.passed
        assert report.summary["verdict"] == "obstructed"
        assert report.summary["cycle_rank"] == 2


class TestTadpoleReference:
    def test_geodesic_values(self):
        Q = tadpole_reference_precision("geodesic", 1.0).entries
        assert Q[0, 0] == pytest.approx(1.33753, rel=1e-4)
        assert Q[0, 1] == pytest.approx(-0.49205, rel=1e-4)
        assert Q[0, 2] == pytest.approx(0.18101, rel=1e-4)
        assert Q[3, 3] == pytest.approx(2 * Q[0, 0] - 1.0)
        assert Q[0, 4] == 0.0

    def test_resistance_q3_negative(self):
        Q = tadpole_reference_precision("resistance", 1.0).entries
        assert Q[0, 2] < 0.0

    @pytest.mark.parametrize("kappa", [0.25, 0.5, 1.0, 2.0, 2.5])
    def test_geodesic_end_to_end(self, kappa):
        report = verify_tadpole("geodesic", kappa)
        assert report.passed
        assert report.summary["max_relative_deviation"] <= 1e-8
        assert report.summary["cross_block_relative"] <= 1e-8

    @pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
    def test_resistance_end_to_end(self, kappa):
        report = verify_tadpole("resistance", kappa)
        assert report.passed
        assert report.summary["q3"] < 0.0

    def test_sigma_scales_precision(self):
        scaled = tadpole_reference_precision("geodesic", 1.0, sigma=2.0).entries
        plain = tadpole_reference_precision("geodesic", 1.0).entries
        np.testing.assert_allclose(scaled, plain / 4.0)
        assert verify_tadpole("geodesic", 1.0, sigma=2.0).passed

    def test_relative_deviation_on_zeros(self):
        reference = np.array([[2.0, 0.0], [0.0, 4.0]])
        computed = np.array([[2.0, 0.04], [0.04, 4.0]])
        assert relative_deviation(computed, reference) == pytest.approx(0.01)


class TestConditioning:
    def test_conditional_field_zeros(self, tadpole):
        field = conditional_field(exp_model(tadpole), [3])
        assert np.all(field.entries[3] == 0.0)
        assert np.all(field.entries[:, 3] == 0.0)

    def test_conditioning_at_cut_vertex_decouples(self, tadpole):
        # the two cycles only meet at vertex 3
        field = conditional_field(exp_model(tadpole), [3])
        assert np.abs(field.entries[np.ix_([0, 1, 2], [4, 5, 6])]).max() < 1e-12

    def test_pair_conditional_matches_schur(self, tadpole):
        sigma = exp_model(tadpole)
        Q = invert_spd(sigma)
        rest = [k for k in range(7) if k not in (1, 3)]
        np.testing.assert_allclose(
            pair_conditional_from_precision(Q, 1, 3), schur_complement(sigma.entries, [1, 3], rest), atol=1e-12
        )

    def test_borisov_defect_on_path(self):
        path = generate_graph("path", {"n": 3})
        sigma = exp_model(path)
        assert borisov_defect(sigma, 1, 0, 2) == pytest.approx(0.0, abs=1e-15)
        assert borisov_defect(sigma, 1, 0, 3) == pytest.approx(0.0, abs=1e-15)
        assert borisov_defect(sigma, 0, 1, 2) != pytest.approx(0.0, abs=1e-6)


class TestSubgraphReduction:
    def test_exp_on_path(self):
        path = generate_graph("path", {"n": 4})
        report = subgraph_reduction_check(path, ModelSpec("exp", kappa=1.0), [0, 1], [2], tol=1e-9)
        assert report.passed, report.summary
        assert report.summary["exterior"] == 2

    def test_wm1_on_cycle(self):
        cycle = generate_graph("cycle", {"n": 6})
        report = subgraph_reduction_check(cycle, ModelSpec("wm1", kappa=1.0), [0], [1, 5], seed=3, tol=1e-9)
        assert report.passed, report.summary

    def test_precondition_failure(self, cycle4):
        report = subgraph_reduction_check(cycle4, ModelSpec("wm1", kappa=1.0), [0], [1])
        assert not report.passed
        assert report.violations[0]["kind"] == "precondition"
        assert report.summary["precondition"] is False

    def test_non_markov_model_disagrees(self, tadpole):
        report = subgraph_reduction_check(tadpole, ModelSpec("exp", kappa=1.0), [1], [0, 2], tol=1e-9)
        assert report.summary["precondition"]
        assert not report.passed
        q1 = tadpole_reference_precision("geodesic", 1.0).entries[1, 1]
        boundary_only = 1 - 2 * math.exp(-2) / (1 + math.exp(-2))
        assert report.summary["covariance_deviation"] == pytest.approx(boundary_only - 1 / q1, rel=1e-6)

    def test_overlap_rejected(self, cycle4):
        with pytest.raises(BadIndex):
            subgraph_reduction_check(cycle4, ModelSpec("wm1", kappa=1.0), [0, 1], [1, 3])


def seeded_tree(seed, max_nodes=12):
    """Tree on at most 10 vertices with an admissible point set of at most `max_nodes` nodes."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    tree = generate_graph("tree", {"n": n, "seed": seed})
    count = int(rng.integers(0, max_nodes - n + 1))
    points = make_admissible(tree, random_point_set(tree, count, seed=seed, margin=0.1))
    return tree, points


@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_exp_geodesic_trees_are_mtp2_and_faithful(kappa):
    for seed in range(100):
        tree, points = seeded_tree(seed)
        assert len(points) <= 12
        sigma = exp_model(tree, kappa=kappa, points=points)
        assert check_mtp2(invert_spd(sigma), zero_tol=1e-8).passed, seed
        report = verify_faithfulness(sigma, refine(tree, points), zero_tol=1e-7)
        assert report.params["mode"] == "exhaustive"
        assert report.passed, (seed, report.violations[:3])


def test_no_conflict_on_random_trees():
    for seed in range(20):
        tree = generate_graph("tree", {"n": 3 + seed % 8, "seed": seed})
        report = isotropy_markov_conflict(tree, "geodesic", ExpKernelParams(1.0, 1.0))
        assert report.summary["verdict"] == "consistent", seed


def test_conditional_field_matches_inversion():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        if seed % 2:
            graph = generate_graph("tree", {"n": int(rng.integers(3, 9)), "seed": seed})
        else:
            graph = generate_graph("two_cycles", {"n1": int(rng.integers(3, 6)), "n2": int(rng.integers(3, 6))})
        points = random_point_set(graph, int(rng.integers(0, 4)), seed=seed, margin=0.1)
        metric = "geodesic" if seed % 4 < 2 else "resistance"
        sigma = exp_model(graph, metric, kappa=float(rng.uniform(0.5, 2.0)), points=points)
        n = sigma.size
        given = sorted(int(k) for k in rng.choice(n, size=int(rng.integers(1, n)), replace=False))
        free = [k for k in range(n) if k not in given]

        field = conditional_field(sigma, given).entries
        assert np.abs(np.diag(field)[given]).max() <= 1e-12 * np.diag(sigma.entries).max()
        brute = np.linalg.inv(np.linalg.inv(sigma.entries)[np.ix_(free, free)])
        assert np.abs(field[np.ix_(free, free)] - brute).max() <= 1e-9, seed
        assert np.linalg.eigvalsh(field).min() >= -1e-10
        assert np.linalg.matrix_rank(field) == len(free)


def test_separating_point_factorizes_tree_covariance():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        tree = generate_graph("tree", {"n": int(rng.integers(3, 11)), "seed": seed})
        points = random_point_set(tree, int(rng.integers(0, 4)), seed=seed, margin=0.1)
        scale = float(rng.uniform(0.5, 2.0))
        sigma = ModelSpec("exp", kappa=float(rng.uniform(0.3, 2.0)), sigma=scale).covariance(tree, points)
        G = refine(tree, points).to_networkx()
        triples = 0
        while triples < 10:
            a, b = (int(x) for x in rng.choice(sigma.size, size=2, replace=False))
            path = nx.shortest_path(G, a, b)
            if len(path) < 3:
                continue
            t = path[int(rng.integers(1, len(path) - 1))]
            worst = max(worst, abs(borisov_defect(sigma, t, a, b)) / scale ** 4)
            triples += 1
    assert worst <= 1e-12


@pytest.mark.parametrize("metric", ["geodesic", "resistance"])
def test_cut_vertex_factorizes_one_sum(metric):
    graph = generate_graph("two_cycles", {"n1": 4, "n2": 5, "length": 0.75})
    sigma = exp_model(graph, metric, kappa=0.8)
    cut = 3
    for a in range(3):
        for b in range(4, 8):
            assert abs(borisov_defect(sigma, cut, a, b)) <= 1e-12


def test_subgraph_reduction_on_random_subtrees():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        tree = generate_graph("tree", {"n": int(rng.integers(4, 11)), "seed": seed})
        points = random_point_set(tree, int(rng.integers(0, 3)), seed=seed, margin=0.1)
        refined = refine(tree, points)
        A = refined.adjacency()
        inner = [k for k in range(refined.node_count) if A[k].sum() >= 2]
        cut = inner[int(rng.integers(0, len(inner)))]
        labels = refined.components_without([cut])
        side = labels[np.flatnonzero(A[cut])[0]]
        interior = np.flatnonzero(labels == side).tolist()

        model = ModelSpec("exp", kappa=float(rng.uniform(0.5, 2.0)))
        report = subgraph_reduction_check(tree, model, interior, [cut], points, seed=seed, tol=1e-10)
        assert report.summary["exterior"] > 0
        assert report.passed, (seed, report.summary)


@pytest.mark.parametrize(
    "model",
    [
        ModelSpec("wm1", kappa=1.0),
        ModelSpec("exp", kappa=1.0, metric="geodesic"),
        ModelSpec("exp", kappa=1.0, metric="resistance"),
    ],
)
def test_tadpole_reduces_to_left_cycle(tadpole, model):
    report = subgraph_reduction_check(tadpole, model, [0, 1, 2], [3], tol=1e-10)
    assert report.passed, report.summary
