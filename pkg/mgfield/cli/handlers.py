"""Subcommand handlers for the mgfield CLI.

Every handler takes the parsed argparse namespace, writes its primary output
through an emitter and returns the exit code: 0 when a check passes (or the
command just produces output), 1 when a check ran and failed.
"""

import argparse
import logging

from mgfield import config
from mgfield.emitter import get_emitter
from mgfield.errors import BadIndex, BadParams
from mgfield.formats import (
    dump_graph,
    load_graph,
    load_matrix,
    load_points,
    matrix_to_csv,
    points_to_list,
    report_to_json,
    vectors_to_csv,
)
from mgfield.graph import MetricGraph, PointSet, generate_graph, is_admissible, make_admissible, refine
from mgfield.linalg import LabeledMatrix, sample_gaussian
from mgfield.markov import (
    check_mtp2,
    geodesic_obstruction,
    independence_graph,
    isotropy_markov_conflict,
    markov_consistency,
    subgraph_reduction_check,
    verify_faithfulness,
    verify_tadpole,
)
from mgfield.metrics import distance_matrix
from mgfield.models import ExpKernelParams, ModelSpec, WmParams, exp_covariance, wm_alpha1_precision
from mgfield.report import CheckReport

logger = logging.getLogger(__name__)


def _emit(args: argparse.Namespace, text: str) -> None:
    emitter = get_emitter(getattr(args, "out", None))
    emitter.emit(text)
    logger.debug(f"Output written to {emitter.describe()}")


def _finish(args: argparse.Namespace, report: CheckReport) -> int:
    _emit(args, report_to_json(report))
    logger.info(f"{report.check}: {'pass' if report.passed else 'fail'}")
    return 0 if report.passed else 1


def _points(args: argparse.Namespace, graph: MetricGraph) -> PointSet:
    if getattr(args, "points", None):
        return load_points(args.points, graph)
    return graph.vertex_points()


def _kappa(args: argparse.Namespace) -> float:
    return config.resolve(args.kappa, config.DEFAULT_KAPPA)


def _sigma(args: argparse.Namespace) -> float:
    return config.resolve(args.sigma, config.DEFAULT_SIGMA)


def _tau(args: argparse.Namespace) -> float:
    return config.resolve(args.tau, config.DEFAULT_TAU)


def _metric(args: argparse.Namespace) -> str:
    return args.metric or "geodesic"


def _reject_model_flags(args: argparse.Namespace) -> None:
    if args.cov and (args.kappa is not None or args.sigma is not None):
        raise BadParams("--kappa and --sigma cannot be combined with --cov")


def _covariance_input(args: argparse.Namespace) -> tuple[LabeledMatrix, MetricGraph, PointSet]:
    """Covariance from --cov, or built from the exponential model flags over points ∪ vertices."""
    _reject_model_flags(args)
    graph = load_graph(args.graph)
    if args.cov:
        sigma = load_matrix(args.cov, "covariance")
        return sigma, graph, sigma.labels
    points = refine(graph, _points(args, graph)).nodes
    D = distance_matrix(graph, points, _metric(args))
    sigma = exp_covariance(D, ExpKernelParams(_kappa(args), _sigma(args)))
    return sigma, graph, points


def _node_indices(text: str, nodes: PointSet) -> list[int]:
    labels = [part for part in text.split(",") if part.strip()]
    if not labels:
        raise BadIndex("Expected a comma-separated list of node labels")
    return [nodes.index_of_label(label) for label in labels]


def cmd_graph_validate(args: argparse.Namespace) -> int:
    """Validate a graph; with --points also report admissibility of the point set.

    An inadmissible point set fails the check and the summary carries the
    smallest admissible superset under "admissible_points".
    """
    graph = load_graph(args.graph)
    summary = {
        "vertices": graph.vertex_count,
        "edges": graph.edge_count,
        "total_length": graph.total_length,
        "loops": graph.has_loops(),
        "tree": graph.is_tree(),
        "cycle": graph.is_cycle(),
    }
    if args.points:
        points = load_points(args.points, graph)
        admissibility = is_admissible(refine(graph, points))
        summary.update(admissibility.summary)
        if not admissibility.passed:
            summary["admissible_points"] = points_to_list(make_admissible(graph, points))
        report = CheckReport("graph-validate", admissibility.passed, admissibility.violations, summary=summary)
    else:
        report = CheckReport("graph-validate", True, summary=summary)
    return _finish(args, report)


def cmd_graph_generate(args: argparse.Namespace) -> int:
    params = {
        key: getattr(args, key)
        for key in ("n", "n1", "n2", "rows", "cols", "length", "seed", "min_length", "max_length")
        if getattr(args, key) is not None
    }
    graph = generate_graph(args.family, params)
    logger.info(f"Generated {args.family} graph: {graph.vertex_count} vertices, {graph.edge_count} edges")
    _emit(args, dump_graph(graph))
    return 0


def cmd_dist(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph)
    _emit(args, matrix_to_csv(distance_matrix(graph, _points(args, graph), _metric(args))))
    return 0


def cmd_model_cov(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph)
    D = distance_matrix(graph, _points(args, graph), _metric(args))
    _emit(args, matrix_to_csv(exp_covariance(D, ExpKernelParams(_kappa(args), _sigma(args)))))
    return 0


def cmd_model_wm_precision(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph)
    if args.ell is None and not graph.edges:
        raise BadParams("Graph has no edges")
    ell = args.ell if args.ell is not None else graph.edges[0].length
    Q = wm_alpha1_precision(graph, WmParams(_kappa(args), _tau(args), ell))
    _emit(args, matrix_to_csv(Q))
    return 0


def cmd_check_mtp2(args: argparse.Namespace) -> int:
    return _finish(args, check_mtp2(load_matrix(args.precision, "precision"), args.tol))


def cmd_check_independence_graph(args: argparse.Namespace) -> int:
    Q = load_matrix(args.precision, "precision")
    found = independence_graph(Q, args.tol)
    report = CheckReport(
        check="independence-graph",
        passed=True,
        tolerances={"zero_tol": config.resolve(args.tol, config.ZERO_TOL), "cut": found.threshold},
        summary={"nodes": Q.labels.labels(), "edges": found.edge_labels()},
    )
    return _finish(args, report)


def cmd_check_markov(args: argparse.Namespace) -> int:
    _reject_model_flags(args)
    graph = load_graph(args.graph)
    if args.cov:
        sigma = load_matrix(args.cov, "covariance")
        return _finish(args, markov_consistency(sigma, refine(graph, sigma.labels), args.tol))
    params = ExpKernelParams(_kappa(args), _sigma(args))
    report = isotropy_markov_conflict(graph, _metric(args), params, _points(args, graph), args.tol)
    code = _finish(args, report)
    return 3 if report.summary.get("verdict") == "kernel-invalid" else code


def cmd_check_faithfulness(args: argparse.Namespace) -> int:
    sigma, graph, points = _covariance_input(args)
    report = verify_faithfulness(sigma, refine(graph, points), args.tol, args.budget, args.seed)
    return _finish(args, report)


def cmd_check_obstruction(args: argparse.Namespace) -> int:
    return _finish(args, geodesic_obstruction(load_graph(args.graph)))


def cmd_verify_tadpole(args: argparse.Namespace) -> int:
    return _finish(args, verify_tadpole(_metric(args), _kappa(args), _sigma(args), args.tol))


def cmd_reduce_check(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph)
    points = _points(args, graph)
    nodes = refine(graph, points).nodes
    model = ModelSpec(
        kind=args.model,
        kappa=_kappa(args),
        sigma=_sigma(args),
        tau=_tau(args),
        metric=_metric(args),
        ell=args.ell,
    )
    report = subgraph_reduction_check(
        graph,
        model,
        _node_indices(args.interior, nodes),
        _node_indices(args.boundary, nodes),
        points,
        args.seed,
        args.tol,
    )
    return _finish(args, report)


def cmd_sample(args: argparse.Namespace) -> int:
    if args.cov:
        M = load_matrix(args.cov, "covariance")
    else:
        M = load_matrix(args.precision, "precision")
    seed = config.resolve(args.seed, config.DEFAULT_SEED)
    draws = sample_gaussian(M, seed, args.n)
    _emit(args, vectors_to_csv(M.labels, list(draws)))
    return 0
