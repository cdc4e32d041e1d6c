"""argparse application: subcommand registration and exit-code mapping."""

import argparse
import logging
import sys

from mgfield import __version__
from mgfield.cli import handlers
from mgfield.errors import InputError, NumericalError
from mgfield.graph import GRAPH_FAMILIES
from mgfield.metrics import METRICS
from mgfield.models import MODEL_KINDS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _graph(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--graph", required=required, help="Graph JSON file")


def _points(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--points", default=None, help="Points JSON file (default: the graph's vertices)")


def _out(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=None, help="Output file (default: stdout)")


def _metric(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--metric", choices=METRICS, default=None, help="Distance on the graph (default: geodesic)")


def _exp_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kappa", type=float, default=None, help="Inverse range parameter")
    parser.add_argument("--sigma", type=float, default=None, help="Marginal standard deviation")


def _tol(parser: argparse.ArgumentParser, help_text: str = "Zero tolerance") -> None:
    parser.add_argument("--tol", type=float, default=None, help=help_text)


def _add_graph_commands(subparsers) -> None:
    graph = subparsers.add_parser("graph", help="Validate or generate metric graphs", allow_abbrev=False)
    graph_sub = graph.add_subparsers(dest="action", required=True)

    validate = graph_sub.add_parser("validate", help="Validate a graph and optionally a point set", allow_abbrev=False)
    _graph(validate)
    _points(validate)
    _out(validate)
    validate.set_defaults(handler=handlers.cmd_graph_validate)

    generate = graph_sub.add_parser("generate", help="Generate a graph from a named family", allow_abbrev=False)
    generate.add_argument("--family", required=True, choices=GRAPH_FAMILIES)
    generate.add_argument("--n", type=int, default=None, help="Size (edges, leaves or tree vertices)")
    generate.add_argument("--n1", type=int, default=None, help="First cycle size (two_cycles)")
    generate.add_argument("--n2", type=int, default=None, help="Second cycle size (two_cycles)")
    generate.add_argument("--rows", type=int, default=None)
    generate.add_argument("--cols", type=int, default=None)
    generate.add_argument("--length", type=float, default=None, help="Common edge length")
    generate.add_argument("--min-length", dest="min_length", type=float, default=None)
    generate.add_argument("--max-length", dest="max_length", type=float, default=None)
    generate.add_argument("--seed", type=int, default=None)
    _out(generate)
    generate.set_defaults(handler=handlers.cmd_graph_generate)


def _add_model_commands(subparsers) -> None:
    model = subparsers.add_parser("model", help="Build model matrices", allow_abbrev=False)
    model_sub = model.add_subparsers(dest="action", required=True)

    cov = model_sub.add_parser("cov", help="Isotropic exponential covariance at the points", allow_abbrev=False)
    _graph(cov)
    _points(cov)
    _metric(cov)
    _exp_params(cov)
    _out(cov)
    cov.set_defaults(handler=handlers.cmd_model_cov)

    wm = model_sub.add_parser("wm-precision", help="Whittle-Matérn alpha=1 vertex precision", allow_abbrev=False)
    _graph(wm)
    wm.add_argument("--kappa", type=float, default=None)
    wm.add_argument("--tau", type=float, default=None)
    wm.add_argument("--ell", type=float, default=None, help="Common edge length (default: first edge's)")
    _out(wm)
    wm.set_defaults(handler=handlers.cmd_model_wm_precision)


def _add_check_commands(subparsers) -> None:
    check = subparsers.add_parser("check", help="Run structural checks", allow_abbrev=False)
    check_sub = check.add_subparsers(dest="action", required=True)

    mtp2 = check_sub.add_parser("mtp2", help="MTP2 check of a precision matrix", allow_abbrev=False)
    mtp2.add_argument("--precision", required=True, help="Precision matrix CSV")
    _tol(mtp2)
    _out(mtp2)
    mtp2.set_defaults(handler=handlers.cmd_check_mtp2)

    indep = check_sub.add_parser("independence-graph", help="Nonzero pattern of a precision matrix", allow_abbrev=False)
    indep.add_argument("--precision", required=True, help="Precision matrix CSV")
    _tol(indep)
    _out(indep)
    indep.set_defaults(handler=handlers.cmd_check_independence_graph)

    for name, handler, help_text in (
        ("markov", handlers.cmd_check_markov, "Precision pattern versus the refined graph"),
        ("faithfulness", handlers.cmd_check_faithfulness, "Zero partial correlation versus separation"),
    ):
        sub = check_sub.add_parser(name, help=help_text, allow_abbrev=False)
        _graph(sub)
        _points(sub)
        source = sub.add_mutually_exclusive_group()
        source.add_argument("--cov", default=None, help="Covariance matrix CSV over points ∪ vertices")
        source.add_argument("--metric", choices=METRICS, default=None, help="Build the exponential model instead")
        _exp_params(sub)
        _tol(sub)
        if name == "faithfulness":
            sub.add_argument("--budget", type=int, default=None, help="Sampled subsets per pair on large graphs")
            sub.add_argument("--seed", type=int, default=None)
        _out(sub)
        sub.set_defaults(handler=handler)

    obstruction = check_sub.add_parser(
        "obstruction", help="Whether the geodesic isotropy/Markov obstruction applies", allow_abbrev=False
    )
    _graph(obstruction)
    _out(obstruction)
    obstruction.set_defaults(handler=handlers.cmd_check_obstruction)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgfield",
        allow_abbrev=False,
        description="Gaussian random fields on metric graphs: models and Markov-structure checks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-c", "--config",
        type=str,
        default=None,
        help="Path to config.yaml file (default: ./config.yaml)"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    subparsers = parser.add_subparsers(dest="command", required=True)

    _add_graph_commands(subparsers)

    dist = subparsers.add_parser("dist", help="Distance matrix between points", allow_abbrev=False)
    _graph(dist)
    _points(dist)
    _metric(dist)
    _out(dist)
    dist.set_defaults(handler=handlers.cmd_dist)

    _add_model_commands(subparsers)
    _add_check_commands(subparsers)

    verify = subparsers.add_parser("verify", help="Compare against closed-form references", allow_abbrev=False)
    verify_sub = verify.add_subparsers(dest="action", required=True)
    tadpole = verify_sub.add_parser(
        "tadpole", help="Exponential precision on two unit 4-cycles sharing a vertex", allow_abbrev=False
    )
    _metric(tadpole)
    _exp_params(tadpole)
    _tol(tadpole, help_text="Maximum relative deviation (default: 1e-8 geodesic, 1e-6 resistance)")
    _out(tadpole)
    tadpole.set_defaults(handler=handlers.cmd_verify_tadpole)

    reduce = subparsers.add_parser("reduce", help="Subgraph reduction", allow_abbrev=False)
    reduce_sub = reduce.add_subparsers(dest="action", required=True)
    reduce_check = reduce_sub.add_parser(
        "check", help="Boundary-only kriging versus kriging from all data", allow_abbrev=False
    )
    _graph(reduce_check)
    _points(reduce_check)
    reduce_check.add_argument("--model", choices=MODEL_KINDS, default="exp")
    _metric(reduce_check)
    _exp_params(reduce_check)
    reduce_check.add_argument("--tau", type=float, default=None)
    reduce_check.add_argument("--ell", type=float, default=None)
    reduce_check.add_argument("--interior", required=True, help="Comma-separated node labels")
    reduce_check.add_argument("--boundary", required=True, help="Comma-separated node labels")
    reduce_check.add_argument("--seed", type=int, default=None)
    _tol(reduce_check, help_text="Agreement tolerance")
    _out(reduce_check)
    reduce_check.set_defaults(handler=handlers.cmd_reduce_check)

    sample = subparsers.add_parser("sample", help="Seeded Gaussian draws", allow_abbrev=False)
    source = sample.add_mutually_exclusive_group(required=True)
    source.add_argument("--cov", default=None, help="Covariance matrix CSV")
    source.add_argument("--precision", default=None, help="Precision matrix CSV")
    sample.add_argument("--seed", type=int, default=None)
    sample.add_argument("--n", type=int, default=1, help="Number of draws")
    _out(sample)
    sample.set_defaults(handler=handlers.cmd_sample)

    return parser


def dispatch(args: argparse.Namespace) -> int:
    """Run the selected handler, mapping library errors to exit codes."""
    try:
        return args.handler(args)
    except InputError as e:
        print(f"mgfield: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as e:
        print(f"mgfield: error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
