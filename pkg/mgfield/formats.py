"""File formats: graph and points JSON, labeled matrix CSV, report JSON.

Graph JSON:  {"vertices": N, "edges": [{"id": int, "from": int, "to": int, "length": float}, ...]}
Points JSON: [{"vertex": int} | {"edge": int, "t": float}, ...]
Matrix CSV:  header `label,<labels...>`, then one row per label; numbers with 17 significant digits.
"""

import csv
import io
import json
import logging
import math
from typing import Any, Sequence

import numpy as np

from .errors import FormatError
from .graph import GraphPoint, MetricGraph, PointSet, build_graph
from .linalg import LabeledMatrix
from .report import CheckReport

logger = logging.getLogger(__name__)


def _number(x: float) -> str:
    return f"{x:.17g}"


def _read_text(path: str) -> str:
    try:
        with open(path, 'r', encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise FormatError(f"Cannot read {path}: {e.strerror}")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: not valid UTF-8 (byte {e.start})")


def _read_json(path: str) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})")


def _require_keys(obj: Any, required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    unknown = set(obj) - required
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise FormatError(f"{where}: missing keys {sorted(missing)}")


def _integer(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{where}: expected an integer, got {value!r}")
    return value


def _real(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def parse_graph(data: Any) -> MetricGraph:
    _require_keys(data, {"vertices", "edges"}, "graph")
    if not isinstance(data["edges"], list):
        raise FormatError("graph: 'edges' must be a list")
    edges = []
    for k, item in enumerate(data["edges"]):
        where = f"graph edge #{k}"
        _require_keys(item, {"id", "from", "to", "length"}, where)
        edges.append((
            _integer(item["id"], where),
            _integer(item["from"], where),
            _integer(item["to"], where),
            _real(item["length"], where),
        ))
    return build_graph(_integer(data["vertices"], "graph"), edges)


def load_graph(path: str) -> MetricGraph:
    graph = parse_graph(_read_json(path))
    logger.info(f"Loaded graph from {path}: {graph.vertex_count} vertices, {graph.edge_count} edges")
    return graph


def graph_to_dict(graph: MetricGraph) -> dict[str, Any]:
    return {
        "vertices": graph.vertex_count,
        "edges": [{"id": e.edge_id, "from": e.u, "to": e.v, "length": e.length} for e in graph.edges],
    }


def dump_graph(graph: MetricGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2) + "\n"


def parse_points(data: Any, graph: MetricGraph) -> PointSet:
    """Parse and canonicalize a points list against `graph`."""
    if not isinstance(data, list):
        raise FormatError("points: expected a list")
    points = []
    for k, item in enumerate(data):
        where = f"point #{k}"
        if isinstance(item, dict) and "vertex" in item:
            _require_keys(item, {"vertex"}, where)
            points.append(graph.canonical(GraphPoint.at_vertex(_integer(item["vertex"], where))))
        else:
            _require_keys(item, {"edge", "t"}, where)
            points.append(graph.point(_integer(item["edge"], where), _real(item["t"], where)))
    return PointSet.of(points)


def load_points(path: str, graph: MetricGraph) -> PointSet:
    return parse_points(_read_json(path), graph)


def points_to_list(points: PointSet) -> list[dict[str, Any]]:
    return [{"vertex": p.vertex} if p.is_vertex else {"edge": p.edge_id, "t": p.offset} for p in points]


def matrix_to_csv(M: LabeledMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    labels = M.labels.labels()
    writer.writerow(["label"] + labels)
    for label, row in zip(labels, M.entries):
        writer.writerow([label] + [_number(x) for x in row])
    return buf.getvalue()


def matrix_from_csv(text: str, kind: str) -> LabeledMatrix:
    """Parse a labeled matrix, reordering rows and columns to canonical label order."""
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows or not rows[0] or rows[0][0] != "label":
        raise FormatError("matrix CSV must start with a 'label' header")
    header = rows[0][1:]
    if len(rows) - 1 != len(header):
        raise FormatError(f"matrix CSV has {len(header)} columns but {len(rows) - 1} rows")

    entries = np.zeros((len(header), len(header)))
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header) + 1:
            raise FormatError(f"matrix CSV row {i + 1} has {len(row) - 1} values, expected {len(header)}")
        if row[0] != header[i]:
            raise FormatError(f"matrix CSV row label {row[0]!r} does not match column label {header[i]!r}")
        try:
            entries[i] = [float(x) for x in row[1:]]
        except ValueError as e:
            raise FormatError(f"matrix CSV row {i + 1}: {e}")
        if not all(math.isfinite(x) for x in entries[i]):
            raise FormatError(f"matrix CSV row {i + 1} has non-finite values")

    points = [GraphPoint.from_label(label) for label in header]
    labels = PointSet.of(points)
    if len(labels) != len(points):
        raise FormatError("matrix CSV has duplicate labels")
    order = [points.index(p) for p in labels]
    return LabeledMatrix(labels, entries[np.ix_(order, order)], kind)


def load_matrix(path: str, kind: str) -> LabeledMatrix:
    M = matrix_from_csv(_read_text(path), kind)
    logger.info(f"Loaded {M.size}x{M.size} {kind} matrix from {path}")
    return M


def vectors_to_csv(labels: PointSet, vectors: Sequence[np.ndarray]) -> str:
    """One column per vector, one row per label."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label"] + [f"x{k}" for k in range(len(vectors))])
    for i, label in enumerate(labels.labels()):
        writer.writerow([label] + [_number(v[i]) for v in vectors])
    return buf.getvalue()


def report_to_json(report: CheckReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"
