"""Model families on metric graphs.

Isotropic exponential covariances over the geodesic or resistance metric, and
the Whittle-Matérn alpha=1 vertex precision together with its conditional
autoregressive (CAR) reparameterization.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np

from . import config
from .errors import BadParams, NonUniformLengths
from .graph import GraphPoint, MetricGraph, PointSet, refine
from .linalg import LabeledMatrix, factorize_spd, invert_spd
from .metrics import METRICS, distance_matrix
from .report import CheckReport

logger = logging.getLogger(__name__)

MODEL_KINDS = ("exp", "wm1")


def _require_positive(name: str, value: float) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise BadParams(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise BadParams(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ExpKernelParams:
    """sigma^2 * exp(-kappa * h)."""

    kappa: float
    sigma: float

    def __post_init__(self):
        _require_positive("kappa", self.kappa)
        _require_positive("sigma", self.sigma)


@dataclass(frozen=True)
class WmParams:
    kappa: float
    tau: float
    ell: float

    def __post_init__(self):
        _require_positive("kappa", self.kappa)
        _require_positive("tau", self.tau)
        _require_positive("ell", self.ell)


@dataclass(frozen=True, eq=False)
class CarParams:
    """Per-vertex CAR weights and conditional precisions.

    Attributes:
        degrees: Multigraph vertex degrees
        beta: 1 / (d_i cosh(kappa ell))
        kappa_i: kappa tau^2 d_i / tanh(kappa ell)
        kappa_ell: The product kappa * ell the weights were built from
    """

    degrees: np.ndarray
    beta: np.ndarray
    kappa_i: np.ndarray
    kappa_ell: float

    def dominance_margin(self) -> np.ndarray:
        """d_i cosh(kappa ell) - d_i; positive means a proper CAR model."""
        return 1.0 / self.beta - self.degrees


def exp_covariance(D: LabeledMatrix, params: ExpKernelParams) -> LabeledMatrix:
    """Exponential kernel applied to a distance matrix.

    Raises:
        NotPositiveDefinite: The kernel is not a valid covariance for this
            metric and point set
    """
    if D.kind != "distance":
        raise BadParams(f"exp_covariance needs a distance matrix, got {D.kind}")
    C = params.sigma ** 2 * np.exp(-params.kappa * D.entries)
    np.fill_diagonal(C, params.sigma ** 2)
    covariance = LabeledMatrix(D.labels, C, "covariance")
    factorize_spd(covariance)
    return covariance


def _check_wm_graph(graph: MetricGraph, ell: float) -> None:
    if graph.has_loops():
        raise BadParams("Whittle-Matérn vertex precision is not defined here for graphs with loops")
    if not graph.edges:
        raise BadParams("Whittle-Matérn vertex precision needs at least one edge")
    if not graph.is_uniform(ell):
        lengths = sorted({e.length for e in graph.edges})
        raise NonUniformLengths(f"All edges must have length {ell}; found {lengths[:5]}")


def _multi_adjacency(graph: MetricGraph) -> np.ndarray:
    A = np.zeros((graph.vertex_count, graph.vertex_count))
    for e in graph.edges:
        A[e.u, e.v] += 1.0
        A[e.v, e.u] += 1.0
    return A


def wm_alpha1_precision(graph: MetricGraph, params: WmParams) -> LabeledMatrix:
    """Vertex precision of the alpha=1 Whittle-Matérn field on a uniform-length graph.

    Q_ii = c d_i cosh(kappa ell), Q_ij = -c per edge i~j, with
    c = kappa tau^2 / sinh(kappa ell). Parallel edges add up.
    """
    _check_wm_graph(graph, params.ell)
    kl = params.kappa * params.ell
    c = params.kappa * params.tau ** 2 / math.sinh(kl)
    Q = -c * _multi_adjacency(graph)
    np.fill_diagonal(Q, c * graph.degrees() * math.cosh(kl))
    return LabeledMatrix(graph.vertex_points(), Q, "precision")


def car_parameters(params: WmParams, degrees: Iterable[int]) -> CarParams:
    degrees = np.asarray(list(degrees), dtype=int)
    if degrees.size == 0 or np.any(degrees < 1):
        raise BadParams("CAR parameters need every degree >= 1")
    kl = params.kappa * params.ell
    beta = 1.0 / (degrees * math.cosh(kl))
    kappa_i = params.kappa * params.tau ** 2 * degrees / math.tanh(kl)
    return CarParams(degrees, beta, kappa_i, kl)


def car_precision(graph: MetricGraph, car: CarParams) -> LabeledMatrix:
    """Assemble Q_ii = kappa_i, Q_ij = -kappa_i beta_i from CAR parameters."""
    if not np.array_equal(graph.degrees(), car.degrees):
        raise BadParams("CAR parameters were built for different vertex degrees")
    weights = car.kappa_i * car.beta
    Q = np.zeros((graph.vertex_count, graph.vertex_count))
    for e in graph.edges:
        Q[e.u, e.v] -= weights[e.u]
        Q[e.v, e.u] -= weights[e.v]
    np.fill_diagonal(Q, car.kappa_i)
    return LabeledMatrix(graph.vertex_points(), Q, "precision")


def standard_car_precision(graph: MetricGraph, a: float, tau_tilde: float) -> LabeledMatrix:
    """tau_tilde^2 (a + d_i) on the diagonal, -tau_tilde^2 per edge.

    a = 0 gives the intrinsic CAR model, whose precision is singular; it is
    returned without a positive-definiteness check.
    """
    if not math.isfinite(a) or a < 0:
        raise BadParams(f"a must be non-negative, got {a}")
    _require_positive("tau_tilde", tau_tilde)
    Q = -_multi_adjacency(graph)
    np.fill_diagonal(Q, a + graph.degrees())
    return LabeledMatrix(graph.vertex_points(), tau_tilde ** 2 * Q, "precision")


def intrinsic_car_limit_check(graph: MetricGraph, tau: float, ell: float, kappa_small: float) -> CheckReport:
    """Compare the rescaled alpha=1 precision at small kappa with the intrinsic CAR pattern."""
    params = WmParams(kappa_small, tau, ell)
    kl = kappa_small * ell
    Q = wm_alpha1_precision(graph, params)
    rescaled = Q.entries * math.sinh(kl) / (kappa_small * tau ** 2)
    target = standard_car_precision(graph, 0.0, 1.0).entries

    deviation = np.abs(rescaled - target)
    off_diagonal = deviation - np.diag(np.diag(deviation))
    max_deviation = float(deviation.max())
    bound = config.CAR_LIMIT_FACTOR * kl
    passed = max_deviation <= bound

    violations = []
    if not passed:
        i, j = np.unravel_index(int(np.argmax(deviation)), deviation.shape)
        violations.append({"pair": [Q.labels[i].label(), Q.labels[j].label()], "deviation": float(deviation[i, j])})

    logger.info(f"Intrinsic CAR limit at kappa={kappa_small}: max deviation {max_deviation:.3g} (bound {bound:.3g})")
    return CheckReport(
        check="intrinsic-car-limit",
        passed=passed,
        violations=violations,
        params={"kappa": kappa_small, "tau": tau, "ell": ell},
        tolerances={"bound": bound},
        summary={
            "max_deviation": max_deviation,
            "max_diagonal_deviation": float(np.diag(deviation).max()),
            "max_offdiagonal_deviation": float(off_diagonal.max()),
        },
    )


@dataclass(frozen=True)
class ModelSpec:
    """A model block: {"model": "exp"|"wm1", "kappa": ..., "sigma"/"tau": ..., "metric", "ell"}."""

    kind: str
    kappa: float
    sigma: float = 1.0
    tau: float = 1.0
    metric: str = "geodesic"
    ell: float | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise BadParams(f"Unknown model {self.kind!r}; expected one of {', '.join(MODEL_KINDS)}")
        if self.metric not in METRICS:
            raise BadParams(f"Unknown metric {self.metric!r}")
        _require_positive("kappa", self.kappa)
        _require_positive("sigma", self.sigma)
        _require_positive("tau", self.tau)
        if self.ell is not None:
            _require_positive("ell", self.ell)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelSpec":
        allowed = {"model", "kappa", "sigma", "tau", "metric", "ell"}
        unknown = set(data) - allowed
        if unknown:
            raise BadParams(f"Unknown model keys: {', '.join(sorted(unknown))}")
        if "model" not in data:
            raise BadParams("Model block needs a 'model' key")
        kind = data["model"]
        if kind == "exp" and "tau" in data:
            raise BadParams("'tau' does not apply to the exp model")
        if kind == "wm1" and "sigma" in data:
            raise BadParams("'sigma' does not apply to the wm1 model")
        return cls(
            kind=kind,
            kappa=data.get("kappa", config.DEFAULT_KAPPA),
            sigma=data.get("sigma", config.DEFAULT_SIGMA),
            tau=data.get("tau", config.DEFAULT_TAU),
            metric=data.get("metric", "geodesic"),
            ell=data.get("ell"),
        )

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "exp":
            return {"model": "exp", "metric": self.metric, "kappa": self.kappa, "sigma": self.sigma}
        return {"model": "wm1", "kappa": self.kappa, "tau": self.tau, "ell": self.ell}

    def wm_params(self, graph: MetricGraph) -> WmParams:
        ell = self.ell if self.ell is not None else graph.edges[0].length
        return WmParams(self.kappa, self.tau, ell)

    def covariance(self, graph: MetricGraph, points: PointSet | Iterable[GraphPoint] | None = None) -> LabeledMatrix:
        """Joint covariance over the refined nodes (points ∪ vertices).

        The wm1 model lives on vertices only; interior points are rejected.
        """
        nodes = refine(graph, points if points is not None else []).nodes
        if self.kind == "exp":
            D = distance_matrix(graph, nodes, self.metric)
            return exp_covariance(D, ExpKernelParams(self.kappa, self.sigma))
        if len(nodes) != graph.vertex_count:
            raise BadParams("The wm1 model is defined on graph vertices only")
        if not graph.edges:
            raise BadParams("The wm1 model needs at least one edge")
        return invert_spd(wm_alpha1_precision(graph, self.wm_params(graph)))
