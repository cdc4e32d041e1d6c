"""Structured pass/fail reports produced by the verification operations."""

from dataclasses import dataclass, field
from typing import Any


@dataclass
class CheckReport:
    """Outcome of a check.

    Attributes:
        check: Name of the check (e.g. "mtp2", "markov-consistency")
        passed: Overall verdict
        violations: One dict per located violation
        params: Model or input parameters the check ran with
        tolerances: Numerical cuts used
        summary: Free-form scalar results (max deviations, counts, verdict strings)
    """

    check: str
    passed: bool
    violations: list[dict[str, Any]] = field(default_factory=list)
    params: dict[str, Any] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "pass": self.passed,
            "violations": self.violations,
            "params": self.params,
            "tolerances": self.tolerances,
            "summary": self.summary,
        }


@dataclass
class Mtp2Report(CheckReport):
    """MTP2 verdict for a precision matrix.

    `passed` holds exactly when both violation lists are empty.
    """

    positive_offdiagonal: list[tuple[int, int, float]] = field(default_factory=list)
    nonpositive_diagonal: list[tuple[int, float]] = field(default_factory=list)


@dataclass(frozen=True)
class Counterexample:
    """A (pair, conditioning set) where partial correlation and separation disagree."""

    t: int
    s: int
    subset: tuple[int, ...]
    partial_correlation: float
    separated: bool


@dataclass
class FaithfulnessReport(CheckReport):
    tested: int = 0
    counterexamples: list[Counterexample] = field(default_factory=list)
