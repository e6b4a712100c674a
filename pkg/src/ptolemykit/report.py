"""Structured results shared by every scan, plus tolerance helpers."""
from __future__ import annotations

import enum
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

DEFAULT_FLOOR = 1e-12
TOL_ENV = "PTOLEMYKIT_TOL"


def default_tol() -> float:
    """Default relative tolerance; overridable through ``PTOLEMYKIT_TOL``."""
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return 1e-9
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not value >= 0:
        raise ValueError(f"{TOL_ENV} must be nonnegative, got {value}")
    return value


def rel_close(lhs: float, rhs: float, tol: float | None = None, floor: float = DEFAULT_FLOOR) -> bool:
    """Relative equality: |lhs - rhs| <= tol * max(|lhs|, |rhs|, floor)."""
    tol = default_tol() if tol is None else tol
    return abs(lhs - rhs) <= tol * max(abs(lhs), abs(rhs), floor)


class Verdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    VACUOUS = "vacuous-pass"
    HYPOTHESIS_NOT_MET = "hypothesis-not-met"

    @property
    def ok(self) -> bool:
        return self in (Verdict.PASS, Verdict.VACUOUS)


def plain(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and tuples into JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.generic):
        return plain(value.item())
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


@dataclass
class PropertyReport:
    """Outcome of one check.

    ``statistics`` and ``parameters`` are enough to re-derive ``verdict``;
    ``duration`` is the only field allowed to differ between identical runs.
    """

    check: str
    verdict: Verdict
    statistics: dict[str, Any] = field(default_factory=dict)
    parameters: dict[str, Any] = field(default_factory=dict)
    witness: dict[str, Any] | None = None
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict.ok

    def to_dict(self) -> dict[str, Any]:
        return plain(
            {
                "check": self.check,
                "verdict": self.verdict.value,
                "witness": self.witness,
                "statistics": self.statistics,
                "parameters": self.parameters,
                "duration": self.duration,
            }
        )

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def summary(self) -> str:
        return f"[{self.verdict.value.upper()}] {self.check}"


def stamp(report: PropertyReport, start: float) -> PropertyReport:
    report.duration = time.perf_counter() - start
    return report


def load_schema(name: str = "report") -> dict:
    """The published JSON schema for reports (``"report"``) or run indexes (``"index"``)."""
    from importlib import resources

    return json.loads(resources.files("ptolemykit").joinpath(f"schema/{name}.schema.json").read_text())
