"""Check reports shared by the symbols and conditions modules"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

import numpy as np


def json_safe(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into strict-JSON values."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


@dataclass
class BoundCheckReport:
    """Per-cell comparison of an estimate (lhs) against a bound (rhs).

    ``violations`` holds indices into ``grid``; ``failed`` marks verdicts that
    are not tied to a single cell (a KS rejection, a flat ratio test).
    """

    check: str
    grid: List[Dict[str, Any]]
    lhs: List[float]
    rhs: List[float]
    std_err: List[float]
    violations: List[int] = field(default_factory=list)
    fitted_constants: Dict[str, float] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    spec: Dict[str, Any] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)
    failed: bool = False

    @property
    def passed(self) -> bool:
        return not self.violations and not self.failed

    @property
    def violating_cells(self) -> List[Dict[str, Any]]:
        return [self.grid[i] for i in self.violations]

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            "check": self.check,
            "spec": self.spec,
            "grid": self.grid,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "stderr": self.std_err,
            "violations": self.violating_cells,
            "fitted_constants": self.fitted_constants,
            "flags": self.flags,
            "extra": self.extra,
            "passed": self.passed,
        })

    def csv_rows(self) -> List[Dict[str, Any]]:
        """One flat row per grid cell, ready for csv.DictWriter."""
        rows = []
        bad = set(self.violations)
        for i, cell in enumerate(self.grid):
            row = {k: v for k, v in cell.items() if not isinstance(v, (list, tuple, dict))}
            row.update({"lhs": self.lhs[i], "rhs": self.rhs[i], "stderr": self.std_err[i],
                        "violation": i in bad})
            rows.append(json_safe(row))
        return rows


def aggregate(reports: Iterable[BoundCheckReport]) -> Dict[str, Any]:
    reports = list(reports)
    return {
        "n_checks": len(reports),
        "n_passed": sum(1 for r in reports if r.passed),
        "passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
