"""Comparison report shared by the oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass
class OracleReport:
    scenario: str
    metrics: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    passed: dict[str, bool] = field(default_factory=dict)
    data: dict[str, Any] = field(default_factory=dict)

    def record(self, name: str, value: float, tolerance: float | None = None):
        """Store a metric; with a tolerance it also gets a pass flag (value <= tolerance)."""
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"metric {name} is not finite: {value}")
        self.metrics[name] = value
        if tolerance is not None:
            self.tolerances[name] = float(tolerance)
            self.passed[name] = value <= tolerance

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict[str, Any]:
        return {"scenario": self.scenario, "metrics": self.metrics, "tolerances": self.tolerances,
                "passed": self.passed, "ok": self.ok}
