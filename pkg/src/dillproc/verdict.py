"""Three-valued answers shared by the preorder checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

HOLDS = "holds"
FAILS = "fails"
UNKNOWN = "unknown"

SCHEMA_VERSION = 1


@dataclass
class Verdict:
    """Outcome of a preorder query.

    ``witness`` backs a Holds answer, ``trace`` backs a Fails answer and
    ``reason`` explains an Unknown one. ``method`` names the checker that
    produced the verdict.
    """

    status: str
    method: str
    left: Any = None
    right: Any = None
    witness: Any = None
    trace: Any = None
    reason: str = ""
    truncated: bool = False
    budgets: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    @property
    def fails(self) -> bool:
        return self.status == FAILS

    @property
    def unknown(self) -> bool:
        return self.status == UNKNOWN

    def to_json(self) -> dict:
        from .syntax import render
        out = {
            "version": SCHEMA_VERSION,
            "verdict": self.status,
            "method": self.method,
            "left": render(self.left) if self.left is not None else None,
            "right": render(self.right) if self.right is not None else None,
            "budgets": dict(self.budgets),
            "truncated": self.truncated,
        }
        if self.status == HOLDS:
            out["witness"] = self.witness
        elif self.status == FAILS:
            out["trace"] = self.trace
        else:
            out["reason"] = self.reason
        if self.stats:
            out["stats"] = dict(self.stats)
        out.update(self.extra)
        return out


def exit_code(status: str) -> int:
    return {HOLDS: 0, FAILS: 1, UNKNOWN: 2}[status]

