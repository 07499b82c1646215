"""Three-valued verdicts attached to every numerically approximated limit claim."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

__all__ = ["HOLDS", "FAILS", "INCONCLUSIVE", "Verdict", "liminf_trace_verdict", "limsup_trace_verdict"]

HOLDS = "HOLDS"
FAILS = "FAILS"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class Verdict:
    """Outcome of a sampled limit claim.

    FAILS always carries a concrete witness re-checkable by direct oracle
    evaluation; INCONCLUSIVE carries the finest resolution reached and the
    trend of the traced quantity.
    """

    status: str
    witness: Optional[dict] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in (HOLDS, FAILS, INCONCLUSIVE):
            raise ValueError(f"unknown verdict status {self.status!r}")
        if self.status == FAILS and self.witness is None:
            raise ValueError("FAILS requires a witness")

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    @property
    def fails(self) -> bool:
        return self.status == FAILS

    def downgrade(self, note: str) -> "Verdict":
        diag = dict(self.diagnostics)
        diag.setdefault("downgrade_notes", []).append(note)
        return Verdict(INCONCLUSIVE, witness=self.witness, diagnostics=diag)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": _jsonable(self.witness),
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj: Any):
    import numpy as np

    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if obj == math.inf:
            return "inf"
        if obj == -math.inf:
            return "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if hasattr(obj, "value"):
        return _jsonable(obj.value)
    return repr(obj)


def _trend(trace) -> str:
    finite = [t for t in trace if math.isfinite(t)]
    if len(finite) < 2:
        return "flat"
    if finite[-1] > finite[-2]:
        return "increasing"
    if finite[-1] < finite[-2]:
        return "decreasing"
    return "flat"


def liminf_trace_verdict(trace, conv_tol: float, diverge_threshold: float):
    """Classify a liminf trace: converged, diverged to -inf, or inconclusive.

    Returns (value, Verdict). The value is one-sided: an estimate obtained
    from finite sampled pairs, never a certified limit.
    """
    diag = {"trace": [float(t) for t in trace], "trend": _trend(trace), "levels": len(trace)}
    if not trace:
        return math.inf, Verdict(INCONCLUSIVE, diagnostics={**diag, "note": "no levels computed"})
    last = float(trace[-1])
    if last <= -abs(diverge_threshold):
        diag["note"] = f"trace fell below -{abs(diverge_threshold):g}; reported -inf"
        return -math.inf, Verdict(HOLDS, diagnostics=diag)
    if last == math.inf:
        diag["note"] = "no admissible pairs at the finest level; inf over empty set is +inf"
        return math.inf, Verdict(HOLDS, diagnostics=diag)
    if len(trace) >= 2 and math.isfinite(trace[-2]):
        if abs(last - trace[-2]) <= conv_tol * max(1.0, abs(last)):
            diag["note"] = "last two levels agree within tolerance"
            return last, Verdict(HOLDS, diagnostics=diag)
    diag["note"] = "trace not settled at the finest resolution"
    return last, Verdict(INCONCLUSIVE, diagnostics=diag)


def limsup_trace_verdict(trace, conv_tol: float, diverge_threshold: float):
    """Classify a limsup trace: converged, diverged to +inf, or inconclusive."""
    diag = {"trace": [float(t) for t in trace], "trend": _trend(trace), "levels": len(trace)}
    if not trace:
        return 0.0, Verdict(INCONCLUSIVE, diagnostics={**diag, "note": "no levels computed"})
    last = float(trace[-1])
    if last >= abs(diverge_threshold):
        diag["note"] = f"trace exceeded +{abs(diverge_threshold):g}; reported +inf"
        return math.inf, Verdict(HOLDS, diagnostics=diag)
    if last == -math.inf:
        # sup over an empty family of nonnegatives
        diag["note"] = "no admissible pairs at the finest level; sup of empty nonnegative family is 0"
        return 0.0, Verdict(HOLDS, diagnostics=diag)
    if len(trace) >= 2 and math.isfinite(trace[-2]):
        if abs(last - trace[-2]) <= conv_tol * max(1.0, abs(last)):
            diag["note"] = "last two levels agree within tolerance"
            return last, Verdict(HOLDS, diagnostics=diag)
    diag["note"] = "trace not settled at the finest resolution"
    return last, Verdict(INCONCLUSIVE, diagnostics=diag)
