"""Probe verdicts shared by the detection probes and the runtime detector."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Verdict(str, enum.Enum):
    VIRTUAL_DETECTED = "virtual_detected"
    CLEAN = "clean"
    INCONCLUSIVE = "inconclusive"
    ERROR = "error"

    @property
    def letter(self) -> str:
        return {"virtual_detected": "V", "clean": "C", "inconclusive": "I", "error": "E"}[
            self.value
        ]


@dataclass(frozen=True)
class ProbeOutcome:
    """One mechanism's verdict plus human-readable evidence."""

    probe: str
    verdict: Verdict
    evidence: str
