"""Structured findings shared by spec validation, ingestion and gate evaluation.

Reason codes are a stable public enum; downstream scripts may key on them.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    INFO = "INFO"
    WARNING = "WARNING"
    # blocks a PASS; the construct can be fixed in another pilot iteration
    REVISE = "REVISE"
    # construct integrity destroyed (e.g. no content-valid items)
    FATAL = "FATAL"
    # spec invariant violations
    ERROR = "ERROR"


class Code(str, Enum):
    # spec validation
    ITEM_FLOOR = "ITEM_FLOOR"
    SINGLE_SOURCE = "SINGLE_SOURCE"
    MISSING_CITATION = "MISSING_CITATION"
    HIERARCHY_CYCLE = "HIERARCHY_CYCLE"
    MULTIPLE_PARENTS = "MULTIPLE_PARENTS"
    BAD_SCALE = "BAD_SCALE"
    ITEMS_AND_CHILDREN = "ITEMS_AND_CHILDREN"
    EMPTY_CONSTRUCT = "EMPTY_CONSTRUCT"
    BAD_MANUAL_WEIGHTS = "BAD_MANUAL_WEIGHTS"
    # ingestion
    ITEM_NOT_ADMINISTERED = "ITEM_NOT_ADMINISTERED"
    INDICATOR_UNAVAILABLE = "INDICATOR_UNAVAILABLE"
    MISSING_CELLS = "MISSING_CELLS"
    RESPONDENTS_DROPPED = "RESPONDENTS_DROPPED"
    # content validity
    CVR_FAILED = "CVR_FAILED"
    NO_CONTENT_VALID_ITEMS = "NO_CONTENT_VALID_ITEMS"
    PANEL_TOO_SMALL = "PANEL_TOO_SMALL"
    RESEARCHER_RATING_WEIGHTS = "RESEARCHER_RATING_WEIGHTS"
    NO_CONTENT_EVIDENCE = "NO_CONTENT_EVIDENCE"
    # descriptives
    ZERO_VARIANCE = "ZERO_VARIANCE"
    CEILING_EFFECT = "CEILING_EFFECT"
    FLOOR_EFFECT = "FLOOR_EFFECT"
    OUTLIER_RESPONDENTS = "OUTLIER_RESPONDENTS"
    # collinearity (formative branch)
    VIF_HIGH = "VIF_HIGH"
    COLLINEAR_EXACT = "COLLINEAR_EXACT"
    VIF_NOT_ESTIMABLE = "VIF_NOT_ESTIMABLE"
    VIF_SAMPLE_UNRELIABLE = "VIF_SAMPLE_UNRELIABLE"
    # reliability (reflective branch)
    ALPHA_LOW = "ALPHA_LOW"
    ALPHA_UNDEFINED = "ALPHA_UNDEFINED"
    # iteration hygiene
    ITERATION_OVERLAP = "ITERATION_OVERLAP"


VIF_CODES = frozenset({Code.VIF_HIGH, Code.COLLINEAR_EXACT, Code.VIF_NOT_ESTIMABLE,
                       Code.VIF_SAMPLE_UNRELIABLE})
ALPHA_CODES = frozenset({Code.ALPHA_LOW, Code.ALPHA_UNDEFINED})


@dataclass(frozen=True)
class Finding:
    code: Code
    severity: Severity
    message: str
    item_ids: tuple[str, ...] = ()
    construct_id: str | None = None
    stage: str | None = None

    @property
    def blocking(self) -> bool:
        return self.severity in (Severity.REVISE, Severity.FATAL, Severity.ERROR)

    def to_dict(self) -> dict:
        return {
            "code": self.code.value,
            "severity": self.severity.value,
            "message": self.message,
            "item_ids": list(self.item_ids),
            "construct_id": self.construct_id,
            "stage": self.stage,
        }


def finding(code, severity, message, item_ids=(), construct_id=None, stage=None) -> Finding:
    return Finding(Code(code), Severity(severity), message, tuple(item_ids), construct_id, stage)
