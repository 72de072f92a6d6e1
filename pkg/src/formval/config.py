"""Run configuration.

Config files are YAML (or JSON, which YAML parses) mappings of the keys below.
Unknown keys are rejected so that typos do not silently fall back to defaults.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import FormvalError

CORR_PREFERENCES = ("pearson", "spearman", "both")
MISSING_POLICIES = ("listwise", "error")
COMPOSITE_METHODS = ("mean", "median")
CVR_PASS_RULES = ("strict", "inclusive")


@dataclass(frozen=True)
class Config:
    cvr_alpha: float = 0.05
    # N -> critical CVR; overrides the exact-binomial value for that panel size
    cvr_critical_override: Mapping[int, float] = field(default_factory=dict)
    # strict: pass iff CVR > critical; inclusive: CVR >= critical
    cvr_pass_rule: str = "strict"
    item_floor: int = 5
    vif_max: float = 5.0
    outlier_fence: float = 1.5
    outlier_fraction: float = 0.25
    sample_ratio_floor: float = 5.0
    corr_preference: str = "both"
    extreme_share: float = 0.8
    alpha_floor: float = 0.7
    missing_policy: str = "listwise"
    composite_method: str = "mean"

    def __post_init__(self):
        if not 0.0 < self.cvr_alpha < 0.5:
            raise FormvalError(f"cvr_alpha must lie in (0, 0.5), got {self.cvr_alpha}")
        if self.cvr_pass_rule not in CVR_PASS_RULES:
            raise FormvalError(f"cvr_pass_rule must be one of {CVR_PASS_RULES}")
        if self.corr_preference not in CORR_PREFERENCES:
            raise FormvalError(f"corr_preference must be one of {CORR_PREFERENCES}")
        if self.missing_policy not in MISSING_POLICIES:
            raise FormvalError(f"missing_policy must be one of {MISSING_POLICIES}")
        if self.composite_method not in COMPOSITE_METHODS:
            raise FormvalError(f"composite_method must be one of {COMPOSITE_METHODS}")
        if self.item_floor < 1:
            raise FormvalError("item_floor must be >= 1")
        if self.vif_max < 1.0:
            raise FormvalError("vif_max must be >= 1")
        if self.outlier_fence < 0 or not 0.0 < self.outlier_fraction <= 1.0:
            raise FormvalError("outlier_fence must be >= 0 and outlier_fraction in (0, 1]")
        if self.sample_ratio_floor <= 0:
            raise FormvalError("sample_ratio_floor must be > 0")
        if not 0.0 < self.extreme_share <= 1.0:
            raise FormvalError("extreme_share must lie in (0, 1]")
        override = {int(k): float(v) for k, v in dict(self.cvr_critical_override).items()}
        object.__setattr__(self, "cvr_critical_override", override)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> "Config":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise FormvalError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["cvr_critical_override"] = {
            str(k): v for k, v in sorted(self.cvr_critical_override.items())
        }
        return out


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is not None and not isinstance(data, Mapping):
        raise FormvalError(f"{path}: config must be a mapping")
    return Config.from_mapping(data)
