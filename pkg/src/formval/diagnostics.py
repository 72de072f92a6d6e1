"""Pilot-data diagnostics: item descriptives, outlier respondents, correlations, VIF.

Quartiles use linear interpolation between order statistics (Hyndman-Fan
type 7, numpy's default ``method="linear"``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DiagnosticsError
from .ingest import PilotDataset
from .spec_model import ConstructSpec, MeasurementSpec

# SSE / SST at or below this is treated as exact linear dependence
EXACT_DEPENDENCE_TOL = 1e-10

FORMATIVE_ALPHA_NOTE = "not a validity criterion for formative constructs"


@dataclass(frozen=True)
class ItemDescriptives:
    item_id: str
    n: int
    mean: float
    median: float
    sd: float
    iqr: float
    min: float
    max: float
    floor_share: float
    ceiling_share: float

    @property
    def zero_variance(self) -> bool:
        return self.sd == 0.0

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "n": self.n, "mean": self.mean,
                "median": self.median, "sd": self.sd, "iqr": self.iqr, "min": self.min,
                "max": self.max, "floor_share": self.floor_share,
                "ceiling_share": self.ceiling_share, "zero_variance": self.zero_variance}


@dataclass(frozen=True)
class OutlierFlag:
    respondent_id: str
    items_flagged: tuple[str, ...]
    fraction_flagged: float
    is_outlier: bool

    def to_dict(self) -> dict:
        return {"respondent_id": self.respondent_id, "items_flagged": list(self.items_flagged),
                "fraction_flagged": self.fraction_flagged, "is_outlier": self.is_outlier}


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson and Spearman matrices; undefined entries are ``None``, never NaN."""
    item_ids: tuple[str, ...]
    pearson: tuple[tuple[float | None, ...], ...]
    spearman: tuple[tuple[float | None, ...], ...]
    undefined_pairs: tuple[tuple[str, str], ...]

    def get(self, a: str, b: str, kind: str = "pearson") -> float | None:
        m = self.pearson if kind == "pearson" else self.spearman
        return m[self.item_ids.index(a)][self.item_ids.index(b)]

    def to_dict(self) -> dict:
        return {"item_ids": list(self.item_ids),
                "pearson": [list(r) for r in self.pearson],
                "spearman": [list(r) for r in self.spearman],
                "undefined_pairs": [list(p) for p in self.undefined_pairs]}


@dataclass(frozen=True)
class CollinearityResult:
    construct_id: str
    item_id: str
    r_squared: float | None
    vif: float | None
    exact_dependence: bool
    n_used: int
    predictors: tuple[str, ...]
    reliable: bool
    error: str | None = None

    def to_dict(self) -> dict:
        return {"construct_id": self.construct_id, "item_id": self.item_id,
                "r_squared": self.r_squared,
                "vif": "EXACT_DEPENDENCE" if self.exact_dependence else self.vif,
                "exact_dependence": self.exact_dependence, "n_used": self.n_used,
                "predictors": list(self.predictors), "reliable": self.reliable,
                "error": self.error}


@dataclass(frozen=True)
class AlphaResult:
    construct_id: str
    alpha: float
    n_items: int
    n_respondents: int
    note: str = ""

    def to_dict(self) -> dict:
        return {"construct_id": self.construct_id, "alpha": self.alpha,
                "n_items": self.n_items, "n_respondents": self.n_respondents,
                "note": self.note}


def _require_complete(ds: PilotDataset):
    if ds.has_missing:
        raise DiagnosticsError("dataset has missing cells; apply a missing-data policy first")


def item_descriptives(ds: PilotDataset, spec: MeasurementSpec) -> list[ItemDescriptives]:
    _require_complete(ds)
    if ds.n_respondents < 2:
        raise DiagnosticsError("need at least 2 respondents for a sample standard deviation")
    out = []
    for j, item_id in enumerate(ds.items):
        x = ds.values[:, j]
        lo, hi = spec.bounds(item_id)
        q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
        n = x.size
        out.append(ItemDescriptives(
            item_id=item_id,
            n=n,
            mean=float(np.mean(x)),
            median=float(med),
            sd=0.0 if np.ptp(x) == 0 else float(np.std(x, ddof=1)),
            iqr=float(q3 - q1),
            min=float(x.min()),
            max=float(x.max()),
            floor_share=float(np.count_nonzero(x == lo) / n),
            ceiling_share=float(np.count_nonzero(x == hi) / n),
        ))
    return out


def detect_outlier_respondents(ds: PilotDataset, fence: float = 1.5,
                               fraction_threshold: float = 0.25) -> list[OutlierFlag]:
    """Flag cells outside per-item Tukey fences; respondents flagged on enough items are outliers."""
    _require_complete(ds)
    x = ds.values
    q1, q3 = np.quantile(x, [0.25, 0.75], axis=0, method="linear")
    iqr = q3 - q1
    flagged = (x < q1 - fence * iqr) | (x > q3 + fence * iqr)
    k = len(ds.items)
    out = []
    for r, rid in enumerate(ds.respondent_ids):
        items = tuple(item for item, f in zip(ds.items, flagged[r]) if f)
        frac = len(items) / k if k else 0.0
        out.append(OutlierFlag(rid, items, frac, frac >= fraction_threshold))
    return out


def _pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    # exact constancy check; centered sums can be ulp-sized for constant columns
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    da = a - a.mean()
    db = b - b.mean()
    saa = float(da @ da)
    sbb = float(db @ db)
    r = float(da @ db) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def correlation_matrix(ds: PilotDataset, item_subset: Sequence[str] | None = None
                       ) -> CorrelationMatrix:
    """Pearson and Spearman (average ranks for ties) for every pair of items."""
    _require_complete(ds)
    if ds.n_respondents < 3:
        raise DiagnosticsError("need at least 3 respondents for correlations")
    items = tuple(ds.items if item_subset is None else item_subset)
    x = ds.columns(items)
    ranks = np.column_stack([rankdata(x[:, j], method="average") for j in range(len(items))]) \
        if items else x
    k = len(items)
    pear = [[1.0] * k for _ in range(k)]
    spear = [[1.0] * k for _ in range(k)]
    undefined = []
    for i in range(k):
        for j in range(i + 1, k):
            p = _pearson(x[:, i], x[:, j])
            s = _pearson(ranks[:, i], ranks[:, j])
            pear[i][j] = pear[j][i] = p
            spear[i][j] = spear[j][i] = s
            if p is None:
                undefined.append((items[i], items[j]))
    return CorrelationMatrix(items, tuple(map(tuple, pear)), tuple(map(tuple, spear)),
                             tuple(undefined))


def sample_size_adequacy(n_respondents: int, n_predictors: int,
                         ratio_floor: float = 5.0) -> tuple[bool, str]:
    """Observations-per-predictor check for the auxiliary VIF regressions."""
    if n_predictors < 1:
        raise ValueError("n_predictors must be >= 1")
    need = ratio_floor * n_predictors
    if n_respondents >= need:
        return True, ""
    return False, (f"{n_respondents} respondents for {n_predictors} predictors is below "
                   f"{ratio_floor:g} per predictor ({math.ceil(need)} needed); VIF may be "
                   f"unstable at this sample size")


def _r_squared(y: np.ndarray, predictors: np.ndarray) -> tuple[float, float]:
    """(SSE, SST) of the least-squares fit of y on predictors plus intercept."""
    yc = y - y.mean()
    sst = float(yc @ yc)
    xc = predictors - predictors.mean(axis=0)
    beta, *_ = np.linalg.lstsq(xc, yc, rcond=None)
    resid = yc - xc @ beta
    return float(resid @ resid), sst


def compute_vif(ds: PilotDataset, construct: ConstructSpec,
                items: Sequence[str] | None = None,
                ratio_floor: float = 5.0) -> list[CollinearityResult]:
    """Regress each indicator on its siblings (with intercept) and report VIF = 1/(1 - R^2).

    ``items`` defaults to the construct's indicators present in ``ds``. Exact
    linear dependence (SSE/SST <= 1e-10) is reported as ``exact_dependence``
    with no finite VIF; a constant target column gets ``error`` set.
    """
    _require_complete(ds)
    if items is None:
        items = [i for i in construct.indicator_ids if i in ds.items]
    items = list(items)
    k = len(items)
    if k < 2:
        raise DiagnosticsError(f"{construct.construct_id}: VIF needs at least 2 indicators")
    n = ds.n_respondents
    p = k - 1
    if n < p + 2:
        raise DiagnosticsError(f"{construct.construct_id}: {n} respondents cannot estimate a "
                               f"regression on {p} predictors (need {p + 2})")
    x = ds.columns(items)
    constant = np.ptp(x, axis=0) == 0
    if constant.all():
        raise DiagnosticsError(f"{construct.construct_id}: every indicator is constant")
    reliable, _ = sample_size_adequacy(n, p, ratio_floor)

    out = []
    for j, item_id in enumerate(items):
        others = [i for i in range(k) if i != j]
        preds = tuple(items[i] for i in others)
        if constant[j]:
            out.append(CollinearityResult(construct.construct_id, item_id, None, None, False,
                                          n, preds, reliable, "ZERO_VARIANCE_TARGET"))
            continue
        sse, sst = _r_squared(x[:, j], x[:, others])
        if sse <= EXACT_DEPENDENCE_TOL * sst:
            out.append(CollinearityResult(construct.construct_id, item_id, 1.0, None, True,
                                          n, preds, reliable))
            continue
        r2 = min(max(1.0 - sse / sst, 0.0), 1.0)
        out.append(CollinearityResult(construct.construct_id, item_id, r2, 1.0 / (1.0 - r2),
                                      False, n, preds, reliable))
    return out


def cronbach_alpha(ds: PilotDataset, construct: ConstructSpec,
                   items: Sequence[str] | None = None) -> AlphaResult:
    """Internal-consistency alpha, reported for contrast only on formative constructs."""
    _require_complete(ds)
    if items is None:
        items = [i for i in construct.indicator_ids if i in ds.items]
    k = len(items)
    if k < 2:
        raise DiagnosticsError(f"{construct.construct_id}: alpha needs at least 2 items")
    if ds.n_respondents < 3:
        raise DiagnosticsError(f"{construct.construct_id}: alpha needs at least 3 respondents")
    x = ds.columns(items)
    totals = x.sum(axis=1)
    total_var = float(np.var(totals, ddof=1))
    if np.ptp(totals) == 0:
        raise DiagnosticsError(f"{construct.construct_id}: total score has zero variance")
    item_var = float(np.var(x, axis=0, ddof=1).sum())
    alpha = (k / (k - 1)) * (1.0 - item_var / total_var)
    note = FORMATIVE_ALPHA_NOTE if construct.model == "formative" else ""
    return AlphaResult(construct.construct_id, alpha, k, ds.n_respondents, note)
