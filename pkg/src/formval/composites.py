"""Weighted composite scores and proxy datasets for higher-order constructs.

Composites use theoretical weights only; no construct-level disturbance is
estimated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .content_validity import WeightVector
from .errors import FormvalError
from .ingest import PilotDataset, Provenance
from .spec_model import ConstructSpec

# cumulative weight within this distance of one half counts as an exact tie
_HALF_TOL = 1e-12


@dataclass(frozen=True)
class CompositeScores:
    construct_id: str
    respondent_ids: tuple[str, ...]
    scores: tuple[float, ...]
    method: str
    weights_used: WeightVector

    def to_dict(self) -> dict:
        return {"construct_id": self.construct_id, "method": self.method,
                "respondent_ids": list(self.respondent_ids), "scores": list(self.scores),
                "weights": self.weights_used.to_dict()}


def _block(ds: PilotDataset, w: WeightVector) -> tuple[np.ndarray, np.ndarray]:
    missing = [i for i in w.item_ids if i not in ds.items]
    if missing:
        raise FormvalError(f"{w.construct_id}: items missing from dataset: {', '.join(missing)}")
    x = ds.columns(w.item_ids)
    if np.isnan(x).any():
        raise FormvalError(f"{w.construct_id}: composite inputs contain missing cells")
    return x, np.asarray(w.weights, dtype=float)


def weighted_mean(values: Sequence[float], weights: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    wt = np.asarray(weights, dtype=float)
    pos = wt > 0
    score = float(v[pos] @ wt[pos]) / float(wt[pos].sum())
    # a convex combination cannot leave the range of its inputs; clip rounding drift
    return min(max(score, float(v[pos].min())), float(v[pos].max()))


def weighted_median(values: Sequence[float], weights: Sequence[float]) -> float:
    """Smallest value whose cumulative weight reaches half the total.

    When the cumulative weight lands exactly on one half, returns the midpoint
    of that value and the next larger value, matching the ordinary median for
    equal weights and an even count.
    """
    pairs = sorted((float(v), float(w)) for v, w in zip(values, weights) if w > 0)
    if not pairs:
        raise ValueError("weighted median needs at least one positive weight")
    distinct: list[list[float]] = []
    for v, w in pairs:
        if distinct and distinct[-1][0] == v:
            distinct[-1][1] += w
        else:
            distinct.append([v, w])
    half = sum(w for _, w in distinct) / 2.0
    cum = 0.0
    for idx, (v, w) in enumerate(distinct):
        cum += w
        if abs(cum - half) <= _HALF_TOL * max(1.0, half) and idx + 1 < len(distinct):
            return (v + distinct[idx + 1][0]) / 2.0
        if cum >= half:
            return v
    return distinct[-1][0]


def weighted_mean_scores(ds: PilotDataset, construct: ConstructSpec,
                         w: WeightVector) -> CompositeScores:
    x, wt = _block(ds, w)
    scores = tuple(weighted_mean(row, wt) for row in x)
    return CompositeScores(construct.construct_id, ds.respondent_ids, scores,
                           "weighted_mean", w)


def weighted_median_scores(ds: PilotDataset, construct: ConstructSpec,
                           w: WeightVector) -> CompositeScores:
    x, wt = _block(ds, w)
    scores = tuple(weighted_median(row, wt) for row in x)
    return CompositeScores(construct.construct_id, ds.respondent_ids, scores,
                           "weighted_median", w)


def composite_scores(ds: PilotDataset, construct: ConstructSpec, w: WeightVector,
                     method: str = "mean") -> CompositeScores:
    if method in ("mean", "weighted_mean"):
        return weighted_mean_scores(ds, construct, w)
    if method in ("median", "weighted_median"):
        return weighted_median_scores(ds, construct, w)
    raise ValueError(f"unknown composite method {method!r}")


def build_higher_order_dataset(children: Sequence[CompositeScores],
                               parent: ConstructSpec,
                               iteration_id: str = "") -> PilotDataset:
    """Stack child composites into a dataset whose items are the child construct ids."""
    if not children:
        raise FormvalError(f"{parent.construct_id}: no child composites supplied")
    ids = [c.construct_id for c in children]
    if set(ids) != set(parent.children) or len(ids) != len(parent.children):
        raise FormvalError(f"{parent.construct_id}: children {ids} do not match "
                           f"declared indicators {list(parent.children)}")
    by_id = {c.construct_id: c for c in children}
    ordered = [by_id[cid] for cid in parent.children]
    respondents = ordered[0].respondent_ids
    for c in ordered[1:]:
        if c.respondent_ids != respondents:
            raise FormvalError(f"{parent.construct_id}: respondent set of {c.construct_id!r} "
                               f"does not match {ordered[0].construct_id!r}")
    values = np.column_stack([np.asarray(c.scores, dtype=float) for c in ordered])
    return PilotDataset(
        iteration_id=iteration_id,
        respondent_ids=respondents,
        items=tuple(parent.children),
        values=values,
        provenance=Provenance(f"composite:{parent.construct_id}", ""),
    )
