"""Content validity ratios, panel critical values and theoretical indicator weights."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ContentValidityError, FormvalError
from .ingest import ESSENTIAL, SmeRatingSet
from .spec_model import ConstructSpec


class PanelTooSmallWarning(UserWarning):
    """No number of 'essential' votes is significant for this panel size."""


@dataclass(frozen=True)
class CvrResult:
    item_id: str
    n_essential: int
    n_raters: int
    cvr: float
    critical_value: float
    passed: bool

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "n_essential": self.n_essential,
                "n_raters": self.n_raters, "cvr": self.cvr,
                "critical_value": self.critical_value, "passed": self.passed}


@dataclass(frozen=True)
class WeightVector:
    construct_id: str
    item_ids: tuple[str, ...]
    weights: tuple[float, ...]
    source: str
    excluded: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.item_ids) != len(self.weights):
            raise FormvalError("weights and item ids differ in length")
        if not self.item_ids:
            raise FormvalError(f"{self.construct_id}: empty weight vector")
        if any(not math.isfinite(w) or w < 0 for w in self.weights):
            raise FormvalError(f"{self.construct_id}: weights must be finite and >= 0")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise FormvalError(f"{self.construct_id}: weights do not sum to 1")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.item_ids, self.weights))

    def to_dict(self) -> dict:
        return {"construct_id": self.construct_id, "source": self.source,
                "item_ids": list(self.item_ids), "weights": list(self.weights),
                "excluded": list(self.excluded)}


def cvr_value(n_essential: int, n_raters: int) -> float:
    """(n_e - N/2) / (N/2), evaluated as the correctly rounded (2 n_e - N) / N."""
    if n_raters < 1 or not 0 <= n_essential <= n_raters:
        raise ValueError(f"need 0 <= n_essential <= n_raters, got {n_essential}/{n_raters}")
    return (2 * n_essential - n_raters) / n_raters


def critical_count(n_raters: int, alpha: float) -> int | None:
    """Smallest k with P(X >= k) <= alpha for X ~ Binomial(n_raters, 1/2).

    Uses exact integer arithmetic; alpha is read as the decimal it prints as.
    Returns None when even a unanimous panel is not significant.
    """
    if n_raters < 2:
        raise ValueError("n_raters must be >= 2")
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    bound = Fraction(str(alpha)) * 2 ** n_raters
    tail = 0
    best = None
    for k in range(n_raters, -1, -1):
        tail += math.comb(n_raters, k)
        if tail > bound:
            break
        best = k
    return best


def cvr_critical_value(n_raters: int, alpha: float = 0.05,
                       override: Mapping[int, float] | None = None) -> float:
    """Critical CVR for a panel of ``n_raters`` at one-sided level ``alpha``.

    Degenerate panels (no significant count) return 1.0 and emit
    :class:`PanelTooSmallWarning`.
    """
    if override and n_raters in override:
        return float(override[n_raters])
    k = critical_count(n_raters, alpha)
    if k is None:
        warnings.warn(f"panel too small for significance: N={n_raters}, alpha={alpha}",
                      PanelTooSmallWarning, stacklevel=2)
        return 1.0
    return cvr_value(k, n_raters)


def passes(cvr: float, critical: float, rule: str = "strict") -> bool:
    if rule == "strict":
        return cvr > critical
    if rule == "inclusive":
        return cvr >= critical
    raise ValueError(f"unknown pass rule {rule!r}")


def compute_cvr(ratings: SmeRatingSet, alpha: float = 0.05,
                override: Mapping[int, float] | None = None,
                pass_rule: str = "strict") -> list[CvrResult]:
    """One :class:`CvrResult` per rated item; only ``essential`` votes count."""
    if ratings.mode != "cvr3":
        raise FormvalError("CVR needs categorical (cvr3) ratings; "
                           "use researcher_rating_weights for 1-5 ratings")
    n = ratings.n_raters
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PanelTooSmallWarning)
        critical = cvr_critical_value(n, alpha, override)
    out = []
    for item_id in ratings.items:
        n_e = sum(1 for cell in ratings.column(item_id) if cell == ESSENTIAL)
        cvr = cvr_value(n_e, n)
        out.append(CvrResult(item_id, n_e, n, cvr, critical, passes(cvr, critical, pass_rule)))
    return out


def researcher_rating_weights(ratings: SmeRatingSet) -> list[tuple[str, float]]:
    """Per-item arithmetic mean of 1-5 researcher ratings.

    This is the fallback weighting when no SME panel is available and is
    reported as methodologically weaker than CVR weights.
    """
    if ratings.mode != "scale5":
        raise FormvalError("researcher ratings must be in scale5 mode")
    return [(item_id, float(Fraction(sum(ratings.column(item_id)), ratings.n_raters)))
            for item_id in ratings.items]


def normalize(values: Sequence[float]) -> tuple[float, ...]:
    # exact rational normalization: c*w and w give bit-identical results
    exact = [Fraction(v) for v in values]
    total = sum(exact)
    if total <= 0:
        raise ContentValidityError("weights sum to zero")
    return tuple(float(v / total) for v in exact)


def derive_weights(construct: ConstructSpec,
                   cvr: Iterable[CvrResult] | None = None,
                   means: Iterable[tuple[str, float]] | None = None,
                   available: Iterable[str] | None = None) -> WeightVector:
    """Theoretical weights for a construct's indicators, normalized to sum to 1.

    Whenever CVR results cover an indicator, indicators failing the gate are
    excluded regardless of the weight source. ``available`` optionally
    restricts the indicators further (e.g. to items actually administered).
    Raises :class:`ContentValidityError` when nothing survives.
    """
    indicators = list(construct.indicator_ids)
    cvr_map = {r.item_id: r for r in (cvr or ()) if r.item_id in indicators}
    mean_map = {k: v for k, v in (means or ()) if k in indicators}
    allowed = set(indicators if available is None else available)

    source = construct.weight_source
    if source == "cvr":
        unrated = [i for i in indicators if i not in cvr_map]
        if unrated:
            raise FormvalError(f"{construct.construct_id}: no CVR for {', '.join(unrated)}")
        raw = {i: max(cvr_map[i].cvr, 0.0) for i in indicators}
    elif source == "researcher_rating":
        unrated = [i for i in indicators if i not in mean_map]
        if unrated:
            raise FormvalError(f"{construct.construct_id}: no researcher rating for "
                               f"{', '.join(unrated)}")
        raw = {i: mean_map[i] for i in indicators}
    elif source == "manual":
        w = construct.manual_weights
        if w is None or len(w) != len(indicators):
            raise FormvalError(f"{construct.construct_id}: manual_weights missing or misaligned")
        if any(x < 0 for x in w):
            raise FormvalError(f"{construct.construct_id}: negative manual weight")
        raw = dict(zip(indicators, w))
    else:
        raise FormvalError(f"unknown weight source {source!r}")

    kept = [i for i in indicators
            if i in allowed and (i not in cvr_map or cvr_map[i].passed)]
    excluded = tuple(i for i in indicators if i not in kept)
    if not kept:
        raise ContentValidityError(
            f"{construct.construct_id}: no content-valid indicators survive the gate")
    if sum(raw[i] for i in kept) <= 0:
        raise ContentValidityError(f"{construct.construct_id}: surviving weights are all zero")
    return WeightVector(construct.construct_id, tuple(kept),
                        normalize([raw[i] for i in kept]), source, excluded)
