"""Synthetic pilot responses and SME ratings with controllable correlation.

Randomness comes from numpy's PCG64 bit generator seeded with the given
integer, so outputs are reproducible across platforms for a fixed numpy
major version.

Latent rows are standard normal draws multiplied by the symmetric square
root of the target correlation matrix (V sqrt(L) V^T from its eigen-
decomposition), then discretized onto each item's Likert range.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import FormvalError
from .ingest import CATEGORIES, ESSENTIAL, PilotDataset, Provenance, SmeRatingSet
from .spec_model import MeasurementSpec

PSD_TOL = 1e-10


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class SynthConfig:
    seed: int
    n_respondents: int
    items: tuple[tuple[str, int, int], ...]
    target_correlation: np.ndarray = field(default=None)
    discretization: str = "round_clamp"

    def __post_init__(self):
        k = len(self.items)
        items = tuple((str(i), int(lo), int(hi)) for i, lo, hi in self.items)
        object.__setattr__(self, "items", items)
        r = np.eye(k) if self.target_correlation is None else np.array(
            self.target_correlation, dtype=float)
        if r.shape != (k, k):
            raise FormvalError(f"target correlation must be {k}x{k}, got {r.shape}")
        if not np.allclose(r, r.T, atol=1e-12, rtol=0):
            raise FormvalError("target correlation must be symmetric")
        if not np.allclose(np.diag(r), 1.0, atol=1e-12, rtol=0):
            raise FormvalError("target correlation must have a unit diagonal")
        if k and np.linalg.eigvalsh(r).min() < -PSD_TOL:
            raise FormvalError("target correlation is not positive semi-definite")
        r.setflags(write=False)
        object.__setattr__(self, "target_correlation", r)
        if self.discretization not in ("round_clamp", "quantile"):
            raise FormvalError("discretization must be round_clamp or quantile")
        if self.n_respondents < 1:
            raise FormvalError("n_respondents must be >= 1")
        for item_id, lo, hi in items:
            if not lo < hi:
                raise FormvalError(f"{item_id}: scale_min must be below scale_max")


def symmetric_sqrt(r: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(r)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def latent_samples(cfg: SynthConfig) -> np.ndarray:
    """n_respondents x items multivariate normal draws with the target correlation."""
    z = rng(cfg.seed).standard_normal((cfg.n_respondents, len(cfg.items)))
    return z @ symmetric_sqrt(cfg.target_correlation)


def discretize(latent: np.ndarray, items: Sequence[tuple[str, int, int]],
               scheme: str = "round_clamp") -> np.ndarray:
    """Map standard-normal latents onto integer Likert scales.

    round_clamp: midpoint + z * range/4, rounded half up and clamped.
    quantile: equal-probability bins of the standard normal.
    """
    out = np.empty_like(latent)
    for j, (_, lo, hi) in enumerate(items):
        z = latent[:, j]
        if scheme == "round_clamp":
            x = np.floor((lo + hi) / 2.0 + z * (hi - lo) / 4.0 + 0.5)
            out[:, j] = np.clip(x, lo, hi)
        elif scheme == "quantile":
            k = hi - lo + 1
            out[:, j] = lo + np.minimum(np.floor(ndtr(z) * k), k - 1)
        else:
            raise FormvalError(f"unknown discretization {scheme!r}")
    return out


def generate_pilot_data(cfg: SynthConfig, iteration_id: str = "synthetic",
                        id_prefix: str = "R") -> PilotDataset:
    values = discretize(latent_samples(cfg), cfg.items, cfg.discretization)
    width = len(str(cfg.n_respondents))
    return PilotDataset(
        iteration_id=iteration_id,
        respondent_ids=tuple(f"{id_prefix}{i + 1:0{width}d}" for i in range(cfg.n_respondents)),
        items=tuple(i for i, _, _ in cfg.items),
        values=values,
        provenance=Provenance(f"synthetic:seed={cfg.seed}", ""),
    )


def generate_sme_ratings(seed: int, n_raters: int, essential_prob_per_item: Sequence[float],
                         item_ids: Sequence[str] | None = None) -> SmeRatingSet:
    """Independent categorical judgments; non-essential votes split evenly between the
    other two categories."""
    probs = np.asarray(essential_prob_per_item, dtype=float)
    if ((probs < 0) | (probs > 1)).any():
        raise FormvalError("probabilities must lie in [0, 1]")
    k = probs.size
    if item_ids is None:
        item_ids = [f"I{j + 1}" for j in range(k)]
    if len(item_ids) != k:
        raise FormvalError("item_ids and probabilities differ in length")
    g = rng(seed)
    u = g.random((n_raters, k))
    v = g.random((n_raters, k))
    judgments = tuple(
        tuple(ESSENTIAL if u[r, j] < probs[j] else CATEGORIES[1 if v[r, j] < 0.5 else 2]
              for j in range(k))
        for r in range(n_raters)
    )
    return SmeRatingSet(tuple(f"E{r + 1}" for r in range(n_raters)), tuple(item_ids),
                        judgments, "cvr3", Provenance(f"synthetic:seed={seed}", ""))


def block_correlation(spec: MeasurementSpec, rho: float) -> np.ndarray:
    """Items correlate at ``rho`` within a construct and 0 across constructs."""
    owner = [spec.construct_of_item(i).construct_id for i in spec.item_ids]
    k = len(owner)
    r = np.array([[1.0 if a == b and i == j else (rho if a == b else 0.0)
                   for j, b in enumerate(owner)] for i, a in enumerate(owner)])
    return r.reshape(k, k)


def config_for_spec(spec: MeasurementSpec, seed: int, n_respondents: int,
                    rho: float | np.ndarray = 0.0,
                    discretization: str = "round_clamp") -> SynthConfig:
    items = tuple((it.item_id, it.scale_min, it.scale_max) for it in spec.items)
    r = block_correlation(spec, rho) if np.isscalar(rho) else np.asarray(rho, dtype=float)
    return SynthConfig(seed, n_respondents, items, r, discretization)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def pilot_to_csv(ds: PilotDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["respondent_id", *ds.items])
    for rid, row in zip(ds.respondent_ids, ds.values):
        w.writerow([rid, *("" if np.isnan(v) else _fmt(v) for v in row)])
    return buf.getvalue()


def ratings_to_csv(ratings: SmeRatingSet) -> str:
    buf = io.StringIO()
    buf.write(f"# mode={ratings.mode}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rater_id", *ratings.items])
    for rid, row in zip(ratings.rater_ids, ratings.judgments):
        w.writerow([rid, *row])
    return buf.getvalue()
