"""Loading pilot responses and SME ratings.

Pilot CSV (UTF-8)::

    respondent_id,US1,US2,...
    R001,4,5,...

SME CSV, with a mandatory mode line before the header::

    # mode=cvr3
    rater_id,US1,US2,...
    E1,essential,not_necessary,...

``mode=cvr3`` cells are ``essential``, ``useful_not_essential`` or
``not_necessary``; ``mode=scale5`` cells are integers 1 (not essential) to
5 (essential). Rating columns may name items or, for higher-order constructs,
child construct ids.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import IngestError, MissingDataError
from .findings import Code, Finding, Severity
from .spec_model import MeasurementSpec

ESSENTIAL = "essential"
CATEGORIES = ("essential", "useful_not_essential", "not_necessary")
MODES = ("cvr3", "scale5")


@dataclass(frozen=True)
class Provenance:
    source: str
    sha256: str
    loaded_at: str = ""


@dataclass(frozen=True)
class MissingCell:
    respondent_id: str
    item_id: str
    raw: str
    reason: str  # blank | non_numeric | out_of_range

    def to_dict(self) -> dict:
        return {"respondent_id": self.respondent_id, "item_id": self.item_id,
                "raw": self.raw, "reason": self.reason}


@dataclass(frozen=True, eq=False)
class PilotDataset:
    """Respondent x item response matrix for one pilot iteration.

    Missing cells hold NaN in ``values`` and are itemised in ``missing``.
    """
    iteration_id: str
    respondent_ids: tuple[str, ...]
    items: tuple[str, ...]
    values: np.ndarray
    provenance: Provenance | None = None
    missing: tuple[MissingCell, ...] = ()
    findings: tuple[Finding, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape != (len(self.respondent_ids), len(self.items)):
            raise IngestError(
                f"value matrix shape {values.shape} does not match "
                f"{len(self.respondent_ids)} respondents x {len(self.items)} items")
        if len(set(self.respondent_ids)) != len(self.respondent_ids):
            raise IngestError("respondent ids must be unique within an iteration")
        if len(set(self.items)) != len(self.items):
            raise IngestError("item ids must be unique")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "respondent_ids", tuple(self.respondent_ids))
        object.__setattr__(self, "items", tuple(self.items))

    @property
    def n_respondents(self) -> int:
        return len(self.respondent_ids)

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    def column(self, item_id: str) -> np.ndarray:
        try:
            return self.values[:, self.items.index(item_id)]
        except ValueError:
            raise KeyError(f"item {item_id!r} not in dataset") from None

    def columns(self, item_ids) -> np.ndarray:
        idx = []
        for item_id in item_ids:
            if item_id not in self.items:
                raise KeyError(f"item {item_id!r} not in dataset")
            idx.append(self.items.index(item_id))
        return self.values[:, idx]

    def subset_rows(self, keep: np.ndarray) -> "PilotDataset":
        keep = np.asarray(keep, dtype=bool)
        kept_ids = tuple(r for r, k in zip(self.respondent_ids, keep) if k)
        kept = set(kept_ids)
        return replace(self, respondent_ids=kept_ids, values=self.values[keep],
                       missing=tuple(m for m in self.missing if m.respondent_id in kept))


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8-sig")
    except UnicodeDecodeError as exc:
        raise IngestError(f"{path}: not valid UTF-8") from exc


def _rows(text: str) -> list[list[str]]:
    return [row for row in csv.reader(io.StringIO(text)) if any(c.strip() for c in row)]


def parse_pilot_csv(text: str, spec: MeasurementSpec, iteration_id: str,
                    source: str = "<memory>") -> PilotDataset:
    text = text.lstrip("\ufeff")
    rows = _rows(text)
    if not rows:
        raise IngestError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0] != "respondent_id":
        raise IngestError(f"{source}: first column must be 'respondent_id', got {header[0]!r}")
    items = header[1:]
    for item_id in items:
        if not spec.has_item(item_id):
            raise IngestError(f"{source}: unknown item column {item_id!r}")
    if len(set(items)) != len(items):
        raise IngestError(f"{source}: duplicate item columns")
    if len(rows) < 2:
        raise IngestError(f"{source}: no respondent rows")

    respondent_ids: list[str] = []
    values = np.full((len(rows) - 1, len(items)), np.nan)
    missing: list[MissingCell] = []
    for r, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise IngestError(f"{source}: row {r + 2} has {len(row)} cells, "
                              f"expected {len(header)}")
        rid = row[0].strip()
        if not rid:
            raise IngestError(f"{source}: row {r + 2} has an empty respondent_id")
        if rid in respondent_ids:
            raise IngestError(f"{source}: duplicate respondent id {rid!r}")
        respondent_ids.append(rid)
        for j, item_id in enumerate(items):
            raw = row[j + 1].strip()
            spec_item = spec.item(item_id)
            if raw == "":
                missing.append(MissingCell(rid, item_id, raw, "blank"))
                continue
            try:
                v = float(raw)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                missing.append(MissingCell(rid, item_id, raw, "non_numeric"))
                continue
            if not spec_item.scale_min <= v <= spec_item.scale_max:
                missing.append(MissingCell(rid, item_id, raw, "out_of_range"))
                continue
            if spec_item.reverse:
                v = spec_item.scale_min + spec_item.scale_max - v
            values[r, j] = v

    findings = [
        Finding(Code.ITEM_NOT_ADMINISTERED, Severity.WARNING, "item never administered",
                (item_id,), spec.construct_of_item(item_id).construct_id, "ingest")
        for item_id in spec.item_ids if item_id not in items
    ]
    if missing:
        findings.append(Finding(Code.MISSING_CELLS, Severity.WARNING,
                                f"{len(missing)} missing or invalid cells",
                                tuple(sorted({m.item_id for m in missing}, key=items.index)),
                                None, "ingest"))
    return PilotDataset(
        iteration_id=iteration_id,
        respondent_ids=tuple(respondent_ids),
        items=tuple(items),
        values=values,
        provenance=Provenance(source, _sha256(text),
                              _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")),
        missing=tuple(missing),
        findings=tuple(findings),
    )


def load_pilot_csv(path: str | Path, spec: MeasurementSpec, iteration_id: str) -> PilotDataset:
    """Load a pilot response file, recording out-of-range and non-numeric cells as missing."""
    return parse_pilot_csv(_read_text(path), spec, iteration_id, source=str(path))


def apply_missing_policy(ds: PilotDataset, policy: str = "listwise"
                         ) -> tuple[PilotDataset, list[str]]:
    """Return the dataset with incomplete respondents removed, plus the dropped ids.

    Under ``policy="error"`` any missing cell raises :class:`MissingDataError`.
    """
    if policy not in ("listwise", "error"):
        raise ValueError(f"unknown missing-data policy {policy!r}")
    incomplete = np.isnan(ds.values).any(axis=1)
    if not incomplete.any():
        return ds, []
    if policy == "error":
        cells = list(ds.missing) or [
            MissingCell(ds.respondent_ids[r], ds.items[j], "", "blank")
            for r, j in zip(*np.nonzero(np.isnan(ds.values)))
        ]
        raise MissingDataError(cells)
    dropped = [rid for rid, bad in zip(ds.respondent_ids, incomplete) if bad]
    out = ds.subset_rows(~incomplete)
    note = Finding(Code.RESPONDENTS_DROPPED, Severity.WARNING,
                   f"listwise deletion dropped {len(dropped)} of {ds.n_respondents} "
                   f"respondents: {', '.join(dropped)}", (), None, "ingest")
    return replace(out, findings=ds.findings + (note,)), dropped


# --- SME ratings ---------------------------------------------------------------

@dataclass(frozen=True)
class SmeRatingSet:
    """Rater x item judgments; categorical under ``cvr3``, integers 1-5 under ``scale5``."""
    rater_ids: tuple[str, ...]
    items: tuple[str, ...]
    judgments: tuple[tuple, ...]
    mode: str
    provenance: Provenance | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise IngestError(f"unknown rating mode {self.mode!r}")
        if len(self.judgments) != len(self.rater_ids) or any(
                len(row) != len(self.items) for row in self.judgments):
            raise IngestError("judgment matrix does not match rater/item lists")
        if len(set(self.rater_ids)) != len(self.rater_ids):
            raise IngestError("rater ids must be unique")
        for row in self.judgments:
            for cell in row:
                if self.mode == "cvr3" and cell not in CATEGORIES:
                    raise IngestError(f"cell {cell!r} is not a cvr3 category")
                if self.mode == "scale5" and (
                        isinstance(cell, bool) or not isinstance(cell, int)
                        or not 1 <= cell <= 5):
                    raise IngestError(f"cell {cell!r} is not a 1-5 rating")
        if self.mode == "cvr3" and len(self.rater_ids) < 2:
            raise IngestError("CVR requires >= 2 raters")

    @property
    def n_raters(self) -> int:
        return len(self.rater_ids)

    def column(self, item_id: str) -> list:
        j = self.items.index(item_id)
        return [row[j] for row in self.judgments]


def _normalize_category(cell: str) -> str:
    return cell.strip().lower().replace("-", "_").replace(" ", "_")


def _parse_mode(line: str, source: str) -> str:
    body = line.strip().lstrip("#").strip()
    key, sep, value = body.partition("=")
    if not sep or key.strip() != "mode":
        raise IngestError(f"{source}: first line must declare mode=cvr3 or mode=scale5")
    mode = value.strip().split(",")[0].strip()
    if mode not in MODES:
        raise IngestError(f"{source}: unknown mode {mode!r}")
    return mode


def parse_sme_ratings(text: str, spec: MeasurementSpec, source: str = "<memory>"
                      ) -> SmeRatingSet:
    text = text.lstrip("\ufeff")
    rows = _rows(text)
    if not rows:
        raise IngestError(f"{source}: empty file")
    mode = _parse_mode(",".join(rows[0]), source)
    if len(rows) < 2:
        raise IngestError(f"{source}: missing header row")
    header = [h.strip() for h in rows[1]]
    if header[0] != "rater_id":
        raise IngestError(f"{source}: first column must be 'rater_id', got {header[0]!r}")
    columns = header[1:]
    for col in columns:
        if not (spec.has_item(col) or spec.has_construct(col)):
            raise IngestError(f"{source}: unknown item {col!r}")
    if len(set(columns)) != len(columns):
        raise IngestError(f"{source}: duplicate item columns")

    rater_ids: list[str] = []
    parsed: list[list] = []
    for r, row in enumerate(rows[2:]):
        line_no = r + 3
        if len(row) != len(header):
            raise IngestError(f"{source}: line {line_no} has {len(row)} cells, "
                              f"expected {len(header)}")
        rid = row[0].strip()
        if not rid or rid in rater_ids:
            raise IngestError(f"{source}: line {line_no}: empty or duplicate rater id {rid!r}")
        rater_ids.append(rid)
        cells = []
        for col, raw in zip(columns, row[1:]):
            raw = raw.strip()
            cat = _normalize_category(raw)
            try:
                num = int(raw)
            except ValueError:
                num = None
            if raw == "":
                raise IngestError(f"{source}: rater {rid!r} left {col!r} blank")
            if mode == "cvr3":
                if cat in CATEGORIES:
                    cells.append(cat)
                elif num is not None:
                    raise IngestError(f"{source}: mixed modes, numeric rating {raw!r} "
                                      f"in a cvr3 file (rater {rid!r}, item {col!r})")
                else:
                    raise IngestError(f"{source}: invalid category {raw!r} "
                                      f"(rater {rid!r}, item {col!r})")
            else:
                if num is not None and 1 <= num <= 5:
                    cells.append(num)
                elif cat in CATEGORIES:
                    raise IngestError(f"{source}: mixed modes, category {raw!r} "
                                      f"in a scale5 file (rater {rid!r}, item {col!r})")
                else:
                    raise IngestError(f"{source}: rating {raw!r} outside 1-5 "
                                      f"(rater {rid!r}, item {col!r})")
        parsed.append(cells)

    if mode == "cvr3" and len(rater_ids) < 2:
        raise IngestError(f"{source}: CVR requires >= 2 raters, found {len(rater_ids)}")
    if not rater_ids:
        raise IngestError(f"{source}: no raters")

    # align columns to spec declaration order: items first, then constructs
    spec_order = list(spec.item_ids) + list(spec.construct_ids)
    order = sorted(range(len(columns)), key=lambda j: spec_order.index(columns[j]))
    return SmeRatingSet(
        rater_ids=tuple(rater_ids),
        items=tuple(columns[j] for j in order),
        judgments=tuple(tuple(row[j] for j in order) for row in parsed),
        mode=mode,
        provenance=Provenance(source, _sha256(text)),
    )


def load_sme_ratings(path: str | Path, spec: MeasurementSpec) -> SmeRatingSet:
    return parse_sme_ratings(_read_text(path), spec, source=str(path))
