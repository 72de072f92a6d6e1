"""Gate evaluation, iteration hygiene and the end-to-end validation pipeline.

Formative constructs pass through content validity, item descriptives and
collinearity; reflective constructs swap the collinearity stage for an
internal-consistency (alpha) check. Every stage is evaluated; nothing
short-circuits, so a report always lists all findings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .composites import CompositeScores, build_higher_order_dataset, composite_scores
from .config import Config
from .content_validity import (CvrResult, WeightVector, compute_cvr, critical_count,
                               derive_weights, passes, researcher_rating_weights)
from .diagnostics import (AlphaResult, CollinearityResult, CorrelationMatrix,
                          ItemDescriptives, OutlierFlag, correlation_matrix, compute_vif,
                          cronbach_alpha, detect_outlier_respondents, item_descriptives,
                          sample_size_adequacy)
from .errors import ContentValidityError, DiagnosticsError, FormvalError, WorkflowError
from .findings import ALPHA_CODES, VIF_CODES, Code, Finding, Severity
from .ingest import (PilotDataset, SmeRatingSet, apply_missing_policy, parse_pilot_csv,
                     parse_sme_ratings)
from .spec_model import MeasurementSpec, parse_spec, spec_hash, validate_spec

STAGES = ("content_validity", "descriptives", "collinearity", "reliability")


class Status(str, Enum):
    BLOCKED = "BLOCKED"
    REVISE = "REVISE"
    PASS = "PASS"

    @property
    def rank(self) -> int:
        return _RANK[self]


_RANK = {Status.BLOCKED: 0, Status.REVISE: 1, Status.PASS: 2}


@dataclass(frozen=True)
class GateDecision:
    construct_id: str
    status: Status
    reasons: tuple[Finding, ...]
    stage: str
    notes: tuple[Finding, ...] = ()

    def to_dict(self) -> dict:
        return {"construct_id": self.construct_id, "status": self.status.value,
                "stage": self.stage, "reasons": [r.to_dict() for r in self.reasons],
                "notes": [n.to_dict() for n in self.notes]}


@dataclass(frozen=True)
class ConstructEvidence:
    """Upstream results for one construct, as consumed by :func:`evaluate_gates`."""
    construct_id: str
    indicators: tuple[str, ...]
    descriptives: tuple[ItemDescriptives, ...] = ()
    correlation: CorrelationMatrix | None = None
    collinearity: tuple[CollinearityResult, ...] = ()
    collinearity_error: str | None = None
    alpha: AlphaResult | None = None
    alpha_error: str | None = None
    unavailable: tuple[str, ...] = ()


def status_from(findings: Iterable[Finding]) -> Status:
    """PASS with no blocking findings; BLOCKED on any FATAL; REVISE otherwise."""
    status = Status.PASS
    for f in findings:
        if f.severity is Severity.FATAL:
            return Status.BLOCKED
        if f.blocking:
            status = Status.REVISE
    return status


def _strongest_partner(item: str, corr: CorrelationMatrix | None,
                       candidates: Sequence[str]) -> str | None:
    if corr is None or item not in corr.item_ids:
        return None
    best, best_r = None, -1.0
    for other in candidates:
        if other == item or other not in corr.item_ids:
            continue
        r = corr.get(item, other)
        if r is not None and abs(r) > best_r:
            best, best_r = other, abs(r)
    return best


def _content_stage(construct, ev, cvr_results, mk):
    out = []
    indicators = ev.indicators or construct.indicator_ids
    rated = [i for i in construct.indicator_ids if i in cvr_results]
    failed = [i for i in rated if not cvr_results[i].passed]
    if failed:
        detail = ", ".join(f"{i} (CVR {cvr_results[i].cvr:.3f} vs critical "
                           f"{cvr_results[i].critical_value:.3f})" for i in failed)
        out.append(mk(Code.CVR_FAILED, Severity.REVISE, f"failed content validity: {detail}",
                      failed))
    unrated = [i for i in construct.indicator_ids if i not in cvr_results]
    if construct.weight_source == "cvr" and unrated:
        out.append(mk(Code.NO_CONTENT_EVIDENCE, Severity.REVISE,
                      "weight source is cvr but the SME panel did not rate these indicators",
                      unrated))
    elif construct.weight_source == "researcher_rating":
        out.append(mk(Code.RESEARCHER_RATING_WEIGHTS, Severity.INFO,
                      "weights come from researcher ratings because no SME panel rated "
                      "these items; treat them as provisional"))
    elif construct.weight_source == "manual" and unrated:
        out.append(mk(Code.NO_CONTENT_EVIDENCE, Severity.WARNING,
                      "manual weights without SME content-validity ratings", unrated))
    survivors = [i for i in indicators if i not in failed]
    if construct.weight_source == "cvr":
        survivors = [i for i in survivors if i in cvr_results]
    if not survivors:
        out.append(mk(Code.NO_CONTENT_VALID_ITEMS, Severity.FATAL,
                      "no indicator survives the content-validity gate; the construct no "
                      "longer covers its content domain"))
    return out


def _descriptive_stage(ev, config, mk):
    out = []
    if ev.unavailable:
        out.append(mk(Code.INDICATOR_UNAVAILABLE, Severity.REVISE,
                      "indicators missing from the pilot data", ev.unavailable))
    for d in ev.descriptives:
        if d.zero_variance:
            out.append(mk(Code.ZERO_VARIANCE, Severity.REVISE,
                          f"{d.item_id}: every respondent gave the same answer", [d.item_id]))
        if d.ceiling_share > config.extreme_share:
            out.append(mk(Code.CEILING_EFFECT, Severity.REVISE,
                          f"{d.item_id}: {d.ceiling_share:.0%} of responses at the scale "
                          f"maximum", [d.item_id]))
        if d.floor_share > config.extreme_share:
            out.append(mk(Code.FLOOR_EFFECT, Severity.REVISE,
                          f"{d.item_id}: {d.floor_share:.0%} of responses at the scale "
                          f"minimum", [d.item_id]))
    return out


def _collinearity_stage(ev, config, mk):
    out = []
    if ev.collinearity_error:
        out.append(mk(Code.VIF_NOT_ESTIMABLE, Severity.REVISE, ev.collinearity_error,
                      ev.indicators))
        return out
    items = [c.item_id for c in ev.collinearity]
    unreliable = False
    for c in ev.collinearity:
        unreliable |= not c.reliable
        partner = _strongest_partner(c.item_id, ev.correlation, items)
        pair = [c.item_id] + ([partner] if partner else [])
        suspect = f"; most correlated with {partner}" if partner else ""
        if c.exact_dependence:
            out.append(mk(Code.COLLINEAR_EXACT, Severity.REVISE,
                          f"{c.item_id} is an exact linear combination of its siblings"
                          f"{suspect}", pair))
        elif c.vif is not None and c.vif > config.vif_max:
            out.append(mk(Code.VIF_HIGH, Severity.REVISE,
                          f"{c.item_id}: VIF {c.vif:.3f} exceeds {config.vif_max:g}{suspect}",
                          pair))
    if unreliable and ev.collinearity:
        n = ev.collinearity[0].n_used
        _, text = sample_size_adequacy(n, len(ev.collinearity) - 1, config.sample_ratio_floor)
        out.append(mk(Code.VIF_SAMPLE_UNRELIABLE, Severity.WARNING, text))
    return out


def _reliability_stage(ev, config, mk):
    if ev.alpha_error:
        return [mk(Code.ALPHA_UNDEFINED, Severity.REVISE, ev.alpha_error, ev.indicators)]
    if ev.alpha is not None and ev.alpha.alpha < config.alpha_floor:
        return [mk(Code.ALPHA_LOW, Severity.REVISE,
                   f"Cronbach's alpha {ev.alpha.alpha:.3f} below {config.alpha_floor:g}",
                   ev.indicators)]
    return []


def evaluate_gates(spec: MeasurementSpec,
                   cvr_results: Mapping[str, CvrResult] | Iterable[CvrResult],
                   evidence: Mapping[str, ConstructEvidence],
                   outliers: Sequence[OutlierFlag] = (),
                   config: Config | None = None) -> list[GateDecision]:
    """Per-construct PASS / REVISE / BLOCKED decisions in spec order."""
    config = config or Config()
    if not isinstance(cvr_results, Mapping):
        cvr_results = {r.item_id: r for r in cvr_results}
    outlier_ids = [o for o in outliers if o.is_outlier]

    decisions = []
    for construct in spec.constructs:
        cid = construct.construct_id
        if cid not in evidence:
            raise WorkflowError(f"missing upstream results for construct {cid!r}")
        ev = evidence[cid]

        def mk(code, severity, message, items=(), _cid=cid, _stage=None):
            return Finding(code, severity, message, tuple(items), _cid, _stage)

        staged: list[Finding] = []
        branch = ("collinearity", _collinearity_stage) if construct.model == "formative" \
            else ("reliability", _reliability_stage)
        runners = [("content_validity", lambda e, c, m: _content_stage(construct, e,
                                                                       cvr_results, m)),
                   ("descriptives", _descriptive_stage), branch]
        for stage, run in runners:
            for f in run(ev, config, mk):
                staged.append(Finding(f.code, f.severity, f.message, f.item_ids, cid, stage))

        flagged = [o for o in outlier_ids if set(o.items_flagged) & set(ev.indicators)]
        if flagged:
            staged.append(Finding(
                Code.OUTLIER_RESPONDENTS, Severity.WARNING,
                "outlier respondents worth a follow-up interview: "
                + ", ".join(o.respondent_id for o in flagged),
                (), cid, "descriptives"))

        reasons = tuple(f for f in staged if f.blocking)
        notes = tuple(f for f in staged if not f.blocking)
        status = status_from(reasons)
        stage = reasons[0].stage if reasons else branch[0]
        if status is Status.BLOCKED:
            stage = next(f.stage for f in reasons if f.severity is Severity.FATAL)
        decisions.append(GateDecision(cid, status, reasons, stage, notes))
    return decisions


def branch_violations(spec: MeasurementSpec, decisions: Iterable[GateDecision]) -> list[str]:
    """Reason codes crossing the formative/reflective branch split (should be empty)."""
    bad = []
    for d in decisions:
        model = spec.construct(d.construct_id).model
        codes = {f.code for f in d.reasons + d.notes}
        forbidden = ALPHA_CODES if model == "formative" else VIF_CODES
        bad.extend(f"{d.construct_id}:{c.value}" for c in sorted(codes & forbidden))
    return bad


# --- iteration hygiene ---------------------------------------------------------

@dataclass(frozen=True)
class IterationRecord:
    iteration_id: str
    respondent_ids: frozenset[str]
    spec_hash: str
    report_path: str = ""

    def to_dict(self) -> dict:
        return {"iteration_id": self.iteration_id,
                "respondent_ids": sorted(self.respondent_ids),
                "spec_hash": self.spec_hash, "report_path": self.report_path}

    @classmethod
    def from_dict(cls, d: Mapping) -> "IterationRecord":
        return cls(str(d["iteration_id"]), frozenset(d["respondent_ids"]),
                   str(d.get("spec_hash", "")), str(d.get("report_path", "")))


def check_iteration_overlap(current: IterationRecord,
                            history: Sequence[IterationRecord]) -> list[Finding]:
    """One warning per respondent id that already took part in an earlier iteration."""
    seen: set[str] = set()
    for rec in history:
        if rec.iteration_id in seen:
            raise WorkflowError(f"duplicate iteration id {rec.iteration_id!r} in history")
        seen.add(rec.iteration_id)
    if current.iteration_id in seen:
        raise WorkflowError(f"iteration id {current.iteration_id!r} was already used")
    out = []
    for rid in sorted(current.respondent_ids):
        prior = [rec.iteration_id for rec in history if rid in rec.respondent_ids]
        if prior:
            out.append(Finding(Code.ITERATION_OVERLAP, Severity.WARNING,
                               f"respondent {rid} already took part in iteration(s) "
                               f"{', '.join(prior)}; answers may carry over from the earlier round",
                               (rid,), None, "iteration"))
    return out


def load_history(directory: str | Path) -> list[IterationRecord]:
    d = Path(directory)
    if not d.is_dir():
        return []
    return [IterationRecord.from_dict(json.loads(p.read_text(encoding="utf-8")))
            for p in sorted(d.glob("*.json"))]


def save_record(record: IterationRecord, directory: str | Path) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{record.iteration_id}.json"
    if path.exists():
        raise WorkflowError(f"iteration {record.iteration_id!r} already recorded at {path}")
    path.write_text(json.dumps(record.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


# --- pipeline ------------------------------------------------------------------

@dataclass(frozen=True)
class RatingInput:
    name: str
    text: str


@dataclass
class ConstructRun:
    construct_id: str
    level: int
    dataset: PilotDataset | None
    evidence: ConstructEvidence
    weights: WeightVector | None = None
    weights_error: str | None = None
    composite: CompositeScores | None = None
    contrast_alpha: AlphaResult | None = None


@dataclass
class ValidationRun:
    """Every input and intermediate result of one pipeline execution."""
    spec: MeasurementSpec
    config: Config
    iteration_id: str
    spec_text: str
    pilot_name: str
    pilot_text: str
    rating_inputs: tuple[RatingInput, ...]
    history: tuple[IterationRecord, ...]
    notes: str
    spec_findings: list[Finding]
    ratings: list[SmeRatingSet]
    cvr: list[CvrResult]
    researcher_means: list[tuple[str, float]]
    panel_findings: list[Finding]
    raw_dataset: PilotDataset
    dataset: PilotDataset
    dropped: list[str]
    outliers: list[OutlierFlag]
    constructs: dict[str, ConstructRun]
    gates: list[GateDecision]
    record: IterationRecord
    overlap: list[Finding] = field(default_factory=list)


def _construct_data(construct, ds, runs, spec, iteration_id):
    """Indicator dataset for a construct plus the indicators that could not be supplied."""
    if not construct.children:
        present = [i for i in construct.indicator_ids if i in ds.items]
        missing = tuple(i for i in construct.indicator_ids if i not in ds.items)
        if not present:
            return None, missing
        idx = [ds.items.index(i) for i in present]
        sub = PilotDataset(ds.iteration_id, ds.respondent_ids, tuple(present),
                           ds.values[:, idx], ds.provenance)
        return sub, missing
    children = [runs[c].composite for c in construct.children]
    missing = tuple(c for c, comp in zip(construct.children, children) if comp is None)
    if missing:
        return None, missing
    return build_higher_order_dataset(children, construct, iteration_id), ()


def run_validation(spec_text: str, pilot_text: str,
                   ratings: Sequence[RatingInput] = (),
                   config: Config | None = None,
                   iteration_id: str = "pilot-1",
                   history: Sequence[IterationRecord] = (),
                   notes: str = "",
                   pilot_name: str = "pilot.csv") -> ValidationRun:
    """Run the full formative validation flow on in-memory file contents."""
    config = config or Config()
    spec = parse_spec(spec_text)
    spec_findings = validate_spec(spec, config.item_floor)
    errors = [f for f in spec_findings if f.severity is Severity.ERROR]
    if errors:
        raise WorkflowError("spec has errors: " + "; ".join(
            f"{f.construct_id}: {f.message}" for f in errors))

    rating_sets = [parse_sme_ratings(r.text, spec, source=r.name) for r in ratings]
    modes = [r.mode for r in rating_sets]
    if len(set(modes)) != len(modes):
        raise WorkflowError("supply at most one rating file per mode")
    cvr: list[CvrResult] = []
    means: list[tuple[str, float]] = []
    panel_findings: list[Finding] = []
    for rs in rating_sets:
        if rs.mode == "cvr3":
            cvr = compute_cvr(rs, config.cvr_alpha, config.cvr_critical_override,
                              config.cvr_pass_rule)
            if rs.n_raters not in config.cvr_critical_override and (
                    critical_count(rs.n_raters, config.cvr_alpha) is None):
                panel_findings.append(Finding(
                    Code.PANEL_TOO_SMALL, Severity.WARNING,
                    f"panel too small for significance: {rs.n_raters} raters at alpha "
                    f"{config.cvr_alpha:g}; critical CVR set to 1.0", (), None,
                    "content_validity"))
            elif cvr and not passes(1.0, cvr[0].critical_value, config.cvr_pass_rule):
                panel_findings.append(Finding(
                    Code.PANEL_TOO_SMALL, Severity.WARNING,
                    f"{rs.n_raters} raters: critical CVR is {cvr[0].critical_value:g}, so no "
                    f"item can pass under the {config.cvr_pass_rule} rule", (), None,
                    "content_validity"))
        else:
            means = researcher_rating_weights(rs)
    cvr_map = {r.item_id: r for r in cvr}

    raw = parse_pilot_csv(pilot_text, spec, iteration_id, source=pilot_name)
    ds, dropped = apply_missing_policy(raw, config.missing_policy)
    if ds.n_respondents < 2:
        raise WorkflowError(f"only {ds.n_respondents} complete respondents remain")
    outliers = detect_outlier_respondents(ds, config.outlier_fence, config.outlier_fraction)

    runs: dict[str, ConstructRun] = {}
    for cid in spec.evaluation_order():
        construct = spec.construct(cid)
        sub, unavailable = _construct_data(construct, ds, runs, spec, iteration_id)
        indicators = tuple(i for i in construct.indicator_ids if i not in unavailable)
        desc: tuple = ()
        corr = None
        coll: tuple = ()
        coll_err = alpha_err = None
        alpha = contrast = None
        if sub is not None:
            desc = tuple(item_descriptives(sub, spec))
            if sub.n_respondents >= 3:
                corr = correlation_matrix(sub)
            if construct.model == "formative":
                if len(indicators) >= 2:
                    try:
                        coll = tuple(compute_vif(sub, construct, indicators,
                                                 config.sample_ratio_floor))
                    except DiagnosticsError as exc:
                        coll_err = str(exc)
                try:
                    contrast = cronbach_alpha(sub, construct, indicators)
                except DiagnosticsError:
                    contrast = None
            elif len(indicators) >= 2:
                try:
                    alpha = cronbach_alpha(sub, construct, indicators)
                except DiagnosticsError as exc:
                    alpha_err = str(exc)
        elif construct.model == "reflective":
            alpha_err = "no indicator data available"
        else:
            coll_err = "no indicator data available"

        ev = ConstructEvidence(cid, indicators, desc, corr, coll, coll_err, alpha, alpha_err,
                               unavailable)
        run = ConstructRun(cid, spec.level(cid), sub, ev, contrast_alpha=contrast)
        try:
            run.weights = derive_weights(construct, cvr, means, available=indicators)
        except (ContentValidityError, FormvalError) as exc:
            run.weights_error = str(exc)
        if run.weights is not None and sub is not None:
            run.composite = composite_scores(sub, construct, run.weights,
                                             config.composite_method)
        runs[cid] = run

    evidence = {cid: r.evidence for cid, r in runs.items()}
    gates = evaluate_gates(spec, cvr_map, evidence, outliers, config)

    record = IterationRecord(iteration_id, frozenset(raw.respondent_ids), spec_hash(spec))
    overlap = check_iteration_overlap(record, list(history))
    return ValidationRun(
        spec=spec, config=config, iteration_id=iteration_id, spec_text=spec_text,
        pilot_name=pilot_name, pilot_text=pilot_text, rating_inputs=tuple(ratings),
        history=tuple(history), notes=notes, spec_findings=spec_findings,
        ratings=rating_sets, cvr=cvr, researcher_means=means, panel_findings=panel_findings,
        raw_dataset=raw, dataset=ds, dropped=dropped, outliers=outliers,
        constructs={cid: runs[cid] for cid in spec.construct_ids}, gates=gates,
        record=record, overlap=overlap)


def run_project(spec_path: str | Path, pilot_path: str | Path,
                rating_paths: Sequence[str | Path] = (), config: Config | None = None,
                iteration_id: str = "pilot-1", history_dir: str | Path | None = None,
                notes: str = "") -> ValidationRun:
    """File-based wrapper around :func:`run_validation`; only basenames enter the report."""
    read = lambda p: Path(p).read_text(encoding="utf-8-sig")  # noqa: E731
    ratings = [RatingInput(Path(p).name, read(p)) for p in rating_paths]
    history = load_history(history_dir) if history_dir else []
    return run_validation(read(spec_path), read(pilot_path), ratings, config, iteration_id,
                          history, notes, Path(pilot_path).name)
