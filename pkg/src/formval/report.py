"""Structured (JSON) and human-readable (markdown) validation reports.

The JSON report embeds the spec, rating files, pilot file, config and
iteration history it was computed from, so :func:`rerun_from_report`
reproduces it byte for byte. Floats are rounded to 10 decimal places to keep
the output stable across BLAS builds.
"""
from __future__ import annotations

import json
import math
from typing import Any, Mapping

import numpy as np

from . import __version__
from .config import Config
from .workflow import (IterationRecord, RatingInput, Status, ValidationRun,
                       run_validation)

REPORT_VERSION = "1.0"
FLOAT_DECIMALS = 10

METHOD_NOTES = (
    "Weights are theoretical (SME CVR, researcher ratings or manual); no empirical "
    "indicator weights and no construct-level disturbance are estimated.",
    "Items failing the content-validity gate are excluded from weights and the remaining "
    "weights renormalized; failed items stay in the report for revision.",
    "Quartiles use linear interpolation between order statistics (type 7).",
    "Cronbach's alpha on formative constructs is a contrast only and never gates them.",
    "Descriptive thresholds (zero variance, floor/ceiling share) and the VIF cutoff are "
    "configurable conventions, not fixed standards.",
)


def _canon(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError("non-finite value in report")
        x = round(x, FLOAT_DECIMALS)
        return 0.0 if x == 0 else x
    return obj


def build_report(run: ValidationRun) -> dict:
    cfg = run.config
    constructs = {}
    for cid, cr in run.constructs.items():
        c = run.spec.construct(cid)
        ev = cr.evidence
        entry: dict[str, Any] = {
            "model": c.model,
            "level": cr.level,
            "indicators": list(ev.indicators),
            "unavailable": list(ev.unavailable),
            "descriptives": [d.to_dict() for d in ev.descriptives],
            "correlation": ev.correlation.to_dict() if ev.correlation else None,
            "preferred_correlation": _preferred_corr(run, cid),
        }
        if c.model == "formative":
            entry["collinearity"] = [r.to_dict() for r in ev.collinearity]
            entry["collinearity_error"] = ev.collinearity_error
            entry["alpha_contrast"] = (cr.contrast_alpha.to_dict()
                                       if cr.contrast_alpha else None)
        else:
            entry["alpha"] = ev.alpha.to_dict() if ev.alpha else None
            entry["alpha_error"] = ev.alpha_error
        entry["weights"] = cr.weights.to_dict() if cr.weights else None
        entry["weights_error"] = cr.weights_error
        entry["composite"] = cr.composite.to_dict() if cr.composite else None
        constructs[cid] = entry

    summary = {s.value: sum(1 for g in run.gates if g.status is s) for s in Status}
    doc = {
        "report_version": REPORT_VERSION,
        "tool": {"name": "formval", "version": __version__},
        "iteration_id": run.iteration_id,
        "config": cfg.to_dict(),
        "inputs": {
            "spec": {"text": run.spec_text},
            "pilot": {"name": run.pilot_name, "text": run.pilot_text},
            "ratings": [{"name": r.name, "text": r.text} for r in run.rating_inputs],
            "history": [h.to_dict() for h in run.history],
            "notes": run.notes,
        },
        "spec": {"title": run.spec.title, "hash": run.record.spec_hash,
                 "depth": run.spec.depth,
                 "findings": [f.to_dict() for f in run.spec_findings]},
        "ingest": {
            "respondents_loaded": run.raw_dataset.n_respondents,
            "respondents_used": run.dataset.n_respondents,
            "items": list(run.raw_dataset.items),
            "missing_cells": [m.to_dict() for m in run.raw_dataset.missing],
            "dropped_respondents": list(run.dropped),
            "missing_policy": cfg.missing_policy,
            "findings": [f.to_dict() for f in run.dataset.findings],
        },
        "content_validity": {
            "panels": [{"name": r.provenance.source if r.provenance else "", "mode": r.mode,
                        "n_raters": r.n_raters, "items": list(r.items)}
                       for r in run.ratings],
            "cvr": [r.to_dict() for r in run.cvr],
            "researcher_means": [{"item_id": i, "mean": m} for i, m in run.researcher_means],
            "findings": [f.to_dict() for f in run.panel_findings],
        },
        "diagnostics": {
            "outliers": [o.to_dict() for o in run.outliers],
            "constructs": constructs,
        },
        "gates": [g.to_dict() for g in run.gates],
        "summary": summary,
        "iteration": {"record": run.record.to_dict(),
                      "overlap_warnings": [f.to_dict() for f in run.overlap]},
        "methodology_notes": list(METHOD_NOTES),
    }
    return _canon(doc)


def _preferred_corr(run: ValidationRun, cid: str) -> str:
    pref = run.config.corr_preference
    if pref != "both":
        return pref
    c = run.spec.construct(cid)
    # ordinal scales with few points: rank correlation is the safer reading
    points = [it.scale_max - it.scale_min + 1 for it in c.items]
    if not points or max(points) <= 7:
        return "spearman"
    return "pearson"


def render_structured(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _fmt(x, digits=3):
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    return f"{x:.{digits}f}"


def render_human(doc: Mapping) -> str:
    lines = [f"# Pilot validation report: {doc['spec']['title'] or 'untitled'}",
             "",
             f"- iteration: `{doc['iteration_id']}`",
             f"- report version: {doc['report_version']}",
             f"- respondents: {doc['ingest']['respondents_used']} used of "
             f"{doc['ingest']['respondents_loaded']} loaded",
             "- gates: " + ", ".join(f"{k} {v}" for k, v in doc["summary"].items()),
             ""]
    if doc["inputs"]["notes"]:
        lines += ["## Notes", "", doc["inputs"]["notes"], ""]

    lines += ["## Gate decisions", "", "| construct | status | stage | reasons |",
              "|---|---|---|---|"]
    for g in doc["gates"]:
        codes = ", ".join(r["code"] for r in g["reasons"]) or "-"
        lines.append(f"| {g['construct_id']} | {g['status']} | {g['stage']} | {codes} |")
    lines.append("")
    for g in doc["gates"]:
        if g["reasons"] or g["notes"]:
            lines.append(f"### {g['construct_id']}")
            lines.append("")
            for r in g["reasons"] + g["notes"]:
                lines.append(f"- **{r['code']}** ({r['severity']}, {r['stage']}): "
                             f"{r['message']}")
            lines.append("")

    if doc["spec"]["findings"]:
        lines += ["## Specification findings", ""]
        for f in doc["spec"]["findings"]:
            where = f["construct_id"] or "-"
            lines.append(f"- {f['severity']} {f['code']} [{where}]: {f['message']}")
        lines.append("")

    ing = doc["ingest"]
    lines += ["## Data ingestion", ""]
    if ing["missing_cells"]:
        for m in ing["missing_cells"]:
            lines.append(f"- missing {m['respondent_id']}/{m['item_id']}: {m['reason']} "
                         f"({m['raw']!r})")
    else:
        lines.append("- no missing or invalid cells")
    if ing["dropped_respondents"]:
        lines.append(f"- dropped ({ing['missing_policy']}): "
                     + ", ".join(ing["dropped_respondents"]))
    for f in ing["findings"]:
        if f["code"] == "ITEM_NOT_ADMINISTERED":
            lines.append(f"- item never administered: {', '.join(f['item_ids'])}")
    lines.append("")

    cv = doc["content_validity"]
    if cv["cvr"]:
        lines += ["## Content validity", "", "| item | n_e | N | CVR | critical | passed |",
                  "|---|---|---|---|---|---|"]
        for r in cv["cvr"]:
            lines.append(f"| {r['item_id']} | {r['n_essential']} | {r['n_raters']} | "
                         f"{_fmt(r['cvr'])} | {_fmt(r['critical_value'])} | "
                         f"{'yes' if r['passed'] else 'no'} |")
        lines.append("")
    if cv["researcher_means"]:
        lines += ["Researcher ratings (fallback, no SME panel):", ""]
        for r in cv["researcher_means"]:
            lines.append(f"- {r['item_id']}: {_fmt(r['mean'])}")
        lines.append("")
    for f in cv["findings"]:
        lines.append(f"- {f['severity']} {f['code']}: {f['message']}")

    outliers = [o for o in doc["diagnostics"]["outliers"] if o["is_outlier"]]
    lines += ["## Outlier respondents", ""]
    if outliers:
        for o in outliers:
            lines.append(f"- {o['respondent_id']}: flagged on {len(o['items_flagged'])} items "
                         f"({o['fraction_flagged']:.0%})")
    else:
        lines.append("- none")
    lines.append("")

    for cid, c in doc["diagnostics"]["constructs"].items():
        lines += [f"## Construct `{cid}` ({c['model']}, level {c['level']})", ""]
        if c["descriptives"]:
            lines += ["| item | n | mean | median | sd | iqr | min | max | floor | ceiling |",
                      "|---|---|---|---|---|---|---|---|---|---|"]
            for d in c["descriptives"]:
                lines.append(
                    f"| {d['item_id']} | {d['n']} | {_fmt(d['mean'])} | {_fmt(d['median'])} | "
                    f"{_fmt(d['sd'])} | {_fmt(d['iqr'])} | {_fmt(d['min'])} | "
                    f"{_fmt(d['max'])} | {d['floor_share']:.0%} | {d['ceiling_share']:.0%} |")
            lines.append("")
        if c["model"] == "formative":
            if c["collinearity"]:
                lines += ["| item | R² | VIF | reliable |", "|---|---|---|---|"]
                for r in c["collinearity"]:
                    lines.append(f"| {r['item_id']} | {_fmt(r['r_squared'])} | "
                                 f"{_fmt(r['vif'])} | {'yes' if r['reliable'] else 'no'} |")
                lines.append("")
            if c["collinearity_error"]:
                lines += [f"VIF not estimable: {c['collinearity_error']}", ""]
            if c["alpha_contrast"]:
                a = c["alpha_contrast"]
                lines += [f"Cronbach's alpha (contrast only, {a['note']}): "
                          f"{_fmt(a['alpha'])}", ""]
        else:
            if c["alpha"]:
                lines += [f"Cronbach's alpha: {_fmt(c['alpha']['alpha'])}", ""]
            if c["alpha_error"]:
                lines += [f"alpha undefined: {c['alpha_error']}", ""]
        if c["weights"]:
            w = c["weights"]
            pairs = ", ".join(f"{i}={_fmt(x, 4)}" for i, x in zip(w["item_ids"], w["weights"]))
            lines += [f"Weights ({w['source']}): {pairs}", ""]
            if w["excluded"]:
                lines += [f"Excluded from weights: {', '.join(w['excluded'])}", ""]
        elif c["weights_error"]:
            lines += [f"No weights: {c['weights_error']}", ""]

    it = doc["iteration"]
    lines += ["## Iteration hygiene", ""]
    if it["overlap_warnings"]:
        for f in it["overlap_warnings"]:
            lines.append(f"- {f['message']}")
    else:
        lines.append("- no respondents shared with earlier iterations")
    lines += ["", "## Methodology notes", ""]
    lines += [f"- {n}" for n in doc["methodology_notes"]]
    return "\n".join(lines) + "\n"


def generate_report(run: ValidationRun, format: str = "structured") -> str:
    doc = build_report(run)
    if format in ("structured", "json"):
        return render_structured(doc)
    if format in ("human", "markdown", "md"):
        return render_human(doc)
    raise ValueError(f"unknown report format {format!r}")


def rerun_from_report(doc: Mapping) -> ValidationRun:
    """Re-execute the pipeline from the inputs and config embedded in a structured report."""
    inputs = doc["inputs"]
    return run_validation(
        inputs["spec"]["text"],
        inputs["pilot"]["text"],
        [RatingInput(r["name"], r["text"]) for r in inputs["ratings"]],
        Config.from_mapping(doc["config"]),
        doc["iteration_id"],
        [IterationRecord.from_dict(h) for h in inputs["history"]],
        inputs["notes"],
        inputs["pilot"]["name"],
    )
