"""Command-line interface: ``formval <command> ...``.

Global flags (``--config``, ``--iteration``, ``--out``) may appear before or
after the command name.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .content_validity import compute_cvr, researcher_rating_weights
from .errors import FormvalError
from .findings import Severity
from .ingest import load_sme_ratings
from .report import build_report, render_human, render_structured, rerun_from_report
from .spec_model import (CAUSALITY, TRISTATE, ClassificationAnswers, classify_construct,
                         load_spec, validate_spec)
from .synthgen import (config_for_spec, generate_pilot_data, generate_sme_ratings,
                       pilot_to_csv, ratings_to_csv)
from .workflow import IterationRecord, Status, run_project, save_record

EXIT_STATUS = {Status.PASS: 0, Status.REVISE: 1, Status.BLOCKED: 2}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="YAML/JSON config file")
    parser.add_argument("--iteration", default=argparse.SUPPRESS if suppress else "pilot-1",
                        help="pilot iteration id (default pilot-1)")
    parser.add_argument("--out", default=default,
                        help="output directory (for simulate: output CSV path)")


def _project_args(p: argparse.ArgumentParser, ratings: bool = True) -> None:
    p.add_argument("--spec", required=True, help="measurement spec (YAML)")
    p.add_argument("--data", required=True, help="pilot response CSV")
    if ratings:
        p.add_argument("--ratings", action="append", default=[],
                       help="SME/researcher rating CSV (repeatable, one per mode)")
    p.add_argument("--history", help="directory of iteration records")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formval", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    spec_p = sub.add_parser("spec", help="measurement spec utilities", parents=[common])
    spec_sub = spec_p.add_subparsers(dest="spec_command", required=True)
    val = spec_sub.add_parser("validate", help="check a spec file", parents=[common])
    val.add_argument("spec_file")
    val.add_argument("--item-floor", type=int)

    cl = sub.add_parser("classify", help="reflective/formative decision guide",
                        parents=[common])
    cl.add_argument("--causality", required=True, choices=CAUSALITY)
    cl.add_argument("--interchangeable", default="unsure", choices=TRISTATE)
    cl.add_argument("--covariation", default="unsure", choices=TRISTATE)

    cv = sub.add_parser("cvr", help="content validity ratios from an SME rating file",
                        parents=[common])
    cv.add_argument("--spec", required=True)
    cv.add_argument("--ratings", required=True)

    dg = sub.add_parser("diagnose", help="pilot-data diagnostics", parents=[common])
    _project_args(dg)

    cp = sub.add_parser("composite", help="weighted composite scores", parents=[common])
    _project_args(cp)
    cp.add_argument("--composite-method", choices=("mean", "median"))

    gt = sub.add_parser("gate", help="PASS/REVISE/BLOCKED per construct", parents=[common])
    _project_args(gt)

    rp = sub.add_parser("report", help="write structured and human reports", parents=[common])
    rp.add_argument("--spec")
    rp.add_argument("--data")
    rp.add_argument("--ratings", action="append", default=[])
    rp.add_argument("--history", help="directory of iteration records")
    rp.add_argument("--format", choices=("structured", "human", "both"), default="both")
    rp.add_argument("--notes", default="", help="free-text notes (e.g. face-validity feedback)")
    rp.add_argument("--record", action="store_true",
                    help="append this iteration to the history directory")
    rp.add_argument("--rerun", help="reproduce a report from its embedded inputs")

    sm = sub.add_parser("simulate", help="synthetic pilot data for a spec", parents=[common])
    sm.add_argument("--spec", required=True)
    sm.add_argument("--seed", type=int, required=True)
    sm.add_argument("--respondents", type=int, required=True)
    sm.add_argument("--rho", default="0",
                    help="within-construct latent correlation, or a CSV correlation matrix")
    sm.add_argument("--discretization", choices=("round_clamp", "quantile"),
                    default="round_clamp")
    sm.add_argument("--sme-out", help="also write synthetic SME ratings here")
    sm.add_argument("--raters", type=int, default=10)
    sm.add_argument("--essential-prob", type=float, default=0.9)
    return parser


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _run(args):
    config = load_config(args.config)
    overrides = {}
    if getattr(args, "composite_method", None):
        overrides["composite_method"] = args.composite_method
    if overrides:
        config = type(config).from_mapping({**config.to_dict(), **overrides})
    return run_project(args.spec, args.data, args.ratings, config, args.iteration,
                       args.history, getattr(args, "notes", ""))


def cmd_spec(args) -> int:
    spec = load_spec(args.spec_file)
    floor = args.item_floor or load_config(args.config).item_floor
    findings = validate_spec(spec, floor)
    cyclic = any(f.code.value == "HIERARCHY_CYCLE" for f in findings)
    depth = "cyclic" if cyclic else spec.depth
    print(f"{len(spec.constructs)} constructs, {len(spec.items)} items, hierarchy depth {depth}")
    for f in findings:
        items = f" [{', '.join(f.item_ids)}]" if f.item_ids else ""
        print(f"{f.severity.value:7s} {f.code.value:20s} {f.construct_id}: {f.message}{items}")
    return 1 if any(f.severity is Severity.ERROR for f in findings) else 0


def cmd_classify(args) -> int:
    rec = classify_construct(ClassificationAnswers(args.causality, args.interchangeable,
                                                   args.covariation))
    print(rec.value)
    if rec.value == "follow_definition":
        print("answers are inconclusive: adopt the model implied by the construct's "
              "literature definition", file=sys.stderr)
    return 0


def cmd_cvr(args) -> int:
    config = load_config(args.config)
    spec = load_spec(args.spec)
    ratings = load_sme_ratings(args.ratings, spec)
    if ratings.mode == "scale5":
        rows = [{"item_id": i, "mean_rating": m} for i, m in researcher_rating_weights(ratings)]
        print("item_id,mean_rating")
        for r in rows:
            print(f"{r['item_id']},{r['mean_rating']:.4f}")
    else:
        results = compute_cvr(ratings, config.cvr_alpha, config.cvr_critical_override,
                              config.cvr_pass_rule)
        rows = [r.to_dict() for r in results]
        print("item_id,n_essential,n_raters,cvr,critical_value,passed")
        for r in results:
            print(f"{r.item_id},{r.n_essential},{r.n_raters},{r.cvr:.4f},"
                  f"{r.critical_value:.4f},{str(r.passed).lower()}")
    out = _out_dir(args)
    if out:
        (out / "cvr.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_diagnose(args) -> int:
    run = _run(args)
    doc = build_report(run)
    diag = doc["diagnostics"]
    for o in diag["outliers"]:
        if o["is_outlier"]:
            print(f"outlier respondent {o['respondent_id']}: "
                  f"{', '.join(o['items_flagged'])}")
    for cid, c in diag["constructs"].items():
        print(f"== {cid} ({c['model']}, level {c['level']})")
        for d in c["descriptives"]:
            print(f"  {d['item_id']:12s} mean={d['mean']:.3f} median={d['median']:.3f} "
                  f"sd={d['sd']:.3f} iqr={d['iqr']:.3f} floor={d['floor_share']:.2f} "
                  f"ceiling={d['ceiling_share']:.2f}")
        for r in c.get("collinearity", []):
            vif = r["vif"] if isinstance(r["vif"], str) else f"{r['vif']:.3f}" \
                if r["vif"] is not None else r["error"]
            print(f"  VIF {r['item_id']:12s} {vif}{'' if r['reliable'] else ' (unreliable n)'}")
        if c.get("collinearity_error"):
            print(f"  VIF not estimable: {c['collinearity_error']}")
        alpha = c.get("alpha") or c.get("alpha_contrast")
        if alpha:
            note = f" ({alpha['note']})" if alpha["note"] else ""
            print(f"  alpha={alpha['alpha']:.3f}{note}")
    out = _out_dir(args)
    if out:
        (out / f"diagnostics-{run.iteration_id}.json").write_text(
            render_structured(diag), encoding="utf-8")
    return 0


def cmd_composite(args) -> int:
    run = _run(args)
    comps = [(cid, cr.composite) for cid, cr in run.constructs.items() if cr.composite]
    for cid, cr in run.constructs.items():
        if cr.composite is None:
            print(f"{cid}: no composite ({cr.weights_error or 'indicator data unavailable'})",
                  file=sys.stderr)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["respondent_id", *(cid for cid, _ in comps)])
    for r, rid in enumerate(run.dataset.respondent_ids):
        w.writerow([rid, *(repr(round(c.scores[r], 10)) for _, c in comps)])
    out = _out_dir(args)
    if out:
        (out / f"composites-{run.iteration_id}.csv").write_text(buf.getvalue(),
                                                                encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_gate(args) -> int:
    run = _run(args)
    for g in run.gates:
        codes = ", ".join(f.code.value for f in g.reasons) or "-"
        print(f"{g.construct_id:20s} {g.status.value:8s} {g.stage:17s} {codes}")
    for f in run.overlap:
        print(f"WARNING {f.message}")
    worst = min((g.status for g in run.gates), key=lambda s: s.rank, default=Status.PASS)
    return EXIT_STATUS[worst]


def cmd_report(args) -> int:
    if args.rerun:
        doc = json.loads(Path(args.rerun).read_text(encoding="utf-8"))
        run = rerun_from_report(doc)
    else:
        if not args.spec or not args.data:
            raise FormvalError("report needs --spec and --data (or --rerun)")
        run = _run(args)
    out = _out_dir(args) or Path(".")
    doc = build_report(run)
    written = []
    if args.format in ("structured", "both"):
        path = out / f"report-{run.iteration_id}.json"
        path.write_text(render_structured(doc), encoding="utf-8")
        written.append(path)
    if args.format in ("human", "both"):
        path = out / f"report-{run.iteration_id}.md"
        path.write_text(render_human(doc), encoding="utf-8")
        written.append(path)
    if args.record:
        history = Path(args.history) if args.history else out / "history"
        rec = IterationRecord(run.record.iteration_id, run.record.respondent_ids,
                              run.record.spec_hash, str(written[0]))
        save_record(rec, history)
    for p in written:
        print(p)
    return 0


def _is_num(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _read_rho(value: str, k: int):
    """A scalar, or a CSV matrix with optional header row/column of item ids."""
    if _is_num(value):
        return float(value)
    rows = [r for r in csv.reader(Path(value).read_text(encoding="utf-8").splitlines()) if r]
    if rows and not all(_is_num(c) for c in rows[0]):
        rows = rows[1:]
    if rows and not _is_num(rows[0][0]):
        rows = [r[1:] for r in rows]
    m = np.array([[float(x) for x in r] for r in rows])
    if m.shape != (k, k):
        raise FormvalError(f"correlation matrix must be {k}x{k}, got {m.shape}")
    return m


def cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    rho = _read_rho(args.rho, len(spec.items))
    cfg = config_for_spec(spec, args.seed, args.respondents, rho, args.discretization)
    ds = generate_pilot_data(cfg, args.iteration)
    text = pilot_to_csv(ds)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.sme_out:
        ids = list(spec.item_ids)
        ratings = generate_sme_ratings(args.seed, args.raters,
                                       [args.essential_prob] * len(ids), ids)
        Path(args.sme_out).write_text(ratings_to_csv(ratings), encoding="utf-8")
    return 0


COMMANDS = {"spec": cmd_spec, "classify": cmd_classify, "cvr": cmd_cvr,
            "diagnose": cmd_diagnose, "composite": cmd_composite, "gate": cmd_gate,
            "report": cmd_report, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FormvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 64


if __name__ == "__main__":
    sys.exit(main())
