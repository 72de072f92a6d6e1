"""Regenerate the bundled example project under src/formval/data/example_project/.

The files are committed; rerun only when deliberately changing the example
(and then refresh tests/golden/ with scripts/freeze_golden.py).
"""
from pathlib import Path

import numpy as np

from formval.ingest import CATEGORIES
from formval.spec_model import load_spec
from formval.synthgen import SynthConfig, generate_pilot_data, pilot_to_csv

HERE = Path(__file__).resolve().parents[1] / "src" / "formval" / "data" / "example_project"
N_RATERS = 12
ESSENTIAL_COUNTS = {
    "US1": 12, "US2": 12, "US3": 11, "US4": 12, "US5": 11,
    "CQ1": 12, "CQ2": 11, "CQ3": 12, "CQ4": 11, "CQ5": 5,
    "SP1": 12, "SP2": 11, "SP3": 12, "SP4": 11, "SP5": 12,
    "SA1": 11, "SA2": 11, "SA3": 11, "SA4": 11, "SA5": 11,
    "usability": 12, "content": 12, "support": 11,
}


def latent_correlation(item_ids):
    within = {"US": 0.15, "CQ": 0.15, "SP": 0.3, "SA": 0.8}
    k = len(item_ids)
    r = np.eye(k)
    for i in range(k):
        for j in range(k):
            a, b = item_ids[i], item_ids[j]
            if i != j and a[:2] == b[:2]:
                r[i, j] = within[a[:2]]
    sp1, sp2 = item_ids.index("SP1"), item_ids.index("SP2")
    r[sp1, sp2] = r[sp2, sp1] = 0.97
    return r


def main():
    spec = load_spec(HERE / "spec.yaml")
    ids = list(spec.item_ids)
    items = tuple((it.item_id, it.scale_min, it.scale_max) for it in spec.items)
    cfg = SynthConfig(seed=20251018, n_respondents=40, items=items,
                      target_correlation=latent_correlation(ids))
    ds = generate_pilot_data(cfg, "pilot-1", id_prefix="P")
    text = pilot_to_csv(ds).splitlines()
    rows = [line.split(",") for line in text]
    header = rows[0]
    # one blank, one out-of-range cell, and one straight-lining respondent
    rows[17][header.index("CQ3")] = ""
    rows[23][header.index("US2")] = "7"
    rows[40][1:] = ["1"] * (len(header) - 1)
    (HERE / "pilot.csv").write_text("\n".join(",".join(r) for r in rows) + "\n",
                                    encoding="utf-8")

    cols = list(ESSENTIAL_COUNTS)
    lines = ["# mode=cvr3", ",".join(["rater_id", *cols])]
    for r in range(N_RATERS):
        cells = []
        for j, col in enumerate(cols):
            n_e = ESSENTIAL_COUNTS[col]
            # rotate which raters dissent so items do not share a dissenting rater
            if (r + j) % N_RATERS < n_e:
                cells.append(CATEGORIES[0])
            else:
                cells.append(CATEGORIES[1 + (r + j) % 2])
        lines.append(",".join([f"SME{r + 1:02d}", *cells]))
    (HERE / "sme.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (HERE / "config.yaml").write_text(
        "cvr_alpha: 0.05\n"
        "vif_max: 5.0\n"
        "outlier_fence: 1.5\n"
        "outlier_fraction: 0.25\n"
        "sample_ratio_floor: 5.0\n"
        "corr_preference: both\n"
        "alpha_floor: 0.7\n"
        "missing_policy: listwise\n"
        "composite_method: mean\n",
        encoding="utf-8")


if __name__ == "__main__":
    main()
