import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from formval.errors import IngestError, MissingDataError
from formval.findings import Code, Severity
from formval.ingest import (apply_missing_policy, load_pilot_csv, load_sme_ratings,
                            parse_pilot_csv, parse_sme_ratings)
from formval.spec_model import load_spec, parse_spec

HEADER = "respondent_id,A1,A2,A3,A4,A5"

TWELVE = parse_spec("spec_version: 1\nconstructs:\n  - id: T\n    model: formative\n"
                    "    items:\n" + "\n".join(
                        f"      - {{id: T{i}, scale: [1, 5], citation: s}}"
                        for i in range(1, 13)) + "\n")


def pilot(rows, header=HEADER):
    return header + "\n" + "\n".join(rows) + "\n"


def clean_rows(n=10):
    return [f"R{i},{1 + i % 5},2,3,4,{5 - i % 5}" for i in range(n)]


class TestPilot:
    def test_clean_load(self, simple_spec):
        ds = parse_pilot_csv(pilot(clean_rows()), simple_spec, "it1")
        assert ds.values.shape == (10, 5)
        assert ds.items == ("A1", "A2", "A3", "A4", "A5")
        assert not ds.has_missing and ds.missing == ()
        assert ds.findings == ()

    def test_reverse_coding(self, simple_spec):
        ds = parse_pilot_csv(pilot(["R1,1,1,1,1,2"]), simple_spec, "it1")
        assert ds.column("A5")[0] == 4.0

    def test_out_of_range_becomes_missing(self, simple_spec):
        ds = parse_pilot_csv(pilot(["R1,7,2,3,4,5", "R2,1,x,3,4,5", "R3,1,2,,4,5"]),
                             simple_spec, "it1")
        assert [(m.respondent_id, m.item_id, m.reason) for m in ds.missing] == [
            ("R1", "A1", "out_of_range"), ("R2", "A2", "non_numeric"), ("R3", "A3", "blank")]
        assert np.isnan(ds.values[0, 0])
        assert Code.MISSING_CELLS in [f.code for f in ds.findings]

    def test_item_never_administered(self, simple_spec):
        ds = parse_pilot_csv("respondent_id,A1,A2,A3,A4\nR1,1,2,3,4\n", simple_spec, "it1")
        (f,) = ds.findings
        assert f.code is Code.ITEM_NOT_ADMINISTERED and f.severity is Severity.WARNING
        assert f.item_ids == ("A5",) and f.message == "item never administered"

    @pytest.mark.parametrize("text, match", [
        ("", "empty"),
        ("respondent_id,A1,ZZ\nR1,1,1\n", "unknown item"),
        ("respondent_id,A1\nR1,1\nR1,2\n", "duplicate respondent"),
        ("id,A1\nR1,1\n", "respondent_id"),
        ("respondent_id,A1,A1\nR1,1,1\n", "duplicate item"),
        ("respondent_id,A1\nR1,1,2\n", "cells"),
    ])
    def test_errors(self, simple_spec, text, match):
        with pytest.raises(IngestError, match=match):
            parse_pilot_csv(text, simple_spec, "it1")

    def test_column_order_kept(self, simple_spec):
        ds = parse_pilot_csv("respondent_id,A3,A1\nR2,3,1\nR1,4,2\n", simple_spec, "it")
        assert ds.items == ("A3", "A1")
        assert ds.respondent_ids == ("R2", "R1")

    def test_bom_and_file_load(self, simple_spec, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("\ufeff" + pilot(clean_rows(3)), encoding="utf-8")
        a = load_pilot_csv(p, simple_spec, "x")
        b = load_pilot_csv(p, simple_spec, "x")
        assert a.values.tobytes() == b.values.tobytes()
        assert a.provenance.sha256 == b.provenance.sha256
        assert a.provenance.source == str(p)

    def test_values_read_only(self, simple_spec):
        ds = parse_pilot_csv(pilot(clean_rows(2)), simple_spec, "x")
        with pytest.raises(ValueError):
            ds.values[0, 0] = 9


class TestMissingPolicy:
    def test_identity(self, simple_spec):
        ds = parse_pilot_csv(pilot(clean_rows()), simple_spec, "x")
        out, dropped = apply_missing_policy(ds, "listwise")
        assert out is ds and dropped == []

    def test_listwise(self, simple_spec):
        rows = clean_rows()
        rows[4] = "R4,1,2,,4,5"
        ds = parse_pilot_csv(pilot(rows), simple_spec, "x")
        out, dropped = apply_missing_policy(ds, "listwise")
        assert dropped == ["R4"]
        assert out.n_respondents == 9 and not out.has_missing
        assert out.findings[-1].code is Code.RESPONDENTS_DROPPED

    def test_error_policy_names_cell(self, simple_spec):
        rows = clean_rows()
        rows[4] = "R4,1,2,,4,5"
        ds = parse_pilot_csv(pilot(rows), simple_spec, "x")
        with pytest.raises(MissingDataError, match=r"\(R4, A3\)"):
            apply_missing_policy(ds, "error")

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.lists(st.sampled_from(["1", "3", "5", "", "9", "q"]), min_size=5,
                             max_size=5), min_size=1, max_size=12))
    def test_listwise_output_complete(self, simple_spec, cells):
        rows = [f"R{i}," + ",".join(r) for i, r in enumerate(cells)]
        ds = parse_pilot_csv(pilot(rows), simple_spec, "x")
        out, dropped = apply_missing_policy(ds)
        assert not out.has_missing
        assert out.n_respondents + len(dropped) == ds.n_respondents
        assert [r for r in ds.respondent_ids if r not in dropped] == list(out.respondent_ids)


class TestSme:
    def test_categorical(self):
        lines = ["# mode=cvr3", "rater_id," + ",".join(f"T{i}" for i in range(1, 13))]
        lines += [f"E{r}," + ",".join(["essential"] * 12) for r in range(8)]
        rs = parse_sme_ratings("\n".join(lines), TWELVE)
        assert (rs.n_raters, len(rs.items), rs.mode) == (8, 12, "cvr3")

    def test_numeric(self):
        lines = ["# mode=scale5", "rater_id," + ",".join(f"T{i}" for i in range(1, 13))]
        lines += [f"P{r}," + ",".join(["4"] * 12) for r in range(3)]
        rs = parse_sme_ratings("\n".join(lines), TWELVE)
        assert rs.mode == "scale5" and rs.judgments[0][0] == 4

    def test_single_rater(self, simple_spec):
        with pytest.raises(IngestError, match="CVR requires >= 2 raters"):
            parse_sme_ratings("# mode=cvr3\nrater_id,A1\nE1,essential\n", simple_spec)

    @pytest.mark.parametrize("text, match", [
        ("# mode=cvr3\nrater_id,A1\nE1,essential\nE2,4\n", "mixed modes"),
        ("# mode=scale5\nrater_id,A1\nE1,essential\n", "mixed modes"),
        ("# mode=cvr3\nrater_id,Q9\nE1,essential\nE2,essential\n", "unknown item"),
        ("rater_id,A1\nE1,essential\n", "mode"),
        ("# mode=cvr3\nrater_id,A1\nE1,essential\nE1,essential\n", "duplicate rater"),
        ("# mode=scale5\nrater_id,A1\nE1,6\n", "outside 1-5"),
    ])
    def test_errors(self, simple_spec, text, match):
        with pytest.raises(IngestError, match=match):
            parse_sme_ratings(text, simple_spec)

    def test_aligned_to_spec_order(self, simple_spec):
        text = ("# mode=cvr3\nrater_id,A3,A1\nE1,essential,not necessary\n"
                "E2,Useful-Not-Essential,essential\n")
        rs = parse_sme_ratings(text, simple_spec)
        assert rs.items == ("A1", "A3")
        assert rs.column("A1") == ["not_necessary", "essential"]

    def test_example_files(self, example_dir):
        spec = load_spec(example_dir / "spec.yaml")
        rs = load_sme_ratings(example_dir / "sme.csv", spec)
        assert rs.n_raters == 12
        assert rs.items[-3:] == ("usability", "content", "support")
        ds = load_pilot_csv(example_dir / "pilot.csv", spec, "pilot-1")
        assert ds.n_respondents == 40
        assert {(m.respondent_id, m.item_id, m.reason) for m in ds.missing} == {
            ("P17", "CQ3", "blank"), ("P23", "US2", "out_of_range")}
