import csv

import numpy as np
import pandas as pd
import pytest

from bayesord import OrdinalDataset
from bayesord.errors import RecodeError, SchemaError, ValidationError
from bayesord.survey import (RecodeSpec, build_design, load_delimited, read_dataset, recode_income,
                             recode_records, summarize_categories, write_dataset)

SPEC = RecodeSpec.for_wave("2021")

BASE = {
    "ev_purchase": "Somewhat likely", "income": "50k-60k", "age": "30-49",
    "gov_climate_action": "Too little", "education": "College graduate", "region": "South",
    "race": "White non-Hispanic", "party": "Democrat", "owns_ev_hybrid": "No", "gender": "A woman",
    "metro": "Metropolitan", "born_us": "U.S.", "ev_heard": "A lot", "ev_environment": "Better",
    "ev_infrastructure": "Yes", "marital": "Married",
}


def write_rows(path, rows, newline="\n"):
    header = list(BASE)
    lines = [",".join(header)]
    for r in rows:
        if isinstance(r, str):
            lines.append(r)
        else:
            full = {**BASE, **r}
            lines.append(",".join(f'"{full[h]}"' for h in header))
    path.write_bytes((newline.join(lines) + newline).encode())
    return path


def varied_rows(n=40, seed=0):
    rng = np.random.default_rng(seed)
    pick = lambda xs: xs[rng.integers(len(xs))]
    rows = []
    for i in range(n):
        rows.append({
            "ev_purchase": SPEC.dependent_order[i % 4],
            "income": pick(["<30k", "30k-40k", "90k-100k", ">100k"]),
            "age": pick(["18-29", "30-49", "50-64", "65+"]),
            "gov_climate_action": pick(["Too much", "About the right amount", "Too little"]),
            "education": pick(["Postgraduate", "Some college", "High school graduate"]),
            "region": pick(["Northeast", "Midwest", "South", "West"]),
            "race": pick(["White non-Hispanic", "Black non-Hispanic", "Hispanic"]),
            "party": pick(["Republican", "Democrat", "Independent"]),
            "owns_ev_hybrid": pick(["Yes", "No"]), "gender": pick(["A man", "A woman"]),
            "ev_heard": pick(["A lot", "A little", "Nothing at all"]),
        })
    return rows


# income ---------------------------------------------------------------------

@pytest.mark.parametrize("label,value", [("<30k", 2.0), ("30k-40k", 3.5), ("30k–40k", 3.5),
                                         (">100k", 11.0), ("90k-100k", 9.5)])
def test_income_recode(label, value):
    assert recode_income(label) == value


def test_income_unknown_code():
    with pytest.raises(RecodeError):
        recode_income("lots")


# loading --------------------------------------------------------------------

def test_clean_three_rows(tmp_path):
    rec = load_delimited(write_rows(tmp_path / "a.csv", [{}, {}, {}]), SPEC)
    assert len(rec.frame) == 3 and rec.rejects == [] and rec.parsed == 3


def test_crlf_matches_lf(tmp_path):
    rows = varied_rows(12)
    lf = load_delimited(write_rows(tmp_path / "lf.csv", rows), SPEC)
    crlf = load_delimited(write_rows(tmp_path / "crlf.csv", rows, "\r\n"), SPEC)
    pd.testing.assert_frame_equal(lf.frame, crlf.frame)


def test_bad_income_and_ragged_rows_rejected(tmp_path):
    rec = load_delimited(write_rows(tmp_path / "b.csv", [{}, {"income": "a fortune"}, "1,2,3", {}]),
                         SPEC)
    assert len(rec.frame) == 2
    assert [r[0] for r in rec.rejects] == [2, 3]
    assert "income" in rec.rejects[0][1]


def test_missing_column_is_schema_error(tmp_path):
    path = tmp_path / "c.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([h for h in BASE if h != "party"])
        w.writerow([BASE[h] for h in BASE if h != "party"])
    with pytest.raises(SchemaError, match="party"):
        load_delimited(path, SPEC)


# recoding and design --------------------------------------------------------

def test_reference_and_age_encoding(tmp_path):
    rows = [{"gov_climate_action": "Too little", "age": "30-49"},
            {"gov_climate_action": "Too much", "age": "50-64"}]
    rec = recode_records(load_delimited(write_rows(tmp_path / "d.csv", rows), SPEC), SPEC)
    assert rec.loc[0, "GACC(TM)"] == 0 and rec.loc[0, "GACC(RA)"] == 0
    assert rec.loc[1, "GACC(TM)"] == 1
    assert rec.loc[0, "Age<50"] == 1 and rec.loc[1, "Age<50"] == 0
    assert rec.loc[0, "Income/10000"] == 5.5


def test_recode_is_idempotent(tmp_path):
    raw = load_delimited(write_rows(tmp_path / "e.csv", varied_rows(10)), SPEC)
    once = recode_records(raw, SPEC)
    pd.testing.assert_frame_equal(recode_records(once, SPEC), once)


def test_design_row_accounting_and_families(tmp_path):
    rows = varied_rows(40)
    rows[3]["ev_purchase"] = "I do not expect to purchase a vehicle"
    rows[5]["party"] = "Refused"
    rows[7]["income"] = "Refused"
    rows.append({"income": "not a bracket"})
    raw = load_delimited(write_rows(tmp_path / "f.csv", rows), SPEC)
    data, rep = build_design(raw, SPEC, report=True)
    assert rep.balanced()
    assert (rep.parsed, rep.rejected, rep.dropped_no_purchase, rep.dropped_missing) == (41, 1, 1, 2)
    assert data.n == rep.kept == 37 and data.J == 4
    assert data.covariate_names[1:] == tuple(SPEC.design_names())
    for members in data.families.values():
        cols = data.X[:, [data.column(m) for m in members]]
        assert np.all(cols.sum(axis=1) <= 1)


def test_empty_design_is_validation_error(tmp_path):
    raw = load_delimited(write_rows(tmp_path / "g.csv", [{"party": "Refused"}]), SPEC)
    with pytest.raises(ValidationError):
        build_design(raw, SPEC)


def test_spec_requires_one_reference():
    d = SPEC.__dict__.copy()
    fam = SPEC.families[0]
    bad = type(fam)(fam.name, fam.column, fam.levels, "", [])
    d["families"] = [bad]
    d["covariate_order"] = []
    with pytest.raises(SchemaError):
        RecodeSpec(**d)


@pytest.mark.parametrize("wave", ["2021", "2022", "2023"])
def test_shipped_waves_load(wave):
    spec = RecodeSpec.for_wave(wave)
    assert spec.J == 4
    names = spec.design_names()
    assert len(names) == len(set(names))
    for core in ("GACC(TM)", "GACC(RA)", "EV Owner", "Age<50", "Income/10000", "Democrat"):
        assert core in names


# summaries and cache --------------------------------------------------------

def test_summary_percentages(tmp_path):
    data = build_design(load_delimited(write_rows(tmp_path / "h.csv", varied_rows(60, 2)), SPEC), SPEC)
    summ = summarize_categories(data, SPEC.dependent_labels)
    t = summ.table
    for var, grp in t[t["level"] != "mean/std"].groupby("variable"):
        assert grp["percent"].sum() == pytest.approx(100.0, abs=0.01), var
    purchase = t[t["variable"] == "Purchase"]
    assert purchase["count"].sum() == data.n
    summ.write(tmp_path / "out")
    assert (tmp_path / "out" / "summary_table.csv").exists()


def test_dataset_cache_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    X = np.column_stack([np.ones(10), rng.standard_normal(10)])
    data = OrdinalDataset(np.arange(10) % 3 + 1, X, ("Intercept", "x"))
    write_dataset(data, tmp_path / "d.csv")
    back = read_dataset(tmp_path / "d.csv")
    assert back.fingerprint() == data.fingerprint()
