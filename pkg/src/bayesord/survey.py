"""Survey microdata: loading, recoding, design matrices and summaries.

The engine is survey-agnostic. Each wave ships a JSON RecodeSpec
(``waves/2021.json`` etc.) that maps raw columns and response labels
onto the model variables; only those files know Pew column names.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from .core import OrdinalDataset
from .errors import RecodeError, SchemaError, ValidationError

INCOME_MIDPOINTS = {
    "<30k": 2.0,
    "30k-40k": 3.5,
    "40k-50k": 4.5,
    "50k-60k": 5.5,
    "60k-70k": 6.5,
    "70k-80k": 7.5,
    "80k-90k": 8.5,
    "90k-100k": 9.5,
    ">100k": 11.0,
}

_DASHES = str.maketrans({"–": "-", "—": "-", "−": "-"})


def _norm(label) -> str:
    return str(label).strip().translate(_DASHES)


def recode_income(category_code) -> float:
    """Income bracket label to $10,000 units (midpoints; 2.0 and 11.0 at the ends)."""
    key = _norm(category_code).replace(" ", "").replace("$", "")
    aliases = {"0-30k": "<30k", "under30k": "<30k", "100k+": ">100k", "100k-more": ">100k"}
    key = aliases.get(key.lower(), key)
    try:
        return INCOME_MIDPOINTS[key]
    except KeyError:
        raise RecodeError(f"unknown income bracket {category_code!r}") from None


@dataclass
class Indicator:
    """0/1 variable: raw labels in ``one`` map to 1, labels in ``zero`` to 0."""

    name: str
    column: str
    one: list
    zero: list


@dataclass
class Family:
    """Categorical variable entered as dummies for every non-reference level."""

    name: str
    column: str
    levels: dict           # dummy name -> list of raw labels
    reference: str         # label for the reference level
    reference_labels: list

    def all_labels(self):
        out = {}
        for dummy, labels in self.levels.items():
            for lab in labels:
                out[_norm(lab)] = dummy
        for lab in self.reference_labels:
            out[_norm(lab)] = None
        return out


@dataclass
class RecodeSpec:
    wave: str
    dependent_column: str
    dependent_order: list          # raw labels, lowest category first
    dependent_labels: list         # display labels in the same order
    drop_responses: list
    income_column: str
    age_column: str
    age_brackets: dict             # raw label -> lower age bound
    age_threshold: float = 50.0
    indicators: list = field(default_factory=list)
    families: list = field(default_factory=list)
    missing_codes: list = field(default_factory=list)
    covariate_order: list = field(default_factory=list)
    delimiter: str = ","

    def __post_init__(self):
        if len(set(map(_norm, self.dependent_order))) != len(self.dependent_order):
            raise SchemaError("dependent categories must be distinct")
        if len(self.dependent_order) < 2:
            raise SchemaError("dependent variable needs at least two ordered categories")
        for fam in self.families:
            if not fam.reference or not fam.reference_labels:
                raise SchemaError(f"family {fam.name!r} needs exactly one reference level")
            if fam.reference in fam.levels:
                raise SchemaError(f"family {fam.name!r}: reference {fam.reference!r} is also a dummy")
            labs = [_norm(x) for v in fam.levels.values() for x in v] + \
                [_norm(x) for x in fam.reference_labels]
            if len(labs) != len(set(labs)):
                raise SchemaError(f"family {fam.name!r} maps a label to two levels")

    @property
    def J(self) -> int:
        return len(self.dependent_order)

    @property
    def required_columns(self) -> list:
        cols = [self.dependent_column, self.income_column, self.age_column]
        cols += [i.column for i in self.indicators] + [f.column for f in self.families]
        return list(dict.fromkeys(cols))

    def design_names(self) -> list:
        """Non-intercept covariate names, in output order."""
        names = [i.name for i in self.indicators] + ["Age<50", "Income/10000"]
        for fam in self.families:
            names += list(fam.levels)
        if self.covariate_order:
            missing = set(names) ^ set(self.covariate_order)
            if missing:
                raise SchemaError(f"covariate_order does not match the variables: {sorted(missing)}")
            return list(self.covariate_order)
        return names

    @classmethod
    def from_dict(cls, d: dict) -> "RecodeSpec":
        d = dict(d)
        d["indicators"] = [Indicator(**i) for i in d.get("indicators", [])]
        d["families"] = [Family(**f) for f in d.get("families", [])]
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RecodeSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def for_wave(cls, wave) -> "RecodeSpec":
        """Shipped mapping for wave '2021', '2022' or '2023'."""
        ref = resources.files("bayesord") / "waves" / f"{wave}.json"
        if not ref.is_file():
            raise SchemaError(f"no shipped recode spec for wave {wave!r}")
        return cls.from_dict(json.loads(ref.read_text(encoding="utf-8")))


@dataclass
class RawRecords:
    frame: pd.DataFrame                       # all columns as stripped strings
    rejects: list = field(default_factory=list)   # (row number, reason)
    parsed: int = 0


def load_delimited(path, schema: RecodeSpec, delimiter: str | None = None) -> RawRecords:
    """Read a header-led delimited file as strings, checking required columns.

    Rows whose field count disagrees with the header, or whose income
    label is not a known bracket or missing code, go to the reject list
    with their 1-based data row number.
    """
    delimiter = delimiter or schema.delimiter
    with open(path, encoding="utf-8-sig", newline="") as fh:
        text = fh.read().replace("\r\n", "\n").replace("\r", "\n")
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError(f"{path}: empty file, header row required") from None
    for col in schema.required_columns:
        if col not in header:
            raise SchemaError(f"required column {col!r} missing from {path}")

    missing = {_norm(m) for m in schema.missing_codes}
    inc = header.index(schema.income_column)
    rows, rejects, parsed = [], [], 0
    for rownum, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        parsed += 1
        if len(row) != len(header):
            rejects.append((rownum, f"expected {len(header)} fields, found {len(row)}"))
            continue
        row = [c.strip() for c in row]
        label = _norm(row[inc])
        if label not in missing:
            try:
                recode_income(label)
            except RecodeError as exc:
                rejects.append((rownum, str(exc)))
                continue
        rows.append(row)
    frame = pd.DataFrame(rows, columns=header, dtype=object)
    return RawRecords(frame, rejects, parsed)


@dataclass
class DesignReport:
    parsed: int
    kept: int
    rejected: int
    dropped_missing: int
    dropped_no_purchase: int

    def balanced(self) -> bool:
        return self.parsed == self.kept + self.rejected + self.dropped_missing + self.dropped_no_purchase


def recode_records(records: RawRecords | pd.DataFrame, spec: RecodeSpec) -> pd.DataFrame:
    """Map raw labels to model variables; unmapped labels become NaN.

    Output columns: the covariate names, ``y`` (1..J) and ``no_purchase``.
    Already-recoded frames are returned unchanged.
    """
    frame = records.frame if isinstance(records, RawRecords) else records
    if frame.attrs.get("recoded"):
        return frame
    out = pd.DataFrame(index=frame.index)
    dep = frame[spec.dependent_column].map(_norm)
    order = {_norm(lab): j + 1 for j, lab in enumerate(spec.dependent_order)}
    drops = {_norm(x) for x in spec.drop_responses}
    out["y"] = dep.map(order).astype(float)
    out["no_purchase"] = dep.isin(drops)

    for ind in spec.indicators:
        table = {_norm(x): 1.0 for x in ind.one} | {_norm(x): 0.0 for x in ind.zero}
        out[ind.name] = frame[ind.column].map(_norm).map(table).astype(float)

    ages = {_norm(k): float(v) for k, v in spec.age_brackets.items()}
    lower = frame[spec.age_column].map(_norm).map(ages).astype(float)
    out["Age<50"] = np.where(lower.isna(), np.nan, (lower < spec.age_threshold).astype(float))

    def income(label):
        try:
            return recode_income(label)
        except RecodeError:
            return np.nan
    out["Income/10000"] = frame[spec.income_column].map(income).astype(float)

    for fam in spec.families:
        labels = frame[fam.column].map(_norm)
        lookup = fam.all_labels()
        known = labels.isin(lookup.keys())
        for dummy in fam.levels:
            hit = labels.map(lambda v, d=dummy: lookup.get(v, "") == d).astype(float)
            out[dummy] = np.where(known, hit, np.nan)
    out.attrs["recoded"] = True
    return out


def build_design(records, spec: RecodeSpec, report: bool = False):
    """OrdinalDataset with an intercept and the recode mapping's covariates.

    Respondents who do not expect to buy a vehicle are dropped first,
    then rows with any missing field (listwise deletion). With
    ``report=True`` returns ``(dataset, DesignReport)``.
    """
    rejected = len(records.rejects) if isinstance(records, RawRecords) else 0
    parsed = records.parsed if isinstance(records, RawRecords) else len(records)
    rec = recode_records(records, spec)
    names = spec.design_names()
    no_purchase = rec["no_purchase"].to_numpy(bool)
    complete = rec[["y"] + names].notna().all(axis=1).to_numpy()
    keep = complete & ~no_purchase
    rep = DesignReport(parsed, int(keep.sum()), rejected,
                       int((~no_purchase & ~complete).sum()), int(no_purchase.sum()))
    if rep.kept == 0:
        raise ValidationError("no complete observations remain after recoding")
    kept = rec.loc[keep]
    X = np.column_stack([np.ones(rep.kept), kept[names].to_numpy(float)])
    families = {fam.name: tuple(fam.levels) for fam in spec.families}
    data = OrdinalDataset(kept["y"].to_numpy(int), X, ("Intercept", *names), J=spec.J,
                          families=families)
    return (data, rep) if report else data


@dataclass
class SurveySummary:
    """Counts/percentages per level and the stacked opinion shares.

    ``table`` has columns variable, level, count, percent (mean/std for
    income). ``stacked`` has one row per covariate level with the four
    cumulative outcome shares used in the stacked-bar display.
    """

    table: pd.DataFrame
    stacked: pd.DataFrame

    def write(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, frame in (("summary_table.csv", self.table), ("stacked_shares.csv", self.stacked)):
            tmp = directory / (name + ".tmp")
            frame.to_csv(tmp, index=False, float_format="%.2f")
            tmp.replace(directory / name)


def _level_columns(data: OrdinalDataset):
    """(variable, level, 0/1 column) triples, reference levels included."""
    in_family = {m for members in data.families.values() for m in members}
    out = []
    for fam, members in data.families.items():
        cols = data.X[:, [data.column(m) for m in members]]
        for i, m in enumerate(members):
            out.append((fam, m, cols[:, i]))
        out.append((fam, "reference", 1.0 - cols.sum(axis=1)))
    for j, name in enumerate(data.covariate_names):
        if j == 0 or name in in_family or name == "Income/10000":
            continue
        col = data.X[:, j]
        if np.all((col == 0.0) | (col == 1.0)):
            out.append((name, "1", col))
            out.append((name, "0", 1.0 - col))
    return out


def summarize_categories(data: OrdinalDataset, dependent_labels=None) -> SurveySummary:
    labels = list(dependent_labels or [str(j) for j in range(1, data.J + 1)])
    n = data.n
    rows = []
    if "Income/10000" in data.covariate_names:
        inc = data.X[:, data.column("Income/10000")]
        rows.append(("Income/10000", "mean/std", round(float(inc.mean()), 2),
                     round(float(inc.std(ddof=1)), 2)))
    for var, level, col in _level_columns(data):
        count = int(col.sum())
        rows.append((var, level, count, 100.0 * count / n))
    counts = data.category_counts()
    for j in range(data.J - 1, -1, -1):
        rows.append(("Purchase", labels[j], int(counts[j]), 100.0 * counts[j] / n))
    table = pd.DataFrame(rows, columns=["variable", "level", "count", "percent"])

    stacked = []
    for var, level, col in _level_columns(data):
        mask = col == 1.0
        if not mask.any():
            continue
        share = 100.0 * np.bincount(data.y[mask], minlength=data.J + 1)[1:] / mask.sum()
        stacked.append((var, level, int(mask.sum()), share[0], share[0] + share[1],
                        share[-2], share[-2] + share[-1]))
    stacked = pd.DataFrame(stacked, columns=["variable", "level", "n", "not_at_all",
                                             "not_likely", "somewhat", "likely"])
    return SurveySummary(table, stacked)


def write_dataset(data: OrdinalDataset, path):
    """Dataset cache: column ``y`` then the design columns, full float precision."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", *data.covariate_names])
        for yi, row in zip(data.y, data.X):
            writer.writerow([int(yi), *(repr(float(v)) for v in row)])
    tmp.replace(path)


def read_dataset(path, J: int | None = None, delimiter: str = ",") -> OrdinalDataset:
    """Inverse of :func:`write_dataset`. Needs a ``y`` column and an intercept."""
    frame = pd.read_csv(path, sep=delimiter, float_precision="round_trip")
    frame.columns = [str(c).strip() for c in frame.columns]
    if "y" not in frame.columns:
        raise SchemaError(f"required column 'y' missing from {path}")
    names = [c for c in frame.columns if c != "y"]
    return OrdinalDataset(frame["y"].to_numpy(int), frame[names].to_numpy(float), tuple(names), J=J)
