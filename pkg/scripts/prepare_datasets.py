"""Build the analysis CSVs in data/ from the vendored raw files in data/raw/.

Compas: ProPublica two-year recidivism file, filtered the way the original
ProPublica analysis does, then restricted to African-American and Caucasian
defendants. Adult: UCI census income training file with a header added;
'?' tokens are kept so the library's missing-value policy drops those rows.

    python scripts/prepare_datasets.py
"""
import csv
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
RAW = ROOT / "data" / "raw"

COMPAS_COLUMNS = [
    "sex", "age", "race", "juv_fel_count", "juv_misd_count",
    "juv_other_count", "priors_count", "c_charge_degree", "two_year_recid",
]

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]


def prepare_compas(src=RAW / "compas-scores-two-years.csv",
                   dst=ROOT / "data" / "compas.csv"):
    with open(src, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        # the raw file repeats a few column names; first occurrence wins
        pos = {}
        for i, name in enumerate(header):
            pos.setdefault(name, i)
        kept = []
        for row in reader:
            days = row[pos["days_b_screening_arrest"]]
            if days == "" or not -30 <= int(days) <= 30:
                continue
            if row[pos["is_recid"]] == "-1":
                continue
            if row[pos["c_charge_degree"]] == "O":
                continue
            if row[pos["score_text"]] == "N/A":
                continue
            if row[pos["race"]] not in ("African-American", "Caucasian"):
                continue
            kept.append([row[pos[c]] for c in COMPAS_COLUMNS])
    with open(dst, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPAS_COLUMNS)
        writer.writerows(kept)
    return len(kept)


def prepare_adult(src=RAW / "adult.data", dst=ROOT / "data" / "adult.csv"):
    rows = []
    with open(src, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh, skipinitialspace=True):
            if not row:
                continue
            rows.append([v.strip() for v in row])
    with open(dst, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ADULT_COLUMNS)
        writer.writerows(rows)
    return len(rows)


if __name__ == "__main__":
    print("compas rows:", prepare_compas())
    print("adult rows:", prepare_adult())
