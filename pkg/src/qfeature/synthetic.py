"""Small synthetic tables shaped like the fraud and loan source files.

They exist so the whole pipeline can run without the real datasets.  The
class signal is planted in a handful of columns; everything else is noise.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

BUNDLED_DIR = Path(__file__).parent / "data"
CCF_SAMPLE = BUNDLED_DIR / "ccf_synthetic.csv"
LP_SAMPLE = BUNDLED_DIR / "lp_synthetic.csv"


def make_ccf_like(n_normal: int = 360, n_fraud: int = 40, seed: int = 0) -> tuple[list[str], list[list]]:
    rng = np.random.default_rng(seed)
    header = ["Time", *[f"V{i}" for i in range(1, 29)], "Amount", "Class"]
    n = n_normal + n_fraud
    labels = np.r_[np.zeros(n_normal, dtype=int), np.ones(n_fraud, dtype=int)]
    rng.shuffle(labels)
    v = rng.normal(size=(n, 28))
    shift = np.zeros(28)
    shift[[2, 3, 9, 11, 13, 16]] = [-2.5, 2.0, -1.5, -2.0, -3.0, -2.0]
    v += labels[:, None] * shift
    time = np.sort(rng.uniform(0, 172_800, size=n))
    amount = np.round(rng.lognormal(3.5, 1.2, size=n), 2)
    rows = [
        [f"{time[i]:.1f}", *[f"{val:.6f}" for val in v[i]], f"{amount[i]:.2f}", int(labels[i])]
        for i in range(n)
    ]
    return header, rows


def make_lp_like(n: int = 420, seed: int = 0, missing_rate: float = 0.01) -> tuple[list[str], list[list]]:
    rng = np.random.default_rng(seed)
    header = ["Loan_ID", "Gender", "Married", "Dependents", "Education", "Self_Employed",
              "ApplicantIncome", "CoapplicantIncome", "LoanAmount", "Loan_Amount_Term",
              "Credit_History", "Property_Area", "Loan_Status"]
    rows = []
    for i in range(n):
        credit = int(rng.random() < 0.85)
        income = float(np.round(rng.lognormal(8.3, 0.5)))
        co_income = float(np.round(rng.lognormal(7.0, 1.0))) if rng.random() < 0.55 else 0.0
        amount = float(np.round(rng.lognormal(4.9, 0.4)))
        area = rng.choice(["Urban", "Semiurban", "Rural"])
        married = rng.choice(["Yes", "No"], p=[0.65, 0.35])
        logit = -1.6 + 3.2 * credit + 0.4 * (area == "Semiurban") + 0.3 * (married == "Yes")
        approved = rng.random() < 1.0 / (1.0 + np.exp(-logit))
        row = [
            f"LP{i + 1:06d}",
            rng.choice(["Male", "Female"], p=[0.8, 0.2]),
            married,
            rng.choice(["0", "1", "2", "3+"], p=[0.57, 0.17, 0.17, 0.09]),
            rng.choice(["Graduate", "Not Graduate"], p=[0.78, 0.22]),
            rng.choice(["No", "Yes"], p=[0.86, 0.14]),
            f"{income:.0f}",
            f"{co_income:.0f}",
            f"{amount:.0f}",
            rng.choice(["360", "180", "480", "300"], p=[0.85, 0.07, 0.04, 0.04]),
            str(credit),
            area,
            "Y" if approved else "N",
        ]
        for j in range(1, 11):
            if rng.random() < missing_rate:
                row[j] = ""
        rows.append(row)
    return header, rows


def write_table(header, rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_bundled(directory=BUNDLED_DIR) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ccf, lp = directory / CCF_SAMPLE.name, directory / LP_SAMPLE.name
    write_table(*make_ccf_like(), ccf)
    write_table(*make_lp_like(), lp)
    return ccf, lp


if __name__ == "__main__":
    for p in write_bundled():
        print(p)
