"""Dataset ingestion and the preprocessing chain.

The chain is: drop profile columns and incomplete rows, standardise, balance
the classes with SMOTE, draw a stratified subsample, project onto the leading
principal components.  Angle scaling happens later, inside the model, because
its bounds are fitted on the training rows.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .numerics import eigh_symmetric
from .seeding import derive_seed

MISSING_TOKENS = {"", "na", "nan", "null", "none"}


class DataError(ValueError):
    """Malformed input or a preprocessing step that cannot proceed."""


@dataclass
class RawTable:
    columns: list[str]
    x: np.ndarray           # rows x features, NaN marks a missing cell
    y: np.ndarray           # float labels, NaN when missing
    label: str
    codes: dict[str, dict[str, int]] = field(default_factory=dict)

    def drop_columns(self, names: Sequence[str]) -> "RawTable":
        keep = [i for i, c in enumerate(self.columns) if c not in set(names)]
        return RawTable([self.columns[i] for i in keep], self.x[:, keep], self.y,
                        self.label, dict(self.codes))


@dataclass
class FeatureMatrix:
    x: np.ndarray
    y: np.ndarray
    names: list[str]
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y).astype(int)
        if self.x.ndim != 2 or len(self.x) != len(self.y):
            raise DataError("features and labels are misaligned")
        if np.isnan(self.x).any():
            raise DataError("feature matrix contains NaN")

    @property
    def n_rows(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class Profile:
    label: str
    drop: tuple[str, ...] = ()
    skip: tuple[str, ...] = ()
    categorical: tuple[str, ...] = ()
    label_map: dict | None = None
    balance: bool = True


PROFILES = {
    "ccf": Profile(label="Class", drop=("Time", "Amount")),
    "lp": Profile(
        label="Loan_Status",
        skip=("Loan_ID",),
        categorical=("Gender", "Married", "Dependents", "Education",
                     "Self_Employed", "Property_Area"),
        label_map={"Y": 1, "N": 0},
    ),
}


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_count: int | None = None  # per class; default = majority count
    seed: int = 0


@dataclass(frozen=True)
class PcaModel:
    means: np.ndarray
    components: np.ndarray       # d_in x d_out, orthonormal columns
    explained_variance_ratio: np.ndarray

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.means) @ self.components


@dataclass(frozen=True)
class AngleScaler:
    """Per-feature min-max map onto [0, pi]; constant features map to pi/2."""

    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        span = self.maxs - self.mins
        flat = span == 0
        safe = np.where(flat, 1.0, span)
        out = np.clip((x - self.mins) / safe, 0.0, 1.0) * np.pi
        return np.where(flat, np.pi / 2, out)


def load_csv(
    path,
    label: str,
    categorical: Sequence[str] = (),
    skip: Sequence[str] = (),
    label_map: dict | None = None,
) -> RawTable:
    """Parse a headed, comma-separated numeric table.

    Empty / NA cells become NaN.  Columns in ``categorical`` are integer-coded
    by first appearance; columns in ``skip`` are ignored entirely.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        if label not in header:
            raise DataError(f"{path}: label column {label!r} not found in header")
        skip_set = set(skip)
        cat_set = set(categorical)
        label_idx = header.index(label)
        feat_idx = [i for i, h in enumerate(header) if i != label_idx and h not in skip_set]
        codes: dict[str, dict[str, int]] = {header[i]: {} for i in feat_idx if header[i] in cat_set}
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno} has {len(row)} fields, header has {len(header)}"
                )
            values = []
            for i in feat_idx:
                cell = row[i].strip()
                name = header[i]
                if cell.lower() in MISSING_TOKENS:
                    values.append(math.nan)
                elif name in codes:
                    values.append(float(codes[name].setdefault(cell, len(codes[name]))))
                else:
                    try:
                        values.append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}: line {lineno}, column {name!r}: non-numeric value {cell!r}"
                        ) from None
            rows.append(values)
            labels.append(_parse_label(row[label_idx].strip(), label_map, path, lineno, label))
    x = np.array(rows, dtype=float).reshape(len(rows), len(feat_idx))
    return RawTable([header[i] for i in feat_idx], x, np.array(labels, dtype=float),
                    label, codes)


def _parse_label(cell: str, label_map, path, lineno, label) -> float:
    if cell.lower() in MISSING_TOKENS:
        return math.nan
    if label_map is not None:
        if cell not in label_map:
            raise DataError(f"{path}: line {lineno}, column {label!r}: unknown label {cell!r}")
        return float(label_map[cell])
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"{path}: line {lineno}, column {label!r}: non-numeric label {cell!r}") from None
    if value not in (0.0, 1.0):
        raise DataError(f"{path}: line {lineno}, column {label!r}: label {cell!r} is not 0/1")
    return value


def load_profile_csv(path, profile: str) -> RawTable:
    p = _profile(profile)
    return load_csv(path, p.label, p.categorical, p.skip, p.label_map)


def _profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise DataError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}") from None


def standardize(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Z-score columns (population std).  Constant columns are only centred."""
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (x - mean) / std, mean, std


def _minority_neighbors(points: np.ndarray, k: int) -> np.ndarray:
    sq = np.sum(points * points, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.fill_diagonal(d2, np.inf)
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def smote_balance(data: FeatureMatrix, cfg: SmoteConfig = SmoteConfig()) -> FeatureMatrix:
    """Oversample the minority class up to the majority count (or ``cfg.target_count``).

    Each synthetic row is ``x + lam * (x_nn - x)`` for a uniformly drawn
    minority row ``x``, one of its ``k`` nearest minority neighbours ``x_nn``
    and ``lam ~ U[0, 1)``.  Original rows are kept verbatim and first.
    """
    y = data.y
    counts = {c: int(np.sum(y == c)) for c in (0, 1)}
    if min(counts.values()) == 0:
        raise DataError("SMOTE needs both classes present")
    minority = 0 if counts[0] < counts[1] else 1
    target = cfg.target_count if cfg.target_count is not None else max(counts.values())
    n_new = target - counts[minority]
    if n_new <= 0:
        return FeatureMatrix(data.x.copy(), y.copy(), list(data.names), dict(data.notes))
    if cfg.k_neighbors < 1:
        raise DataError("k_neighbors must be >= 1")
    if counts[minority] < cfg.k_neighbors + 1:
        raise DataError(
            f"minority class has {counts[minority]} rows; SMOTE with k={cfg.k_neighbors} "
            f"needs at least {cfg.k_neighbors + 1}"
        )
    pts = data.x[y == minority]
    nn = _minority_neighbors(pts, cfg.k_neighbors)
    rng = np.random.default_rng(cfg.seed)
    src = rng.integers(0, len(pts), size=n_new)
    pick = rng.integers(0, cfg.k_neighbors, size=n_new)
    lam = rng.random(n_new)[:, None]
    base = pts[src]
    synthetic = base + lam * (pts[nn[src, pick]] - base)
    notes = dict(data.notes)
    notes["smote_synthetic_rows"] = int(n_new)
    return FeatureMatrix(
        np.vstack([data.x, synthetic]),
        np.concatenate([y, np.full(n_new, minority)]),
        list(data.names),
        notes,
    )


def stratified_subsample(data: FeatureMatrix, n: int, seed: int) -> FeatureMatrix:
    """Draw ``n`` rows without replacement, keeping class proportions.

    Selected rows keep their original relative order.
    """
    if data.n_rows < n:
        raise DataError(f"need {n} rows after balancing but only {data.n_rows} are available")
    rng = np.random.default_rng(seed)
    idx_by_class = {c: np.flatnonzero(data.y == c) for c in (0, 1)}
    want1 = int(round(n * len(idx_by_class[1]) / data.n_rows))
    take = {0: n - want1, 1: want1}
    chosen = np.concatenate([
        rng.choice(idx_by_class[c], size=take[c], replace=False) for c in (0, 1)
    ])
    chosen.sort()
    return FeatureMatrix(data.x[chosen], data.y[chosen], list(data.names), dict(data.notes))


def pca_fit_transform(data, d_out: int) -> tuple[PcaModel, np.ndarray]:
    x = np.asarray(data.x if isinstance(data, FeatureMatrix) else data, dtype=float)
    n, d_in = x.shape
    if n < 2:
        raise DataError("PCA needs at least two rows")
    if not 1 <= d_out <= d_in:
        raise DataError(f"cannot project {d_in} features onto {d_out} components")
    means = x.mean(axis=0)
    xc = x - means
    cov = xc.T @ xc / (n - 1)
    cov = 0.5 * (cov + cov.T)
    if not np.any(np.diag(cov) > 0):
        raise DataError("PCA input has zero variance")
    evals, evecs = eigh_symmetric(cov)
    evals = np.clip(evals, 0.0, None)
    ratios = evals / evals.sum()
    model = PcaModel(means, evecs[:, :d_out].copy(), ratios[:d_out].copy())
    return model, xc @ model.components


def angle_scale(x, fit_rows=None) -> tuple[AngleScaler, np.ndarray]:
    """Fit a min-max angle scaler on ``fit_rows`` (default ``x``) and apply it to ``x``."""
    x = np.asarray(x, dtype=float)
    fit = x if fit_rows is None else np.asarray(fit_rows, dtype=float)
    if fit.size == 0 or len(fit) == 0:
        raise DataError("angle scaler needs at least one row")
    scaler = AngleScaler(fit.min(axis=0), fit.max(axis=0))
    return scaler, scaler.transform(x)


def preprocess(
    raw: RawTable,
    profile: str,
    seed: int,
    n_samples: int = 500,
    n_components: int = 7,
    k_neighbors: int = 5,
) -> FeatureMatrix:
    p = _profile(profile)
    missing = [c for c in (*p.drop, *p.categorical) if c not in raw.columns]
    if missing:
        raise DataError(f"profile {profile!r} expects columns {missing} that are absent")
    table = raw.drop_columns(p.drop)
    complete = ~np.isnan(table.x).any(axis=1) & ~np.isnan(table.y)
    dropped = int(np.sum(~complete))
    x = table.x[complete]
    y = table.y[complete].astype(int)
    notes = {
        "profile": profile,
        "seed": int(seed),
        "source_rows": int(len(raw.y)),
        "source_features": len(raw.columns),
        "dropped_columns": list(p.drop) + list(p.skip),
        "rows_dropped_missing": dropped,
        "class_counts_source": {str(c): int(np.sum(y == c)) for c in (0, 1)},
    }
    z, _, _ = standardize(x)
    fm = FeatureMatrix(z, y, list(table.columns), notes)
    if p.balance:
        fm = smote_balance(fm, SmoteConfig(k_neighbors, seed=derive_seed(seed, "smote")))
    fm.notes["class_counts_balanced"] = {str(c): int(np.sum(fm.y == c)) for c in (0, 1)}
    fm = stratified_subsample(fm, n_samples, derive_seed(seed, "subsample"))
    pca, proj = pca_fit_transform(fm, n_components)
    fm.notes["pca_explained_variance_ratio"] = [float(r) for r in pca.explained_variance_ratio]
    fm.notes["transforms"] = ["drop", "standardize", "smote", f"subsample({n_samples})",
                              f"pca({n_components})"]
    return FeatureMatrix(proj, fm.y, [f"f{i + 1}" for i in range(n_components)], fm.notes)


def write_feature_csv(fm: FeatureMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*fm.names, "label"])
        for row, label in zip(fm.x, fm.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def read_feature_csv(path) -> FeatureMatrix:
    raw = load_csv(path, "label")
    if np.isnan(raw.x).any() or np.isnan(raw.y).any():
        raise DataError(f"{path}: processed feature file has missing cells")
    return FeatureMatrix(raw.x, raw.y.astype(int), raw.columns)


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
