"""Flat-prior normal linear regression and its exact Student-t predictive.

The model is ordinary normal linear regression with improper flat priors on
the coefficients and log-variance. Integrating the parameters out in closed
form leaves the classical OLS sufficient statistics, and the predictive at a
new covariate point is Student t with

    df    = n - p
    loc   = x* . beta_hat
    scale = sqrt(s2 * (1 + x* (X'X)^-1 x*'))

Fitting goes through a pivoted QR factorization so rank deficiency is
detected rather than silently absorbed, and categorical covariates are
expanded to indicator columns against a deterministic baseline (the
lexicographically smallest level).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from .exceptions import DataError, ModelError
from .predictive import StudentT

__all__ = [
    "Dataset",
    "ModelSpec",
    "ColumnCoding",
    "FitResult",
    "load_dataset",
    "load_dataset_text",
    "build_design",
    "fit",
    "fit_model",
    "predictive_at",
]


# ---------------------------------------------------------------------------
# data ingestion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Immutable table of named columns; numeric columns are float arrays,
    categorical columns are string arrays. No missing values by construction."""

    columns: dict

    def __post_init__(self):
        if not self.columns:
            raise DataError("dataset has no columns")
        lengths = {name: len(col) for name, col in self.columns.items()}
        if len(set(lengths.values())) != 1:
            raise DataError(f"column lengths differ: {lengths}")

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def is_numeric(self, name: str) -> bool:
        return np.asarray(self.columns[name]).dtype.kind == "f"

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"no column named {name!r}") from None

    def to_csv(self, target) -> None:
        """Write the table in the same CSV dialect ``load_dataset`` reads.

        Floats are written with shortest round-trip repr, so a write/read
        cycle reproduces the numeric columns bit for bit.
        """
        own = isinstance(target, (str, Path))
        handle = open(target, "w", newline="") if own else target
        try:
            writer = csv.writer(handle)
            writer.writerow(self.names)
            cols = [self.columns[name] for name in self.names]
            for row in zip(*cols):
                writer.writerow(
                    [repr(float(v)) if isinstance(v, float) else str(v) for v in row]
                )
        finally:
            if own:
                handle.close()


def _parse_cell(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    return value


def load_dataset(source) -> Dataset:
    """Parse CSV with a header row into typed columns.

    A column is numeric when every cell parses as a finite float; otherwise
    it is categorical. Empty cells, NaN/inf cells, and ragged rows are
    rejected with the offending row and column named (rows are numbered from
    1 at the header).
    """
    own = isinstance(source, (str, Path))
    handle = open(source, "r", newline="") if own else source
    try:
        if isinstance(handle, (bytes, str)):
            raise TypeError("pass a path or a file object, not raw text")
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("missing header row") from None
        header = [h.strip() for h in header]
        if any(not h for h in header):
            raise DataError("header contains an empty column name")
        if len(set(header)) != len(header):
            raise DataError("header contains duplicate column names")
        raw = {name: [] for name in header}
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"row {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            for name, cell in zip(header, row):
                cell = cell.strip()
                if not cell:
                    raise DataError(f"missing value at row {line_no}, column {name!r}")
                raw[name].append((line_no, cell))
    finally:
        if own:
            handle.close()

    if not raw or not next(iter(raw.values())):
        raise DataError("dataset has no rows")

    columns = {}
    for name, cells in raw.items():
        values = np.empty(len(cells))
        numeric = True
        for i, (line_no, cell) in enumerate(cells):
            v = _parse_cell(cell)
            if v is None:
                numeric = False
                break
            if math.isnan(v):
                raise DataError(f"missing value at row {line_no}, column {name!r}")
            if math.isinf(v):
                raise DataError(f"non-finite value at row {line_no}, column {name!r}")
            values[i] = v
        if numeric:
            columns[name] = values
        else:
            columns[name] = np.array([cell for _, cell in cells], dtype=str)
    return Dataset(columns)


def load_dataset_text(text: str) -> Dataset:
    """Convenience wrapper for CSV already held in a string."""
    return load_dataset(io.StringIO(text))


# ---------------------------------------------------------------------------
# design construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Structural choice of the regression: response, covariates, intercept."""

    response: str
    covariates: tuple[str, ...] = ()
    intercept: bool = True

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if len(set(self.covariates)) != len(self.covariates):
            raise ModelError("covariate names must be distinct")
        if self.response in self.covariates:
            raise ModelError(f"response {self.response!r} also listed as covariate")


@dataclass(frozen=True)
class ColumnCoding:
    """Record of how covariates map to design columns.

    ``terms`` holds one tuple per design column: ("intercept",),
    ("numeric", name), or ("indicator", name, level). ``levels`` lists every
    observed level per categorical covariate, baseline first.
    """

    terms: tuple[tuple, ...]
    names: tuple[str, ...]
    levels: dict = field(default_factory=dict)
    covariates: tuple[str, ...] = ()

    @property
    def p(self) -> int:
        return len(self.terms)

    def encode(self, point: Mapping) -> np.ndarray:
        """Encode a named covariate point into a design row."""
        unknown = set(point) - set(self.covariates)
        if unknown:
            raise ModelError(f"unknown covariate(s) in point: {sorted(unknown)}")
        row = np.empty(self.p)
        for j, term in enumerate(self.terms):
            if term[0] == "intercept":
                row[j] = 1.0
                continue
            name = term[1]
            if name not in point:
                raise ModelError(f"point is missing covariate {name!r}")
            value = point[name]
            if term[0] == "numeric":
                row[j] = float(value)
            else:  # indicator
                level = str(value)
                if level not in self.levels[name]:
                    raise ModelError(
                        f"unknown level {level!r} for {name!r}; saw {self.levels[name]}"
                    )
                row[j] = 1.0 if level == term[2] else 0.0
        return row


def build_design(data: Dataset, spec: ModelSpec):
    """Build the design matrix and response vector for a model spec.

    Returns ``(X, y, coding)``. The intercept column of ones comes first when
    enabled; categorical covariates expand to one indicator per non-baseline
    level with the lexicographically smallest level as baseline; numeric
    covariates pass through in declared order.
    """
    if spec.response not in data.columns:
        raise ModelError(f"response column {spec.response!r} not in dataset")
    if not data.is_numeric(spec.response):
        raise ModelError(f"response column {spec.response!r} must be numeric")
    y = np.asarray(data.column(spec.response), dtype=float)

    terms: list[tuple] = []
    names: list[str] = []
    cols: list[np.ndarray] = []
    levels: dict = {}
    if spec.intercept:
        terms.append(("intercept",))
        names.append("(intercept)")
        cols.append(np.ones(data.n))
    for name in spec.covariates:
        if name not in data.columns:
            raise ModelError(f"covariate column {name!r} not in dataset")
        if data.is_numeric(name):
            terms.append(("numeric", name))
            names.append(name)
            cols.append(np.asarray(data.column(name), dtype=float))
        else:
            col = data.column(name)
            lvls = sorted(np.unique(col).tolist())
            levels[name] = tuple(lvls)
            for level in lvls[1:]:
                terms.append(("indicator", name, level))
                names.append(f"{name}={level}")
                cols.append((col == level).astype(float))
    if not cols:
        raise ModelError("model has no design columns (no intercept, no covariates)")
    X = np.column_stack(cols)
    coding = ColumnCoding(
        terms=tuple(terms), names=tuple(names), levels=levels, covariates=spec.covariates
    )
    return X, y, coding


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """Sufficient statistics of the flat-prior posterior (parameters integrated out)."""

    beta_hat: np.ndarray
    s2: float
    xtx_inverse: np.ndarray
    n: int
    p: int
    column_coding: ColumnCoding | None = None

    @property
    def df(self) -> int:
        return self.n - self.p

    def coefficients(self) -> dict:
        if self.column_coding is None:
            return {f"b{j}": float(b) for j, b in enumerate(self.beta_hat)}
        return {
            name: float(b) for name, b in zip(self.column_coding.names, self.beta_hat)
        }


def fit(X: np.ndarray, y: np.ndarray, coding: ColumnCoding | None = None) -> FitResult:
    """OLS by pivoted QR; equals the flat-prior posterior's sufficient statistics.

    Raises ModelError when n <= p (the posterior would be improper under the
    flat prior) or when the design is rank-deficient at the pivoted-QR
    tolerance eps * max(n, p) * max|R_ii|.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ModelError("design matrix must be two-dimensional")
    n, p = X.shape
    if y.shape != (n,):
        raise ModelError(f"response length {y.shape} does not match {n} rows")
    if n <= p:
        raise ModelError(
            f"n={n} <= p={p}: posterior improper under flat prior (need n > p)"
        )

    Q, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = np.finfo(float).eps * max(n, p) * (diag.max() if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < p:
        dropped = piv[rank:]
        if coding is not None:
            labels = [coding.names[j] for j in dropped]
        else:
            labels = [f"column {j}" for j in dropped]
        raise ModelError(f"design matrix is rank-deficient; redundant: {labels}")

    z = linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(p)
    beta[piv] = z

    resid = y - X @ beta
    sse = float(resid @ resid)
    # residuals at pure rounding level collapse to an exact zero
    if sse <= n * (np.finfo(float).eps ** 2) * max(1.0, float(y @ y)):
        sse = 0.0
    s2 = sse / (n - p)

    r_inv = linalg.solve_triangular(R, np.eye(p))
    a = r_inv @ r_inv.T
    xtx_inv = np.empty((p, p))
    xtx_inv[np.ix_(piv, piv)] = a
    xtx_inv = 0.5 * (xtx_inv + xtx_inv.T)

    beta.setflags(write=False)
    xtx_inv.setflags(write=False)
    return FitResult(
        beta_hat=beta, s2=s2, xtx_inverse=xtx_inv, n=n, p=p, column_coding=coding
    )


def fit_model(data: Dataset, spec: ModelSpec) -> FitResult:
    """Build the design for ``spec`` and fit it."""
    X, y, coding = build_design(data, spec)
    return fit(X, y, coding)


def predictive_at(fit_result: FitResult, x_star) -> StudentT:
    """Exact posterior predictive at a covariate point.

    ``x_star`` is either a mapping of covariate names to values (encoded with
    the fit's column coding) or an already-encoded design row of length p.
    """
    if isinstance(x_star, Mapping):
        if fit_result.column_coding is None:
            raise ModelError("fit carries no column coding; pass an encoded row")
        row = fit_result.column_coding.encode(x_star)
    else:
        row = np.asarray(x_star, dtype=float)
        if row.shape != (fit_result.p,):
            raise ModelError(
                f"dimension mismatch: point has shape {row.shape}, fit has p={fit_result.p}"
            )
    if fit_result.s2 == 0.0:
        raise ModelError("degenerate predictive: s2 = 0 (residuals vanish)")
    loc = float(row @ fit_result.beta_hat)
    leverage = float(row @ fit_result.xtx_inverse @ row)
    leverage = max(leverage, 0.0)
    scale = math.sqrt(fit_result.s2 * (1.0 + leverage))
    return StudentT(df=float(fit_result.df), loc=loc, scale=scale)
