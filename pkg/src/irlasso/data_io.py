"""CSV ingestion, seeded train/test splits and result writers."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from irlasso.errors import ConfigError, DataFormatError
from irlasso.families import Dataset
from irlasso.path import PathResult

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "method", "rho", "gamma",
    "bias_mean", "bias_sem", "tp_mean", "tp_sem", "fp_mean", "fp_sem",
    "testloss_mean", "testloss_sem", "avg_variance",
)
CURVE_COLUMNS = ("label", "lambda", "l1_norm", "bias", "test_loss", "nonzeros")


@dataclass
class ColumnSchema:
    response_column: str | int
    positive_label: str | None = None
    feature_columns: list | None = None  # None means every remaining column
    has_header: bool = True
    id_columns: list = field(default_factory=list)


# UCI wdbc.data: id, diagnosis (M/B), 30 real-valued features, no header
WDBC_SCHEMA = ColumnSchema(response_column=1, positive_label="M", has_header=False,
                           id_columns=[0])


def _resolve(col, header, ncols, path):
    if isinstance(col, int) or (isinstance(col, str) and col.isdigit() and header is None):
        idx = int(col)
        if not 0 <= idx < ncols:
            raise DataFormatError(f"{path}: column index {idx} out of range (0..{ncols - 1})")
        return idx
    if header is None:
        raise DataFormatError(f"{path}: column {col!r} given by name but the file has no header")
    try:
        return header.index(col)
    except ValueError:
        raise DataFormatError(f"{path}: no column named {col!r}") from None


def load_csv(path, schema: ColumnSchema) -> Dataset:
    """Read a comma-delimited file into a :class:`Dataset`.

    Text responses are mapped to 1 when equal to ``schema.positive_label`` and
    0 otherwise; numeric responses are used as-is. Empty or non-numeric cells
    raise :class:`DataFormatError` with the 1-based line and column.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]] if schema.has_header else None
    body = rows[1:] if schema.has_header else rows
    first_line = 2 if schema.has_header else 1
    ncols = len(rows[0])

    resp = _resolve(schema.response_column, header, ncols, path)
    drop = {_resolve(c, header, ncols, path) for c in schema.id_columns}
    if schema.feature_columns is None:
        feats = [j for j in range(ncols) if j != resp and j not in drop]
    else:
        feats = [_resolve(c, header, ncols, path) for c in schema.feature_columns]
    if resp in feats:
        raise ConfigError("the response column cannot also be a feature column")
    if not feats:
        raise ConfigError(f"{path}: no feature columns selected")

    X = np.empty((len(body), len(feats)))
    y = np.empty(len(body))
    for i, row in enumerate(body):
        line = first_line + i
        if len(row) != ncols:
            raise DataFormatError(f"{path}: line {line} has {len(row)} fields, expected {ncols}")
        for jj, j in enumerate(feats):
            X[i, jj] = _parse_number(row[j], path, line, j)
        cell = row[resp].strip()
        if cell == "":
            raise DataFormatError(f"{path}: line {line}, column {resp + 1}: missing response")
        if schema.positive_label is not None:
            y[i] = 1.0 if cell == schema.positive_label else 0.0
        else:
            y[i] = _parse_number(cell, path, line, resp)
    log.info("loaded %s: %d rows, %d features", path, X.shape[0], X.shape[1])
    return Dataset(X, y)


def _parse_number(cell: str, path, line: int, col: int) -> float:
    text = cell.strip()
    if text == "":
        raise DataFormatError(f"{path}: line {line}, column {col + 1}: missing value")
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(
            f"{path}: line {line}, column {col + 1}: cannot parse {text!r} as a number"
        ) from None
    if not np.isfinite(value):
        raise DataFormatError(f"{path}: line {line}, column {col + 1}: non-finite value")
    return value


def shuffle_split(dataset: Dataset, n_train: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded permutation of the rows; the first ``n_train`` go to train."""
    n = dataset.n
    if not 1 <= n_train < n:
        raise ConfigError(f"n_train must be in [1, {n - 1}], got {n_train}")
    perm = np.random.default_rng(seed).permutation(n)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


@dataclass
class ResultsTable:
    cells: list
    metadata: dict = field(default_factory=dict)


def _g6(x) -> str:
    return format(float(x), ".6g")


def _cell_record(cell) -> dict:
    return {
        "method": cell.method,
        "rho": _g6(cell.rho),
        "gamma": _g6(cell.gamma),
        "bias_mean": _g6(cell.mean["bias"]),
        "bias_sem": _g6(cell.sem["bias"]),
        "tp_mean": _g6(cell.mean["tp"]),
        "tp_sem": _g6(cell.sem["tp"]),
        "fp_mean": _g6(cell.mean["fp"]),
        "fp_sem": _g6(cell.sem["fp"]),
        "testloss_mean": _g6(cell.mean["test_loss"]),
        "testloss_sem": _g6(cell.sem["test_loss"]),
        "avg_variance": _g6(cell.mean["avg_signal_variance"]),
    }


def write_results(table: ResultsTable, path, fmt: str = "csv") -> None:
    path = Path(path)
    records = [_cell_record(c) for c in table.cells]
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(records)
    elif fmt == "json":
        rows = []
        for rec, cell in zip(records, table.cells):
            row = {k: (v if k == "method" else float(v)) for k, v in rec.items()}
            row["replicates"] = cell.replicates
            row["failures"] = cell.failures
            rows.append(row)
        payload = {"metadata": table.metadata, "rows": rows}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        raise ConfigError(f"unknown results format {fmt!r}; expected csv or json")


def write_path_curve(curves, out_path, beta=None) -> None:
    """One row per (label, grid point), largest lambda first.

    ``curves`` holds ``(label, PathResult, per-lambda test loss or None)``.
    ``bias`` is filled only when the true coefficient vector ``beta`` is given.
    """
    with Path(out_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for label, path, losses in curves:
            path: PathResult
            for j in range(len(path) - 1, -1, -1):
                b = path.coefficients[j]
                bias = "" if beta is None else repr(float(np.linalg.norm(np.asarray(beta) - b)))
                loss = "" if losses is None else repr(float(losses[j]))
                writer.writerow([
                    label,
                    repr(float(path.lambdas[j])),
                    repr(float(np.sum(np.abs(b)))),
                    bias,
                    loss,
                    int(np.count_nonzero(b)),
                ])
