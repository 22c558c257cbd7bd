"""Strict CSV readers for the harness output files.

Every parse failure names the offending 1-based line so a bad file can be
fixed without guesswork.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List


@dataclass(frozen=True)
class RatioRow:
    point_ratio: float
    variance_ratio: float
    pair: str
    ratio: float


@dataclass(frozen=True)
class CurveRow:
    lambda_factor: float
    method: str
    mean_affinity: float
    max_affinity: float


@dataclass(frozen=True)
class CvRow:
    point_ratio: float
    variance_ratio: float
    method: str
    best_lambda_factor: float
    mean_affinity: float


def _rows(path, expected_header: List[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file; header row is mandatory") from None
        if header != expected_header:
            raise ValueError(
                f"{path}: line 1: expected header {','.join(expected_header)!r}, "
                f"got {','.join(header)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise ValueError(
                    f"{path}: line {line_no}: expected {len(expected_header)} "
                    f"columns, got {len(row)}"
                )
            yield line_no, row


def _parse_float(path, line_no, column, text) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(
            f"{path}: line {line_no}: non-numeric {column} value {text!r}"
        ) from None


def read_ratios(path) -> List[RatioRow]:
    header = ["point_ratio", "variance_ratio", "method_pair", "mean_ratio"]
    out = []
    for line_no, row in _rows(path, header):
        out.append(RatioRow(
            _parse_float(path, line_no, "point_ratio", row[0]),
            _parse_float(path, line_no, "variance_ratio", row[1]),
            row[2],
            _parse_float(path, line_no, "mean_ratio", row[3]),
        ))
    if not out:
        raise ValueError(f"{path}: no data rows")
    return out


def read_curve(path) -> List[CurveRow]:
    header = ["lambda_factor", "method", "mean_affinity", "max_affinity"]
    out = []
    for line_no, row in _rows(path, header):
        out.append(CurveRow(
            _parse_float(path, line_no, "lambda_factor", row[0]),
            row[1],
            _parse_float(path, line_no, "mean_affinity", row[2]),
            _parse_float(path, line_no, "max_affinity", row[3]),
        ))
    if not out:
        raise ValueError(f"{path}: no data rows")
    return out


def read_cv_matrix(path) -> List[CvRow]:
    header = ["point_ratio", "variance_ratio", "method", "best_lambda_factor", "mean_affinity"]
    out = []
    for line_no, row in _rows(path, header):
        out.append(CvRow(
            _parse_float(path, line_no, "point_ratio", row[0]),
            _parse_float(path, line_no, "variance_ratio", row[1]),
            row[2],
            _parse_float(path, line_no, "best_lambda_factor", row[3]),
            _parse_float(path, line_no, "mean_affinity", row[4]),
        ))
    if not out:
        raise ValueError(f"{path}: no data rows")
    return out
