"""
File formats: dataset CSV logs, `key = value` manifests and result records,
results/curve CSVs, joint-angle logs and DH tables.

Floats are written with 17 significant digits so every value survives a
write/read cycle bit for bit, and a second write reproduces the first byte
for byte.
"""
from __future__ import annotations

import csv
import logging
import math
from collections import OrderedDict
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DatasetFormatError
from .kinematics import DHChain, DHJoint
from .recovery import RecoverySample
from .simulator import Dataset, IndentationRecord

LOGGER = logging.getLogger(__name__)

PathLike = Union[str, Path]

DATASET_HEADER: Tuple[str, ...] = ("t_s", "z_ee_m", "f_z_n")
RECOVERY_CURVE_HEADER: Tuple[str, ...] = ("t_s", "e_pa", "e_lo_pa", "e_hi_pa")
FIT_CURVE_HEADER: Tuple[str, ...] = ("t_s", "z_ee_m", "d_m", "f_measured_n", "f_model_n")
FORCE_ERROR_HEADER: Tuple[str, ...] = ("d_m", "mean_error_n", "count")


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def _parse_float(cell: str, *, path: PathLike, row: int, column: str, finite: bool = True) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DatasetFormatError(
            f"{path}: row {row}, column {column!r}: expected a number, got {cell!r}",
            path=str(path),
            row=row,
            column=column,
        ) from None
    if finite and not math.isfinite(value):
        raise DatasetFormatError(
            f"{path}: row {row}, column {column!r}: expected a finite number, got {cell!r}",
            path=str(path),
            row=row,
            column=column,
        )
    return value


def _check_timestamp(path: PathLike, row: int, t: float, previous_t: float) -> float:
    if t < previous_t:
        raise DatasetFormatError(
            f"{path}: row {row}: timestamp {t!r} s decreases from {previous_t!r} s",
            path=str(path),
            row=row,
            column="t_s",
        )
    return t


def _check_header(path: PathLike, actual: Optional[Sequence[str]], expected: Sequence[str]) -> None:
    actual = [c.strip() for c in actual] if actual is not None else []
    if actual != list(expected):
        raise DatasetFormatError(
            f"{path}: malformed header: expected {','.join(expected)!r}, got {','.join(actual)!r}",
            path=str(path),
            expected=expected,
            actual=actual,
        )


def write_dataset(records: Union[Dataset, Iterable[IndentationRecord]], path: PathLike) -> Path:
    """Write records as `t_s,z_ee_m,f_z_n` CSV; an empty input gives a header-only file."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DATASET_HEADER)
        for record in records:
            writer.writerow([format_float(v) for v in record])
    return path


def read_dataset(path: PathLike) -> Dataset:
    """Read a dataset CSV, preserving file order and row count."""
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        _check_header(path, next(reader, None), DATASET_HEADER)
        records: List[IndentationRecord] = []
        previous_t = -math.inf
        for row_number, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if len(cells) != len(DATASET_HEADER):
                raise DatasetFormatError(
                    f"{path}: row {row_number}: expected {len(DATASET_HEADER)} cells, got {len(cells)}",
                    path=str(path),
                    row=row_number,
                )
            values = [
                _parse_float(cell, path=path, row=row_number, column=name)
                for cell, name in zip(cells, DATASET_HEADER)
            ]
            previous_t = _check_timestamp(path, row_number, values[0], previous_t)
            records.append(IndentationRecord(*values))
    LOGGER.debug("Read %d records from %s", len(records), path)
    return Dataset.from_records(records)


def write_manifest(fields: Mapping[str, object], path: PathLike, header: Optional[str] = None) -> Path:
    """Write `key = value` lines in mapping order, optionally under a `#` comment."""
    path = Path(path)
    lines: List[str] = []
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    for key, value in fields.items():
        text = str(value)
        if "=" in key or "\n" in key or "\n" in text:
            raise ValueError(f"manifest key/value cannot hold '=' in keys or newlines: {key!r}")
        lines.append(f"{key} = {text}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path: PathLike) -> Dict[str, str]:
    """Parse `key = value` lines; blank lines and `#` comments are skipped, every key is kept."""
    path = Path(path)
    fields: Dict[str, str] = OrderedDict()
    for line_number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise DatasetFormatError(
                f"{path}: line {line_number}: expected 'key = value', got {raw!r}",
                path=str(path),
                row=line_number,
            )
        fields[key.strip()] = value.strip()
    return fields


# Result records share the manifest format.
write_result = write_manifest
read_result = read_manifest


def write_results_csv(rows: Sequence[Mapping[str, object]], path: PathLike) -> Path:
    """One row per result; columns are the union of keys in first-seen order."""
    path = Path(path)
    columns: List[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n", restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: str(v) for k, v in row.items()})
    return path


def read_results_csv(path: PathLike) -> List[Dict[str, str]]:
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DatasetFormatError(f"{path}: empty results file", path=str(path))
        return [dict(row) for row in reader]


def recovery_samples_from_results(
    rows: Sequence[Mapping[str, str]],
    *,
    path: PathLike = "<results>",
    time_column: str = "rest_time_s",
    value_column: str = "e_f",
    sigma_column: str = "sigma_e",
) -> List[RecoverySample]:
    """
    One recovery sample per distinct rest time.

    Repeated estimates at the same rest time are averaged; their σ combine as
    √(Σσᵢ²)/n. σ is omitted when the column is absent.
    """
    groups: Dict[float, List[Tuple[float, Optional[float]]]] = OrderedDict()
    for row_number, row in enumerate(rows, start=1):
        for column in (time_column, value_column):
            if column not in row or row[column] in (None, ""):
                raise DatasetFormatError(
                    f"{path}: row {row_number}: missing column {column!r}",
                    path=str(path),
                    row=row_number,
                    column=column,
                )
        t = _parse_float(row[time_column], path=path, row=row_number, column=time_column)
        e = _parse_float(row[value_column], path=path, row=row_number, column=value_column)
        sigma_cell = row.get(sigma_column)
        sigma = (
            _parse_float(sigma_cell, path=path, row=row_number, column=sigma_column)
            if sigma_cell not in (None, "")
            else None
        )
        groups.setdefault(t, []).append((e, sigma))

    samples: List[RecoverySample] = []
    for t, entries in sorted(groups.items()):
        values = np.array([e for e, _ in entries])
        sigmas = [s for _, s in entries]
        sigma = None
        if all(s is not None for s in sigmas):
            sigma = float(math.sqrt(sum(s * s for s in sigmas)) / len(sigmas))
        samples.append(RecoverySample(t=t, e=float(values.mean()), sigma=sigma))
    return samples


def write_columns(path: PathLike, header: Sequence[str], columns: Sequence[Sequence[float]]) -> Path:
    """Write equal-length numeric columns as CSV (plot-ready curves)."""
    path = Path(path)
    arrays = [np.asarray(c) for c in columns]
    if len({a.shape[0] for a in arrays}) > 1:
        raise ValueError("curve columns must have equal length")
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*arrays):
            writer.writerow([format_float(v) for v in row])
    return path


def read_joint_log(path: PathLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Read a robot log with header `t_s,q1,...,qm,f_z_n` (angles in rad).

    Returns (t, q, f) with q of shape (samples, m).
    """
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = [c.strip() for c in (next(reader, None) or [])]
        m = len(header) - 2
        expected = ["t_s", *(f"q{i}" for i in range(1, m + 1)), "f_z_n"]
        if m < 1 or header != expected:
            raise DatasetFormatError(
                f"{path}: malformed joint-log header {','.join(header)!r}",
                path=str(path),
                expected=expected if m >= 1 else ["t_s", "q1", "f_z_n"],
                actual=header,
            )
        rows: List[List[float]] = []
        previous_t = -math.inf
        for row_number, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if len(cells) != len(header):
                raise DatasetFormatError(
                    f"{path}: row {row_number}: expected {len(header)} cells, got {len(cells)}",
                    path=str(path),
                    row=row_number,
                )
            values = [_parse_float(c, path=path, row=row_number, column=n) for c, n in zip(cells, header)]
            previous_t = _check_timestamp(path, row_number, values[0], previous_t)
            rows.append(values)
    table = np.asarray(rows, dtype=float).reshape(-1, len(header))
    return table[:, 0], table[:, 1:-1], table[:, -1]


def parse_dh_table(text: str, source: str = "<dh table>") -> DHChain:
    """Rows of `a alpha d theta0` (m, rad); `#` starts a comment."""
    joints: List[DHJoint] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cells = line.replace(",", " ").split()
        if len(cells) != 4:
            raise DatasetFormatError(
                f"{source}: line {line_number}: expected 4 DH parameters, got {len(cells)}",
                path=source,
                row=line_number,
            )
        values = [
            _parse_float(c, path=source, row=line_number, column=n, finite=False)
            for c, n in zip(cells, ("a", "alpha", "d", "theta"))
        ]
        try:
            joints.append(DHJoint(*values))
        except ValueError as exc:
            raise DatasetFormatError(f"{source}: line {line_number}: {exc}", path=source, row=line_number) from None
    if not joints:
        raise DatasetFormatError(f"{source}: DH table has no joints", path=source)
    return DHChain(tuple(joints))


def read_dh_table(path: PathLike) -> DHChain:
    path = Path(path)
    return parse_dh_table(path.read_text(encoding="utf-8"), str(path))


def bundled_chain(name: str = "ur3e") -> DHChain:
    """DH chain shipped with the package (`mdr_indent/data/<name>_dh.txt`)."""
    resource = resources.files("mdr_indent.data").joinpath(f"{name}_dh.txt")
    if not resource.is_file():
        raise FileNotFoundError(f"no bundled DH table named {name!r}")
    return parse_dh_table(resource.read_text(encoding="utf-8"), f"{name}_dh.txt")
