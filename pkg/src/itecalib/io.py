"""Dataset ingestion and report serialization.

The dataset format is delimited text with a header. Required columns: arm,
outcome, delta. Optional: pi, order_key, id. Header matching is
case-insensitive; unknown extra columns are tolerated (and one of them can be
promoted to the ordering key, see parse_dataset). Parsing is strict: every
bad cell is reported with its 1-based data row number and column name.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

from .domain import SubjectRecord, TestReport, ValidationError, _validate_record

REQUIRED_COLUMNS = ("arm", "outcome", "delta")
OPTIONAL_COLUMNS = ("pi", "order_key", "id")

REPORT_SCHEMA = "itecalib-assessment"
REPORT_SCHEMA_VERSION = 1


class MissingColumn(ValidationError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"required column {column!r} not found in header")


class BadValue(ValidationError):
    """A cell that failed to parse or violated a field constraint."""

    def __init__(self, row: int, column: str, value: object, reason: str = ""):
        self.row = row
        self.column = column
        self.value = value
        detail = f": {reason}" if reason else ""
        super().__init__(f"row {row}, column {column!r}: bad value {value!r}{detail}")


class EmptyFile(ValidationError):
    pass


def _open_text(source: Union[str, Path, TextIO]):
    if isinstance(source, (str, Path)):
        return open(source, "r", newline="", encoding="utf-8"), True
    return source, False


def _parse_int01(text: str, row: int, column: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise BadValue(row, column, text, "expected 0 or 1") from None
    if value not in (0, 1):
        raise BadValue(row, column, value, "expected 0 or 1")
    return value


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise BadValue(row, column, text, "expected a decimal number") from None


def parse_dataset(
    source: Union[str, Path, TextIO], order_column: Optional[str] = None
) -> tuple[SubjectRecord, ...]:
    """Read subject records from delimited text.

    order_column names the column supplying each record's ordering key; it
    defaults to "order_key" when that column exists. Any column may serve,
    so calibration can be assessed across an arbitrary covariate.
    """
    handle, owned = _open_text(source)
    try:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile("dataset has no header row") from None
        names = [h.strip().lower() for h in header]
        if len(set(names)) != len(names):
            dup = next(h for h in names if names.count(h) > 1)
            raise ValidationError(f"duplicate column {dup!r} in header")
        index = {name: i for i, name in enumerate(names)}
        for column in REQUIRED_COLUMNS:
            if column not in index:
                raise MissingColumn(column)
        if order_column is None:
            key_idx = index.get("order_key")
        elif order_column.strip().lower() == "delta":
            key_idx = None
        else:
            key_name = order_column.strip().lower()
            if key_name not in index:
                raise MissingColumn(key_name)
            key_idx = index[key_name]
        pi_idx = index.get("pi")

        records: list[SubjectRecord] = []
        row = 0
        for cells in reader:
            if not cells:
                continue
            row += 1
            if len(cells) != len(names):
                raise BadValue(
                    row,
                    "record",
                    ",".join(cells),
                    f"expected {len(names)} fields, got {len(cells)}",
                )
            arm = _parse_int01(cells[index["arm"]].strip(), row, "arm")
            outcome = _parse_int01(cells[index["outcome"]].strip(), row, "outcome")
            delta = _parse_float(cells[index["delta"]].strip(), row, "delta")
            pi = None
            if pi_idx is not None:
                text = cells[pi_idx].strip()
                pi = _parse_float(text, row, "pi") if text else None
            order_key = None
            if key_idx is not None:
                text = cells[key_idx].strip()
                column = names[key_idx]
                order_key = _parse_float(text, row, column) if text else None
            rec = SubjectRecord(
                arm=arm, outcome=outcome, delta=delta, pi=pi, order_key=order_key
            )
            try:
                _validate_record(rec, row)
            except ValidationError as err:
                fieldname = getattr(err, "fieldname", "record")
                value = getattr(err, "value", None)
                raise BadValue(row, fieldname, value, "out of range") from None
            records.append(rec)
        if not records:
            raise EmptyFile("dataset has a header but no data rows")
        return tuple(records)
    finally:
        if owned:
            handle.close()


def write_dataset(
    records: Iterable[SubjectRecord], target: Union[str, Path, TextIO]
) -> None:
    """Serialize records as delimited text that parse_dataset reads back exactly.

    Floats are written with repr, which round-trips; absent optional values
    become empty cells.
    """
    recs = list(records)
    columns = list(REQUIRED_COLUMNS)
    if any(r.pi is not None for r in recs):
        columns.append("pi")
    if any(r.order_key is not None for r in recs):
        columns.append("order_key")

    def cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, int):
            return str(value)
        return repr(float(value))

    handle, owned = (
        (open(target, "w", newline="", encoding="utf-8"), True)
        if isinstance(target, (str, Path))
        else (target, False)
    )
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for r in recs:
            writer.writerow([cell(getattr(r, c)) for c in columns])
    finally:
        if owned:
            handle.close()


def test_report_dict(report: TestReport) -> dict:
    """All fields of a test report, absent parts serialized as null."""
    return {
        "s_n": report.s_n,
        "p_mean": report.p_mean,
        "bridge_stat": report.bridge_stat,
        "p_bridge": report.p_bridge,
        "p_unified": report.p_unified,
        "bm_stat": report.bm_stat,
        "p_bm": report.p_bm,
        "c_n": report.c_n,
        "warnings": list(report.warnings),
    }


def assessment_json_dict(
    n: int,
    ordering: str,
    tie_flag: bool,
    alpha: float,
    approach: str,
    test: str,
    results: dict[str, dict],
) -> dict:
    """Versioned envelope for an assessment run.

    results maps a result label (process kind or arm) to an already
    serialized report dictionary.
    """
    return {
        "schema": REPORT_SCHEMA,
        "schema_version": REPORT_SCHEMA_VERSION,
        "n": n,
        "ordering": ordering,
        "tie_flag": tie_flag,
        "alpha": alpha,
        "approach": approach,
        "test": test,
        "results": results,
    }


def dump_json(obj: dict) -> str:
    # repr-based float formatting keeps >= 12 significant digits
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def write_json(obj: dict, target: Union[str, Path]) -> None:
    Path(target).write_text(dump_json(obj), encoding="utf-8")


def format_summary_table(summary) -> str:
    """Aligned text table of Monte Carlo results, one row per test.

    Every rejection rate is printed next to its Monte Carlo standard error.
    """
    spec = summary.spec
    head = [
        f"set {spec.set_id}"
        + (f" scenario {spec.label}" if spec.label else "")
        + f"  n={spec.n}  replicates={spec.replicates}  seed={spec.seed}",
        f"beta = {tuple(spec.beta)}",
    ]
    if spec.set_id == 2:
        head.append(f"alpha={spec.alpha}  gamma={spec.gamma}")
    if spec.set_id == 3:
        head.append(
            f"alpha0={spec.alpha0}  gamma0={spec.gamma0}  "
            f"alpha1={spec.alpha1}  gamma1={spec.gamma1}"
        )
    head.append(
        f"true mean calibration error = {summary.mean_calibration_error:.6f}  "
        f"mean absolute = {summary.mean_abs_calibration_error:.6f}"
    )
    if summary.degenerate:
        head.append(f"degenerate replicates excluded: {len(summary.degenerate)}")

    rows = [("test", "reject@0.05", "mc_se", "n_eff")]
    for name in summary.rejection_rate:
        rows.append(
            (
                name,
                f"{summary.rejection_rate[name]:.4f}",
                f"{summary.mc_se[name]:.4f}",
                str(summary.n_effective[name]),
            )
        )
    widths = [max(len(r[j]) for r in rows) for j in range(4)]
    lines = head + [""]
    for r in rows:
        lines.append("  ".join(r[j].ljust(widths[j]) for j in range(4)).rstrip())
    return "\n".join(lines) + "\n"


def serialize_records_csv(records: Sequence[SubjectRecord]) -> str:
    buf = _io.StringIO()
    write_dataset(records, buf)
    return buf.getvalue()
