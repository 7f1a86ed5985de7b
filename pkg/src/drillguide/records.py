"""Trial records and dataset persistence.

One TrialRecord captures one completed simulated (or externally played)
trial: the final guidance error at pedal press plus bookkeeping. The CSV
layout is the package's interchange format; column order is fixed and
floats are written with repr so that values round-trip losslessly and
files are byte-stable for identical inputs.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .geometry import GuidanceError, Pose, UnitQuat, Vec3
from .widget import Condition

if TYPE_CHECKING:  # pragma: no cover
    from .harness import ExperimentConfig

CSV_COLUMNS = (
    "subject", "condition", "trial", "tx", "ty", "tz", "time",
    "pm", "px", "py", "pz", "rm", "rx", "rz", "timed_out", "seed",
)


class IngestError(ValueError):
    """Raised when an external dataset file does not match the schema."""


@dataclass(frozen=True)
class TrialRecord:
    subject_id: int
    condition: Condition
    trial_index: int  # index within the subject's session, 0-based
    target: Pose
    task_time: float  # seconds from trial start to pedal (or timeout)
    error: GuidanceError  # final error at pedal press
    timed_out: bool
    seed: int

    def validate(self) -> None:
        e = self.error
        if abs(e.pm * e.pm - (e.pe_vec.x ** 2 + e.pe_vec.y ** 2 + e.pe_vec.z ** 2)) > 1e-9:
            raise ValueError("pm inconsistent with positional components")
        if self.task_time < 0.0 or not math.isfinite(self.task_time):
            raise ValueError("task_time must be finite and >= 0")

    def csv_row(self) -> list[str]:
        e = self.error
        return [
            str(self.subject_id),
            self.condition.value,
            str(self.trial_index),
            repr(self.target.position.x),
            repr(self.target.position.y),
            repr(self.target.position.z),
            repr(self.task_time),
            repr(e.pm),
            repr(e.pe_vec.x),
            repr(e.pe_vec.y),
            repr(e.pe_vec.z),
            repr(e.rm),
            repr(e.re_x),
            repr(e.re_z),
            "true" if self.timed_out else "false",
            str(self.seed),
        ]


def _record_from_row(row: dict[str, str], line: int) -> TrialRecord:
    try:
        pe = Vec3(float(row["px"]), float(row["py"]), float(row["pz"]))
        return TrialRecord(
            subject_id=int(row["subject"]),
            condition=Condition.parse(row["condition"]),
            trial_index=int(row["trial"]),
            target=Pose(Vec3(float(row["tx"]), float(row["ty"]), float(row["tz"])),
                        UnitQuat.identity()),
            task_time=float(row["time"]),
            error=GuidanceError(pe, float(row["pm"]), float(row["rx"]),
                                float(row["rz"]), float(row["rm"])),
            timed_out={"true": True, "false": False}[row["timed_out"]],
            seed=int(row["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise IngestError(f"dataset row {line}: {exc}") from exc


@dataclass
class Dataset:
    """Ordered trial records plus the configuration that produced them.

    `config` is None for externally ingested CSVs that arrive without a
    sidecar; analysis then derives the condition set from the records.
    """

    records: list[TrialRecord]
    config: "ExperimentConfig | None" = None

    def conditions(self) -> list[Condition]:
        if self.config is not None:
            return list(self.config.conditions)
        seen: list[Condition] = []
        for c in Condition:  # canonical order
            if any(r.condition is c for r in self.records):
                seen.append(c)
        return seen

    def subject_ids(self) -> list[int]:
        return sorted({r.subject_id for r in self.records})

    def expected_size(self) -> int | None:
        if self.config is None:
            return None
        return (self.config.n_subjects * len(self.config.conditions)
                * self.config.trials_per_condition)

    def check_cardinality(self) -> None:
        want = self.expected_size()
        if want is not None and len(self.records) != want:
            raise IngestError(f"dataset holds {len(self.records)} records, expected {want}")


def records_to_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def write_dataset_csv(records: Sequence[TrialRecord], path: Path | str) -> None:
    Path(path).write_text(records_to_csv(records), encoding="utf-8")


def read_dataset_csv(path: Path | str) -> list[TrialRecord]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_dataset_csv(text)


def parse_dataset_csv(text: str) -> list[TrialRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("dataset CSV is empty") from None
    if tuple(header) != CSV_COLUMNS:
        raise IngestError(
            f"dataset CSV header mismatch: got {header!r}, expected {list(CSV_COLUMNS)}")
    out: list[TrialRecord] = []
    for i, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise IngestError(f"dataset row {i}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        out.append(_record_from_row(dict(zip(CSV_COLUMNS, row)), i))
    return out
