"""Experiment harness: counterbalanced within-subject sessions.

A session runs every condition for every synthetic subject, condition
order counterbalanced by a balanced Latin square (each condition appears
once per row and column, and each ordered adjacency exactly once across
rows, which requires an even condition count). Targets, perceptual bias,
and all noise draw from named SHA-256 seed streams, so any trial can be
regenerated in isolation and the output CSV is byte-identical regardless
of worker count or execution order.

Subjects differ by two log-normal traits shared across their whole
session: an acuity scale (multiplies perceptual bias and noise) and a
pace scale (multiplies glance latency). Conditions are compared within
subject, so the traits cancel out of condition contrasts but generate
realistic between-subject spread for the correlation analyses.
"""
from __future__ import annotations

import csv
import io
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .agent import DEFAULT_START, AgentParams, agent_step, new_trial_state, run_trial
from .geometry import Pose, UnitQuat, Vec3
from .records import Dataset, IngestError, TrialRecord
from .seeds import stream_seed
from .widget import Condition, RenderFrame, build_frame

DEFAULT_BOX_MIN = Vec3(-35.0, -20.0, -25.0)
DEFAULT_BOX_MAX = Vec3(35.0, 0.0, 25.0)

TLX_COLUMNS = ("subject", "condition", "mental", "physical", "temporal",
               "performance", "effort", "frustration")
DEMOGRAPHICS_COLUMNS = ("subject", "age", "gaming")


class ConfigError(ValueError):
    """Experiment configuration rejected; the message names the field."""


def balanced_latin_square(n: int) -> list[list[int]]:
    """Balanced Latin square of order n (n even).

    Row 0 is the zigzag 0, 1, n-1, 2, n-2, ...; row i adds i modulo n.
    Every value occurs once per row and per column, and every ordered
    pair of neighbours occurs exactly once over all rows.
    """
    if n < 2:
        raise ValueError("need at least 2 conditions")
    if n % 2 != 0:
        raise ValueError("balanced Latin square requires an even order")
    row0 = [0]
    low, high = 1, n - 1
    take_low = True
    while len(row0) < n:
        if take_low:
            row0.append(low)
            low += 1
        else:
            row0.append(high)
            high -= 1
        take_low = not take_low
    return [[(v + i) % n for v in row0] for i in range(n)]


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 42
    n_subjects: int = 35
    trials_per_condition: int = 16
    conditions: tuple[Condition, ...] = (
        Condition.ENTRY_POINT, Condition.TARGET_AXIS, Condition.DWEP, Condition.DWTA)
    target_box_min: Vec3 = DEFAULT_BOX_MIN
    target_box_max: Vec3 = DEFAULT_BOX_MAX
    max_tilt_deg: float = 30.0
    subject_jitter_sigma: float = 0.15

    def validate(self) -> None:
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed: must be a non-negative integer")
        if not isinstance(self.n_subjects, int) or self.n_subjects < 1:
            raise ConfigError("n_subjects: must be a positive integer")
        if not isinstance(self.trials_per_condition, int) or self.trials_per_condition < 1:
            raise ConfigError("trials_per_condition: must be a positive integer")
        if not self.conditions:
            raise ConfigError("conditions: must not be empty")
        if len(set(self.conditions)) != len(self.conditions):
            raise ConfigError("conditions: names must be unique")
        lo, hi = self.target_box_min, self.target_box_max
        for axis in ("x", "y", "z"):
            a, b = getattr(lo, axis), getattr(hi, axis)
            if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
                raise ConfigError(f"target_box: min.{axis} must be below max.{axis}")
        if not (0.0 <= self.max_tilt_deg <= 90.0) or not math.isfinite(self.max_tilt_deg):
            raise ConfigError("max_tilt_deg: must be in [0, 90]")
        if self.subject_jitter_sigma < 0.0 or not math.isfinite(self.subject_jitter_sigma):
            raise ConfigError("subject_jitter_sigma: must be >= 0")

    def to_obj(self) -> dict:
        return {
            "seed": self.seed,
            "n_subjects": self.n_subjects,
            "trials_per_condition": self.trials_per_condition,
            "conditions": [c.value for c in self.conditions],
            "target_box": {
                "min": [self.target_box_min.x, self.target_box_min.y, self.target_box_min.z],
                "max": [self.target_box_max.x, self.target_box_max.y, self.target_box_max.z],
            },
            "max_tilt_deg": self.max_tilt_deg,
            "subject_jitter_sigma": self.subject_jitter_sigma,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config: top level must be an object")
        known = {"seed", "n_subjects", "trials_per_condition", "conditions",
                 "target_box", "max_tilt_deg", "subject_jitter_sigma"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"config: unknown field {sorted(unknown)[0]!r}")
        kwargs: dict = {}
        if "seed" in obj:
            kwargs["seed"] = _expect_int(obj["seed"], "seed")
        if "n_subjects" in obj:
            kwargs["n_subjects"] = _expect_int(obj["n_subjects"], "n_subjects")
        if "trials_per_condition" in obj:
            kwargs["trials_per_condition"] = _expect_int(
                obj["trials_per_condition"], "trials_per_condition")
        if "conditions" in obj:
            raw = obj["conditions"]
            if not isinstance(raw, list) or not all(isinstance(c, str) for c in raw):
                raise ConfigError("conditions: must be a list of names")
            try:
                kwargs["conditions"] = tuple(Condition.parse(c) for c in raw)
            except ValueError as exc:
                raise ConfigError(f"conditions: {exc}") from exc
        if "target_box" in obj:
            box = obj["target_box"]
            if (not isinstance(box, dict) or set(box) != {"min", "max"}
                    or not all(isinstance(box[k], list) and len(box[k]) == 3 for k in box)):
                raise ConfigError("target_box: must hold 3-element min and max lists")
            try:
                kwargs["target_box_min"] = Vec3(*(float(v) for v in box["min"]))
                kwargs["target_box_max"] = Vec3(*(float(v) for v in box["max"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"target_box: {exc}") from exc
        if "max_tilt_deg" in obj:
            kwargs["max_tilt_deg"] = _expect_number(obj["max_tilt_deg"], "max_tilt_deg")
        if "subject_jitter_sigma" in obj:
            kwargs["subject_jitter_sigma"] = _expect_number(
                obj["subject_jitter_sigma"], "subject_jitter_sigma")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


def _expect_int(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name}: must be an integer")
    return v


def _expect_number(v, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: must be a number")
    return float(v)


def config_to_json_text(config: ExperimentConfig) -> str:
    return json.dumps(config.to_obj(), indent=2) + "\n"


def parse_config_json(text: str) -> ExperimentConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_obj(obj)


# ---------------------------------------------------------------------------
# target sampling and subject traits
# ---------------------------------------------------------------------------


def draw_target(rng: random.Random, config: ExperimentConfig) -> Pose:
    """One target pose: position uniform in the box, bit axis tilted up to
    max_tilt_deg from vertical at a uniform azimuth."""
    lo, hi = config.target_box_min, config.target_box_max
    x = rng.uniform(lo.x, hi.x)
    y = rng.uniform(lo.y, hi.y)
    z = rng.uniform(lo.z, hi.z)
    tilt = rng.uniform(0.0, config.max_tilt_deg)
    azimuth = rng.uniform(0.0, 360.0)
    orientation = UnitQuat.from_axis_angle(Vec3(0.0, 1.0, 0.0), azimuth).multiply(
        UnitQuat.from_axis_angle(Vec3(1.0, 0.0, 0.0), tilt))
    return Pose(Vec3(x, y, z), orientation)


def subject_scales(config: ExperimentConfig, subject_id: int) -> tuple[float, float]:
    """(acuity_scale, pace_scale) for one subject, stable under the seed."""
    rng = random.Random(stream_seed(config.seed, f"subject:{subject_id}|traits"))
    acuity = math.exp(rng.gauss(0.0, config.subject_jitter_sigma))
    pace = math.exp(rng.gauss(0.0, config.subject_jitter_sigma))
    return acuity, pace


def condition_order(config: ExperimentConfig, subject_id: int) -> list[Condition]:
    square = balanced_latin_square(len(config.conditions))
    row = square[subject_id % len(config.conditions)]
    return [config.conditions[i] for i in row]


# ---------------------------------------------------------------------------
# session execution
# ---------------------------------------------------------------------------


def simulate_subject(config: ExperimentConfig, subject_id: int,
                     params: AgentParams | None = None) -> list[TrialRecord]:
    """All trials of one subject, ordered by session position."""
    if params is None:
        params = AgentParams()
    acuity, pace = subject_scales(config, subject_id)
    records: list[TrialRecord] = []
    trial_index = 0
    for cond in condition_order(config, subject_id):
        for t in range(config.trials_per_condition):
            # the stream is named by condition, not block position, so a
            # trial's content does not depend on counterbalancing order
            seed = stream_seed(config.seed, f"s{subject_id}|{cond.value}|t{t}")
            rng = random.Random(seed)
            target = draw_target(rng, config)
            records.append(run_trial(subject_id, cond, trial_index, target, params,
                                     rng, acuity_scale=acuity, pace_scale=pace,
                                     start=DEFAULT_START, seed=seed))
            trial_index += 1
    return records


def _subject_job(args: tuple[ExperimentConfig, int, AgentParams | None]) -> list[TrialRecord]:
    return simulate_subject(*args)


def run_experiment(config: ExperimentConfig, *, workers: int = 1,
                   params: AgentParams | None = None) -> Dataset:
    """Simulate the whole session set.

    workers > 1 distributes subjects over processes; records are joined
    in subject order, so the result is identical for any worker count.
    """
    config.validate()
    if workers < 1:
        raise ValueError("workers must be >= 1")
    subjects = list(range(config.n_subjects))
    if workers == 1 or config.n_subjects == 1:
        per_subject = [simulate_subject(config, s, params) for s in subjects]
    else:
        jobs = [(config, s, params) for s in subjects]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_subject = list(pool.map(_subject_job, jobs))
    records: list[TrialRecord] = []
    for chunk in per_subject:
        records.extend(chunk)
    ds = Dataset(records, config)
    ds.check_cardinality()
    return ds


# ---------------------------------------------------------------------------
# trial replay
# ---------------------------------------------------------------------------


class ReplayMismatchError(ValueError):
    """The regenerated trial does not reproduce the recorded outcome."""


def replay_trial(config: ExperimentConfig, record: TrialRecord,
                 params: AgentParams | None = None):
    """Regenerate the frame-by-frame widget stream of one recorded trial.

    Every draw of the original trial came from the stream seed stored in
    the record, so the whole closed loop can be replayed bit for bit.
    The recorded outcome is re-simulated and compared first; a mismatch
    (wrong config for this dataset, tampered rows) raises
    ReplayMismatchError before any frame is trusted.

    Yields (frame_index, elapsed_seconds, RenderFrame) for each loop
    frame, showing the state the operator saw before acting on it; the
    last frame carries the final pose at pedal press or timeout.
    """
    if params is None:
        params = AgentParams()
    acuity, pace = subject_scales(config, record.subject_id)

    rng = random.Random(record.seed)
    target = draw_target(rng, config)
    got, want = target.position, record.target.position
    if (got.x, got.y, got.z) != (want.x, want.y, want.z):
        raise ReplayMismatchError(
            "regenerated target does not match the record (config/dataset mismatch)")
    redone = run_trial(record.subject_id, record.condition, record.trial_index,
                       target, params, rng, acuity_scale=acuity, pace_scale=pace,
                       seed=record.seed)
    if (redone.task_time != record.task_time or redone.error != record.error
            or redone.timed_out != record.timed_out):
        raise ReplayMismatchError(
            "regenerated outcome does not match the record (config/dataset mismatch)")

    rng = random.Random(record.seed)
    target = draw_target(rng, config)
    state = new_trial_state(record.condition, target, params, rng,
                            acuity_scale=acuity, pace_scale=pace, start=DEFAULT_START)
    while True:
        frame: RenderFrame = build_frame(record.condition, state.tool, target,
                                         state.true_error, params.widget)
        yield state.frame, state.frame / params.step_hz, frame
        if agent_step(state, params, rng):
            return


# ---------------------------------------------------------------------------
# questionnaire ingestion
# ---------------------------------------------------------------------------


def parse_tlx_csv(text: str) -> list[dict]:
    """Rows of subject x condition NASA-TLX scale scores (0..100)."""
    rows = _parse_simple_csv(text, TLX_COLUMNS, "TLX")
    out = []
    for i, row in rows:
        try:
            parsed = {"subject": int(row["subject"]), "condition": row["condition"]}
            Condition.parse(row["condition"])
            for scale in TLX_COLUMNS[2:]:
                v = float(row[scale])
                if not (0.0 <= v <= 100.0):
                    raise ValueError(f"{scale} score {v} outside [0, 100]")
                parsed[scale] = v
        except ValueError as exc:
            raise IngestError(f"TLX row {i}: {exc}") from exc
        out.append(parsed)
    return out


def parse_demographics_csv(text: str) -> list[dict]:
    """Rows of per-subject traits: age (years), gaming (hours per week)."""
    rows = _parse_simple_csv(text, DEMOGRAPHICS_COLUMNS, "demographics")
    out = []
    for i, row in rows:
        try:
            out.append({
                "subject": int(row["subject"]),
                "age": float(row["age"]),
                "gaming": float(row["gaming"]),
            })
        except ValueError as exc:
            raise IngestError(f"demographics row {i}: {exc}") from exc
    return out


def _parse_simple_csv(text: str, columns: tuple[str, ...],
                      label: str) -> list[tuple[int, dict[str, str]]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError(f"{label} CSV is empty") from None
    if tuple(header) != columns:
        raise IngestError(f"{label} CSV header mismatch: got {header!r}, "
                          f"expected {list(columns)}")
    out = []
    for i, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(columns):
            raise IngestError(f"{label} row {i}: expected {len(columns)} fields, "
                              f"got {len(row)}")
        out.append((i, dict(zip(columns, row))))
    return out
