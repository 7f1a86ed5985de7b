"""Synthetic operator model for closed-loop guidance trials.

The agent runs a fixed-rate perceive / decide / act loop against the
widget feedback of one condition. Its behaviour is governed by three
condition-dependent quantities:

* perceptual acuity: the agent never sees the true error, only
  ``true + bias * exp(-t / tau_refine) + white``. The bias is drawn once
  per trial per channel with the condition's acuity as its scale, so
  coarser feedback leaves a larger residual error at pedal press. The
  exponential refinement term models the operator slowly sharpening the
  estimate while working; trials that take longer end more accurate.
* glance cost: after every corrective move the agent holds still for a
  condition-dependent number of frames (a base cost plus a per-visible-
  duo cost). Rich widgets are read more slowly, which is where the task
  time separation between conditions comes from.
* proportional control: each move closes a fixed fraction of the
  perceived error, positionally along the perceived offset vector and
  rotationally about the perceived swing axis expressed in the target
  frame. With noise disabled both errors decay geometrically, which the
  tests pin down exactly.

The pedal fires after ``dwell_frames`` consecutive frames with the
perceived error inside both confirmation thresholds; the recorded error
is the true error at that moment, not the perceived one.

All randomness flows through one ``random.Random`` per trial, so trials
are reproducible in isolation and independent of execution order.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

from .geometry import (
    GuidanceError,
    Pose,
    UnitQuat,
    Vec3,
    compute_error,
    rotvec_deg_to_quat,
)
from .records import TrialRecord
from .widget import Condition, WidgetConfig, visible_duo_count

DEFAULT_START = Pose(Vec3(0.0, 120.0, 0.0), UnitQuat.identity())


@dataclass(frozen=True)
class ConditionProfile:
    """How one widget condition reads to the operator."""

    acuity_pos: float  # mm, scale of the per-trial positional bias
    acuity_rot: float  # degrees, scale of the per-trial rotational bias
    base_latency: float  # seconds of hold after each move, before duo cost


DEFAULT_PROFILES: dict[Condition, ConditionProfile] = {
    # single sphere: position readable, rotation essentially unaided
    Condition.ENTRY_POINT: ConditionProfile(1.5, 8.0, 0.0),
    # full axis: rotation roughly readable by eye, slower to scan
    Condition.TARGET_AXIS: ConditionProfile(1.2, 3.0, 0.05),
    # duo channels quantify each axis; reading them costs glances
    Condition.DWEP: ConditionProfile(0.6, 1.2, 0.0),
    Condition.DWTA: ConditionProfile(0.5, 1.0, 0.05),
}


@dataclass(frozen=True)
class AgentParams:
    profiles: Mapping[Condition, ConditionProfile] = field(
        default_factory=lambda: dict(DEFAULT_PROFILES))
    widget: WidgetConfig = field(default_factory=WidgetConfig)
    latency_per_duo: float = 0.08  # seconds of extra hold per visible duo
    white_frac: float = 0.05  # frame noise as a fraction of channel acuity
    tau_refine: float = 45.0  # seconds, perceptual refinement time constant
    gain_pos: float = 4.0  # per-second proportional gain
    gain_rot: float = 3.0
    motor_pos: float = 0.02  # mm of tremor per move, per axis
    motor_rot: float = 0.02  # degrees of tremor per move, per rotvec channel
    # confirmation thresholds as fractions of the channel acuity: the
    # operator presses once the error looks negligible at the resolution
    # the widget affords, so finer widgets are confirmed tighter
    conf_frac_pos: float = 0.5
    conf_frac_rot: float = 0.5
    dwell_frames: int = 6
    reaction_delay: float = 0.25  # seconds before the agent engages
    step_hz: int = 60
    timeout_s: float = 120.0

    def profile(self, condition: Condition) -> ConditionProfile:
        return self.profiles[condition]


class PerceivedError(NamedTuple):
    pe_vec: Vec3
    pm: float
    re_x: float
    re_z: float
    rm: float


@dataclass
class AgentState:
    """Mutable per-trial loop state."""

    condition: Condition
    target: Pose
    tool: Pose
    bias_pos: Vec3
    bias_rot: tuple[float, float]
    acuity_scale: float
    pace_scale: float
    true_error: GuidanceError
    perceived: PerceivedError
    frame: int = 0
    within: int = 0
    hold: int = 0
    pressed: bool = False
    timed_out: bool = False
    end_time: float = 0.0


def hold_frames(params: AgentParams, profile: ConditionProfile, n_visible_duos: int,
                pace_scale: float) -> int:
    """Frames the agent stays put after a move to read the widget."""
    seconds = profile.base_latency + params.latency_per_duo * n_visible_duos
    return max(0, round(params.step_hz * pace_scale * seconds))


def new_trial_state(condition: Condition, target: Pose, params: AgentParams,
                    rng: random.Random, *, acuity_scale: float = 1.0,
                    pace_scale: float = 1.0, start: Pose = DEFAULT_START) -> AgentState:
    profile = params.profile(condition)
    sp = profile.acuity_pos * acuity_scale
    sr = profile.acuity_rot * acuity_scale
    bias_pos = Vec3(rng.gauss(0.0, sp), rng.gauss(0.0, sp), rng.gauss(0.0, sp))
    bias_rot = (rng.gauss(0.0, sr), rng.gauss(0.0, sr))
    err = compute_error(start, target)
    perceived = PerceivedError(err.pe_vec, err.pm, err.re_x, err.re_z, err.rm)
    return AgentState(condition, target, start, bias_pos, bias_rot,
                      acuity_scale, pace_scale, err, perceived)


def agent_step(state: AgentState, params: AgentParams, rng: random.Random) -> bool:
    """Advance one frame; True when the trial ended on this frame."""
    hz = float(params.step_hz)
    t = state.frame / hz
    if t >= params.timeout_s:
        state.timed_out = True
        state.end_time = params.timeout_s
        return True

    profile = params.profile(state.condition)
    decay = math.exp(-t / params.tau_refine)
    wp = params.white_frac * profile.acuity_pos * state.acuity_scale
    wr = params.white_frac * profile.acuity_rot * state.acuity_scale
    e = state.true_error
    ppe = Vec3(
        e.pe_vec.x + state.bias_pos.x * decay + rng.gauss(0.0, wp),
        e.pe_vec.y + state.bias_pos.y * decay + rng.gauss(0.0, wp),
        e.pe_vec.z + state.bias_pos.z * decay + rng.gauss(0.0, wp),
    )
    prx = e.re_x + state.bias_rot[0] * decay + rng.gauss(0.0, wr)
    prz = e.re_z + state.bias_rot[1] * decay + rng.gauss(0.0, wr)
    state.perceived = PerceivedError(ppe, ppe.norm(), prx, prz, math.hypot(prx, prz))
    state.frame += 1

    if t < params.reaction_delay:
        return False

    thr_pos = params.conf_frac_pos * profile.acuity_pos * state.acuity_scale
    thr_rot = params.conf_frac_rot * profile.acuity_rot * state.acuity_scale
    if state.perceived.pm < thr_pos and state.perceived.rm < thr_rot:
        state.within += 1
        if state.within >= params.dwell_frames:
            state.pressed = True
            state.end_time = t
            return True
    else:
        state.within = 0

    if state.hold > 0:
        state.hold -= 1
        return False

    lam = params.gain_pos / hz
    top = state.tool.position
    new_top = Vec3(
        top.x + lam * ppe.x + rng.gauss(0.0, params.motor_pos),
        top.y + lam * ppe.y + rng.gauss(0.0, params.motor_pos),
        top.z + lam * ppe.z + rng.gauss(0.0, params.motor_pos),
    )
    ang = params.gain_rot / hz
    # correction rotvec in target-frame axes; the y channel is pure twist
    # tremor, which by construction cannot move the swing error
    rv = Vec3(
        -ang * prx + rng.gauss(0.0, params.motor_rot),
        rng.gauss(0.0, params.motor_rot),
        -ang * prz + rng.gauss(0.0, params.motor_rot),
    )
    spin = rotvec_deg_to_quat(state.target.orientation.rotate(rv))
    state.tool = Pose(new_top, spin.multiply(state.tool.orientation))
    state.true_error = compute_error(state.tool, state.target)
    vis = visible_duo_count(state.true_error, state.condition, params.widget)
    state.hold = hold_frames(params, profile, vis, state.pace_scale)
    return False


def run_trial(subject_id: int, condition: Condition, trial_index: int, target: Pose,
              params: AgentParams, rng: random.Random, *, acuity_scale: float = 1.0,
              pace_scale: float = 1.0, start: Pose = DEFAULT_START,
              seed: int = 0) -> TrialRecord:
    """Run one trial to pedal press or timeout and record the outcome."""
    state = new_trial_state(condition, target, params, rng,
                            acuity_scale=acuity_scale, pace_scale=pace_scale,
                            start=start)
    while not agent_step(state, params, rng):
        pass
    return TrialRecord(
        subject_id=subject_id,
        condition=condition,
        trial_index=trial_index,
        target=target,
        task_time=state.end_time,
        error=state.true_error,
        timed_out=state.timed_out,
        seed=seed,
    )
