"""Guidance widget state: visibility areas, duo collimation, render frames.

Four widget conditions are modeled. Two are static scene anchors
(a short entry-point cylinder; a long target-axis cylinder paired with a
tool-mounted disc) and two add dynamic duos: five split glyph pairs, one
per guided degree of freedom, whose separation narrows as the matching
error component shrinks and which vanish once the component is inside
its tolerance. Duo primitives are depth-test exempt so the renderer
never lets the anatomy occlude them.

Everything here is pure: identical inputs produce identical frames,
byte-for-byte after canonical serialization.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields

from .geometry import (
    UNIT_X,
    UNIT_Y,
    UNIT_Z,
    GuidanceError,
    Pose,
    UnitQuat,
    Vec3,
)


class Condition(str, enum.Enum):
    ENTRY_POINT = "EntryPoint"
    TARGET_AXIS = "TargetAxis"
    DWEP = "DWEP"
    DWTA = "DWTA"

    @classmethod
    def parse(cls, name: str) -> "Condition":
        for c in cls:
            if c.value == name:
                return c
        raise ValueError(f"unknown condition {name!r}; expected one of "
                         f"{[c.value for c in cls]}")


#: Conditions that render dynamic duos.
DW_CONDITIONS = (Condition.DWEP, Condition.DWTA)


class Area(str, enum.Enum):
    """Visibility regime of one duo channel as a function of its error."""

    HIDDEN = "Hidden"
    DYNAMIC_NONLINEAR = "DynamicNonlinear"
    FROZEN_MAX = "FrozenMax"


class Channel(str, enum.Enum):
    PX = "PX"
    PY = "PY"
    PZ = "PZ"
    RX = "RX"
    RZ = "RZ"


POSITIONAL_CHANNELS = (Channel.PX, Channel.PY, Channel.PZ)
ROTATIONAL_CHANNELS = (Channel.RX, Channel.RZ)


@dataclass(frozen=True)
class WidgetConfig:
    """Geometry and thresholds for every widget condition.

    Thresholds: tt_* is the target tolerance below which a channel's cue
    is hidden, mt_* the magnitude where the cue freezes at its maximum.
    Linear units mm, angular units degrees.
    """

    tt_pos: float = 1.0
    tt_rot: float = 0.5
    mt_pos: float = 100.0
    mt_rot: float = 10.0
    d_max: float = 30.0
    duo_radial_offset: float = 15.0
    entry_point_radius: float = 1.0
    entry_point_length: float = 3.0
    axis_radius: float = 1.0
    axis_length: float = 120.0
    disc_radius: float = 5.0
    # the disc sits on top of the drill body, i.e. opposite the bit
    disc_offset: float = 30.0
    duo_form_size: float = 4.0
    loupe_disc_radius: float = 10.0
    loupe_lateral_offset: float = 30.0
    loupe_forward_offset: float = 500.0
    loupe_magnification: float = 2.0
    duo_colors: dict[str, str] = field(default_factory=lambda: dict(_DEFAULT_DUO_COLORS))

    def validate(self) -> None:
        for name in ("pos", "rot"):
            tt = getattr(self, f"tt_{name}")
            mt = getattr(self, f"mt_{name}")
            if not (0.0 < tt < mt):
                raise ValueError(f"require 0 < tt_{name} < mt_{name}, got {tt} and {mt}")
        for f in fields(self):
            if f.name in ("duo_colors",):
                continue
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0.0):
                raise ValueError(f"widget field {f.name} must be a positive finite number, got {v!r}")


_DEFAULT_DUO_COLORS = {
    "PX": "#F2F2F2",
    "PY": "#E8F2E8",
    "PZ": "#E8E8F2",
    "RX": "#F2EDE2",
    "RZ": "#E2EDF2",
}

COLOR_STATIC = "#FFD400"   # entry/axis cylinders
COLOR_DISC = "#E03131"
COLOR_AVATAR = "#9AA0A6"
COLOR_LOUPE = "#FFFFFF"


def classify_area(error_abs: float, tt: float, mt: float) -> Area:
    """Visibility area for one channel.

    Total on error_abs >= 0: exactly tt belongs to HIDDEN, exactly mt to
    FROZEN_MAX.
    """
    if not (0.0 < tt < mt):
        raise ValueError(f"require 0 < tt < mt, got {tt} and {mt}")
    if error_abs < 0.0 or not math.isfinite(error_abs):
        raise ValueError(f"error magnitude must be finite and >= 0, got {error_abs!r}")
    if error_abs <= tt:
        return Area.HIDDEN
    if error_abs >= mt:
        return Area.FROZEN_MAX
    return Area.DYNAMIC_NONLINEAR


def duo_separation(error_abs: float, tt: float, mt: float, d_max: float) -> float:
    """Glyph pair separation for one channel.

    Quadratic in the normalized overshoot above tt: zero at the
    tolerance, d_max at and beyond mt, continuous and monotone between.
    """
    if error_abs < 0.0:
        raise ValueError("error magnitude must be >= 0")
    e = min(max(error_abs, tt), mt)
    t = (e - tt) / (mt - tt)
    return d_max * t * t


@dataclass(frozen=True)
class Primitive:
    """One renderable element. `scale` is (x, y, z); cylinders and discs
    use (radius, length, radius) with the length along local +y."""

    id: str
    shape: str  # cylinder | disc | v-form | paren-form | drill-avatar
    pose: Pose
    scale: tuple[float, float, float]
    color: str
    depth_test_exempt: bool = False


@dataclass(frozen=True)
class DuoState:
    channel: Channel
    shape: str  # v-form | paren-form
    area: Area
    separation: float
    pair_poses: tuple[Pose, Pose]
    collimated: bool


@dataclass(frozen=True)
class RenderFrame:
    condition: Condition
    primitives: tuple[Primitive, ...]
    duos: tuple[DuoState, ...]

    def visible_duo_count(self) -> int:
        return sum(1 for d in self.duos if d.area is not Area.HIDDEN)


def _sign(v: float) -> float:
    return -1.0 if v < 0.0 else 1.0


_POS_AXES = {Channel.PX: UNIT_X, Channel.PY: UNIT_Y, Channel.PZ: UNIT_Z}


def _positional_duo(channel: Channel, component: float, tool: Pose, cfg: WidgetConfig) -> DuoState:
    mag = abs(component)
    area = classify_area(mag, cfg.tt_pos, cfg.mt_pos)
    sep = duo_separation(mag, cfg.tt_pos, cfg.mt_pos, cfg.d_max)
    axis = _POS_AXES[channel]
    rest = tool.position + axis.scaled(cfg.duo_radial_offset)
    off = axis.scaled(_sign(component) * 0.5 * sep)
    pair = (
        Pose(rest + off, UnitQuat.identity()),
        Pose(rest - off, UnitQuat.identity()),
    )
    return DuoState(channel, "v-form", area, sep, pair, area is Area.HIDDEN)


def _rotational_duo(channel: Channel, component: float, tool: Pose, cfg: WidgetConfig) -> DuoState:
    mag = abs(component)
    area = classify_area(mag, cfg.tt_rot, cfg.mt_rot)
    sep = duo_separation(mag, cfg.tt_rot, cfg.mt_rot, cfg.d_max)
    # members ride an arc of radius duo_radial_offset about the tool-local
    # x (channel RX) or z (channel RZ) axis; sep is arc length
    half = _sign(component) * 0.5 * sep / cfg.duo_radial_offset  # radians
    if channel is Channel.RX:
        spin_axis, base = UNIT_X, Vec3(0.0, 0.0, cfg.duo_radial_offset)
    else:
        spin_axis, base = UNIT_Z, Vec3(cfg.duo_radial_offset, 0.0, 0.0)
    poses = []
    for ang in (half, -half):
        spin = UnitQuat.from_axis_angle(spin_axis, math.degrees(ang))
        poses.append(Pose(tool.position + tool.orientation.rotate(spin.rotate(base)),
                          tool.orientation.multiply(spin)))
    return DuoState(channel, "paren-form", area, sep, (poses[0], poses[1]), area is Area.HIDDEN)


def _duo_states(error: GuidanceError, tool: Pose, cfg: WidgetConfig) -> tuple[DuoState, ...]:
    return (
        _positional_duo(Channel.PX, error.pe_vec.x, tool, cfg),
        _positional_duo(Channel.PY, error.pe_vec.y, tool, cfg),
        _positional_duo(Channel.PZ, error.pe_vec.z, tool, cfg),
        _rotational_duo(Channel.RX, error.re_x, tool, cfg),
        _rotational_duo(Channel.RZ, error.re_z, tool, cfg),
    )


def visible_duo_count(error: GuidanceError, condition: Condition, cfg: WidgetConfig) -> int:
    """Number of non-hidden duos, without building primitives. Matches
    RenderFrame.visible_duo_count for the same inputs."""
    if condition not in DW_CONDITIONS:
        return 0
    n = 0
    for comp in (error.pe_vec.x, error.pe_vec.y, error.pe_vec.z):
        if classify_area(abs(comp), cfg.tt_pos, cfg.mt_pos) is not Area.HIDDEN:
            n += 1
    for comp in (error.re_x, error.re_z):
        if classify_area(abs(comp), cfg.tt_rot, cfg.mt_rot) is not Area.HIDDEN:
            n += 1
    return n


def _static_primitives(condition: Condition, tool: Pose, target: Pose, cfg: WidgetConfig) -> list[Primitive]:
    prims = [
        Primitive("drill_avatar", "drill-avatar", tool, (1.0, 1.0, 1.0), COLOR_AVATAR),
    ]
    if condition in (Condition.ENTRY_POINT, Condition.DWEP):
        prims.append(Primitive(
            "entry_cylinder", "cylinder", target,
            (cfg.entry_point_radius, cfg.entry_point_length, cfg.entry_point_radius),
            COLOR_STATIC,
        ))
    if condition in (Condition.TARGET_AXIS, Condition.DWTA):
        prims.append(Primitive(
            "axis_cylinder", "cylinder", target,
            (cfg.axis_radius, cfg.axis_length, cfg.axis_radius),
            COLOR_STATIC,
        ))
        disc_pos = tool.position + tool.orientation.rotate(Vec3(0.0, -cfg.disc_offset, 0.0))
        prims.append(Primitive(
            "tool_disc", "disc", Pose(disc_pos, tool.orientation),
            (cfg.disc_radius, 0.0, cfg.disc_radius),
            COLOR_DISC,
        ))
    return prims


def build_frame(condition: Condition, tool: Pose, target: Pose,
                error: GuidanceError, cfg: WidgetConfig) -> RenderFrame:
    """Assemble the frame for one condition at one instant.

    The DW conditions emit the corresponding static set plus one primitive
    pair per non-hidden duo; primitive ids are stable across frames.
    """
    prims = _static_primitives(condition, tool, target, cfg)
    duos: tuple[DuoState, ...] = ()
    if condition in DW_CONDITIONS:
        duos = _duo_states(error, tool, cfg)
        size = (cfg.duo_form_size,) * 3
        for duo in duos:
            if duo.area is Area.HIDDEN:
                continue
            color = cfg.duo_colors.get(duo.channel.value, "#FFFFFF")
            key = duo.channel.value.lower()
            for tag, pose in zip(("a", "b"), duo.pair_poses):
                prims.append(Primitive(
                    f"duo_{key}_{tag}", duo.shape, pose, size, color,
                    depth_test_exempt=True,
                ))
    return RenderFrame(condition, tuple(prims), duos)


@dataclass(frozen=True)
class LoupeView:
    """Stereo magnifier rig attached to the head: two co-planar discs in
    front of the eyes plus the magnification for the inset viewport."""

    left: Primitive
    right: Primitive
    magnification: float


def loupe_geometry(head: Pose, cfg: WidgetConfig) -> LoupeView:
    """Loupe discs for a head pose (head looks along its local +z)."""
    discs = []
    for name, side in (("loupe_left", -1.0), ("loupe_right", 1.0)):
        local = Vec3(side * cfg.loupe_lateral_offset, 0.0, cfg.loupe_forward_offset)
        pos = head.position + head.orientation.rotate(local)
        discs.append(Primitive(
            name, "disc", Pose(pos, head.orientation),
            (cfg.loupe_disc_radius, 0.0, cfg.loupe_disc_radius),
            COLOR_LOUPE,
        ))
    return LoupeView(discs[0], discs[1], cfg.loupe_magnification)


# ---------------------------------------------------------------------------
# canonical serialization: fixed key order, 6-decimal fixed-point floats
# ---------------------------------------------------------------------------


def _fmt6(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _canon(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt6(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(f"{_canon(k)}:{_canon(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"cannot serialize {type(value)!r}")


def _pose_obj(pose: Pose) -> dict:
    return {
        "position": [pose.position.x, pose.position.y, pose.position.z],
        "orientation": [pose.orientation.w, pose.orientation.x,
                        pose.orientation.y, pose.orientation.z],
    }


def frame_to_obj(frame: RenderFrame) -> dict:
    """Plain-data form of a frame with fixed key order."""
    return {
        "condition": frame.condition.value,
        "primitives": [
            {
                "id": p.id,
                "shape": p.shape,
                "pose": _pose_obj(p.pose),
                "scale": list(p.scale),
                "color": p.color,
                "depth_test_exempt": p.depth_test_exempt,
            }
            for p in frame.primitives
        ],
        "duos": [
            {
                "channel": d.channel.value,
                "shape": d.shape,
                "area": d.area.value,
                "separation": d.separation,
                "collimated": d.collimated,
                "pair_poses": [_pose_obj(d.pair_poses[0]), _pose_obj(d.pair_poses[1])],
            }
            for d in frame.duos
        ],
    }


def frame_to_canonical_json(frame: RenderFrame) -> str:
    """Serialize with fixed key order and 6-decimal fixed-point numbers;
    equal frames serialize to equal bytes."""
    return _canon(frame_to_obj(frame))


def canonical_json(obj) -> str:
    """Canonical writer for already plain data (dicts/lists/scalars)."""
    return _canon(obj)
