"""Pose math for 5-DoF drill positioning.

World frame is right-handed with y up, z forward, x to the right.
Positions are millimetres and angles are degrees at module boundaries;
radians only appear inside function bodies. A drill pose carries its bit
axis along the local +y direction, and rotation about that axis is the
free degree of freedom: every error measure here is invariant under it.

Quaternions are stored (w, x, y, z). q and -q describe the same rotation;
functions that return quaternions canonicalize to w >= 0.
"""
from __future__ import annotations

import math
from typing import NamedTuple

# |q| must stay within this of 1 after any operation in this module.
UNIT_NORM_TOL = 1e-9
# Inputs from callers (files, wire) are rejected beyond this looser bound.
INPUT_NORM_TOL = 1e-6

_DEGENERATE_EPS = 1e-12


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":  # type: ignore[override]
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n < _DEGENERATE_EPS:
            raise ValueError("cannot normalize a near-zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


ZERO3 = Vec3(0.0, 0.0, 0.0)
UNIT_X = Vec3(1.0, 0.0, 0.0)
UNIT_Y = Vec3(0.0, 1.0, 0.0)
UNIT_Z = Vec3(0.0, 0.0, 1.0)


class UnitQuat(NamedTuple):
    """Unit quaternion (w, x, y, z). Build via the classmethods; they
    validate and normalize. Direct tuple construction is for internal
    use where the norm is already known good."""

    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> "UnitQuat":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def of(cls, w: float, x: float, y: float, z: float) -> "UnitQuat":
        """Validate against INPUT_NORM_TOL, then renormalize exactly."""
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if not math.isfinite(n) or abs(n - 1.0) > INPUT_NORM_TOL:
            raise ValueError(f"quaternion norm {n!r} is not within {INPUT_NORM_TOL} of 1")
        return cls(w / n, x / n, y / n, z / n)

    @classmethod
    def from_axis_angle(cls, axis: Vec3, angle_deg: float) -> "UnitQuat":
        u = axis.normalized()
        half = math.radians(angle_deg) * 0.5
        s = math.sin(half)
        return cls(math.cos(half), u.x * s, u.y * s, u.z * s)

    def multiply(self, other: "UnitQuat") -> "UnitQuat":
        aw, ax, ay, az = self
        bw, bx, by, bz = other
        w = aw * bw - ax * bx - ay * by - az * bz
        x = aw * bx + ax * bw + ay * bz - az * by
        y = aw * by - ax * bz + ay * bw + az * bx
        z = aw * bz + ax * by - ay * bx + az * bw
        # one multiply drifts by ~1 ulp; renormalize to hold UNIT_NORM_TOL
        n = math.sqrt(w * w + x * x + y * y + z * z)
        return UnitQuat(w / n, x / n, y / n, z / n)

    def inverse(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def canonical(self) -> "UnitQuat":
        """Pick the w >= 0 representative of {q, -q}."""
        if self.w < 0.0:
            return UnitQuat(-self.w, -self.x, -self.y, -self.z)
        return self

    def rotate(self, v: Vec3) -> Vec3:
        # v' = v + 2w(r x v) + 2 r x (r x v), r = vector part
        rx, ry, rz = self.x, self.y, self.z
        cx = ry * v.z - rz * v.y
        cy = rz * v.x - rx * v.z
        cz = rx * v.y - ry * v.x
        dx = ry * cz - rz * cy
        dy = rz * cx - rx * cz
        dz = rx * cy - ry * cx
        w2 = 2.0 * self.w
        return Vec3(v.x + w2 * cx + 2.0 * dx, v.y + w2 * cy + 2.0 * dy, v.z + w2 * cz + 2.0 * dz)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def angle_deg(self) -> float:
        """Rotation angle in [0, 180]."""
        q = self.canonical()
        vn = math.sqrt(q.x * q.x + q.y * q.y + q.z * q.z)
        return math.degrees(2.0 * math.atan2(vn, q.w))

    def to_rotvec_deg(self) -> Vec3:
        """Axis * angle (degrees), zero vector for the identity."""
        q = self.canonical()
        vn = math.sqrt(q.x * q.x + q.y * q.y + q.z * q.z)
        if vn < _DEGENERATE_EPS:
            return ZERO3
        ang = math.degrees(2.0 * math.atan2(vn, q.w))
        return Vec3(q.x / vn * ang, q.y / vn * ang, q.z / vn * ang)


def rotvec_deg_to_quat(rotvec: Vec3) -> UnitQuat:
    """Inverse of UnitQuat.to_rotvec_deg."""
    ang = rotvec.norm()
    if ang < _DEGENERATE_EPS:
        return UnitQuat.identity()
    return UnitQuat.from_axis_angle(rotvec, ang)


class Pose(NamedTuple):
    """Rigid pose: position (mm, world frame) plus orientation. For the
    drill the position is the tooltip and local +y is the bit axis."""

    position: Vec3
    orientation: UnitQuat

    def bit_axis(self) -> Vec3:
        return self.orientation.rotate(UNIT_Y)


class GuidanceError(NamedTuple):
    """5-DoF pose error between tool and target.

    pe_vec  signed positional error, target minus tool (mm, world frame)
    pm      positional magnitude, |pe_vec|
    re_x    signed swing component about the x axis (deg)
    re_z    signed swing component about the z axis (deg)
    rm      swing magnitude (deg); equals the bit-axis misalignment angle

    The twist (rotation about the bit axis itself) is discarded, so all
    rotational fields are invariant when the tool rolls about its bit.
    Signs follow the right-hand rule: a tool pre-rotated +10 deg about
    the x axis relative to the target reads re_x = +10.
    """

    pe_vec: Vec3
    pm: float
    re_x: float
    re_z: float
    rm: float

    @classmethod
    def zero(cls) -> "GuidanceError":
        return cls(ZERO3, 0.0, 0.0, 0.0, 0.0)


def swing_twist(q: UnitQuat, axis: Vec3) -> tuple[UnitQuat, UnitQuat]:
    """Split q into q = swing * twist about `axis`.

    The twist is a pure rotation about `axis`; the swing's rotation axis
    is orthogonal to it. For a 180-degree rotation orthogonal to `axis`
    the twist is degenerate and the identity is returned for it.
    """
    u = axis.normalized()
    q = q.canonical()
    proj = q.x * u.x + q.y * u.y + q.z * u.z
    tn = math.sqrt(q.w * q.w + proj * proj)
    if tn < _DEGENERATE_EPS:
        # q rotates by 180 deg about an axis orthogonal to u: pure swing
        return q, UnitQuat.identity()
    twist = UnitQuat(q.w / tn, proj * u.x / tn, proj * u.y / tn, proj * u.z / tn)
    swing = q.multiply(twist.inverse()).canonical()
    return swing, twist


def _checked_orientation(pose: Pose, name: str) -> UnitQuat:
    n = pose.orientation.norm()
    if not math.isfinite(n) or abs(n - 1.0) > INPUT_NORM_TOL:
        raise ValueError(f"{name} orientation norm {n!r} is not within {INPUT_NORM_TOL} of 1")
    return pose.orientation


def compute_error(tool: Pose, target: Pose) -> GuidanceError:
    """Positional and rotational error of `tool` relative to `target`.

    Rotation: the relative rotation between the orientations is
    swing-twist decomposed about the bit (local y) axis and the twist is
    discarded. The swing is returned as a rotation vector; its x and z
    components are re_x / re_z and its length is rm. Equivalent, and how
    it is computed here: with u the tool bit direction expressed in
    target coordinates, the swing is the minimal rotation taking u onto
    +y, which keeps rm equal to the bit-axis misalignment angle and has
    an exactly zero y component.

    Degenerate case rm = 180 (bit axes anti-parallel): the swing axis is
    taken as the x axis by convention, so re_x = 180, re_z = 0.
    """
    tor = _checked_orientation(tool, "tool")
    tar = _checked_orientation(target, "target")
    if not (tool.position.is_finite() and target.position.is_finite()):
        raise ValueError("pose positions must be finite")

    pe = target.position - tool.position
    pm = pe.norm()

    u = tar.inverse().multiply(tor).rotate(UNIT_Y)
    sxz = math.sqrt(u.x * u.x + u.z * u.z)  # |y_hat x u|
    if sxz < _DEGENERATE_EPS:
        if u.y > 0.0:
            return GuidanceError(pe, pm, 0.0, 0.0, 0.0)
        return GuidanceError(pe, pm, 180.0, 0.0, 180.0)
    ang = math.degrees(math.atan2(sxz, u.y))
    # axis = (y_hat x u) normalized = (u.z, 0, -u.x)/sxz; rotvec = axis*ang
    re_x = u.z / sxz * ang
    re_z = -u.x / sxz * ang
    return GuidanceError(pe, pm, re_x, re_z, ang)
