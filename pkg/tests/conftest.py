from __future__ import annotations

import math
import random

from drillguide.geometry import Pose, UnitQuat, Vec3


def rand_unit_quat(rng: random.Random) -> UnitQuat:
    while True:
        w, x, y, z = (rng.gauss(0.0, 1.0) for _ in range(4))
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n > 1e-3:
            return UnitQuat(w / n, x / n, y / n, z / n)


def rand_vec3(rng: random.Random, scale: float = 100.0) -> Vec3:
    return Vec3(rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale))


def rand_pose(rng: random.Random, scale: float = 100.0) -> Pose:
    return Pose(rand_vec3(rng, scale), rand_unit_quat(rng))
