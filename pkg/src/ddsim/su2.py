"""
SU(2) rotation algebra on unit quaternions.

Quaternions are stored as ``(w, x, y, z)`` with ``w = cos(angle/2)`` and
``(x, y, z) = sin(angle/2) * axis``. Rotations are active and right-handed:
``Rz(pi/2)`` maps the Bloch vector ``(1, 0, 0)`` to ``(0, 1, 0)``.

Angles live in ``[0, 2*pi]`` so a 2*pi rotation (quaternion ``-1``) stays
distinguishable from the identity.

Besides the scalar value types, the module carries batched helpers
(``qmul``, ``qrotate``, ...) working on arrays of shape ``(..., 4)``; the
ensemble engine folds thousands of spins at once through them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

AXIS_TOL = 1e-9
DEGENERATE_TOL = 1e-12


class InvalidArgument(ValueError):
    """Raised for malformed inputs such as a non-unit rotation axis."""


class OutOfLinearRegime(ArithmeticError):
    """Residual rotation too large for a small-angle reading."""


# ---------------------------------------------------------------------------
# batched kernels
# ---------------------------------------------------------------------------

def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product ``a * b`` over the trailing axis."""
    aw, ax, ay, az = np.moveaxis(np.asarray(a, dtype=float), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    return np.stack(
        (
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ),
        axis=-1,
    )


def qconj(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnormalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def qrotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate 3-vectors ``v`` by unit quaternions ``q`` (broadcasting)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def qfrom_rotvec(rotvec: np.ndarray) -> np.ndarray:
    """Quaternions for rotation vectors ``angle * axis`` (shape ``(..., 3)``).

    A zero vector maps to the identity.
    """
    rotvec = np.asarray(rotvec, dtype=float)
    angle = np.linalg.norm(rotvec, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(a/2)/a, finite at a = 0
    scale = np.where(angle > 0, np.sin(half) / np.where(angle > 0, angle, 1.0), 0.5)
    return np.concatenate((np.cos(half), scale * rotvec), axis=-1)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlochVector:
    sx: float
    sy: float
    sz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @classmethod
    def from_array(cls, v: Sequence[float]) -> "BlochVector":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def norm(self) -> float:
        return math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)

    def dot(self, other: "BlochVector") -> float:
        return self.sx * other.sx + self.sy * other.sy + self.sz * other.sz


SX = BlochVector(1.0, 0.0, 0.0)
SY = BlochVector(0.0, 1.0, 0.0)
SZ = BlochVector(0.0, 0.0, 1.0)
CARDINAL_STATES = {"SX": SX, "SY": SY, "SZ": SZ}


@dataclass(frozen=True)
class AngleAxis:
    """Rotation angle in ``[0, 2*pi]`` and unit axis (``None`` when undefined)."""

    angle: float
    axis: Optional[tuple[float, float, float]]


@dataclass(frozen=True)
class Rotation:
    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, q: Sequence[float]) -> "Rotation":
        return cls(float(q[0]), float(q[1]), float(q[2]), float(q[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def inverse(self) -> "Rotation":
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def then(self, other: "Rotation") -> "Rotation":
        """This rotation followed by ``other``."""
        return compose(self, other)


def from_axis_angle(axis: Sequence[float], angle: float) -> Rotation:
    """Rotation by ``angle`` about the unit vector ``axis``."""
    if not math.isfinite(angle):
        raise InvalidArgument(f"angle must be finite, got {angle}")
    a = np.asarray(axis, dtype=float)
    if a.shape != (3,):
        raise InvalidArgument("axis must be a 3-vector")
    if angle != 0.0 and abs(np.linalg.norm(a) - 1.0) > AXIS_TOL:
        raise InvalidArgument(f"axis must be unit length, |axis| = {np.linalg.norm(a)}")
    s = math.sin(0.5 * angle)
    return Rotation(math.cos(0.5 * angle), s * a[0], s * a[1], s * a[2])


def compose(first: Rotation, second: Rotation) -> Rotation:
    """Apply ``first`` then ``second`` (quaternion product ``second * first``)."""
    q = qnormalize(qmul(second.as_array(), first.as_array()))
    return Rotation.from_array(q)


def to_angle_axis(r: Rotation) -> AngleAxis:
    v = np.array([r.x, r.y, r.z])
    nv = float(np.linalg.norm(v))
    angle = 2.0 * math.atan2(nv, r.w)
    if nv <= DEGENERATE_TOL:
        return AngleAxis(angle, None)
    a = v / nv
    return AngleAxis(angle, (float(a[0]), float(a[1]), float(a[2])))


def angle_relative_to(r: Rotation, reference: AngleAxis) -> float:
    """Signed deviation of ``r`` from a reference rotation.

    The residual ``r * reference^-1`` is read as a small rotation; its angle
    is returned with the sign of the residual axis projected on
    ``reference.axis``.

    Raises
    ------
    OutOfLinearRegime
        If the residual angle exceeds pi/2.
    """
    if reference.axis is None:
        raise InvalidArgument("reference axis must be defined")
    ref = from_axis_angle(reference.axis, reference.angle)
    res = qmul(r.as_array(), ref.inverse().as_array())
    if res[0] < 0:
        res = -res
    vnorm = float(np.linalg.norm(res[1:]))
    angle = 2.0 * math.atan2(vnorm, res[0])
    if angle > 0.5 * math.pi:
        raise OutOfLinearRegime(f"residual rotation {angle:.3f} rad exceeds pi/2")
    proj = float(np.dot(res[1:], reference.axis))
    return angle if proj >= 0 else -angle


def apply(r: Rotation, s: BlochVector) -> BlochVector:
    return BlochVector.from_array(qrotate(r.as_array(), s.as_array()))


def state_fidelity(initial: BlochVector, final: BlochVector) -> float:
    """Overlap probability ``(1 + initial . final) / 2`` for a pure initial state."""
    n = initial.norm()
    if n == 0.0:
        raise InvalidArgument("initial Bloch vector has zero length")
    return 0.5 * (1.0 + initial.dot(final) / n)
