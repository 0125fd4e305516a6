"""Decomposition of Bloch-sphere rotations into x'/z' square-pulse primitives.

The device realizes positive rotations about only two axes,

    x' = (1, 0, -1)/sqrt(2)   (detuning eps = +Delta),
    z' = (1, 0, +1)/sqrt(2)   (detuning eps = -Delta),

so every requested rotation is compiled into an ordered list of positive-angle
primitive rotations about these axes.  Negative angles are replaced by their
positive 2*pi complements, which is exact up to global phase.

Primitive lists are stored in matrix order: the product
``primitives[0] @ primitives[1] @ ... @ primitives[-1]`` equals the target
rotation up to global phase, i.e. the *last* list element is applied first in
time.  Pulse-train builders must therefore iterate the list in reverse.

Routes provided:

* a five-pulse scheme valid for any axis (conjugate an x' rotation into place),
* the three-pulse y-axis scheme with quarter/three-quarter z' flanks,
* closed-form three-pulse schemes for the x and z axes,
* a general three-pulse Euler (x', z', x') factorization,
* single-pulse state preparation from the DQD ground state,
* a small gate library in the standard and rotated (x', y, z') bases.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .two_level import (
    BlochVector,
    TwoLevelError,
    Unitary2,
    XPRIME_AXIS,
    ZPRIME_AXIS,
    Y_AXIS,
    _rotation_matrix,
)

TWO_PI = 2.0 * math.pi
_ZERO_TOL = 1e-12

# When enabled (e.g. by the test suite), every constructed decomposition is
# verified against its target by direct matrix products.
ORACLE_CHECK = False
_ORACLE_TOL = 1e-10


class DecompositionError(ValueError):
    """Raised for invalid decomposition inputs."""


class AxisLabel(enum.Enum):
    XPRIME = "XPRIME"
    ZPRIME = "ZPRIME"


class SchemeTag(enum.Enum):
    FIVE_PULSE = "FIVE_PULSE"
    THREE_PULSE_Y = "THREE_PULSE_Y"
    THREE_PULSE_XZ = "THREE_PULSE_XZ"
    SINGLE = "SINGLE"
    PREP = "PREP"


class PrepTarget(enum.Enum):
    ZERO = "ZERO"
    ONE = "ONE"


class GateName(enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    PHASE = "PHASE"


class Basis(enum.Enum):
    STANDARD = "STANDARD"
    ROTATED = "ROTATED"


_AXIS_VECTORS = {
    AxisLabel.XPRIME: XPRIME_AXIS.as_array(),
    AxisLabel.ZPRIME: ZPRIME_AXIS.as_array(),
}


def normalize_angle(angle: float) -> float:
    """Reduce an angle into [0, 2*pi); values within 1e-12 of 0/2*pi map to 0."""
    a = math.fmod(angle, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a < _ZERO_TOL or TWO_PI - a < _ZERO_TOL:
        return 0.0
    return a


@dataclass(frozen=True)
class RotationSpec:
    """Requested rotation: unit axis and angle normalized into [0, 2*pi)."""

    axis: BlochVector
    angle: float

    def __post_init__(self):
        self.axis.require_unit()
        object.__setattr__(self, "angle", normalize_angle(self.angle))

    def target_matrix(self) -> np.ndarray:
        return _rotation_matrix(self.axis.as_array(), self.angle)


@dataclass(frozen=True)
class PrimitiveRotation:
    """Positive rotation about x' or z'; angle strictly inside (0, 2*pi)."""

    axis_label: AxisLabel
    angle: float

    def __post_init__(self):
        if not 0.0 < self.angle < TWO_PI:
            raise DecompositionError(
                f"primitive angle must lie in (0, 2*pi), got {self.angle}"
            )

    def matrix(self) -> np.ndarray:
        return _rotation_matrix(_AXIS_VECTORS[self.axis_label], self.angle)

    def unitary(self) -> Unitary2:
        return Unitary2(self.matrix())


@dataclass(frozen=True)
class DecompositionResult:
    """Ordered primitive list (matrix order) with the scheme that produced it."""

    primitives: tuple[PrimitiveRotation, ...]
    scheme_tag: SchemeTag

    def unitary_matrix(self) -> np.ndarray:
        u = np.eye(2, dtype=complex)
        for p in self.primitives:
            u = u @ p.matrix()
        return u

    def unitary(self) -> Unitary2:
        return Unitary2(self.unitary_matrix())

    def total_angle(self) -> float:
        return sum(p.angle for p in self.primitives)

    def to_json(self) -> str:
        return json.dumps(
            [
                {"axis": p.axis_label.value, "angle": float(f"{p.angle:.17g}")}
                for p in self.primitives
            ]
        )

    @classmethod
    def from_json(cls, text: str, scheme_tag: SchemeTag = SchemeTag.FIVE_PULSE):
        prims = tuple(
            PrimitiveRotation(AxisLabel(d["axis"]), float(d["angle"]))
            for d in json.loads(text)
        )
        return cls(prims, scheme_tag)


def _fidelity(u: np.ndarray, v: np.ndarray) -> float:
    return float(abs(np.trace(u.conj().T @ v)) / 2.0)


def _build(pairs, tag: SchemeTag, target: np.ndarray | None) -> DecompositionResult:
    """Normalize, elide zero angles, merge adjacent same-axis primitives."""
    merged: list[tuple[AxisLabel, float]] = []
    for label, angle in pairs:
        angle = normalize_angle(angle)
        if angle == 0.0:
            continue
        if merged and merged[-1][0] is label:
            combined = normalize_angle(merged[-1][1] + angle)
            merged.pop()
            if combined != 0.0:
                merged.append((label, combined))
        else:
            merged.append((label, angle))
    prims = tuple(PrimitiveRotation(label, angle) for label, angle in merged)
    if len(prims) == 1 and tag is not SchemeTag.PREP:
        tag = SchemeTag.SINGLE
    result = DecompositionResult(prims, tag)
    if ORACLE_CHECK and target is not None:
        fid = _fidelity(result.unitary_matrix(), target)
        if fid < 1.0 - _ORACLE_TOL:
            raise AssertionError(
                f"decomposition oracle failed: fidelity {fid:.15f} for tag {tag}"
            )
    return result


def decompose_general_5(spec: RotationSpec) -> DecompositionResult:
    """General rotation as x'-conjugated z'-tilt: up to five primitives.

    The conjugation W = R_x'(a) R_z'(theta) maps x' onto the requested axis,
    where theta is the polar angle of the axis from x' and a its azimuth
    about x' measured from y towards z' (the axis' spherical angles in the
    rotated (x', y, z') frame).
    """
    if spec.angle == 0.0:
        return _build([], SchemeTag.FIVE_PULSE, None)
    n = spec.axis.as_array()
    cx = float(np.clip(np.dot(n, XPRIME_AXIS.as_array()), -1.0, 1.0))
    theta = math.acos(cx)
    cy = float(np.dot(n, Y_AXIS.as_array()))
    cz = float(np.dot(n, ZPRIME_AXIS.as_array()))
    # Snap near-degenerate alignment with +-x'; arccos amplifies float noise
    # there and the snapped form is exact to second order in theta.
    if theta < 1e-6:
        theta, a = 0.0, 0.0
    elif math.pi - theta < 1e-6:
        theta, a = math.pi, 0.0
    else:
        a = math.atan2(cz, cy)
    pairs = [
        (AxisLabel.XPRIME, a),
        (AxisLabel.ZPRIME, theta),
        (AxisLabel.XPRIME, spec.angle),
        (AxisLabel.ZPRIME, -theta),
        (AxisLabel.XPRIME, -a),
    ]
    return _build(pairs, SchemeTag.FIVE_PULSE, spec.target_matrix())


def decompose_y(angle: float) -> DecompositionResult:
    """Three-pulse y rotation; the swapped-axis form serves negative angles."""
    if angle >= 0.0:
        alpha = normalize_angle(angle)
        pairs = [
            (AxisLabel.ZPRIME, math.pi / 2.0),
            (AxisLabel.XPRIME, alpha),
            (AxisLabel.ZPRIME, 3.0 * math.pi / 2.0),
        ]
    else:
        alpha = normalize_angle(-angle)
        pairs = [
            (AxisLabel.XPRIME, math.pi / 2.0),
            (AxisLabel.ZPRIME, alpha),
            (AxisLabel.XPRIME, 3.0 * math.pi / 2.0),
        ]
    target = _rotation_matrix(Y_AXIS.as_array(), angle)
    return _build(pairs, SchemeTag.THREE_PULSE_Y, target)


def theta_angles_xz(alpha: float, axis: str) -> tuple[float, float]:
    """Closed-form (Theta1, Theta2) of the symmetric three-pulse x/z schemes.

    R_axis(alpha) = R_x'(Theta1) R_z'(Theta2) R_x'(Theta1) with

        Theta1 = arccos(+sqrt(2) cos(alpha/2) / sqrt(cos(alpha/2)^2 + 1))  (x)
        Theta1 = arccos(-sqrt(2) cos(alpha/2) / sqrt(cos(alpha/2)^2 + 1))  (z)
        Theta2 = 2 arctan(sin Theta1)            for the x axis,
        Theta2 = 2 (pi - arctan(sin Theta1))     for the z axis.

    The two arccos branches coincide at alpha = pi, where the angles are
    exactly (pi/2, pi/2) for x and (pi/2, 3*pi/2) for z.  Both branches were
    validated against brute-force matrix products; only these satisfy the
    identity for all alpha.
    """
    axis = axis.lower()
    if axis not in ("x", "z"):
        raise DecompositionError(f"closed-form angles exist for x/z only, got {axis!r}")
    c = math.cos(alpha / 2.0)
    ratio = math.sqrt(2.0) * c / math.sqrt(c * c + 1.0)
    if axis == "x":
        theta1 = math.acos(ratio)
        theta2 = 2.0 * math.atan(math.sin(theta1))
    else:
        theta1 = math.acos(-ratio)
        theta2 = 2.0 * (math.pi - math.atan(math.sin(theta1)))
    return theta1, theta2


def decompose_axis(axis: str, angle: float) -> DecompositionResult:
    """Three-pulse decomposition for the x, y or z Bloch axes.

    For the z axis the swapped-axis complement variant (which realizes
    R_z(-(2*pi - alpha)) = -R_z(alpha)) is emitted whenever it strictly
    reduces the total primitive angle.
    """
    axis = axis.lower()
    if axis == "y":
        return decompose_y(normalize_angle(angle))
    if axis not in ("x", "z"):
        raise DecompositionError(f"unsupported axis {axis!r}; use decompose_general_*")
    alpha = normalize_angle(angle)
    if alpha == 0.0:
        return _build([], SchemeTag.THREE_PULSE_XZ, None)
    theta1, theta2 = theta_angles_xz(alpha, axis)
    pairs = [
        (AxisLabel.XPRIME, theta1),
        (AxisLabel.ZPRIME, theta2),
        (AxisLabel.XPRIME, theta1),
    ]
    if axis == "z":
        # Swapped-axis complement variant: realizes R_z(-(2*pi - alpha)),
        # equal to R_z(alpha) up to global phase.  Emitted when it strictly
        # shortens the total primitive angle.
        t1c = math.pi - theta1
        if 2.0 * t1c + theta2 < 2.0 * theta1 + theta2 - _ZERO_TOL:
            pairs = [
                (AxisLabel.ZPRIME, t1c),
                (AxisLabel.XPRIME, theta2),
                (AxisLabel.ZPRIME, t1c),
            ]
    vec = {"x": (1.0, 0.0, 0.0), "z": (0.0, 0.0, 1.0)}[axis]
    target = _rotation_matrix(np.array(vec), alpha)
    return _build(pairs, SchemeTag.THREE_PULSE_XZ, target)


_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def decompose_general_3(spec: RotationSpec) -> DecompositionResult:
    """General rotation as an (x', z', x') Euler factorization.

    The target is expressed in the rotated (x', y, z') frame and its ZXZ
    Euler angles are read off after conjugation with the x<->z swap; when the
    target commutes with x' the single-primitive form is emitted.
    """
    if spec.angle == 0.0:
        return _build([], SchemeTag.THREE_PULSE_XZ, None)
    n = spec.axis.as_array()
    n_primed = np.array(
        [
            float(np.dot(n, XPRIME_AXIS.as_array())),
            float(np.dot(n, Y_AXIS.as_array())),
            float(np.dot(n, ZPRIME_AXIS.as_array())),
        ]
    )
    u = _rotation_matrix(n_primed, spec.angle)
    v = _HADAMARD @ u @ _HADAMARD  # now of the form R_z(T1) R_x(T2) R_z(T3)
    r00 = abs(v[0, 0])
    r01 = abs(v[0, 1])
    theta2 = 2.0 * math.atan2(r01, r00)
    if r01 < 1e-9:
        pairs = [(AxisLabel.XPRIME, -2.0 * _arg(v[0, 0]))]
    elif r00 < 1e-9:
        theta1 = -2.0 * (_arg(v[0, 1]) + math.pi / 2.0)
        pairs = [(AxisLabel.XPRIME, theta1), (AxisLabel.ZPRIME, math.pi)]
    else:
        s = -_arg(v[0, 0])
        d = -(_arg(v[0, 1]) + math.pi / 2.0)
        pairs = [
            (AxisLabel.XPRIME, s + d),
            (AxisLabel.ZPRIME, theta2),
            (AxisLabel.XPRIME, s - d),
        ]
    return _build(pairs, SchemeTag.THREE_PULSE_XZ, spec.target_matrix())


def _arg(z: complex) -> float:
    return math.atan2(z.imag, z.real)


def decompose_x_subdivided(angle: float, k: int) -> DecompositionResult:
    """x rotation as k back-to-back three-pulse trains of R_x(angle / k).

    Adjacent same-axis primitives merge, so the emitted sequence alternates
    between the two detuning signs 2k times; the oscillation averages away
    part of any quasistatic detuning offset.
    """
    if k < 1:
        raise DecompositionError(f"k must be >= 1, got {k}")
    alpha = normalize_angle(angle)
    sub = alpha / k
    theta1, theta2 = theta_angles_xz(sub, "x")
    pairs = []
    for _ in range(k):
        pairs += [
            (AxisLabel.XPRIME, theta1),
            (AxisLabel.ZPRIME, theta2),
            (AxisLabel.XPRIME, theta1),
        ]
    target = _rotation_matrix(np.array([1.0, 0.0, 0.0]), alpha)
    return _build(pairs, SchemeTag.THREE_PULSE_XZ, target)


def prepare_state(target: PrepTarget) -> DecompositionResult:
    """Single-pulse preparation from the DQD ground state at the +x pole."""
    if target is PrepTarget.ZERO:
        pairs = [(AxisLabel.ZPRIME, math.pi)]
    elif target is PrepTarget.ONE:
        pairs = [(AxisLabel.XPRIME, math.pi)]
    else:
        raise DecompositionError(f"unknown preparation target {target!r}")
    return _build(pairs, SchemeTag.PREP, None)


def gate(
    name: GateName, basis: Basis = Basis.ROTATED, phi: float | None = None
) -> DecompositionResult:
    """Pulse sequence for a named logic gate.

    In the rotated (x', y, z') basis the axis gates need a single pulse; in
    the standard basis they route through the three-pulse axis schemes.
    """
    if name is GateName.PHASE and phi is None:
        raise DecompositionError("PHASE gate requires the angle phi")
    if basis is Basis.ROTATED:
        if name is GateName.X:
            return _build([(AxisLabel.ZPRIME, math.pi)], SchemeTag.SINGLE, None)
        if name is GateName.Z:
            return _build([(AxisLabel.XPRIME, math.pi)], SchemeTag.SINGLE, None)
        if name is GateName.PHASE:
            return _build([(AxisLabel.XPRIME, phi)], SchemeTag.SINGLE, None)
        if name is GateName.Y:
            return decompose_y(math.pi)
        if name is GateName.H:
            y_part = decompose_y(math.pi / 2.0)
            pairs = [(p.axis_label, p.angle) for p in y_part.primitives]
            pairs.append((AxisLabel.XPRIME, math.pi))  # applied first in time
            return _build(pairs, SchemeTag.FIVE_PULSE, None)
    elif basis is Basis.STANDARD:
        if name is GateName.X:
            return decompose_axis("x", math.pi)
        if name is GateName.Y:
            return decompose_axis("y", math.pi)
        if name is GateName.Z:
            return decompose_axis("z", math.pi)
        if name is GateName.PHASE:
            return decompose_axis("z", phi)
        if name is GateName.H:
            axis = BlochVector.from_array(np.array([1.0, 0.0, 1.0]) / math.sqrt(2.0))
            return decompose_general_3(RotationSpec(axis, math.pi))
    raise DecompositionError(f"unknown gate {name!r} in basis {basis!r}")


def to_rotated_frame(matrix: np.ndarray) -> np.ndarray:
    """Express a lab-frame operator in the rotated (x', y, z') gate basis."""
    ry = _rotation_matrix(Y_AXIS.as_array(), math.pi / 4.0)
    return ry @ matrix @ ry.conj().T
