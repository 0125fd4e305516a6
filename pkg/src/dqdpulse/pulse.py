"""Time-domain detuning waveforms for primitive rotations.

Ideal primitives are square detuning pulses at amplitude +-Delta (sign selects
the x'/z' rotation axis) whose duration encodes the rotation angle through the
pulsed rotation period T_rot = 2 pi hbar / sqrt(2) Delta.  Realizable pulses
have quarter-sine rise and fall ramps of full 0-100% duration tau; they
realize the same rotation as the ideal square pulse after a multiplicative
amplitude correction xi and an additive pulse-duration correction Delta T
(found numerically by `calibration`).  A corrected pulse spans the ideal
square duration plus Delta T, with the two ramps inside that span, so its
flat top lasts ideal + Delta T - 2 tau; Delta T itself never counts the
ramps and stays strictly positive for tau > 0.

All durations at this module's API (tau, flat tops, Delta T) are expressed in
units of the free rotation period t_x; conversions to seconds happen when
waveforms are built.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .decomposition import AxisLabel, DecompositionResult, PrimitiveRotation
from .two_level import (
    DetuningWaveform,
    QubitParams,
    _Segment,
    realized_unitary,
)

_SQRT2 = math.sqrt(2.0)


class PulseError(ValueError):
    """Raised for invalid pulse construction inputs."""


class LookupError_(KeyError):
    """Raised when a calibration table lacks a requested (tau, angle) entry."""


class RampShape(enum.Enum):
    SINE = "SINE"


@dataclass(frozen=True)
class RiseSpec:
    """Full 0-100% ramp duration in units of t_x; tau = 0 means square edges."""

    tau: float
    shape: RampShape = RampShape.SINE

    def __post_init__(self):
        if self.tau < 0.0:
            raise PulseError(f"tau must be >= 0, got {self.tau}")
        if self.shape is not RampShape.SINE:
            raise PulseError(f"unsupported ramp shape {self.shape}")


@dataclass(frozen=True)
class CorrectionEntry:
    """Calibrated (xi, Delta T) pair for one (tau, target angle).

    ``delta_t`` is the total-duration extension over the ideal square pulse
    in units of t_x; the ramps live inside the extended span and are not
    counted in it.  ``complement`` marks entries calibrated through the
    indirect angle + 2*pi route used for targets below the minimum
    realizable angle.
    """

    tau: float
    target_angle: float
    xi: float
    delta_t: float
    residual_error: float
    complement: bool = False

    def __post_init__(self):
        if self.tau < 0.0:
            raise PulseError(f"tau must be >= 0, got {self.tau}")
        if self.xi <= 0.0:
            raise PulseError(f"xi must be positive, got {self.xi}")
        if self.tau > 0.0 and not self.delta_t > 0.0:
            raise PulseError(
                f"delta_t must be positive for tau > 0, got {self.delta_t}"
            )
        if self.delta_t < 0.0:
            raise PulseError(f"delta_t must be >= 0, got {self.delta_t}")
        if not self.residual_error < 1e-4:
            raise PulseError(
                f"residual_error {self.residual_error:.3e} exceeds the 1e-4 bound"
            )

    @property
    def effective_angle(self) -> float:
        return self.target_angle + (2.0 * math.pi if self.complement else 0.0)

    @classmethod
    def ideal(cls, angle: float) -> "CorrectionEntry":
        """The exact tau = 0 entry (xi = 1, Delta T = 0)."""
        return cls(0.0, angle, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class PulseSegment:
    """One realizable pulse: amplitude (units of Delta, sign = axis),
    flat-top duration and ramp spec (both in units of t_x)."""

    amplitude: float
    flat_duration: float
    rise: RiseSpec
    axis_label: AxisLabel | None = None
    angle: float | None = None
    xi: float | None = None
    delta_t: float | None = None

    def __post_init__(self):
        if self.flat_duration < 0.0:
            raise PulseError(f"flat_duration must be >= 0, got {self.flat_duration}")

    @property
    def total_duration(self) -> float:
        return self.flat_duration + 2.0 * self.rise.tau


@dataclass(frozen=True)
class PulseTrain:
    """Temporally ordered pulse segments; gaps are exact free evolution."""

    segments: tuple[PulseSegment, ...]
    gap: float = 0.0

    def __post_init__(self):
        if self.gap < 0.0:
            raise PulseError(f"gap must be >= 0, got {self.gap}")

    @property
    def total_duration(self) -> float:
        dur = sum(s.total_duration for s in self.segments)
        if self.segments:
            dur += self.gap * (len(self.segments) - 1)
        return dur

    def waveform(self, params: QubitParams) -> DetuningWaveform:
        t_x = params.t_x
        segs: list[_Segment] = []
        for i, seg in enumerate(self.segments):
            if i > 0 and self.gap > 0.0:
                segs.append(_Segment(self.gap * t_x))
            amp = seg.amplitude * params.delta
            tau_s = seg.rise.tau * t_x
            if tau_s > 0.0:
                segs.append(_Segment(tau_s, amp=amp, freq=math.pi / (2.0 * tau_s)))
            if seg.flat_duration > 0.0:
                segs.append(_Segment(seg.flat_duration * t_x, base=amp))
            if tau_s > 0.0:
                segs.append(
                    _Segment(
                        tau_s, amp=amp, freq=-math.pi / (2.0 * tau_s), phase=math.pi / 2.0
                    )
                )
        return DetuningWaveform(segs)

    def to_json(self) -> str:
        """Matrix-order export matching the decomposition schema plus
        per-segment correction fields."""
        records = []
        for seg in reversed(self.segments):
            records.append(
                {
                    "axis": seg.axis_label.value if seg.axis_label else None,
                    "angle": _g17(seg.angle),
                    "xi": _g17(seg.xi),
                    "delta_t": _g17(seg.delta_t),
                    "tau": _g17(seg.rise.tau),
                }
            )
        return json.dumps(records)


def _g17(x):
    return None if x is None else float(f"{x:.17g}")


def amplitude_sign(label: AxisLabel) -> float:
    """Detuning sign realizing each axis: +Delta drives x', -Delta drives z'."""
    return 1.0 if label is AxisLabel.XPRIME else -1.0


def ideal_flat_duration(angle: float) -> float:
    """Ideal square-pulse duration for a rotation angle, in units of t_x.

    A full 2*pi rotation takes T_rot = t_x / sqrt(2) at amplitude Delta.
    """
    return angle / (2.0 * math.pi) / _SQRT2


def square_waveform(
    primitive: PrimitiveRotation, params: QubitParams
) -> DetuningWaveform:
    """Ideal square pulse realizing a primitive rotation exactly."""
    amp = amplitude_sign(primitive.axis_label) * params.delta
    duration = ideal_flat_duration(primitive.angle) * params.t_x
    return DetuningWaveform.constant(amp, duration)


def ramped_pulse_waveform(
    axis_sign: float,
    angle: float,
    tau: float,
    xi: float,
    delta_t: float,
    params: QubitParams,
) -> DetuningWaveform:
    """Sine-ramped pulse with explicit corrections (no table consistency checks).

    The pulse spans the ideal square duration of ``angle`` plus ``delta_t``,
    with both ramps of duration ``tau`` inside the span, so the flat top is
    ideal + delta_t - 2 tau.  All durations in units of t_x.
    """
    if xi <= 0.0:
        raise PulseError(f"xi must be positive, got {xi}")
    if delta_t < 0.0:
        raise PulseError(f"delta_t must be >= 0, got {delta_t}")
    flat = ideal_flat_duration(angle) + delta_t - 2.0 * tau
    if flat < -1e-12:
        raise PulseError(
            f"pulse span too short for the ramps: flat top {flat:.3e} < 0 "
            f"(angle {angle:.6f} below the minimum realizable angle?)"
        )
    seg = PulseSegment(axis_sign * xi, max(flat, 0.0), RiseSpec(tau))
    return PulseTrain((seg,)).waveform(params)


def ramped_waveform(
    primitive: PrimitiveRotation,
    rise: RiseSpec,
    correction: CorrectionEntry,
    params: QubitParams,
) -> DetuningWaveform:
    """Calibrated sine-ramped pulse for a primitive rotation."""
    if abs(correction.tau - rise.tau) > 1e-9:
        raise PulseError(
            f"correction tau {correction.tau} does not match rise tau {rise.tau}"
        )
    if abs(correction.target_angle - primitive.angle) > 1e-9:
        raise PulseError(
            f"correction angle {correction.target_angle} does not match primitive "
            f"angle {primitive.angle}"
        )
    return ramped_pulse_waveform(
        amplitude_sign(primitive.axis_label),
        correction.effective_angle,
        rise.tau,
        correction.xi,
        correction.delta_t,
        params,
    )


def _lobe_waveform(xi: float, tau: float, params: QubitParams) -> DetuningWaveform:
    """Zero-flat-top pulse: a single half-sine lobe of width 2 tau."""
    return ramped_pulse_waveform(1.0, 0.0, tau, xi, 2.0 * tau, params)


def _axis_vector(u: np.ndarray):
    """Rotation axis times sin(angle/2), and cos(angle/2), from an SU(2)-like
    matrix (global phase removed by the det-1 normalization of the product)."""
    c = 0.5 * (u[0, 0] + u[1, 1]).real
    sx = -(u[0, 1].imag + u[1, 0].imag) / 2.0
    sy = (u[1, 0].real - u[0, 1].real) / 2.0
    sz = -u[0, 0].imag
    return np.array([sx, sy, sz]), c


def _lobe_axis_mismatch(xi: float, tau: float, params: QubitParams) -> float:
    """Angle of the realized lobe rotation axis relative to x', in the
    (x, -z) half-plane; zero when the lobe rotates exactly about x'."""
    u = realized_unitary(_lobe_waveform(xi, tau, params), params).matrix
    svec, _ = _axis_vector(u)
    phi = math.atan2(-svec[2], svec[0])
    return phi - math.pi / 4.0


def lobe_xi(tau: float, params: QubitParams) -> float:
    """Amplitude factor making the zero-flat-top lobe rotate exactly about x'."""
    if tau <= 0.0:
        raise PulseError("lobe_xi requires tau > 0")
    grid = np.linspace(0.05, 3.5, 36)
    vals = [_lobe_axis_mismatch(x, tau, params) for x in grid]
    for (x0, f0), (x1, f1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if f0 == 0.0:
            return float(x0)
        # Skip branch-cut jumps from the overall rotation angle crossing 2*pi.
        if f0 * f1 < 0.0 and abs(f0) < 1.0 and abs(f1) < 1.0:
            return float(
                brentq(_lobe_axis_mismatch, x0, x1, args=(tau, params), xtol=1e-14)
            )
    raise PulseError(f"no x'-aligned lobe amplitude found for tau = {tau}")


def min_angle(tau: float, params: QubitParams) -> float:
    """Rotation angle of the calibrated zero-flat-top lobe at rise time tau.

    This is the smallest angle directly realizable at that rise time; smaller
    rotations must take the indirect 2*pi-complement route.
    """
    if tau == 0.0:
        return 0.0
    xi = lobe_xi(tau, params)
    u = realized_unitary(_lobe_waveform(xi, tau, params), params).matrix
    svec, c = _axis_vector(u)
    if svec[0] < 0.0:  # report the rotation about the +x' representative
        svec, c = -svec, -c
    s = math.sqrt(float(np.dot(svec, svec)))
    return (2.0 * math.atan2(s, c)) % (2.0 * math.pi)


# Rise times whose minimum realizable angles are pi/8, pi/6, pi/4, pi/3 and
# pi/2 (in units of t_x; recovered by inverse search with `reference_tau`).
REFERENCE_MIN_ANGLES = (
    math.pi / 8.0,
    math.pi / 6.0,
    math.pi / 4.0,
    math.pi / 3.0,
    math.pi / 2.0,
)

_REFERENCE_TAUS: dict[float, float] | None = None


def reference_tau(target_angle: float, params: QubitParams) -> float:
    """Rise time whose minimum realizable angle equals ``target_angle``."""
    return float(
        brentq(
            lambda t: min_angle(t, params) - target_angle,
            5e-4,
            0.25,
            xtol=1e-12,
        )
    )


def reference_taus(params: QubitParams) -> dict[float, float]:
    """Map from the five reference minimum angles to their rise times."""
    global _REFERENCE_TAUS
    if _REFERENCE_TAUS is None:
        _REFERENCE_TAUS = {a: reference_tau(a, params) for a in REFERENCE_MIN_ANGLES}
    return dict(_REFERENCE_TAUS)


def subdivide_x(angle: float, tau: float, params: QubitParams) -> list[float]:
    """Split an x rotation into equal sub-rotation angles, each at least the
    minimum realizable angle, with the count maximal.

    Angles below the minimum fall back to the single indirect complement
    rotation by angle + 2*pi.  At tau = 0 there is no minimum and the angle
    is returned unsplit.
    """
    if angle <= 0.0:
        raise PulseError(f"angle must be positive, got {angle}")
    if tau == 0.0:
        return [angle]
    m = min_angle(tau, params)
    if angle < m:
        return [angle + 2.0 * math.pi]
    # The relative guard absorbs float noise in m at exact-multiple ratios.
    k = int(math.floor(angle / m * (1.0 + 1e-9) + 1e-9))
    return [angle / k] * k


def train_waveform(
    result: DecompositionResult,
    rise: RiseSpec,
    table,
    params: QubitParams,
    gap: float = 0.0,
) -> DetuningWaveform:
    """Concatenated calibrated waveform realizing a decomposition."""
    return build_train(result, rise, table, params, gap).waveform(params)


def build_train(
    result: DecompositionResult,
    rise: RiseSpec,
    table,
    params: QubitParams,
    gap: float = 0.0,
) -> PulseTrain:
    """Pulse train for a decomposition; primitives are applied in reverse
    list order (the decomposition stores matrix order)."""
    segments = []
    for prim in reversed(result.primitives):
        if rise.tau == 0.0:
            entry = CorrectionEntry.ideal(prim.angle)
        elif table is None:
            raise LookupError_(
                f"no calibration table provided for tau = {rise.tau}"
            )
        else:
            entry = table.lookup(
                rise.tau, prim.angle, axis_sign=amplitude_sign(prim.axis_label)
            )
        flat = (
            ideal_flat_duration(entry.effective_angle)
            + entry.delta_t
            - 2.0 * rise.tau
        )
        if flat < -1e-12:
            raise PulseError(
                f"calibration entry for angle {prim.angle:.6f} at tau "
                f"{rise.tau} leaves a negative flat top ({flat:.3e})"
            )
        segments.append(
            PulseSegment(
                amplitude=amplitude_sign(prim.axis_label) * entry.xi,
                flat_duration=max(flat, 0.0),
                rise=rise,
                axis_label=prim.axis_label,
                angle=prim.angle,
                xi=entry.xi,
                delta_t=entry.delta_t,
            )
        )
    return PulseTrain(tuple(segments), gap=gap)


def export_waveform_csv(
    waveform: DetuningWaveform,
    path,
    params: QubitParams,
    n_samples: int = 2001,
    meta: dict | None = None,
) -> None:
    """Write a waveform as CSV with columns t,epsilon in units of t_x and
    Delta; `# key=value` comment lines carry metadata."""
    times = np.linspace(0.0, waveform.duration, n_samples)
    eps = np.atleast_1d(waveform.eps(times))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# units: t in T_x, epsilon in Delta\n")
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("t,epsilon\n")
        for t, e in zip(times / params.t_x, eps / params.delta):
            fh.write(f"{t:.17g},{e:.17g}\n")
