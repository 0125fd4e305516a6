"""Exact dynamics of the effective two-level charge qubit.

The logical basis puts |0> and |1> on the poles of the Bloch sphere and the
effective Hamiltonian is

    H(eps) = -(eps/2) sigma_z + (Delta/2) sigma_x,

with detuning ``eps`` controlled by the gate bias and ``Delta`` the fixed
hybridisation gap.  A constant detuning therefore rotates the state about the
axis (Delta, 0, -eps)/|...| at angular rate sqrt(Delta^2 + eps^2)/hbar.  The
propagator for an arbitrary detuning waveform is integrated with
midpoint-exponential steps: each step applies the exact 2x2 exponential of the
Hamiltonian evaluated at the step midpoint, which is norm preserving,
second-order accurate and exact on piecewise-constant waveforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

HBAR_EVS = 6.582119569e-16  # reduced Planck constant, eV*s
E_CHARGE = 1.602176634e-19  # elementary charge, C

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

_NORM_TOL = 1e-12
_UNITARY_TOL = 1e-10


class TwoLevelError(ValueError):
    """Raised when an input violates a two-level operation's domain."""


@dataclass(frozen=True)
class QubitParams:
    """Device parameters of the effective qubit.

    Parameters
    ----------
    delta : float
        Hybridisation gap in eV.  Sets the free rotation period
        ``t_x = 2 pi hbar / delta``.
    lam : float
        Dimensionless bias-to-detuning coefficient: eps = e * lam * V_bias.
    e_charge : float
        Elementary charge in C.
    """

    delta: float
    lam: float
    e_charge: float = E_CHARGE

    def __post_init__(self):
        if not self.delta > 0:
            raise TwoLevelError(f"delta must be positive, got {self.delta}")
        if not self.lam > 0:
            raise TwoLevelError(f"lam must be positive, got {self.lam}")

    @property
    def t_x(self) -> float:
        """Free x-rotation period 2 pi hbar / Delta in seconds."""
        return 2.0 * math.pi * HBAR_EVS / self.delta

    @classmethod
    def reference(cls) -> "QubitParams":
        """Device-like reference values (gap 11.7 ueV, lever arm 0.421)."""
        return cls(delta=11.7e-6, lam=0.421)


@dataclass(frozen=True)
class QubitState:
    """Normalized two-component amplitude vector on the logical basis."""

    a0: complex
    a1: complex

    def __post_init__(self):
        if abs(self.norm_sq() - 1.0) > _NORM_TOL:
            raise TwoLevelError(
                f"state norm^2 deviates from 1 by {abs(self.norm_sq() - 1.0):.3e}"
            )

    def norm_sq(self) -> float:
        return abs(self.a0) ** 2 + abs(self.a1) ** 2

    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)

    def bloch(self) -> np.ndarray:
        """Bloch vector (x, y, z) of the state."""
        cross = np.conj(self.a0) * self.a1
        return np.array(
            [
                2.0 * cross.real,
                2.0 * cross.imag,
                abs(self.a0) ** 2 - abs(self.a1) ** 2,
            ]
        )

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "QubitState":
        return cls(complex(vec[0]), complex(vec[1]))

    @classmethod
    def zero(cls) -> "QubitState":
        return cls(1.0 + 0.0j, 0.0j)

    @classmethod
    def one(cls) -> "QubitState":
        return cls(0.0j, 1.0 + 0.0j)

    @classmethod
    def plus_x(cls) -> "QubitState":
        """Equal superposition (|0> + |1>)/sqrt(2); the DQD bonding state."""
        s = 1.0 / math.sqrt(2.0)
        return cls(s + 0.0j, s + 0.0j)

    @classmethod
    def from_bloch_angles(cls, theta: float, phi: float) -> "QubitState":
        return cls(
            math.cos(theta / 2.0) + 0.0j,
            complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2.0),
        )


@dataclass(frozen=True)
class BlochVector:
    """Real three-vector; unit norm when used as a rotation axis."""

    nx: float
    ny: float
    nz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    def norm(self) -> float:
        return math.sqrt(self.nx**2 + self.ny**2 + self.nz**2)

    def require_unit(self, tol: float = _NORM_TOL) -> None:
        if abs(self.norm() - 1.0) > tol:
            raise TwoLevelError(f"axis is not unit norm: |n| = {self.norm():.15g}")

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def normalized(self) -> "BlochVector":
        n = self.norm()
        if n == 0.0:
            raise TwoLevelError("cannot normalize the zero vector")
        return BlochVector(self.nx / n, self.ny / n, self.nz / n)


_SQ2 = 1.0 / math.sqrt(2.0)

X_AXIS = BlochVector(1.0, 0.0, 0.0)
Y_AXIS = BlochVector(0.0, 1.0, 0.0)
Z_AXIS = BlochVector(0.0, 0.0, 1.0)
# Pulsed rotation axes: eps = +Delta drives x', eps = -Delta drives z'.
XPRIME_AXIS = BlochVector(_SQ2, 0.0, -_SQ2)
ZPRIME_AXIS = BlochVector(_SQ2, 0.0, _SQ2)


class Unitary2:
    """2x2 unitary with validated unitarity and unit-modulus determinant."""

    __slots__ = ("_m",)

    def __init__(self, matrix, tol: float = _UNITARY_TOL):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise TwoLevelError(f"expected a 2x2 matrix, got shape {m.shape}")
        dev = np.abs(m.conj().T @ m - IDENTITY2).max()
        if dev > tol:
            raise TwoLevelError(f"matrix is not unitary: |U^dag U - I|_max = {dev:.3e}")
        det_dev = abs(abs(np.linalg.det(m)) - 1.0)
        if det_dev > tol:
            raise TwoLevelError(f"|det U| deviates from 1 by {det_dev:.3e}")
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def u00(self) -> complex:
        return complex(self._m[0, 0])

    @property
    def u01(self) -> complex:
        return complex(self._m[0, 1])

    @property
    def u10(self) -> complex:
        return complex(self._m[1, 0])

    @property
    def u11(self) -> complex:
        return complex(self._m[1, 1])

    def dagger(self) -> "Unitary2":
        return Unitary2(self._m.conj().T)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2(self._m @ other._m)

    def apply(self, state: QubitState) -> QubitState:
        return QubitState.from_vector(self._m @ state.vector())

    def __repr__(self):
        return f"Unitary2({self._m.tolist()!r})"


@dataclass(frozen=True)
class _Segment:
    """One piece of a detuning waveform: eps(t) = base + amp*sin(phase + freq*t).

    ``fn`` overrides the sinusoid with an arbitrary callable (plus ``base``,
    which carries constant offsets such as quasistatic noise).
    """

    duration: float
    base: float = 0.0
    amp: float = 0.0
    freq: float = 0.0
    phase: float = 0.0
    fn: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def is_const(self) -> bool:
        return self.fn is None and (self.amp == 0.0 or self.freq == 0.0)

    def eps(self, t):
        t = np.asarray(t, dtype=float)
        if self.fn is not None:
            return self.base + np.asarray(self.fn(t), dtype=float)
        if self.is_const:
            value = self.base + self.amp * math.sin(self.phase)
            return np.full_like(t, value)
        return self.base + self.amp * np.sin(self.phase + self.freq * t)

    def const_value(self) -> float:
        return float(self.eps(0.0))

    def sliced(self, t0: float, t1: float) -> "_Segment":
        if self.fn is not None:
            f = self.fn
            return _Segment(t1 - t0, self.base, fn=lambda t, _f=f, _t0=t0: _f(t + _t0))
        return _Segment(
            t1 - t0, self.base, self.amp, self.freq, self.phase + self.freq * t0
        )


class DetuningWaveform:
    """Detuning schedule eps(t) over a finite duration.

    Times are in seconds and detunings in eV.  The waveform is a sequence of
    segments, each either exactly constant or a sinusoid arc (which covers
    quarter-sine rise and fall ramps); the propagator exploits constant
    segments for exact single-step evolution.
    """

    def __init__(self, segments: Sequence[_Segment]):
        segs = tuple(s for s in segments if s.duration > 0.0)
        for s in segs:
            if not math.isfinite(s.duration):
                raise TwoLevelError("segment duration must be finite")
        self.segments = segs
        self.duration = float(sum(s.duration for s in segs))

    @classmethod
    def constant(cls, eps: float, duration: float) -> "DetuningWaveform":
        return cls([_Segment(duration, base=eps)])

    @classmethod
    def piecewise_constant(cls, steps: Sequence[tuple[float, float]]) -> "DetuningWaveform":
        """Build from (eps, duration) pairs."""
        return cls([_Segment(d, base=e) for e, d in steps])

    @classmethod
    def from_callable(cls, fn: Callable, duration: float) -> "DetuningWaveform":
        return cls([_Segment(duration, fn=fn)])

    @classmethod
    def sine_arc(
        cls, amp: float, phase: float, freq: float, duration: float
    ) -> "DetuningWaveform":
        return cls([_Segment(duration, amp=amp, freq=freq, phase=phase)])

    def concat(self, other: "DetuningWaveform") -> "DetuningWaveform":
        return DetuningWaveform(self.segments + other.segments)

    def with_offset(self, delta_eps: float) -> "DetuningWaveform":
        """Shift the whole waveform by a constant detuning (noise model)."""
        shifted = [
            _Segment(s.duration, s.base + delta_eps, s.amp, s.freq, s.phase, s.fn)
            for s in self.segments
        ]
        return DetuningWaveform(shifted)

    def slice(self, t0: float, t1: float) -> "DetuningWaveform":
        if not 0.0 <= t0 <= t1 <= self.duration * (1 + 1e-12) + 1e-300:
            raise TwoLevelError(f"invalid slice [{t0}, {t1}] of duration {self.duration}")
        out = []
        start = 0.0
        for s in self.segments:
            end = start + s.duration
            lo = max(t0, start)
            hi = min(t1, end)
            if hi - lo > 0.0:
                out.append(s.sliced(lo - start, hi - start))
            start = end
        return DetuningWaveform(out)

    def eps(self, t):
        """Evaluate eps at time(s) t, clamped to the waveform's support."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        start = 0.0
        for i, s in enumerate(self.segments):
            end = start + s.duration
            last = i == len(self.segments) - 1
            mask = (t >= start) & (t < end) if not last else (t >= start) & (t <= end)
            if mask.any():
                out[mask] = s.eps(t[mask] - start)
            start = end
        return out if out.shape != (1,) else float(out[0])


def effective_hamiltonian(eps: float, params: QubitParams) -> np.ndarray:
    """Two-level Hamiltonian -(eps/2) sigma_z + (Delta/2) sigma_x in eV."""
    return -0.5 * eps * SIGMA_Z + 0.5 * params.delta * SIGMA_X


def square_pulse_unitary(axis: BlochVector, angle: float) -> Unitary2:
    """Rotation exp(-i * angle * (n . sigma) / 2) about a unit axis."""
    axis.require_unit()
    return Unitary2(_rotation_matrix(axis.as_array(), angle))


def _rotation_matrix(n: np.ndarray, angle: float) -> np.ndarray:
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    return np.array(
        [
            [c - 1j * s * n[2], -s * (n[1] + 1j * n[0])],
            [s * (n[1] - 1j * n[0]), c + 1j * s * n[2]],
        ],
        dtype=complex,
    )


def _default_dt_max(params: QubitParams) -> float:
    # Empirically below 1e-10 propagation error for all pulse shapes used.
    return params.t_x / 20000.0


def _check_dt_max(dt_max: float, params: QubitParams) -> float:
    if dt_max is None:
        return _default_dt_max(params)
    if dt_max <= 0.0:
        raise TwoLevelError(f"dt_max must be positive, got {dt_max}")
    if dt_max > params.t_x / 1000.0:
        raise TwoLevelError(
            f"dt_max {dt_max:.3e} exceeds the accuracy floor t_x/1000 = "
            f"{params.t_x / 1000.0:.3e}"
        )
    return dt_max


def _step_arrays(waveform: DetuningWaveform, params: QubitParams, dt_max: float):
    """Midpoint detunings and step widths covering the waveform in order."""
    eps_parts, dt_parts = [], []
    for s in waveform.segments:
        if s.is_const:
            eps_parts.append(np.array([s.const_value()]))
            dt_parts.append(np.array([s.duration]))
        else:
            n = max(1, math.ceil(s.duration / dt_max))
            dt = s.duration / n
            mids = (np.arange(n) + 0.5) * dt
            eps_parts.append(np.asarray(s.eps(mids), dtype=float).reshape(n))
            dt_parts.append(np.full(n, dt))
    if not eps_parts:
        return np.empty(0), np.empty(0)
    return np.concatenate(eps_parts), np.concatenate(dt_parts)


def _step_matrices(eps: np.ndarray, dts: np.ndarray, params: QubitParams) -> np.ndarray:
    """Exact per-step exponentials exp(-i H(eps) dt / hbar), shape (n, 2, 2)."""
    delta = params.delta
    omega = np.sqrt(delta**2 + eps**2)
    half = 0.5 * omega * dts / HBAR_EVS
    c = np.cos(half)
    s = np.sin(half)
    nx = delta / omega
    nz = -eps / omega
    mats = np.empty((len(eps), 2, 2), dtype=complex)
    mats[:, 0, 0] = c - 1j * s * nz
    mats[:, 0, 1] = -1j * s * nx
    mats[:, 1, 0] = -1j * s * nx
    mats[:, 1, 1] = c + 1j * s * nz
    return mats


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """Product mats[-1] @ ... @ mats[0] by pairwise (log-depth) reduction."""
    if len(mats) == 0:
        return IDENTITY2.copy()
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, IDENTITY2[None, :, :]])
        mats = np.matmul(mats[1::2], mats[0::2])
    return mats[0]


def _evolution_operator(
    waveform: DetuningWaveform, params: QubitParams, dt_max: float
) -> np.ndarray:
    eps, dts = _step_arrays(waveform, params, dt_max)
    return _ordered_product(_step_matrices(eps, dts, params))


def propagate(
    state: QubitState,
    waveform: DetuningWaveform,
    params: QubitParams,
    dt_max: float | None = None,
) -> QubitState:
    """Evolve a state under a detuning waveform (time-ordered propagator)."""
    dt_max = _check_dt_max(dt_max, params)
    u = _evolution_operator(waveform, params, dt_max)
    return QubitState.from_vector(u @ state.vector())


def propagate_trajectory(
    state: QubitState,
    waveform: DetuningWaveform,
    params: QubitParams,
    n_samples: int = 200,
    dt_max: float | None = None,
):
    """States at n_samples evenly spaced times over the waveform.

    Returns (times, states); times[0] = 0 holds the initial state.
    """
    dt_max = _check_dt_max(dt_max, params)
    times = np.linspace(0.0, waveform.duration, n_samples)
    vec = state.vector()
    states = [state]
    for t0, t1 in zip(times[:-1], times[1:]):
        u = _evolution_operator(waveform.slice(t0, t1), params, dt_max)
        vec = u @ vec
        vec = vec / math.sqrt(float(np.vdot(vec, vec).real))
        states.append(QubitState.from_vector(vec))
    return times, states


def realized_unitary(
    waveform: DetuningWaveform, params: QubitParams, dt_max: float | None = None
) -> Unitary2:
    """Effective rotation implemented by a waveform."""
    dt_max = _check_dt_max(dt_max, params)
    u = _evolution_operator(waveform, params, dt_max)
    return Unitary2(u, tol=1e-9)


def process_fidelity(u: Unitary2, v: Unitary2) -> float:
    """Global-phase-insensitive overlap |Tr(U^dag V)| / 2 of two unitaries."""
    return float(abs(np.trace(u.matrix.conj().T @ v.matrix)) / 2.0)


def state_fidelity(a: QubitState, b: QubitState) -> float:
    """Overlap |<a|b>|^2; 1 iff equal up to global phase."""
    return float(abs(np.vdot(a.vector(), b.vector())) ** 2)


def bloch_angles(state: QubitState) -> tuple[float, float]:
    """Polar and azimuthal angles (theta, phi) of a state.

    theta in [0, pi], phi in [0, 2 pi); phi := 0 at the poles.
    """
    r0 = abs(state.a0)
    r1 = abs(state.a1)
    theta = 2.0 * math.atan2(r1, r0)
    if r1 < 1e-15 or r0 < 1e-15:
        return theta, 0.0
    phi = math.atan2(state.a1.imag, state.a1.real) - math.atan2(
        state.a0.imag, state.a0.real
    )
    return theta, phi % (2.0 * math.pi)
