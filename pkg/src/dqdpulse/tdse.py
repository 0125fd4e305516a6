"""1-D ground-truth simulation of the double-quantum-dot device.

The electron moves in a double-well potential

    V(x) = A x^2 + B exp(-x^2 / (2 sigma)) + e V_bias x / (2 w),

discretized on a uniform grid with hard-wall boundaries.  Stationary states
come from direct diagonalization of the symmetric tridiagonal Hamiltonian;
time evolution uses the explicit staggered-leapfrog scheme, in which the real
part u lives on integer steps and the imaginary part v on half steps:

    u(t+dt) = u(t)      + (dt/hbar) H(t+dt/2) v(t+dt/2)
    v(t+3dt/2) = v(t+dt/2) - (dt/hbar) H(t+dt)  u(t+dt)

The scheme is stable for dt <= hbar / E_max with E_max an upper bound on the
largest eigenvalue of the discretized Hamiltonian (Gershgorin estimate
max V + 2 hbar^2 / (m dx^2)), and it conserves the total probability
sum(u^2 + v^2) dx to high accuracy.

Propagation happens in an energy-shifted gauge: the potential is offset by
the midpoint of the two lowest eigenenergies, a pure global-phase change
that keeps the staggered probability bookkeeping accurate for the qubit
subspace (the wobble of u^2 + v^2 scales with (E - E_ref) dt / hbar).
Densities, fidelities and logical projections are gauge invariant.

Internal units: meV, nm, ps.

Frame dictionary.  The logical basis |0> = (psi_B + psi_AB)/sqrt(2) (left
dot), |1> = (psi_B - psi_AB)/sqrt(2) (right dot) makes the physical
effective Hamiltonian -(eps/2) sigma_z - (Delta/2) sigma_x: the sign of the
gap term is opposite to the control model's convention.  The two frames are
related by an exact pi rotation about y together with a bias sign flip, so
a control-model detuning waveform eps(t) is realized by the device bias
V_bias(t) = -eps(t) / (e lambda), and model-frame states map to device-frame
states through `to_device_frame` / `to_model_frame`.  All cross-checks
between the two-level model and this solver go through that dictionary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .two_level import DetuningWaveform, QubitParams, QubitState

HBAR_MEVPS = 0.6582119569  # meV*ps
HBAR_JS = 1.054571817e-34
E_CHARGE_C = 1.602176634e-19
M_ELECTRON_KG = 9.1093837015e-31
GAAS_EFFECTIVE_MASS_KG = 0.067 * M_ELECTRON_KG


class TdseError(RuntimeError):
    """Raised for invalid solver configuration or failed spectral checks."""


class TdseStabilityError(TdseError):
    """Time step exceeds the leapfrog stability bound hbar / E_max."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid with hard walls at both ends."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise TdseError(f"n_points must be >= 3, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise TdseError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class PotentialSpec:
    """Double-well potential parameters (meV, nm) plus the electron mass.

    ``skew`` adds an optional antisymmetric well-depth imbalance
    skew * (x/w) * exp(-x^2 / (2 sigma)) for non-symmetric devices.
    """

    a_coef: float
    b_height: float
    sigma_width: float
    half_width: float
    v_bias: float = 0.0
    effective_mass: float = GAAS_EFFECTIVE_MASS_KG
    skew: float = 0.0

    def __post_init__(self):
        if self.b_height < 0.0:
            raise TdseError(f"b_height must be >= 0, got {self.b_height}")
        if self.sigma_width <= 0.0:
            raise TdseError(f"sigma_width must be positive, got {self.sigma_width}")
        if self.half_width <= 0.0:
            raise TdseError(f"half_width must be positive, got {self.half_width}")
        if self.effective_mass <= 0.0:
            raise TdseError(f"effective_mass must be positive")

    @property
    def kinetic_coef(self) -> float:
        """hbar^2 / (2 m*) in meV nm^2."""
        return HBAR_JS**2 / (2.0 * self.effective_mass) / E_CHARGE_C * 1e21

    def with_bias(self, v_bias: float) -> "PotentialSpec":
        return PotentialSpec(
            self.a_coef,
            self.b_height,
            self.sigma_width,
            self.half_width,
            v_bias,
            self.effective_mass,
            self.skew,
        )


# Defaults reproducing the reference device: 460 nm domain, 4.08 meV barrier,
# harmonic coefficient and barrier width tuned on the default grid so the
# zero-bias splitting is 11.7 ueV and the bias lever arm is 0.421.
PAPERLIKE_A_COEF = 1.4147321922662297e-04  # meV / nm^2
PAPERLIKE_SIGMA = 5.575006877830946e03  # nm^2


def paperlike_spec() -> PotentialSpec:
    return PotentialSpec(
        a_coef=PAPERLIKE_A_COEF,
        b_height=4.08,
        sigma_width=PAPERLIKE_SIGMA,
        half_width=230.0,
    )


def default_grid(n_points: int = 1024) -> Grid1D:
    return Grid1D(-230.0, 230.0, n_points)


def potential(spec: PotentialSpec, x) -> np.ndarray:
    """Total potential in meV: double well plus linear bias tilt."""
    x = np.asarray(x, dtype=float)
    hump = np.exp(-(x**2) / (2.0 * spec.sigma_width))
    v = spec.a_coef * x**2 + spec.b_height * hump
    if spec.skew != 0.0:
        v = v + spec.skew * (x / spec.half_width) * hump
    if spec.v_bias != 0.0:
        v = v + 1e3 * spec.v_bias * x / (2.0 * spec.half_width)
    return v


def _static_potential(spec: PotentialSpec, grid: Grid1D) -> np.ndarray:
    return potential(spec.with_bias(0.0), grid.x)


def _bias_profile(spec: PotentialSpec, grid: Grid1D) -> np.ndarray:
    """Potential added per volt of bias (meV / V)."""
    return 1e3 * grid.x / (2.0 * spec.half_width)


def well_minima(spec: PotentialSpec, grid: Grid1D) -> list[float]:
    """Positions of local potential minima (grid resolution)."""
    v = potential(spec, grid.x)
    interior = (v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])
    return [float(x) for x in grid.x[1:-1][interior]]


def hamiltonian_diagonals(spec: PotentialSpec, grid: Grid1D):
    """Main and off diagonal of the discretized Hamiltonian (meV)."""
    k2 = spec.kinetic_coef / grid.dx**2
    diag = 2.0 * k2 + potential(spec, grid.x)
    off = np.full(grid.n_points - 1, -k2)
    return diag, off


def stationary_states(spec: PotentialSpec, grid: Grid1D, k: int = 2):
    """Lowest k eigenpairs of the discretized Hamiltonian.

    The hard walls sit exactly on the first and last grid points, which carry
    pinned zeros; the interior tridiagonal problem is diagonalized directly,
    so the eigenvectors are exact modes of the leapfrog stencil.  Wave
    functions are normalized to sum(psi^2) dx = 1.  The ground state is taken
    positive; the first excited state's sign is fixed so that
    (psi_0 - psi_1)/sqrt(2) localizes in the right dot.  Eigenpair residuals
    are verified below 1e-8.
    """
    if k < 1:
        raise TdseError(f"k must be >= 1, got {k}")
    if k > grid.n_points - 2:
        raise TdseError(f"k = {k} exceeds the {grid.n_points - 2} interior modes")
    diag, off = hamiltonian_diagonals(spec, grid)
    energies, vecs = eigh_tridiagonal(
        diag[1:-1], off[1:-1], select="i", select_range=(0, k - 1)
    )
    dx = grid.dx
    psis = []
    for i in range(k):
        psi = np.zeros(grid.n_points)
        psi[1:-1] = vecs[:, i]
        psis.append(psi / math.sqrt(float(np.sum(psi**2) * dx)))
    if float(np.sum(psis[0])) < 0.0:
        psis[0] = -psis[0]
    if k >= 2:
        right = grid.x > 0.0
        psi1 = (psis[0] - psis[1]) / math.sqrt(2.0)
        if float(np.sum(psi1[right] ** 2)) < float(np.sum(psi1[~right] ** 2)):
            psis[1] = -psis[1]
    k2 = spec.kinetic_coef / grid.dx**2
    coef = 2.0 * k2 + potential(spec, grid.x)
    for i, psi in enumerate(psis):
        h_psi = _apply_h(psi, coef, k2)
        resid = float(np.linalg.norm(h_psi - energies[i] * psi) / np.linalg.norm(psi))
        if resid > 1e-8:
            raise TdseError(
                f"eigenpair {i} residual {resid:.3e} exceeds 1e-8; "
                f"refine the grid"
            )
    return np.asarray(energies, dtype=float), np.asarray(psis)


@dataclass(frozen=True)
class SpectralPair:
    """Two lowest eigenstates: the bonding/antibonding qubit substrate."""

    e_bonding: float
    e_antibonding: float
    psi_bonding: np.ndarray
    psi_antibonding: np.ndarray
    grid: Grid1D

    @property
    def delta_mev(self) -> float:
        return self.e_antibonding - self.e_bonding

    def logical_basis(self):
        """Left- and right-localized logical wave functions (|0>, |1>)."""
        s = 1.0 / math.sqrt(2.0)
        return (
            s * (self.psi_bonding + self.psi_antibonding),
            s * (self.psi_bonding - self.psi_antibonding),
        )


def spectral_pair(spec: PotentialSpec, grid: Grid1D) -> SpectralPair:
    """Bonding/antibonding pair with orthonormality and symmetry checks."""
    energies, psis = stationary_states(spec, grid, k=2)
    if not energies[0] < energies[1]:
        raise TdseError("bonding state is not below the antibonding state")
    dx = grid.dx
    gram = np.abs(
        np.array(
            [
                [np.sum(psis[0] * psis[0]) * dx - 1.0, np.sum(psis[0] * psis[1]) * dx],
                [0.0, np.sum(psis[1] * psis[1]) * dx - 1.0],
            ]
        )
    ).max()
    if gram > 1e-10:
        raise TdseError(f"eigenstates not orthonormal: deviation {gram:.3e}")
    if spec.v_bias == 0.0 and spec.skew == 0.0:
        sym = np.abs(psis[0] - psis[0][::-1]).max()
        anti = np.abs(psis[1] + psis[1][::-1]).max()
        if max(sym, anti) > 1e-8:
            raise TdseError(
                f"zero-bias parity violated: sym {sym:.3e}, antisym {anti:.3e}"
            )
    return SpectralPair(float(energies[0]), float(energies[1]), psis[0], psis[1], grid)


def e_max_bound(spec: PotentialSpec, grid: Grid1D, v_bias_max: float = 0.0) -> float:
    """Gershgorin upper bound on the discretized spectrum (meV)."""
    vmax = 0.0
    for vb in {0.0, v_bias_max, -v_bias_max}:
        vmax = max(vmax, float(np.abs(potential(spec.with_bias(vb), grid.x)).max()))
    return vmax + 4.0 * spec.kinetic_coef / grid.dx**2


def stable_dt(spec: PotentialSpec, grid: Grid1D, v_bias_max: float = 0.0) -> float:
    """Largest stable leapfrog step hbar / E_max in ps."""
    return HBAR_MEVPS / e_max_bound(spec, grid, v_bias_max)


@dataclass(frozen=True)
class Wavefunction1D:
    """Staggered real/imaginary samples: u at ``time``, v at ``time + dt/2``."""

    u: np.ndarray
    v: np.ndarray
    grid: Grid1D
    time: float
    dt: float

    def norm(self) -> float:
        return float((np.sum(self.u**2) + np.sum(self.v**2)) * self.grid.dx)

    def density(self) -> np.ndarray:
        return self.u**2 + self.v**2


def _apply_h(psi: np.ndarray, coef: np.ndarray, k2: float) -> np.ndarray:
    """H psi with hard-wall boundaries; coef = 2 k2 + V."""
    out = np.zeros_like(psi)
    out[1:-1] = coef[1:-1] * psi[1:-1] - k2 * (psi[2:] + psi[:-2])
    return out


def qubit_energy_ref(spec: PotentialSpec, grid: Grid1D) -> float:
    """Gauge reference: midpoint of the two lowest zero-bias eigenenergies."""
    diag, off = hamiltonian_diagonals(spec.with_bias(0.0), grid)
    energies = eigh_tridiagonal(
        diag[1:-1], off[1:-1], select="i", select_range=(0, 1), eigvals_only=True
    )
    return 0.5 * float(energies[0] + energies[1])


class _Evolver:
    """Preassembled stencil data for one (spec, grid) pair."""

    def __init__(self, spec: PotentialSpec, grid: Grid1D, bias_fn=None,
                 energy_ref: float | None = None):
        self.spec = spec
        self.grid = grid
        self.k2 = spec.kinetic_coef / grid.dx**2
        if energy_ref is None:
            energy_ref = qubit_energy_ref(spec, grid)
        self.energy_ref = energy_ref
        self.v_static = _static_potential(spec, grid) - energy_ref
        self.bias_profile = _bias_profile(spec, grid)
        if bias_fn is None:
            self.bias_fn = lambda t: spec.v_bias
        else:
            self.bias_fn = bias_fn

    def coef(self, t: float) -> np.ndarray:
        volts = float(self.bias_fn(t))
        v = self.v_static if volts == 0.0 else self.v_static + volts * self.bias_profile
        return 2.0 * self.k2 + v

    def h(self, psi: np.ndarray, t: float) -> np.ndarray:
        return _apply_h(psi, self.coef(t), self.k2)


def _check_stability(spec, grid, dt, v_bias_max):
    bound = stable_dt(spec, grid, v_bias_max)
    if dt > bound * (1.0 + 1e-12):
        raise TdseStabilityError(
            f"dt = {dt:.6e} ps exceeds the stability bound hbar/E_max = "
            f"{bound:.6e} ps (E_max = {e_max_bound(spec, grid, v_bias_max):.6e} meV)"
        )


def leapfrog_step(
    wf: Wavefunction1D,
    spec: PotentialSpec,
    dt: float,
    bias_fn=None,
    energy_ref: float | None = None,
) -> Wavefunction1D:
    """One full staggered update of (u, v), advancing time by dt."""
    ev = _Evolver(spec, wf.grid, bias_fn, energy_ref)
    _check_stability(spec, wf.grid, dt, abs(float(ev.bias_fn(wf.time))))
    t = wf.time
    u_new = wf.u + (dt / HBAR_MEVPS) * ev.h(wf.v, t + 0.5 * dt)
    v_new = wf.v - (dt / HBAR_MEVPS) * ev.h(u_new, t + dt)
    return Wavefunction1D(u_new, v_new, wf.grid, t + dt, dt)


def lift_wavefunction(
    psi: np.ndarray,
    grid: Grid1D,
    spec: PotentialSpec,
    dt: float,
    bias_fn=None,
    time: float = 0.0,
    energy_ref: float | None = None,
) -> Wavefunction1D:
    """Stagger a complex wave function so v sits at time + dt/2.

    The half-step map for an eigenmode is v(dt/2) = cos(w dt/2) v(0) -
    sin(w dt/2) u(0) with sin(w dt/2) = (dt H / 2 hbar); both factors are
    applied to second order, leaving only O(dt^4) staggering error.
    """
    psi = np.asarray(psi, dtype=complex)
    u = np.ascontiguousarray(psi.real)
    v0 = np.ascontiguousarray(psi.imag)
    u[0] = u[-1] = v0[0] = v0[-1] = 0.0
    ev = _Evolver(spec, grid, bias_fn, energy_ref)
    half = 0.5 * dt / HBAR_MEVPS
    tm = time + 0.25 * dt
    v = v0 - half * ev.h(u, tm) - 0.5 * half**2 * ev.h(ev.h(v0, tm), tm)
    return Wavefunction1D(u, v, grid, time, dt)


def restore_wavefunction(
    wf: Wavefunction1D,
    spec: PotentialSpec,
    bias_fn=None,
    energy_ref: float | None = None,
) -> np.ndarray:
    """Complex wave function at wf.time (v pulled back by half a step)."""
    ev = _Evolver(spec, wf.grid, bias_fn, energy_ref)
    half = 0.5 * wf.dt / HBAR_MEVPS
    tm = wf.time + 0.25 * wf.dt
    w = wf.v + half * ev.h(wf.u, tm)
    v_now = w + 0.5 * half**2 * ev.h(ev.h(w, tm), tm)
    return wf.u + 1j * v_now


def evolve(
    psi0: np.ndarray,
    spec: PotentialSpec,
    bias_fn,
    duration: float,
    dt: float,
    grid: Grid1D,
    sample_every: int = 0,
    energy_ref: float | None = None,
):
    """Evolve a complex wave function for ``duration`` ps.

    ``bias_fn`` maps time in ps to bias volts (None uses spec.v_bias).
    Returns (psi_final, samples) where samples is a list of (t, psi) pairs
    collected every ``sample_every`` steps (empty when 0).  The step count is
    rounded up so the requested duration is covered exactly; stability
    against the maximum bias over the run is verified before stepping.
    """
    if duration < 0.0:
        raise TdseError("duration must be >= 0")
    ev = _Evolver(spec, grid, bias_fn, energy_ref)
    if duration == 0.0:
        return np.asarray(psi0, dtype=complex).copy(), []
    n_steps = max(1, int(math.ceil(duration / dt - 1e-12)))
    dt_eff = duration / n_steps
    probe = np.abs([float(ev.bias_fn(k * dt_eff)) for k in range(n_steps + 1)]).max()
    _check_stability(spec, grid, dt_eff, probe)

    wf = lift_wavefunction(psi0, grid, spec, dt_eff, bias_fn, energy_ref=ev.energy_ref)
    u, v = wf.u.copy(), wf.v.copy()
    cu = 1.0 / HBAR_MEVPS * dt_eff
    k2 = ev.k2
    samples = []
    v_prev = None
    for k in range(n_steps):
        t = k * dt_eff
        coef_u = ev.coef(t + 0.5 * dt_eff)
        v_prev = v.copy() if sample_every else None
        u[1:-1] += cu * (coef_u[1:-1] * v[1:-1] - k2 * (v[2:] + v[:-2]))
        coef_v = ev.coef(t + dt_eff)
        v[1:-1] -= cu * (coef_v[1:-1] * u[1:-1] - k2 * (u[2:] + u[:-2]))
        if sample_every and (k + 1) % sample_every == 0:
            # psi(t) ~ u(t) + i (v(t-dt/2) + v(t+dt/2)) / 2.
            samples.append((t + dt_eff, u + 0.5j * (v_prev + v)))
    final = Wavefunction1D(u, v, grid, duration, dt_eff)
    return restore_wavefunction(final, spec, bias_fn, energy_ref=ev.energy_ref), samples


def calibrate_lambda(spec: PotentialSpec, grid: Grid1D, bias_grid):
    """Least-squares lever arm of the detuning-bias relation eps = e lam V.

    The detuning at each bias is extracted from the two-level gap relation
    gap^2 = Delta^2 + eps^2.  Returns (lam, relative linearity residual).
    """
    if len(well_minima(spec.with_bias(0.0), grid)) < 2:
        raise TdseError("potential does not form a double well")
    bias_grid = np.asarray(sorted(bias_grid), dtype=float)
    if len(bias_grid) < 3:
        raise TdseError("bias grid must have at least 3 points")
    pair0 = spectral_pair(spec.with_bias(0.0), grid)
    delta = pair0.delta_mev
    eps = []
    for vb in bias_grid:
        energies, _ = stationary_states(spec.with_bias(float(vb)), grid, k=2)
        gap = float(energies[1] - energies[0])
        eps.append(math.copysign(math.sqrt(max(gap**2 - delta**2, 0.0)), vb))
    eps_ev = np.array(eps) * 1e-3  # meV -> eV
    lam = float(np.sum(bias_grid * eps_ev) / np.sum(bias_grid**2))
    fit = lam * bias_grid
    residual = float(np.linalg.norm(eps_ev - fit) / np.linalg.norm(fit))
    return lam, residual


def params_from_spectrum(
    spec: PotentialSpec, grid: Grid1D, bias_grid=None
) -> QubitParams:
    """Two-level parameters (Delta, lambda) calibrated on this grid."""
    pair = spectral_pair(spec.with_bias(0.0), grid)
    if bias_grid is None:
        v_ref = pair.delta_mev * 1e-3 / 0.4  # spans roughly |eps| <= Delta
        bias_grid = np.linspace(-v_ref, v_ref, 9)
    lam, _ = calibrate_lambda(spec, grid, bias_grid)
    return QubitParams(delta=pair.delta_mev * 1e-3, lam=lam)


def project_logical(psi, pair: SpectralPair):
    """Logical amplitudes and leakage of a full wave function.

    Returns (QubitState, leakage); the state is renormalized inside the
    logical subspace and the leakage 1 - |<0|psi>|^2 - |<1|psi>|^2 >= 0 is
    reported separately.
    """
    psi = np.asarray(psi, dtype=complex)
    psi0, psi1 = pair.logical_basis()
    dx = pair.grid.dx
    a0 = complex(np.sum(psi0 * psi) * dx)
    a1 = complex(np.sum(psi1 * psi) * dx)
    weight = abs(a0) ** 2 + abs(a1) ** 2
    leakage = max(0.0, 1.0 - weight)
    scale = 1.0 / math.sqrt(weight)
    return QubitState(a0 * scale, a1 * scale), leakage


# ---------------------------------------------------------------------------
# Model <-> device frame dictionary


def bias_waveform_for(waveform: DetuningWaveform, params: QubitParams):
    """Device bias schedule (volts vs ps) realizing a model detuning waveform.

    The model's positive detuning corresponds to negative bias on this
    device axis convention; see the module docstring.
    """

    def bias_fn(t_ps: float) -> float:
        return -float(waveform.eps(t_ps * 1e-12)) / params.lam

    return bias_fn


def to_device_frame(state: QubitState) -> QubitState:
    """Map a control-model state to the device frame (pi rotation about y)."""
    return QubitState(-state.a1, state.a0)


def to_model_frame(state: QubitState) -> QubitState:
    """Inverse of `to_device_frame`."""
    return QubitState(state.a1, -state.a0)
