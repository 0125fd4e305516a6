"""Quasistatic charge-noise Monte Carlo.

Charge noise is modelled as a constant detuning offset per run, drawn from a
zero-mean normal distribution whose standard deviation is quoted in units of
the reference pulse strength (the detuning Delta, i.e. the bias Delta / (e
lambda)).  The offset shifts the whole detuning waveform, the run's fidelity
against the noiseless target is recorded, and fidelities are averaged over
the draws.  Compared waveform variants always consume the identical draw
sequence, so differences between them are never sampling artifacts.

Draws come from numpy's PCG64 generator through ``standard_normal`` (the
ziggurat transform); a fixed (seed, n_samples) pair reproduces reports
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pulse as _pulse
from .decomposition import (
    DecompositionResult,
    decompose_axis,
    decompose_x_subdivided,
    theta_angles_xz,
)
from .two_level import (
    DetuningWaveform,
    QubitParams,
    QubitState,
    Unitary2,
    process_fidelity,
    realized_unitary,
    propagate,
    state_fidelity,
)


class NoiseError(ValueError):
    """Raised for invalid noise-study configuration."""


@dataclass(frozen=True)
class NoiseModel:
    """Quasistatic noise strength (units of Delta), seed and sample count."""

    sigma_noise: float
    seed: int = 0
    n_samples: int = 100

    def __post_init__(self):
        if self.sigma_noise < 0.0:
            raise NoiseError(f"sigma_noise must be >= 0, got {self.sigma_noise}")
        if self.n_samples < 1:
            raise NoiseError(f"n_samples must be >= 1, got {self.n_samples}")


@dataclass(frozen=True)
class NoiseReport:
    """Averaged fidelity with its standard error and the per-sample values."""

    mean_fidelity: float
    fidelity_std_error: float
    fidelities: tuple[float, ...]
    config: dict

    @property
    def mean_infidelity(self) -> float:
        return 1.0 - self.mean_fidelity


def noise_draws(model: NoiseModel, params: QubitParams) -> np.ndarray:
    """Detuning offsets in eV for each sample (deterministic in the seed)."""
    rng = np.random.default_rng(model.seed)
    return rng.standard_normal(model.n_samples) * model.sigma_noise * params.delta


def run_noisy(
    waveform_factory,
    target,
    model: NoiseModel,
    params: QubitParams,
    dt_max: float | None = None,
) -> NoiseReport:
    """Average fidelity of a waveform over quasistatic detuning offsets.

    ``waveform_factory`` is a DetuningWaveform or a zero-argument callable
    producing one.  ``target`` selects the figure of merit: a Unitary2 is
    scored by process fidelity, an (initial, final) QubitState pair by state
    fidelity of the propagated initial state.
    """
    waveform = waveform_factory() if callable(waveform_factory) else waveform_factory
    draws = noise_draws(model, params)
    fids = np.empty(model.n_samples)
    for i, offset in enumerate(draws):
        shifted = waveform.with_offset(float(offset))
        if isinstance(target, Unitary2):
            fids[i] = process_fidelity(
                realized_unitary(shifted, params, dt_max), target
            )
        else:
            initial, final = target
            fids[i] = state_fidelity(propagate(initial, shifted, params, dt_max), final)
    std_err = (
        float(np.std(fids, ddof=1) / math.sqrt(model.n_samples))
        if model.n_samples > 1
        else 0.0
    )
    return NoiseReport(
        mean_fidelity=float(np.mean(fids)),
        fidelity_std_error=std_err,
        fidelities=tuple(float(f) for f in fids),
        config={
            "sigma_noise": model.sigma_noise,
            "seed": model.seed,
            "n_samples": model.n_samples,
            "target": "process" if isinstance(target, Unitary2) else "state",
        },
    )


def max_feasible_subdivision(angle: float, tau: float, params: QubitParams) -> int:
    """Largest k whose k-fold x-rotation trains use only realizable pulses."""
    if tau == 0.0:
        raise NoiseError("subdivision needs a finite rise time")
    m = _pulse.min_angle(tau, params)
    k_max = 0
    for k in range(1, 256):
        t1, t2 = theta_angles_xz(angle / k, "x")
        if min(t1, t2) >= m - 1e-9:
            k_max = k
        else:
            break
    if k_max == 0:
        raise NoiseError(
            f"even the undivided x rotation by {angle:.4f} is infeasible at "
            f"tau = {tau} (minimum angle {m:.4f})"
        )
    return k_max


@dataclass(frozen=True)
class GainPoint:
    """Noise-averaged errors of the plain and subdivided x rotations."""

    sigma: float
    err_square: float
    err_corrected: float
    gain: float
    stderr: float


def subdivision_gain(
    angle: float,
    tau: float,
    sigma_grid,
    model: NoiseModel,
    params: QubitParams,
    table,
) -> list[GainPoint]:
    """Infidelity-reduction gain of pulse subdivision versus noise strength.

    For each noise level the same draws drive both the single three-pulse
    x-rotation train and its maximally subdivided variant; the gain is the
    ratio of mean infidelities (plain over subdivided).  sigma = 0 reports
    unit gain with zero errors.
    """
    k = max_feasible_subdivision(angle, tau, params)
    rise = _pulse.RiseSpec(tau)
    plain = decompose_axis("x", angle)
    sub = decompose_x_subdivided(angle, k)
    for result in (plain, sub):
        for prim in result.primitives:
            table.ensure(tau, prim.angle, params)
    wf_plain = _pulse.train_waveform(plain, rise, table, params)
    wf_sub = _pulse.train_waveform(sub, rise, table, params)
    target = Unitary2(
        decompose_axis("x", angle).unitary_matrix()
    )
    points = []
    for sigma in sigma_grid:
        if sigma == 0.0:
            points.append(GainPoint(0.0, 0.0, 0.0, 1.0, 0.0))
            continue
        m = NoiseModel(float(sigma), model.seed, model.n_samples)
        rep_plain = run_noisy(wf_plain, target, m, params)
        rep_sub = run_noisy(wf_sub, target, m, params)
        err_p, err_s = rep_plain.mean_infidelity, rep_sub.mean_infidelity
        gain = err_p / err_s if err_s > 0.0 else math.inf
        # Relative errors of the two means add in quadrature for the ratio.
        rel = 0.0
        if err_p > 0.0 and err_s > 0.0:
            rel = math.hypot(
                rep_plain.fidelity_std_error / err_p,
                rep_sub.fidelity_std_error / err_s,
            )
        points.append(GainPoint(float(sigma), err_p, err_s, gain, gain * rel))
    return points


def export_gain_csv(points, path, meta: dict | None = None) -> None:
    """CSV with columns sigma,err_square,err_corrected,gain,stderr."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("sigma,err_square,err_corrected,gain,stderr\n")
        for p in points:
            fh.write(
                f"{p.sigma:.17g},{p.err_square:.17g},{p.err_corrected:.17g},"
                f"{p.gain:.17g},{p.stderr:.17g}\n"
            )
