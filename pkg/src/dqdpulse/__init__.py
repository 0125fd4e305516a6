"""dqdpulse: pulse-train control of a double-quantum-dot charge qubit.

Subpackages cover the exact two-level dynamics (`two_level`), compilation of
rotations into x'/z' pulse primitives (`decomposition`), time-domain waveform
construction (`pulse`), numerical rise-time calibration (`calibration`), the
1-D ground-truth Schroedinger solver (`tdse`), quasistatic charge-noise
studies (`noise`), charge readout estimation (`readout`) and the command-line
front end (`cli`).
"""

from .two_level import (
    BlochVector,
    DetuningWaveform,
    QubitParams,
    QubitState,
    TwoLevelError,
    Unitary2,
    X_AXIS,
    XPRIME_AXIS,
    Y_AXIS,
    Z_AXIS,
    ZPRIME_AXIS,
    bloch_angles,
    effective_hamiltonian,
    process_fidelity,
    propagate,
    propagate_trajectory,
    realized_unitary,
    square_pulse_unitary,
    state_fidelity,
)
from .decomposition import (
    AxisLabel,
    Basis,
    DecompositionError,
    DecompositionResult,
    GateName,
    PrepTarget,
    PrimitiveRotation,
    RotationSpec,
    SchemeTag,
    decompose_axis,
    decompose_general_3,
    decompose_general_5,
    decompose_y,
    gate,
    prepare_state,
    theta_angles_xz,
)

__version__ = "0.1.0"
