"""Exact-numerics toolkit for metrology with collective atomic spins.

Dicke-basis states and dynamics for up to a few thousand particles,
spin-squeezing and entanglement witnesses, quasi-probability tomography,
and Monte-Carlo phase estimation, cross-checked against the closed-form
benchmark expressions in spinlab.reference.
"""

__version__ = "0.1.0"

from .dynamics import EvolutionSpec, SpectralPropagator, evolve, oat_evolve, su11_scan
from .estimation import (
    DegenerateEstimateError,
    EstimateResult,
    MeasurementModel,
    OutcomeDistribution,
    SampleSet,
    bures,
    estimate,
    fisher_from_hellinger,
    fisher_information,
    hellinger,
    outcome_distribution,
    quantum_fidelity,
    sample,
)
from .metrology import (
    EprReport,
    SensitivityFloors,
    SqueezingReport,
    WitnessReport,
    collective_dephasing,
    entanglement_depth_bound,
    epr_criteria,
    optimal_generator_direction,
    pair_qfi_sx,
    pair_quadrature_variances,
    perpendicular_qfi,
    qfi,
    sensitivity_floors,
    squeezing,
    witnesses,
)
from .reference import (
    BjjRegime,
    OatClosedForms,
    ProtocolFormulas,
    StateBenchmarks,
    bjj_regime_predictions,
    oat_closed_forms,
    protocol_formulas,
    state_benchmarks,
)
from .spinspace import (
    HermitianOperator,
    KetState,
    MixedState,
    SpinSpace,
    apply_unitary,
    collective_operator,
    expectation,
    jx,
    jy,
    jz,
    make_space,
    moments,
    n_effective,
    rotate_state,
    rotation,
    variance,
)
from .states import (
    PairBasisState,
    ThreeModeState,
    bjj_ground_state,
    coherent,
    dicke,
    noon,
    spin_mixing_ground_state,
    twin_fock,
    two_mode_squeezed_vacuum,
    w_state,
)
from .tomography import (
    QuasiProbMap,
    SpinNoiseMoments,
    TensorDecomposition,
    clebsch_gordan,
    decompose,
    export_map,
    quasiprobability,
    reconstruct,
    render_map,
    spin_noise_moments,
)

__all__ = [name for name in dir() if not name.startswith("_")]
