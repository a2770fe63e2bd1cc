"""Truncated Fock-space toolkit for twin-condensate entanglement.

Modules: :mod:`fock` (state space and operators), :mod:`states` (squeezed
states), :mod:`witness` (Stokes-operator separability criterion), :mod:`loss`
(loss channels and gains), :mod:`distillation` (photon-count swapping) and
:mod:`cli`.
"""

from .fock import (
    DensityMatrix,
    FockError,
    FockSpace,
    KrausChannel,
    ModeOperator,
    NumericalFailure,
    SpaceMismatch,
    StateVector,
    apply_channel,
    auto_cutoff,
    evolve,
    expectation,
    fidelity,
    mode_operator,
    partial_trace,
    schmidt_entropy,
    tensor,
)
from .states import SqueezingParams, make_psi1, make_psi2, make_tmss, make_tmss_by_evolution
from .witness import WitnessReport, evaluate_criterion, gain_adjusted_criterion, psi1_stokes, separable_sampler
from .loss import LossScenario, analytic_lossy_lhs, analytic_lossy_rhs, optimize_gains
from .distillation import (
    CountOutcome,
    OutcomeRecord,
    beamsplitter_apply,
    distilled_witness,
    entanglement_entropy,
    figure2_sweep,
    input_entropy,
    k_coefficients,
    project_counts,
    relabel_resting_modes,
)

__version__ = "0.1.0"
