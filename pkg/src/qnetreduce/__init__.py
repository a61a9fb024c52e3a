"""Model reduction for Markovian quantum feedback networks.

Open network models enter as generator matrices [[K, L], [M, N - I]]; the
two reductions, instantaneous feedback elimination of internal channels and
adiabatic elimination of fast degrees of freedom, act on them as Schur
complements of one extended matrix, and their order does not matter. The
dynamics module provides the master-equation oracle used to verify the
reduced models numerically.
"""

__version__ = "0.1.0"

from .blockmat import (
    BlockOperatorMatrix,
    BlockPartition,
    banachiewicz_inverse,
    block,
    generalized_inverse,
    generalized_schur_complement,
    inclusion_check,
    schur_complement,
    schur_complement_general,
    successive_schur,
)
from .dynamics import (
    ConvergenceRow,
    DensityMatrix,
    Superoperator,
    convergence_study,
    lindblad_generator,
    propagate,
    trace_distance,
)
from .errors import (
    DimensionCapError,
    FastDecouplingError,
    HpValidationError,
    IllDefinedComplementError,
    IllPosedNetworkError,
    KernelConditionError,
    PathMismatchError,
    PropagationAccuracyError,
    QnetReduceError,
    SingularPivotError,
    SpecFormatError,
    StructureError,
    UnknownBlockLabelError,
)
from .generator import (
    EXTERNAL,
    INTERNAL,
    ItoGeneratorMatrix,
    ScaledGeneratorFamily,
    SlhTriple,
    SubspaceDecomposition,
    concatenate,
    extract_hamiltonian,
    from_slh,
    instantiate,
    relabel_channels,
    trivial_generator,
    validate_fast_decoupling,
    validate_hp,
    validate_structure,
)
from .reductions import (
    ExtendedGeneratorMatrix,
    adiabatic_eliminate,
    build_extended_generator,
    check_commutativity,
    compose_af,
    compose_fa,
    feedback_eliminate,
    feedback_reduced_family,
)
from .report import CheckResult, ReductionReport

__all__ = [
    "__version__",
    # block matrices
    "BlockOperatorMatrix", "BlockPartition", "banachiewicz_inverse", "block",
    "generalized_inverse", "generalized_schur_complement", "inclusion_check",
    "schur_complement", "schur_complement_general", "successive_schur",
    # generators
    "EXTERNAL", "INTERNAL", "ItoGeneratorMatrix", "ScaledGeneratorFamily",
    "SlhTriple", "SubspaceDecomposition", "concatenate", "extract_hamiltonian",
    "from_slh", "instantiate", "relabel_channels", "trivial_generator",
    "validate_fast_decoupling", "validate_hp", "validate_structure",
    # reductions
    "ExtendedGeneratorMatrix", "adiabatic_eliminate", "build_extended_generator",
    "check_commutativity", "compose_af", "compose_fa", "feedback_eliminate",
    "feedback_reduced_family",
    # dynamics
    "ConvergenceRow", "DensityMatrix", "Superoperator", "convergence_study",
    "lindblad_generator", "propagate", "trace_distance",
    # reports and errors
    "CheckResult", "ReductionReport",
    "QnetReduceError", "UnknownBlockLabelError", "SingularPivotError",
    "IllDefinedComplementError", "HpValidationError", "StructureError",
    "FastDecouplingError", "KernelConditionError", "IllPosedNetworkError",
    "PathMismatchError", "PropagationAccuracyError", "DimensionCapError",
    "SpecFormatError",
]
