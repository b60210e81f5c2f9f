"""commtask: exact tools for communication matrices.

Row-stochastic matrices over arbitrary-precision rationals, the processing
preorder between them (certified decisions with exact witnesses or
machine-checkable refutations), six order monotones, and classical/quantum
implementability bounds.
"""

__version__ = "0.1.0"

from .matrix import (
    CommMatrix,
    FamilyParams,
    MatrixError,
    MatrixFormatError,
    NotStochasticError,
    Rational,
    ShapeMismatchError,
    StochasticPair,
    d_compose,
    make_A,
    make_D,
    make_G,
    make_identity,
    make_uniform,
    multiply,
    parse,
    serialize,
)
from .transforms import (
    reduce,
    transform_add_convex_row,
    transform_add_zero_column,
    transform_duplicate_row,
    transform_permute,
    transform_split_column,
)
from .monotones import (
    IntBounds,
    InvariantViolation,
    MonotoneReport,
    iota,
    iota_witness,
    iota_witness_for_rows,
    lambda_max,
    lambda_min,
    nneg_rank,
    rank,
    report,
)
from .majorize import (
    BranchBoundCertificate,
    ClosedForm,
    EquivalenceResult,
    ExactWitness,
    MonotoneSeparation,
    SearchConfig,
    Verdict,
    compose_witnesses,
    d_family_witness,
    decide,
    decide_certified,
    decide_D_family,
    equivalent,
    qudit_D_interval,
    screen,
    search_witness,
)
from .quantum import (
    LibraryWitness,
    ModelError,
    PsdBounds,
    QuantumModel,
    classical_dim,
    eval_model,
    psd_lower,
    psd_upper,
    quantum_dim_bounds,
    qubit_screen,
    scaled_submatrix_bound,
    verify_model,
    witness_library,
)
from .gallery import gallery, reference_monotones

__all__ = [name for name in dir() if not name.startswith("_")]
