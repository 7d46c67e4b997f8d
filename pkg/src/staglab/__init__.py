"""GMRES with per-iteration harmonic Ritz pairs and stagnation diagnostics."""

from .arnoldi import ArnoldiDecomposition, arnoldi_init, arnoldi_step
from .diagnostics import (
    CoincidenceResult,
    PersistenceVerdict,
    StagnationReport,
    analyze_run,
    coincidence_check,
    compute_K,
    gap_identity_check,
    persistence_check,
    residual_difference_identity,
    stagnation_coincidence_check,
    stagnation_report,
)
from .gmres import (
    GmresState,
    IterationRecord,
    gmres_advance,
    gmres_init,
    materialize_residual,
    nested_ls_consistency,
    run_gmres,
)
from .harmonic import (
    HarmonicPair,
    harmonic_pairs,
    harmonic_residual_vector,
    residual_polynomial_roots,
)
from .instances import (
    ProblemInstance,
    cyclic_shift_instance,
    paper_example,
    planted_singular_hessenberg,
    random_instance,
    step_one_stagnation,
)
from .numeric_core import (
    PencilEigenPair,
    back_substitute,
    qr_hessenberg_ls,
    smallest_singular_triplet,
    solve_pencil,
)
from .thresholds import Thresholds

__version__ = "0.1.0"
