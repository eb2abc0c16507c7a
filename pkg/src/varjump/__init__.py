"""Variation, oscillation, jump and maximal operators for approximate identities."""

from .dyadic import (
    CZDecomposition,
    DyadicCube,
    conditional_expectation,
    cz_decompose,
    long_oscillation,
    martingale_long_oscillation,
    snap_blocks,
    square_function,
)
from .estimators import CZDecomposer, FamilyStatistic, PathStatistics
from .grids import SampledFunction, ScaleGrid, SpaceGrid
from .hardy import (
    Atom,
    AtomicFunction,
    hp_surrogate_quasinorm,
    lp_quasinorm,
    maximal_function_field,
    random_atom,
    validate_atom,
)
from .kernels import (
    BUMP,
    GAUSS,
    Kernel,
    SampledFamily,
    UndersampledKernelWarning,
    build_family,
    convolve_at,
    dilated_eval,
    kernel_centered_difference_variation,
)
from .pathstats import (
    BlockSequence,
    Path,
    PathReport,
    dyadic_jump_count,
    jump_count,
    jump_reduction_ratio,
    maximal_value,
    oscillation,
    path_report,
    short_variation_s2,
    variation_norm,
)

__version__ = "0.1.0"
