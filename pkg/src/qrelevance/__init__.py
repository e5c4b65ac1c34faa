"""Relevance-projected quantum dynamics on small finite-dimensional systems."""
__version__ = "0.1.0"

from .dynamics import Hamiltonian, TimeGrid, liouvillian, propagate_unitary, unitary
from .kernels import BACKEND
from .master import (
    MemoryKernel,
    SingularResolventError,
    SolverError,
    Trajectory,
    alternating_evolve,
    build_memory_kernel,
    exact_projected_reference,
    markov_evolve,
    markov_generator,
    premaster_evolve,
)
from .measurement import (
    BranchRecord,
    BranchTree,
    SchmidtDecomposition,
    branch_ensemble,
    collapse_counts,
    collapse_sample,
    interference_overlap,
    interference_series,
    nested_schmidt,
    premeasure,
    schmidt,
)
from .policy import DimensionError, NumericalPolicy, get_policy, set_policy
from .relevance import (
    EntropyBreakdown,
    NonlinearProjectionError,
    SubspacePartition,
    ZwanzigProjection,
    additive_local_entropy,
    as_superoperator,
    block_dephase,
    coarse_grain_equipartition,
    dephase,
    product_of_marginals,
    relevance_entropy,
    shannon_entropy,
    von_neumann_entropy,
)
from .state import (
    DensityOperator,
    HilbertSpace,
    PureState,
    SpectralDecomposition,
    SuperOperator,
    devectorize,
    partial_trace,
    spectral,
    tensor,
    trace_distance,
    vectorize,
)
