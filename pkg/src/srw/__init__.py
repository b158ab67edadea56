"""Subspace robust Wasserstein (SRW) distances between discrete measures.

The squared SRW value of order k is the minimum, over transport plans,
of the sum of the k largest eigenvalues of the plan's second-order
displacement matrix. The package provides exact and entropic inner OT
solvers, two outer algorithms (projected supergradient and Frank-Wolfe),
the k-profile sweep, geodesic interpolation, measure/result file formats,
synthetic measure generators, and the experiment drivers behind the
bundled figure scripts.
"""

from .exceptions import InvalidInput
from .linalg import (
    EigenDecomposition,
    OmegaMatrix,
    capped_simplex_projection,
    eig_sym,
    mahalanobis_cost,
    project_spectrahedron,
    symmetrize,
    top_k_projector,
)
from .otcore import (
    DiscreteMeasure,
    SinkhornResult,
    SinkhornState,
    TransportPlan,
    brute_force_ot,
    exact_ot,
    sinkhorn,
)
from .solver import (
    IterationRecord,
    SolverConfig,
    SrwResult,
    SweepResult,
    displacement_matrix,
    duality_gap,
    f_value,
    geodesic,
    init_omega,
    prw_2d_sweep,
    solve,
    srw_curve,
    srw_frank_wolfe,
    srw_supergradient,
)
from .synthetic import (
    GeneratorSpec,
    gen_dirac_pair,
    gen_disk_annulus_pair,
    gen_hypercube_pair,
    gen_sphere_vs_dirac,
    gen_wishart_gaussian_pair,
    generate,
    hypercube_map,
)
from .measure_io import (
    read_measure,
    read_result,
    result_document,
    verify_result,
    write_measure,
    write_result,
)
from .experiments import DISK_ANNULUS_W2, EXPERIMENT_NAMES, run_experiment

__version__ = "0.1.0"

__all__ = [
    "InvalidInput",
    "EigenDecomposition",
    "OmegaMatrix",
    "capped_simplex_projection",
    "eig_sym",
    "mahalanobis_cost",
    "project_spectrahedron",
    "symmetrize",
    "top_k_projector",
    "DiscreteMeasure",
    "SinkhornResult",
    "SinkhornState",
    "TransportPlan",
    "brute_force_ot",
    "exact_ot",
    "sinkhorn",
    "IterationRecord",
    "SolverConfig",
    "SrwResult",
    "SweepResult",
    "displacement_matrix",
    "duality_gap",
    "f_value",
    "geodesic",
    "init_omega",
    "prw_2d_sweep",
    "solve",
    "srw_curve",
    "srw_frank_wolfe",
    "srw_supergradient",
    "GeneratorSpec",
    "gen_dirac_pair",
    "gen_disk_annulus_pair",
    "gen_hypercube_pair",
    "gen_sphere_vs_dirac",
    "gen_wishart_gaussian_pair",
    "generate",
    "hypercube_map",
    "read_measure",
    "read_result",
    "result_document",
    "verify_result",
    "write_measure",
    "write_result",
    "DISK_ANNULUS_W2",
    "EXPERIMENT_NAMES",
    "run_experiment",
    "__version__",
]
