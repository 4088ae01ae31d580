"""Numerical laboratory for zero statistics of Gaussian random holomorphic
sections on weighted model geometries over the complex plane."""

from .basis import (
    SectionBasis,
    build_basis,
    build_basis_closed_form,
    build_basis_numeric,
    truncation_degree,
    weighted_inner_product,
)
from .clt import (
    CltReport,
    ExperimentConfig,
    ExperimentResult,
    expectation_kernel_route,
    linear_statistic_pl,
    linear_statistic_zeros,
    normality_metrics,
    run_clt_experiment,
    st_condition_i_ratio,
    st_condition_ii,
)
from .geometry import (
    TestForm,
    WeightKind,
    WeightModel,
    bargmann_fock,
    chern_density,
    curvature_eigenvalue,
    distance_comparison_constant,
    plateau_bump,
    quartic_bump,
    radial_polynomial,
    testform_density,
    weighted_distance_sq,
)
from .kernel import KernelEvaluator, asymptotics_report, normalized_kernel_grid
from .sampling import (
    GaussianStream,
    RandomSection,
    draw_section,
    evaluate_section_weighted,
    normalized_process_abs,
    sample_std_complex_gaussians,
)
from .zeros import (
    Divisor,
    divisor_pairing,
    find_zeros,
    find_zeros_batch,
    polynomial_part,
)

__version__ = "0.1.0"
