"""Quantitative weak-mixing experiments for the Chacon map and substitution subshifts."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .substitution import (  # noqa: E402
    FactorTable,
    SubstitutionSystem,
    alpha_beta_conjugacy,
    apply_power,
    chacon_alpha,
    chacon_beta,
    enumerate_factors,
    factor_frequency,
    find_return_words,
    fixed_point_prefix,
    lattice_span_check,
    pf_data,
    substitution_matrix,
)
from .intervals import IntervalSet, RationalInterval  # noqa: E402
from .chacon import (  # noqa: E402
    apply_map,
    build_stage,
    code_orbit,
    coding_cell,
    empty_intersection_times,
    map_interval_set,
    orbit,
)
from .twisted import (  # noqa: E402
    CylFunction,
    boundary_H,
    build_twisted_matrix,
    corollary_growth_check,
    int_dist,
    phi_concat,
    phi_cyl,
    phi_f,
    pi_direct,
    pi_recursive,
    veech_product_check,
    xhat_lattice_bound,
)
from .prefix_suffix import decompose, depth_bounds_check, phi_via_decomposition, reconstruct  # noqa: E402
from .spectral import ball_bound_diagnostic, discrepancy, spectral_density, twisted_birkhoff  # noqa: E402
from .mixing import (  # noqa: E402
    correlation,
    correlation_series,
    cyl_approximation,
    exceptional_set,
    lower_bound_experiment,
    weakmix_average,
)
from .report import ExperimentReport  # noqa: E402
