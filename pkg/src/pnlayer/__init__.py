"""Pseudo-spectral tools for nonlocal dislocation layer profiles.

The package discretizes the reduced slip-plane model on a truncated
periodic box [-X, X) x T^{d-1}: energy-minimizing transition profiles,
certification of the anisotropic kernel (positivity, homogeneity,
symmetry), spectral analysis of the linearized operator, and
reconstruction of the bulk elastic field from the slip-plane trace.
"""

__version__ = "0.1.0"

from .grid import (
    GridSpec,
    RealField,
    SpectralField,
    build_grid,
    forward_transform,
    inverse_transform,
)
from .symbols import (
    SymbolSpec,
    apply_operator,
    half_laplacian,
    load_tabulated_csv,
    matrix_symbol,
    pn_reduced,
    reduced_1d_constant,
    sigma_half,
    sigma_pn,
    symbol_bounds,
    tabulated,
    u3_multiplier,
)
from .kernel import (
    DiscreteKernel,
    brute_force_apply,
    extract_kernel,
    homogeneity_exponent,
    positivity_scan,
)
from .energy import (
    EnergyContext,
    Potential,
    ReferenceProfile,
    REFERENCE_PROFILE,
    benjamin_ono_cubic,
    clip_to_wells,
    cosine_potential,
    eval_energy,
    eval_energy_bruteforce,
    eval_gradient,
    eval_potential,
    make_potential,
    polynomial_double_well,
    quartic_potential,
    rearrange_pair,
    translate,
)
from .minimize import (
    MinimizeConfig,
    SolveReport,
    align_translation,
    minimize_energy,
    monotonicity_check,
    solve_solitary,
    symmetry_check,
    write_profile_csv,
)
from .spectrum import (
    LinearizedOperator,
    SpectrumReport,
    build_linearized,
    dense_eigenpairs,
    kernel_simplicity_check,
    lowest_eigenpairs,
    maximal_principle_probe,
)
from .elasticity import (
    DisplacementSlab,
    ElasticParams,
    divergence_residual,
    elastic_energy,
    extend_displacement,
    slip_stress_sigma12,
    stress_tensor,
)
