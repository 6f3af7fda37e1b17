"""Dual-metric variational solver for a transported phase-field equation.

The packages covers the discrete function-space calculus (grid, hilbert),
potential models with certified constants (potential), the implicit
variational stepping (scheme), the transport fixed point and a monolithic
cross-check (coupling), quantitative verification (analysis), and a small
command line front end (cli).
"""

from .grid import DiscreteLaplacian, Grid, get_laplacian, make_grid, quadrature
from .hilbert import (
    DualRep,
    Field,
    average_forcing,
    duality_pairing,
    grad_energy,
    grad_inner,
    l2_norm,
    nodal_derivative,
    riesz_lift,
    v_inner,
    v_norm,
    vprime_inner,
    vprime_norm,
)
from .potential import (
    LBParams,
    PotentialModel,
    PotentialRangeError,
    certify_constants,
    lb_potential,
    polynomial_potential,
    quartic_well,
    zero_potential,
)
from .scheme import (
    ChemicalPotential,
    StepConfig,
    StepError,
    StepRecord,
    Trajectory,
    chemical_potential,
    constant_trajectory,
    energy,
    mm_step,
    run_minimizing_movements,
    uniform_v_bound,
)
from .coupling import (
    CoupledSolution,
    PicardConfig,
    solve_fixed_point,
    solve_forced,
    solve_monolithic,
    sup_v_distance,
    traj_l2v_distance,
)
from .analysis import (
    AprioriReport,
    DependenceReport,
    DissipativityReport,
    EnergyReport,
    RateReport,
    apriori_bound_check,
    beta_rate_study,
    continuous_dependence_check,
    dissipativity_check,
    energy_equality_residual,
    energy_refinement_study,
    fit_rate_slope,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
