"""Mass-action reaction-diffusion simulator with positivity, mass-envelope
and maximal-regularity checks."""

__version__ = "0.1.0"

from .discretization import (BoundaryFlux, Grid, StateField, diffusion_step_implicit,
                             discrete_norm_lp, laplacian_apply)
from .dual import DualProblem, estimate_cmr, solve_dual
from .integrate import IntegratorConfig, SimConfig, reaction_step, simulate, step
from .network import (MassCondition, MassKind, Reaction, ReactionNetwork, Species,
                      classify_mass_condition, growth_exponent, parse_network, reaction_rate,
                      render_network, source)
from .theory import (admissible_p_threshold, bootstrap_sequence, check_preconditions,
                     cmr_interpolation_bound, gronwall_mass_bound, select_dual_exponent)
