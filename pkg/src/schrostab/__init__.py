"""Lyapunov feedback stabilization of the bilinear Schrodinger equation on an interval."""

from .conditions import GenericityReport, check_conditions
from .feedback_law import (FeedbackParams, NormError, alpha_star, distance_to_target, feedback,
                       feedback_tilde, lyapunov)
from .integrator import (IntegrationError, IntegratorConfig, TrajectoryRecord,
                         evolve_closed_loop, evolve_open_loop, step)
from .operators import (ControlOperator, apply_A, assemble_control, project_p1, q_gradients)
from .spectral import (Grid, SpectralBasis, SpectralError, basis_state, build_basis, from_grid,
                       random_state, sobolev_norms, to_grid)

__version__ = "0.1.0"
