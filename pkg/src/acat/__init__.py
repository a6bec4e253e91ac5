"""Shock-capturing finite-difference toolkit built on compact approximate
Taylor fluxes with order adaptation driven by stencil smoothness indicators."""

from .acat1d import Grid1D, SchemeSpec, acat_flux, flcat2_flux, low_order_flux, run, step
from .acat2d import Grid2D, acat_step_2d, cat_flux_2d_x, cat_flux_2d_y, run_2d
from .catcore import cat2_flux_closed_form, cat_flux, lat_step
from .diffops import DiffFormula, apply, centered_coeffs, interpolatory_coeffs, undivided_difference
from .errors import AdmissibilityError, ConvergenceFailure, FluxFailure
from .harness import RunConfig, convergence_study, error_norms, preset, timing_table
from .models import (
    EulerState,
    RiemannSolution,
    burgers,
    euler1d,
    euler2d,
    exact_riemann_euler,
    exact_transport,
    linear_advection,
)
from .smooth import (
    IndicatorConfig,
    SmoothnessReport,
    indicator,
    indicator_p2_modified,
    limiter_psi1,
    select_stencil,
)

__version__ = "0.1.0"
