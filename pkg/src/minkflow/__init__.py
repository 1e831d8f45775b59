"""Spacelike mean curvature flow on convex planar domains with prescribed
Neumann boundary angles, instrumented with gradient/speed bound checks and
translator detection."""

from .domain import (AnglePrescription, Domain, DomainSpec, boundary_normal,
                     build_domain, theoretical_c)
from .grid import (Field, Grid, boundary_tangential_derivative, build_grid,
                   gradient, hessian, read_field, write_field)
from .flow import (FlowState, SolverConfig, boundary_normal_slope, cfl_dt,
                   close_ghost, interior_rhs, run, step)
from .diagnostics import (BoundViolation, MonitorRecord, TheoreticalBounds,
                          check_bounds, compute_H, compute_v,
                          detect_translator, extract_translator_profile,
                          initial_bounds, read_monitors, write_monitors)
from .oracle import (RadialProfile, compatible_plane, radial_flow,
                     read_profile, translator_shoot, write_profile)
from . import errors

__version__ = "0.1.0"
