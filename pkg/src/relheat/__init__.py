"""Numerical laboratory for relativistic stable processes.

Builds the process as subordinated Brownian motion, evaluates its free
transition density by quadrature, and estimates killed-semigroup traces
and their small-time boundary corrections by seeded Monte Carlo.
"""

from .geometry import Annulus, Ball, HalfSpace, parse_domain
from .kernels import (
    RadialKernelTable,
    build_table,
    c1_const,
    c1_of_t,
    density_upper_bound,
    free_density,
    table_eval,
)
from .sampler import (
    PathGrid,
    RngStream,
    sample_increment,
    sample_stable_subordinator,
    sample_tempered_subordinator,
    simulate_path,
)
from .specfun import (
    ProcessParams,
    levy_density,
    psi,
    stable_levy_density,
    stable_subordinator_density,
    subordinator_density_at,
    surface_area,
    tempered_density,
)
from .tracelab import (
    Budgets,
    HalfspaceProfile,
    ResidualReport,
    TraceEstimate,
    c2_of_t,
    c4_const,
    first_exit,
    halfspace_profile,
    lambda1_estimate,
    r_estimate,
    residual_scan,
    ryznar_check,
    z_trace,
)

__version__ = "0.1.0"
