"""Classical nanomechanical mirror coupled to a Lambda-type EIT medium."""

from .params import (
    EXACT, LINEARIZED, AtomDriveParams, ConfigError, MirrorParams, OpticsParams, RunParams,
    SidebandDrive, SimConfig, default_config, derive_quantities, load_config, render, validate,
)
from .liouvillian import SteadyStateError, dressed_gaps, steady_state
from .floquet import (
    PoleError, analytic_modulation, analytic_rho_plus, delta_max, gamma_eff, modulation,
    solve_sideband_hierarchy,
)
from .simulate import IntegrationError, integrate_feedback, integrate_prescribed, lockin

__version__ = "0.1.0"
