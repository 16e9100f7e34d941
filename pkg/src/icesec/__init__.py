"""Secrecy rate regions for the two-user interference channel with an
external eavesdropper (IC-E).

The package evaluates achievable regions built from cooperative binning and
channel prefixing, the named Gaussian schemes (cooperative TDMA, noise
forwarding, jamming-assisted wiretap coding), single-letter outer bounds, and
special-case witnesses on small discrete channels.
"""

from .channel import (
    COMPONENTS,
    Component,
    DiscreteChannel,
    FactoredInput,
    GaussianChannel,
    PowerState,
    ScheduleError,
    TimeSharingSchedule,
    ValidationReport,
    mac_to_ice,
    validate_schedule,
)
from .mutual_info import (
    MutualInfoTable,
    discrete_mi,
    discrete_mi_table,
    gamma,
    gaussian_mi_table,
    mc_mi_oracle,
)
from .region import (
    FMCapExceeded,
    InfeasiblePolytope,
    RatePolytope,
    RegionFrontier,
    build_constraints,
    convex_hull_union,
    frontier,
    is_achievable,
    solve_support,
)

from .fm import Inequality, ProjectedRegion, fm_project

__version__ = "0.1.0"
