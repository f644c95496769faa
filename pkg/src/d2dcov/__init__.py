"""Coverage of an uplink cellular user under D2D underlay interference.

Closed-form coverage with a retention-thinned Poisson field, a Monte Carlo
simulator with explicit shortest-distance pairing, and calibration of the
retention tuning factor.
"""

__version__ = "0.1.0"

from .analytic import (
    ModelParams,
    coverage_alpha4,
    coverage_general,
    coverage_lower_bound,
    interference_laplace,
    retention_probability,
    sinc_constant,
)
from .config import SimConfig
from .exceptions import (
    CalibrationError,
    CapacityError,
    DivergenceError,
    PreconditionError,
    SpecializationError,
    UnitError,
)
from .montecarlo import (
    CoverageEstimate,
    calibrate_k,
    coverage_gain,
    coverage_gain_ratio,
    fit_k,
    simulate_coverage,
)
from .pairing import PairingResult, estimate_retention, pair_nodes, select_transmitters
from .pointprocess import (
    Annulus,
    PointPattern,
    PolarPosition,
    RngStream,
    sample_cell_user,
    sample_fading,
    sample_ppp,
)
