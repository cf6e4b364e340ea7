"""Contains constants for the program."""

# Lower bound on the diffusion coefficient for a problem to count as
# parabolic
PARABOLICITY_EPSILON = 1e-12


# Tolerance used when checking that the initial condition agrees with
# the boundary values at t = 0
CONSISTENCY_TOLERANCE = 1e-9


# Finite difference step for the Laplace approximation: the step is
# max(HESSIAN_MIN_STEP, HESSIAN_RELATIVE_STEP * theta_hat)
HESSIAN_MIN_STEP = 1e-5
HESSIAN_RELATIVE_STEP = 1e-4


# MAP search: points in the coarse bracket scan and the relative
# tolerance of the refinement
MAP_SCAN_POINTS = 41
MAP_RELATIVE_TOLERANCE = 1e-10


# A grid posterior whose density at either end exceeds this fraction of
# its peak is considered truncated
GRID_EDGE_TOLERANCE = 1e-6


# Laplace posteriors are integrated over this many standard deviations
# either side of the mode
LAPLACE_SUPPORT_WIDTH = 12.0


# Expected information gain settings
DEFAULT_REPLICATIONS = 200
MAX_DROPPED_FRACTION = 0.2
LAPLACE_TV_THRESHOLD = 0.05
SPOT_CHECK_GRID_POINTS = 801
SPOT_CHECK_WIDTH = 8.0


# Predictive densities
MIN_PREDICTIVE_SAMPLES = 10
PREDICTIVE_GRID_POINTS = 801
PREDICTIVE_GRID_WIDTH = 10.0


# Covariance jitter ladder, relative to the unit magnitude covariance
JITTER_START = 1e-10
JITTER_MAX = 1e-6
JITTER_FACTOR = 10.0


# Hyperposterior defaults
DEFAULT_LENGTH_SAMPLES = 32
DEFAULT_Z_SAMPLES = 64
MIN_HYPER_SAMPLES = 8


# Default priors: log(theta) ~ N(nu, tau^2) and the boundary prior sd
DEFAULT_PRIOR_NU = 0.1
DEFAULT_PRIOR_TAU = 0.1
DEFAULT_SIGMA_P = 0.5


# Boundary prior mean: number of interior spline knots
DEFAULT_SPLINE_KNOTS = 4


# Reference solver: minimum refinement in space and time
MIN_REFERENCE_REFINEMENT = 8


# Significant digits for readings written to disk
CSV_SIGNIFICANT_DIGITS = 10


# Sensor labels and files
SENSOR_PREFIX = "TC"
TIME_COLUMN = "t"
RESOLVED_CONFIG_FILENAME = "resolved-config.json"


# The only environment variable parapost reads
SEED_ENVIRONMENT_VARIABLE = "PARAPOST_SEED"


# Posterior modes
KNOWN_BC = "known-bc"
MARGINAL = "marginal"
POSTERIOR_MODES = (KNOWN_BC, MARGINAL)


# Experimental setup kinds
TIME_WINDOWS = "time_windows"
SENSOR_SUBSET = "sensor_subset"
COMBINED = "combined"
SETUP_KINDS = (TIME_WINDOWS, SENSOR_SUBSET, COMBINED)


# Process exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3
EXIT_IO_ERROR = 4
