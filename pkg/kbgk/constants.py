"""
Constants used across the kbgk package.
"""

# Argon, as used for every shock-tube preset
GAS_CONSTANT_ARGON = 208.0          # J kg^-1 K^-1
MOLECULE_DIAMETER_ARGON = 0.368e-9  # m
BOLTZMANN_CONSTANT = 1.3806e-23     # J K^-1

# Monoatomic gas; consistent with e = (3/2) R T
GAMMA_MONOATOMIC = 5.0 / 3.0

# Gaussian MLS weight sharpness and search radius in units of the average spacing
MLS_ALPHA = 6.0
MLS_RADIUS_FACTOR = 2.5

# Discrete Maxwellian Newton iteration
DMAX_RTOL = 1e-10
# Absolute floor of the moment tolerance. Set well below the usual 1e-14 because
# moments of 1e-6 kg/m^3 gases sit near 1e-11 and must still meet DMAX_RTOL.
DMAX_ATOL = 1e-30
DMAX_MAX_ITER = 100
ARMIJO_C = 1e-4
MIN_STEP_EXPONENT = 30   # smallest backtracking step is 2**-30
EXPONENT_LIMIT = 700.0   # exp() overflows a double just above 709

# Jittered grids: two sweeps, each moving a point by at most dx/4
JITTER_SWEEPS = 2
JITTER_FRACTION = 0.25

# Field monitor: negativity tolerated relative to the field maximum
NEGATIVITY_THRESHOLD = 1e-6

# Profile columns written by the experiment harness
PROFILE_COLUMNS = ["x", "rho", "ux", "T", "p"]
