"""Tunable constants for the separator and division pipeline.

Values here are deliberate engineering choices, not class invariants; each
separator/division routine reads its defaults from this module so tests and
the CLI can override them in one place.
"""

# Name recorded in JSON artifacts so seeds stay meaningful across versions.
PRNG_NAME = "numpy-pcg64-v1"

# Packing constant for the Euclidean unit ball in R^d: an r-separated point
# set inside a unit ball has at most eta * (1/r)^d points (volume argument
# with balls of radius r/2 inside radius 1 + r/2 <= 3/2).
def packing_eta(d: int) -> float:
    return 3.0 ** d


# Retry budgets shared by all randomized separators: inner draws of the
# random surface, outer restarts that redraw the anchor/map as well.
RETRY_INNER = 20
RETRY_OUTER = 10

# Rejection constant for the lanky separator: accept the random ball once
# |E*| <= C_REJ * tau * eta * 8^d * n^(1 - 1/d).
C_REJ = 1.0

# Sphere separator: delta defaults to (d+1)/(d+2) + DELTA_MARGIN.
DELTA_MARGIN = 0.02

# Cube separator defaults: epsilon, sample-size multiplier for
# eps^-2 * d^3 * log(d/eps), and number of geometric candidate scales.
SW_EPSILON = 0.05
SW_SAMPLE_CONST = 0.25
SW_SCALES = 32
# Required fraction of sample cubes inside the inner / outside the outer
# rectangle of a separating annulus (evaluated on the sample).
SW_SIDE_FRACTION = 1.0 / 3.0

# Centerpoint approximation: leaves of the iterated-Radon reduction tree are
# drawn from a sample of at most this many points; the audit tests this many
# random hyperplanes through the candidate point.
CENTERPOINT_SAMPLE = 2048
CENTERPOINT_AUDIT_PLANES = 1000

# Division-phase constants: f(r_i) multiplier (c' in the boundary function),
# per-piece boundary allowance, and the threshold above which the numeric
# division inequality is asserted rather than merely reported.  The
# inequality's crossover is astronomically far out for honest constants, so
# desk-scale levels sit below C_HAT and are reported, not asserted.
C_PRIME = 4.0
C_BOUNDARY = 4.0
C_HAT = 1.0e6

# Region-count and region-size allowances used by the division validator
# (empirical constants, recorded in reports).
C_REGIONS = 8.0
C_SUM_SIZES = 4.0
C_REGION_SIZE = 8.0

# Greedy spanner: pairs within L = SPANNER_CUTOFF * extent * (ln n / n)^(1/d)
# are fed to the exact greedy loop; below this size every pair is considered.
SPANNER_EXACT_N = 2048
SPANNER_CUTOFF = 3.0
SPANNER_AUDIT_PAIRS = 256
SPANNER_GROW_RETRIES = 3
