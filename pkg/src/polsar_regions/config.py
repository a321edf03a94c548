"""Numerical tolerances shared across the package.

Everything that decides whether a number is "close enough" lives here so the
thresholds can be audited in one place.
"""

# Reciprocal condition number below which a matrix is treated as singular.
RCOND_FLOOR = 1e-13

# Allowed residual ||A A^-1 - I|| relative to ||A||.
INVERSE_RESIDUAL = 1e-10

# Statistics in [-NEGATIVE_SLACK, 0) are clamped to zero; below that is an error.
NEGATIVE_SLACK = 1e-9

# Above this statistic value p-values are also reported in log space.
LOG_PVALUE_THRESHOLD = 1400.0

# Maximum Hermitian asymmetry accepted when reading a covariance raster.
HERMITIAN_READ_TOL = 1e-12

DEFAULT_ALPHA = 0.05
DEFAULT_BETA = 0.9
