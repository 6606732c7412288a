"""Named tolerances and defaults used across the package.

Every numerical threshold lives here so that tests and the CLI agree on
what "close enough" means.
"""

import hashlib
import json

# numerics
HERMITIAN_TOL = 1e-12          # relative asymmetry allowed for tagged Hermitian input
EXPM_SCALE_TARGET = 0.5        # scaling-and-squaring brings the norm below this
SERIES_STOP_REL = 1e-16        # Taylor / Mercator term-norm stop, relative to partial sum
SERIES_MAX_TERMS = 200
MERCATOR_RADIUS = 1.0          # Mercator log needs ||A - I|| below this

# jets
DIVIDE_TOL_REL = 1e-9          # w^0 residual allowed by divide_by_xy, relative to max coeff norm
JET_SERIES_STOP_REL = 1e-16
JET_LOG_EXTRA_STEPS = 2        # Newton gets order + this many steps before giving up

# geometry
GRIFFITHS_GRID = 64            # stereographic grid size per axis
GRIFFITHS_MIN_EIG = 1e-6

# expansion
DEFAULT_ORDER = 2
MAX_ORDER = 4
MAX_SYM_RANK = 256

# bergman
QUAD_RADIAL = 96
QUAD_ANGULAR = 128
REPRO_DISK_RADIUS = 0.5

# cli
DEFAULT_SEED = 42

# Sign and normalization conventions. The table is hashed into every CLI
# output header so that files produced under different conventions can
# be told apart.
CONVENTIONS = {
    "kahler_form": "omega = i * g(y, ybar) dy ^ dybar",
    "curvature": "F = dbar((d h) h^-1), F = Ft dy ^ dybar, Ft = -d2(d1(H) H^-1), H = exp(-psi)",
    "contracted_curvature": "i Lambda F = g^-1 Ft (positive for positive bundles)",
    "contracted_laplacian": "i Lambda Delta F = g^-1 d2(Q), Q = coefficient of dbar^* F on dy",
    "diastasis_link": "D_11 = -h^(-1/2) Ft h^(1/2), h = exp(-phi)",
    "row_vectors": "sections are row vectors, <u, v> = u h v^dagger",
    "bergman_scale": "2 pi B_k ~ h^(-1/2) (k b0 + b1 + ...) h^(1/2)",
    "phase_log": "two-factor product logarithm",
}


def conventions_hash():
    """Short sha256 digest of the convention table."""
    blob = json.dumps(CONVENTIONS, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
