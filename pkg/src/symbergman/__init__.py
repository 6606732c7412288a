"""Bergman kernel expansions for symmetric powers of Hermitian vector bundles.

Local side: matrix-valued jets, the diastatic function and the amplitude
recursion for the expansion coefficients.  Global side: direct Bergman
kernels of a small catalog of bundles on P^1 for comparison.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    FactorizationError,
    InvalidInputError,
    NonDivisibleError,
    NumericalDomainError,
    SymBergmanError,
    TruncationError,
)
from .numerics import cholesky, expm, logm_principal, op_norm, sqrtm_pd  # noqa: E402
from .sympow import lift_spectrum, s_k_lift, sym_pow_matrix, sym_rank, weak_compositions  # noqa: E402
from .matjet import MatrixJet, divide_by_xy, jet_exp, jet_inverse, jet_log, jet_mul  # noqa: E402
from .geometry import (  # noqa: E402
    CATALOG,
    BundleModel,
    ChartData,
    KahlerSpec,
    catalog_model,
    chart_from_model,
    curvature_pack,
    direct_sum,
    fs_line,
    hermitian_einstein_chart,
    load_model,
    make_chart,
    random_chart,
    twisted_trivial,
)
from .diastatic import curvature_link_defect, diastasis_jet, diastasis_point, fit_delta  # noqa: E402
from .expansion import (  # noqa: E402
    closed_form_b0_b1,
    closed_form_report,
    coeff_recursion,
    line_bundle_b0_b1,
    required_order,
)
from .bergman import (  # noqa: E402
    BergmanSpace,
    bergman_function,
    compare_expansion,
    quadrature,
    reproducing_check,
    riemann_roch_report,
)
