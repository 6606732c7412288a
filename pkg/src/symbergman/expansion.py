"""Phase, amplitude kernel, coefficient recursion and closed forms.

Jets live in three variables (x, y, z) centered at (x0, x0, conj(x0)) for
a chart centered at x0; diagonal values are the constant terms.

The recursion, with tau the amplitude kernel and g the Kahler density:

    b_0   = (1/k) s_k(d_z theta(x,x,z)) g(x,z)^-1
    a_0   = s_k(tau)^-1 s_k(d_z theta(x,x,z)) g(x,z)^-1 g(y,z) - I,  A_0 = a_0/(x-y)
    b_m   = g(x,z)^-1 d_z A_{m-1}(x,x,z)
    a_m   = k g(y,z) s_k(tau)^-1 b_m
    A_m   = (a_m - k s_k(tau)^-1 d_z A_{m-1}) / (x-y)
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import ConvergenceError, InvalidInputError, NumericalDomainError, TruncationError
from .geometry import curvature_pack, lift_jet, scalar_curvature_of_density
from .matjet import (
    MatrixJet,
    divide_by_xy,
    jet_exp,
    jet_inverse,
    jet_log,
    jet_mul,
    jet_partial,
    restrict_diagonal,
    segment_average,
)
from .numerics import expm, op_norm
from .sympow import sym_pow_matrix, sym_rank, weak_compositions

V3 = ("x", "y", "z")
VXZ = ("x", "z")


def _psi(chart_or_psi):
    """Polarized potential as a jet in (y, z)."""
    if isinstance(chart_or_psi, MatrixJet):
        psi = chart_or_psi
    elif hasattr(chart_or_psi, "psi_jet") and isinstance(chart_or_psi.psi_jet, MatrixJet):
        psi = chart_or_psi.psi_jet  # Polarization
    else:
        psi = chart_or_psi.psi_jet()
    if psi.vars != ("y", "z"):
        raise InvalidInputError(f"polarized potential must be in (y, z), got {psi.vars}")
    return psi


def _x_minus_y(order, variables=V3):
    return MatrixJet.variable("x", variables, order) - MatrixJet.variable("y", variables, order)


@dataclass(frozen=True)
class PhasePack:
    P_jet: MatrixJet  # in (x1, y, z)
    theta_jet: MatrixJet  # in (x, y, z)
    tau: MatrixJet  # rank level, in (x, y, z)
    tau_series: MatrixJet = None  # same quantity from the ad-series
    identity_defect: float = 0.0  # max |theta (x - y) - P|
    tau_defect: float = 0.0  # max |tau - tau_series|
    lifted_k: int = 0  # 0 = rank level

    @property
    def order(self):
        return self.tau.order

    def dtheta_diagonal(self):
        """d_z theta(x, x, z) as a jet in (x, z)."""
        return jet_partial(restrict_diagonal(self.theta_jet, "y", "x"), "z")


def build_phase(chart, order=None):
    """P = log(e^{-psi(y,z)} e^{psi(x1,z)}) and its segment average theta."""
    psi = _psi(chart)
    if order is not None:
        if psi.order < order:
            raise TruncationError(f"phase of order {order} needs potential order {order}, got {psi.order}")
        psi = psi.truncate(order)
    n = psi.order
    if n < 2:
        raise TruncationError("phase needs potential order >= 2")
    W = ("x1", "y", "z")
    psi_y = psi.embed(W)
    psi_x1 = psi.rename({"y": "x1"}).embed(W)
    E = jet_mul(jet_exp(-psi_y), jet_exp(psi_x1))
    # the constant term is exactly the identity
    E.data[0] = np.eye(psi.dim)
    P = jet_log(E)
    theta = segment_average(jet_partial(P, "x1"), "x1", "y", "x")
    check = jet_mul(theta, _x_minus_y(theta.order))
    target = P.rename({"x1": "x"}).truncate(theta.order)
    defect = float(np.abs(check.data - target.data).max())
    tau, tau_series, tau_defect = _build_tau(psi, theta)
    return PhasePack(P, theta, tau, tau_series, defect, tau_defect)


def _build_tau(psi, theta):
    n = psi.order
    psi_x = psi.rename({"y": "x"}).embed(V3)
    psi_y = psi.embed(V3)
    left = jet_mul(jet_exp(-psi_x), jet_exp(psi_y))
    right = jet_mul(jet_exp(-psi_y), jet_exp(psi_x))
    num = jet_mul(left.truncate(n - 1), jet_partial(right, "z"))
    tau = divide_by_xy(num)
    # ad-series: sum_n (x-y)^(n-1) ad(-theta)^(n-1)(d_z theta) / n!
    dz = jet_partial(theta, "z")
    th = theta.truncate(dz.order)
    xy = _x_minus_y(dz.order)
    term = dz
    series = dz.copy()
    for m in range(2, dz.order + 2):
        comm = jet_mul(term, th) - jet_mul(th, term)
        term = jet_mul(xy, comm)
        series = series + term / factorial(m)
    series = series.truncate(tau.order) if series.order > tau.order else series
    tau_c = tau.truncate(series.order)
    defect = float(np.abs(tau_c.data - series.data).max())
    return tau, series, defect


def build_tau(phase):
    """Amplitude kernel from the product form; the ad-series copy is kept for checks."""
    return phase.tau


def lift_phase(phase, k):
    """s_k applied coefficientwise to theta and tau (s_k is linear)."""
    return PhasePack(
        phase.P_jet,
        lift_jet(phase.theta_jet, k),
        lift_jet(phase.tau, k),
        None,
        phase.identity_defect,
        phase.tau_defect,
        k,
    )


# ----------------------------------------------------------------------
# recursion


@dataclass(frozen=True)
class CoefficientTable:
    k: int
    N: int
    b: tuple  # diagonal values b_{k,m}(x0, conj(x0))
    b_jets: tuple = field(repr=False)  # jets of b_{k,m} in (x, z)
    center: complex = 0.0
    rank: int = 1

    def expansion(self, upto=None):
        """sum_{m <= upto} b_{k,m} k^{1-m} at the center."""
        upto = self.N if upto is None else upto
        return sum(self.b[m] * float(self.k) ** (1 - m) for m in range(upto + 1))

    def b_total_jet(self, upto=None):
        """b_k^(N)(x, z) = k sum_m b_{k,m}(x, z) / k^m, at the common order."""
        upto = self.N if upto is None else upto
        order = min(J.order for J in self.b_jets[: upto + 1])
        total = MatrixJet.zeros(VXZ, order, self.b_jets[0].dim)
        for m in range(upto + 1):
            total = total + self.b_jets[m].truncate(order) * float(self.k) ** (1 - m)
        return total


def required_order(N):
    return 2 * N + 4


def coeff_recursion(chart, k, N, phase=None, max_rank=None):
    """b_{k,0..N} at the chart center via the amplitude recursion."""
    from . import config

    if N < 0 or N > config.MAX_ORDER:
        raise InvalidInputError(f"N must be in 0..{config.MAX_ORDER}")
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    need = required_order(N)
    if chart.order < need:
        raise TruncationError(f"recursion to N={N} needs chart order {need}, got {chart.order}")
    rk = sym_rank(chart.rank, k)
    if rk > (max_rank or config.MAX_SYM_RANK):
        raise InvalidInputError(f"Sym^{k} rank {rk} exceeds the size budget")
    if phase is None:
        phase = build_phase(chart)
    dth = lift_jet(phase.dtheta_diagonal(), k)
    tau_inv = jet_inverse(lift_jet(phase.tau, k))
    g_xz = chart.g_jet.rename({"y": "x", "yb": "z"})
    ginv_xz = jet_inverse(g_xz)
    g_yz = chart.g_jet.rename({"yb": "z"}).embed(V3)

    kb0 = jet_mul(dth, ginv_xz.truncate(dth.order))
    b_jets = [kb0 / k]
    eye = MatrixJet.unit(V3, tau_inv.order, rk)
    first = jet_mul(jet_mul(tau_inv, kb0.embed(V3)), g_yz)
    A = divide_by_xy(first - eye, scale=max(first.max_coeff_norm(), 1.0))
    for m in range(1, N + 1):
        dA = jet_partial(A, "z")
        bm = jet_mul(ginv_xz, restrict_diagonal(dA, "y", "x"))
        b_jets.append(bm)
        am = jet_mul(g_yz, jet_mul(tau_inv, bm.embed(V3))) * k
        second = jet_mul(tau_inv, dA) * k
        if m < N:
            A = divide_by_xy(am - second, scale=max(am.max_coeff_norm(), second.max_coeff_norm()))
    b = tuple(J.data[0].copy() for J in b_jets)
    return CoefficientTable(k, N, b, tuple(b_jets), chart.center, chart.rank)


# ----------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class ClosedForm:
    b0: np.ndarray
    b1: np.ndarray  # from the Lambda Delta F / wedge form
    b1_compact: np.ndarray  # -1/2 Lambda dbar(lambda^-1 dbar*F) + Scal/2
    b1_curvature: np.ndarray  # expanded in Ft, eta and their derivatives
    b1_theorem_order: np.ndarray  # factors ordered as in the headline statement
    forms_defect: float
    theorem_order_defect: float


def _c(J, deg=(0, 0)):
    return J.coeff(deg)


def closed_form_report(chart, k, pack=None):
    if chart.order < 4:
        raise TruncationError("closed forms need chart order >= 4")
    pack = pack or curvature_pack(chart)
    lam_k = lift_jet(pack.lambdaF, k)
    Q_k = lift_jet(pack.get("dbar_star_F"), k)
    lap_k = lift_jet(pack.get("lambda_laplacian_F"), k)
    ginv = pack.g_inv
    scal = complex(_c(pack.scal)[0, 0])
    rk = lam_k.dim
    eye = np.eye(rk)

    b0 = lam_k.data[0] / k
    lam_inv = jet_inverse(lam_k)
    L0 = lam_inv.data[0]
    g0inv = complex(_c(ginv)[0, 0])
    # -1/2 lambda^-1 LapF - 1/2 g^-1 d_z(lambda^-1) Q + Scal/2
    d_lam_inv = _c(lam_inv, (0, 1))
    W = g0inv * d_lam_inv @ _c(Q_k)
    b1 = -0.5 * L0 @ _c(lap_k) - 0.5 * W + 0.5 * scal * eye
    # compact form
    LQ = jet_mul(lam_inv.truncate(Q_k.order), Q_k)
    compact = -0.5 * g0inv * _c(jet_partial(LQ, "z")) + 0.5 * scal * eye
    # expanded curvature form
    F = lift_jet(pack.F_tilde, k)
    eta = lift_jet(pack.eta, k)
    F0, Fy, Fz, Fyz = _c(F), _c(F, (1, 0)), _c(F, (0, 1)), _c(F, (1, 1))
    Fi = np.linalg.inv(F0)
    e0 = _c(eta)
    curv = g0inv * (
        -0.5 * Fi @ Fz @ Fi @ Fy + 0.5 * Fi @ Fyz + 0.5 * Fi @ Fz @ Fi @ e0 @ F0 - 0.5 * Fi @ e0 @ Fz
    ) + scal * eye
    # headline ordering
    dlam = _c(lam_k, (0, 1))
    thm = -0.5 * _c(lap_k) @ L0 + 0.5 * scal * eye + 0.5 * g0inv * _c(Q_k) @ L0 @ dlam @ L0
    scale = max(op_norm(b1), 1.0)
    forms_defect = max(op_norm(b1 - compact), op_norm(b1 - curv)) / scale
    return ClosedForm(b0, b1, compact, curv, thm, forms_defect, op_norm(thm - b1))


def closed_form_b0_b1(chart, k, tol=1e-9):
    """b_{k,0} and b_{k,1} at the chart center from the curvature formulas."""
    rep = closed_form_report(chart, k)
    if rep.forms_defect > tol:
        raise ConvergenceError(f"closed forms for b1 disagree by {rep.forms_defect:.3e}")
    return rep.b0, rep.b1


def line_bundle_from_curvature(F_jet, g_jet, k):
    """b0 = F/(k g) and b1 = Scal - (F/g) Scal'(F)/2 for a line bundle of curvature F.

    ``F_jet`` is the curvature of the line bundle whose Bergman function is
    wanted, e.g. k Ft for the k-th power.
    """
    F0 = complex(F_jet.data[0, 0, 0])
    g0 = complex(g_jet.data[0, 0, 0])
    scal = complex(scalar_curvature_of_density(g_jet).data[0, 0, 0])
    scal_prime = complex(scalar_curvature_of_density(F_jet).data[0, 0, 0])
    b0 = F0 / (k * g0)
    b1 = scal - 0.5 * (F0 / g0) * scal_prime
    return b0, b1


def line_bundle_b0_b1(chart, k=1):
    if chart.rank != 1:
        raise InvalidInputError("line_bundle_b0_b1 needs a rank-1 chart")
    pack = curvature_pack(chart)
    b0, b1 = line_bundle_from_curvature(pack.F_tilde * k, chart.g_polar(), k)
    return b0.real, b1.real


def cross_identity(chart):
    """b0 times the contraction of omega against the curvature form; equals 1."""
    pack = curvature_pack(chart)
    b0, _ = line_bundle_b0_b1(chart)
    F0 = pack.F_tilde.data[0, 0, 0].real
    return b0 * chart.g0 / F0


def direct_sum_b0_b1(chart, k):
    """Block formulas for diagonal charts: each Sym^k basis vector is a line bundle."""
    pack = curvature_pack(chart)
    F = pack.F_tilde
    if np.abs(F.data - np.einsum("nii->ni", F.data)[:, :, None] * np.eye(F.dim)).max() > 1e-12:
        raise InvalidInputError("direct_sum_b0_b1 needs a diagonal chart")
    basis = weak_compositions(k, chart.rank)
    g = chart.g_polar()
    b0 = np.zeros((len(basis),) * 2, dtype=complex)
    b1 = np.zeros_like(b0)
    for i, n in enumerate(basis):
        Fc = F.map_coeffs(lambda d: np.einsum("...ii,i->...", d, np.array(n, float))[..., None, None], dim=1)
        b0[i, i], b1[i, i] = line_bundle_from_curvature(Fc, g, k)
    return b0, b1


# ----------------------------------------------------------------------
# local kernel


def local_kernel_eval(chart, table, x, y, N=None):
    """K(y, x) = (1/2 pi) conj(e^{s_k psi(x, ybar)} b_k^(N)(x, ybar)).

    Points are absolute coordinates; jets are evaluated at offsets from the
    chart center.
    """
    from .diastatic import trust_radius

    rad = trust_radius(chart)
    dx = complex(x) - chart.center
    dz = np.conj(complex(y)) - np.conj(chart.center)
    if abs(dx) > rad or abs(dz) > rad:
        raise NumericalDomainError(f"points are outside the trust radius {rad:.3e}")
    psi = chart.psi_jet().evaluate({"y": dx, "z": dz})
    E = sym_pow_matrix(expm(psi), table.k)
    b = table.b_total_jet(N).evaluate({"x": dx, "z": dz})
    return np.conj(E @ b) / (2 * np.pi)


# ----------------------------------------------------------------------
# reporting

COEFF_COLUMNS = ("model", "k", "x_re", "x_im", "m", "recursion_norm", "closed_norm", "agreement", "scalar_defect")


def scalar_defect(M):
    """Distance of M from the scalar matrix with the same trace."""
    M = np.asarray(M)
    r = M.shape[0]
    return op_norm(M - np.trace(M) / r * np.eye(r))


def coeff_report(chart, k, N, label=""):
    """Rows comparing recursion and closed-form coefficients at a chart center.

    Closed forms exist for m <= 1 only; other rows carry nan there.
    Each row also keeps the raw matrices under "recursion" and "closed".
    """
    table = coeff_recursion(chart, k, N)
    closed = closed_form_b0_b1(chart, k)
    x = complex(chart.center)
    rows = []
    for m in range(N + 1):
        bm = table.b[m]
        cm = closed[m] if m < 2 else None
        rows.append(
            {
                "model": label or chart.label or "chart",
                "k": k,
                "x_re": x.real,
                "x_im": x.imag,
                "m": m,
                "recursion_norm": op_norm(bm),
                "closed_norm": op_norm(cm) if cm is not None else float("nan"),
                "agreement": op_norm(bm - cm) if cm is not None else float("nan"),
                "scalar_defect": scalar_defect(bm),
                "recursion": bm,
                "closed": cm,
            }
        )
    return rows


RECURSION_COLUMNS = ("model", "k", "x_re", "x_im", "m", "recursion_norm", "scalar_defect")


def recursion_report(chart, k, N, label=""):
    """Recursion-only rows; the raw matrix is kept under "recursion"."""
    t = coeff_recursion(chart, k, N)
    x = complex(chart.center)
    return [
        {"model": label or chart.label or "chart", "k": k, "x_re": x.real, "x_im": x.imag, "m": m,
         "recursion_norm": op_norm(b), "scalar_defect": scalar_defect(b), "recursion": b}
        for m, b in enumerate(t.b)
    ]
