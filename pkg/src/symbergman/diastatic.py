"""Polarization, the diastatic function and K-frame metrics.

The diastatic function is defined by

    e^{D(x,y)} = e^{-phi(x)/2} e^{psi(y,xbar)} e^{-phi(y)} e^{psi(x,ybar)} e^{-phi(x)/2}

and is Hermitian, vanishes at y = x, and its (1,1) coefficient is
``-h^{-1/2} Ft h^{1/2}`` at the center.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalDomainError
from .matjet import MatrixJet, jet_exp, jet_log, jet_mul
from .numerics import eigh, expm, inv_sqrtm_pd, logm_principal, op_norm, sqrtm_pd
from .sympow import s_k_lift, sym_pow_matrix

CENTERED = ("y", "yb")


@dataclass(frozen=True)
class Polarization:
    psi_jet: MatrixJet


@dataclass(frozen=True)
class DiastasisJet:
    D_jet: MatrixJet
    center: complex

    def pure_defect(self):
        """Largest pure-holomorphic or pure-antiholomorphic coefficient norm."""
        J = self.D_jet
        norms = J.coeff_norms()
        worst = 0.0
        for i, (a, b) in enumerate(J.monomials):
            if (a == 0) != (b == 0) or (a == 0 and b == 0):
                worst = max(worst, norms[i])
        return worst

    def d11(self):
        return self.D_jet.coeff((1, 1))


def polarize(phi_jet, tol=1e-10):
    """Relabel the conjugate slot as an independent variable z."""
    if phi_jet.num_vars != 2:
        raise InvalidInputError("potential jet must have two variables")
    scale = max(phi_jet.max_coeff_norm(), 1.0)
    defect = phi_jet.hermitian_symmetry_defect()
    if defect > tol * scale:
        raise InvalidInputError(f"potential jet is not Hermitian-symmetric (defect {defect:.3e})")
    a, b = phi_jet.vars
    return Polarization(phi_jet.rename({a: "y", b: "z"}))


def diastasis_jet(chart, order=None):
    """D as a jet in centered variables (y - x, ybar - xbar) at the chart center."""
    phi = chart.phi_jet if order is None else chart.phi_jet.truncate(order)
    V = phi.vars
    n = phi.order
    r = phi.dim
    half = MatrixJet.constant(expm(-0.5 * phi.data[0], hermitian=True), V, n)
    psi_y = phi.drop(V[1]).embed(V)  # psi(y, xbar)
    psi_ybar = phi.drop(V[0]).embed(V)  # psi(x, ybar)
    prod = jet_mul(half, jet_exp(psi_y))
    prod = jet_mul(prod, jet_exp(-phi))
    prod = jet_mul(prod, jet_exp(psi_ybar))
    prod = jet_mul(prod, half)
    # constant term is exactly I up to roundoff
    prod.data[0] = np.eye(r)
    D = jet_log(prod)
    return DiastasisJet(D.rename(dict(zip(V, CENTERED))), chart.center)


def k_frame_metric(chart, order=None):
    """Metric jet e^D in the K-frame centered at the chart center."""
    D = diastasis_jet(chart, order).D_jet
    return jet_exp(D)


def curvature_link_defect(chart, sign=-1.0, order=None):
    """|| h^{1/2} D_11 h^{-1/2} - sign * Ft || at the center.

    Ft is read off from the potential through the curvature formula, so
    this compares two independent computations.
    """
    from .geometry import curvature_from_psi

    dj = diastasis_jet(chart, order)
    h0 = chart.h0
    F, _ = curvature_from_psi(chart.psi_jet(), chart.g_polar())
    lhs = sqrtm_pd(h0) @ dj.d11() @ inv_sqrtm_pd(h0)
    return float(np.abs(lhs - sign * F.data[0]).max())


# ----------------------------------------------------------------------
# pointwise


def _pd_sqrt(H):
    return sqrtm_pd(0.5 * (H + H.conj().T))


def diastasis_point(model, x, y):
    """D(x, y) from the closed-form polarized metric of a model.

    ``model`` needs ``metric(x)`` and ``h_polarized(y, z)``; note
    e^{psi(y, z)} = h_polarized(y, z)^{-1}.
    """
    hx = model.metric(x)
    hy = model.metric(y)
    sx = _pd_sqrt(hx)
    A = np.linalg.inv(model.h_polarized(y, np.conj(x)))
    B = np.linalg.inv(model.h_polarized(x, np.conj(y)))
    P = sx @ A @ hy @ B @ sx
    P = 0.5 * (P + P.conj().T)
    return logm_principal(P, hermitian=True)


def transition_matrix(model, x, y, k=1):
    """h(x)^{1/2} e^{psi(y, xbar)} h(y)^{1/2} lifted to Sym^k."""
    T = _pd_sqrt(model.metric(x)) @ np.linalg.inv(model.h_polarized(y, np.conj(x))) @ _pd_sqrt(model.metric(y))
    return sym_pow_matrix(T, k) if k != 1 else T


def sym_power_decay_check(model, x, y, k):
    """||expm(s_k D(x, y))||_op; equals exp(k lambda_max(D))."""
    D = diastasis_point(model, x, y)
    Dk = s_k_lift(D, k)
    return op_norm(expm(0.5 * (Dk + Dk.conj().T), hermitian=True))


def lambda_max(D):
    return float(eigh(D).eigenvalues[-1])


def fit_delta(model, pairs):
    """min over pairs of -lambda_max(D(x, y)) / |x - y|^2 (pairs with x != y)."""
    vals = []
    for x, y in pairs:
        d2 = abs(x - y) ** 2
        if d2 == 0:
            continue
        vals.append(-lambda_max(diastasis_point(model, x, y)) / d2)
    if not vals:
        raise InvalidInputError("need at least one pair with x != y")
    return float(min(vals))


def disk_pairs(radius, n, rng=None, grid=True):
    """Pairs in a disk: an n x n grid of pairs from n points, or n random pairs."""
    if grid:
        t = np.arange(n)
        pts = radius * np.sqrt((t + 0.5) / n) * np.exp(2j * np.pi * t * 0.618034)
        return [(a, b) for a in pts for b in pts if a != b]
    if rng is None:
        raise InvalidInputError("random pairs need a generator")
    out = []
    for _ in range(n):
        p = radius * np.sqrt(rng.uniform(size=2)) * np.exp(2j * np.pi * rng.uniform(size=2))
        out.append((p[0], p[1]))
    return out


def trust_radius(chart):
    """Half the coefficient-decay radius fitted from the potential jet."""
    norms = chart.phi_jet.degree_norms()[1:]
    deg = np.arange(1, len(norms) + 1)
    keep = norms > 1e-14 * max(norms.max(), 1e-300)
    if keep.sum() < 2:
        return np.inf
    slope = np.polyfit(deg[keep], np.log(norms[keep]), 1)[0]
    return 0.5 * float(np.exp(-slope))


def diastasis_from_jet(dj, y, radius=None):
    """Evaluate a diastasis jet at the point y (absolute coordinate)."""
    w = complex(y) - dj.center
    if radius is not None and abs(w) > radius:
        raise NumericalDomainError(f"|y - x| = {abs(w):.3e} exceeds the trust radius {radius:.3e}")
    return dj.D_jet.evaluate({"y": w, "yb": np.conj(w)})
