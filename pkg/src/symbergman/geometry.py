"""Charts, curvature operators and the catalog of bundle models on P^1.

A chart stores the potential phi = -log h as a jet in (y, ybar), with both
slots treated as independent variables centered at the chart center, and
the Kahler density g with omega = sqrt(-1) g dy ^ dybar.

Curvature follows ``Ft = -d_2(d_1(H) H^-1)`` with ``H = e^{-psi}``; for a
positive line bundle this is ``phi_{y ybar} > 0``.
"""

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import config
from .errors import ConfigError, InvalidInputError, NumericalDomainError, TruncationError
from .matjet import MatrixJet, jet_inverse, jet_log, jet_mul, jet_partial, jet_exp
from .numerics import eigh, expm, inv_sqrtm_pd, sqrtm_pd
from .sympow import s_k_lift

CHART_VARS = ("y", "yb")
EXCLUDED_RADIUS = 1e6  # centers beyond this are treated as the point at infinity


@dataclass(frozen=True)
class ChartData:
    rank: int
    phi_jet: MatrixJet
    g_jet: MatrixJet
    center: complex = 0.0
    label: str = ""

    @property
    def order(self):
        return min(self.phi_jet.order, self.g_jet.order)

    @property
    def phi0(self):
        return self.phi_jet.data[0]

    @property
    def h0(self):
        """Metric value e^{-phi} at the center."""
        return expm(-self.phi0, hermitian=True)

    @property
    def g0(self):
        return float(self.g_jet.data[0, 0, 0].real)

    def psi_jet(self):
        """phi with the ybar slot relabeled as an independent variable z."""
        return self.phi_jet.rename({"yb": "z"})

    def g_polar(self):
        return self.g_jet.rename({"yb": "z"})


def make_chart(phi_jet, g_jet, center=0.0, label=""):
    """Validate and wrap jets into a ChartData."""
    if phi_jet.num_vars != 2 or g_jet.num_vars != 2 or g_jet.dim != 1:
        raise InvalidInputError("chart jets must be two-variable, density of dim 1")
    phi_jet = phi_jet.reorder(CHART_VARS) if phi_jet.vars != CHART_VARS else phi_jet
    g_jet = g_jet.reorder(CHART_VARS) if g_jet.vars != CHART_VARS else g_jet
    scale = max(phi_jet.max_coeff_norm(), 1.0)
    if phi_jet.hermitian_symmetry_defect() > 1e-10 * scale:
        raise InvalidInputError("potential jet is not Hermitian-symmetric")
    if g_jet.hermitian_symmetry_defect() > 1e-10 * max(g_jet.max_coeff_norm(), 1.0):
        raise InvalidInputError("density jet is not real")
    g0 = g_jet.data[0, 0, 0]
    if not g0.real > 0:
        raise NumericalDomainError(f"Kahler density at the center is {g0.real:.3e}, must be positive")
    return ChartData(phi_jet.dim, phi_jet, g_jet, complex(center), label)


# ----------------------------------------------------------------------
# curvature


def _need(jet, field_name):
    if jet is None:
        raise TruncationError(f"chart order too low to compute {field_name}")
    return jet


@dataclass(frozen=True)
class CurvaturePack:
    """Curvature quantities as jets in (y, z); fields that need more order than
    the chart carries are None and raise on access through :meth:`get`."""

    F_tilde: MatrixJet
    eta: MatrixJet
    lambdaF: MatrixJet
    scal: MatrixJet
    dbar_star_F: MatrixJet = None
    lambda_laplacian_F: MatrixJet = None
    g_inv: MatrixJet = field(default=None, repr=False)

    def get(self, name):
        return _need(getattr(self, name), name)

    def conjugated_lambdaF(self, h0):
        """h^{-1/2} lambdaF h^{1/2} at the center (Hermitian for real metrics)."""
        hs = sqrtm_pd(h0)
        his = inv_sqrtm_pd(h0)
        return his @ self.lambdaF.data[0] @ hs


def curvature_from_psi(psi, g):
    """F_tilde and eta from psi(y, z) and density g(y, z)."""
    H = jet_exp(-psi)
    Hinv = jet_inverse(H)
    eta = jet_mul(jet_partial(H, "y"), Hinv.truncate(H.order - 1))
    F = -jet_partial(eta, "z")
    return F, eta


def scalar_curvature_of_density(g_jet):
    """-g^-1 d_2(d_1(g) g^-1) for a dim-1 density jet in two variables."""
    if g_jet.dim != 1 or g_jet.num_vars != 2:
        raise InvalidInputError("density jet must be scalar in two variables")
    if not g_jet.data[0, 0, 0].real > 0:
        raise NumericalDomainError("density must be positive at the center")
    if g_jet.order < 2:
        raise TruncationError("scalar curvature needs density order >= 2")
    a, b = g_jet.vars
    ginv = jet_inverse(g_jet)
    inner = jet_mul(jet_partial(g_jet, a), ginv.truncate(g_jet.order - 1))
    return -jet_mul(ginv.truncate(g_jet.order - 2), jet_partial(inner, b))


def dbar_star_coefficient(F, eta, ginv):
    """-d_1(g^-1) F + g^-1 eta F - g^-1 d_1 F - g^-1 F eta."""
    n = F.order - 1
    F1 = jet_partial(F, "y")
    Ft = F.truncate(n)
    et = eta.truncate(n)
    gi = ginv.truncate(n)
    return (
        -jet_mul(jet_partial(ginv, "y").truncate(n), Ft)
        + jet_mul(gi, jet_mul(et, Ft))
        - jet_mul(gi, F1)
        - jet_mul(gi, jet_mul(Ft, et))
    )


def curvature_pack(chart):
    if chart.order < 2:
        raise TruncationError("curvature_pack needs chart order >= 2 (F_tilde)")
    psi = chart.psi_jet()
    g = chart.g_polar()
    F, eta = curvature_from_psi(psi, g)
    ginv = jet_inverse(g)
    lam = jet_mul(ginv.truncate(F.order), F)
    scal = scalar_curvature_of_density(g)
    Q = lap = None
    if F.order >= 1:
        Q = dbar_star_coefficient(F, eta, ginv)
    if F.order >= 2:
        lap = jet_mul(ginv.truncate(Q.order - 1), jet_partial(Q, "z"))
    return CurvaturePack(F, eta, lam, scal, Q, lap, ginv)


def lift_jet(J, k):
    """Apply the symmetric power derivative coefficientwise."""
    return J.map_coeffs(lambda a: s_k_lift(a, k))


# ----------------------------------------------------------------------
# Kahler densities


@dataclass(frozen=True)
class KahlerSpec:
    kind: str = "fubini_study"
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fubini_study", "flat_chart", "density_expr"):
            raise ConfigError(f"unknown kahler kind {self.kind!r}")
        if self.kind == "density_expr" and not self.c > -1:
            raise ConfigError("density_expr needs c > -1 to stay positive")

    @property
    def is_global(self):
        return self.kind != "flat_chart"

    def density(self, z):
        s = np.abs(z) ** 2
        if self.kind == "flat_chart":
            return np.ones_like(s)
        g = (1 + s) ** -2.0
        if self.kind == "density_expr":
            g = g * (1 + self.c * s / (1 + s))
        return g

    def scal(self, z):
        """-g^-1 d dbar log g for the radial densities, via (s f')' in s = |z|^2."""
        s = np.abs(z) ** 2
        if self.kind == "flat_chart":
            return np.zeros_like(s)
        lap = -2.0 / (1 + s) ** 2
        if self.kind == "density_expr":
            c1 = 1 + self.c
            d1 = c1 / (1 + c1 * s) - 1 / (1 + s)
            d2 = -(c1 ** 2) / (1 + c1 * s) ** 2 + 1 / (1 + s) ** 2
            lap = lap + d1 + s * d2
        return -lap / self.density(z)

    def volume(self):
        if self.kind == "flat_chart":
            raise ConfigError("flat_chart density has infinite volume on P^1")
        return 2 * np.pi * (1 + self.c / 2 if self.kind == "density_expr" else 1.0)

    def jet(self, center, order):
        y, z = _coord_jets(center, order, 1)
        if self.kind == "flat_chart":
            return MatrixJet.unit(CHART_VARS, order, 1)
        w = 1 + jet_mul(y, z)
        winv = jet_inverse(w)
        g = jet_mul(winv, winv)
        if self.kind == "density_expr":
            u = jet_mul(jet_mul(y, z), winv)
            g = jet_mul(g, 1 + u * self.c)
        return g

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "density_expr":
            d["c"] = self.c
        return d


def _coord_jets(center, order, dim):
    y = MatrixJet.variable("y", CHART_VARS, order, 1) + center
    z = MatrixJet.variable("yb", CHART_VARS, order, 1) + np.conj(center)
    return y, z


# ----------------------------------------------------------------------
# models


@dataclass(frozen=True)
class BundleModel:
    """Catalog metric on a bundle over P^1.

    kind "fs_line": O(d) with h = (1+|z|^2)^-d e^{-eps u}, u = |z|^2/(1+|z|^2).
    kind "direct_sum": orthogonal sum of fs_line summands.
    kind "twisted_trivial": O(a)^r with h = (1+|z|^2)^-a G^dagger G,
    G = I + eps w N, w = z/(1+|z|^2), N the nilpotent shift.
    """

    kind: str
    d: int = 1
    epsilon: float = 0.0
    summands: tuple = ()
    a: int = 1
    r: int = 1
    kahler: KahlerSpec = KahlerSpec()
    name: str = ""

    def __post_init__(self):
        if self.kind == "fs_line":
            if self.d < 1:
                raise ConfigError("fs_line needs degree d >= 1")
            if not abs(self.epsilon) < self.d:
                raise ConfigError("fs_line perturbation must satisfy |epsilon| < d")
        elif self.kind == "direct_sum":
            if len(self.summands) < 1 or any(s.kind != "fs_line" for s in self.summands):
                raise ConfigError("direct_sum summands must be fs_line models")
        elif self.kind == "twisted_trivial":
            if self.a < 1 or self.r < 1:
                raise ConfigError("twisted_trivial needs a >= 1 and r >= 1")
            if self.r == 1 and self.epsilon != 0:
                raise ConfigError("twisted_trivial with r = 1 has no nilpotent twist")
        else:
            raise ConfigError(f"unknown model kind {self.kind!r}")

    # structure --------------------------------------------------------

    @property
    def rank(self):
        if self.kind == "fs_line":
            return 1
        if self.kind == "direct_sum":
            return len(self.summands)
        return self.r

    @property
    def degrees(self):
        """Degrees of the line bundles in the splitting type."""
        if self.kind == "fs_line":
            return (self.d,)
        if self.kind == "direct_sum":
            return tuple(s.d for s in self.summands)
        return (self.a,) * self.r

    @property
    def is_split(self):
        """True when the metric is diagonal in the standard frame."""
        return self.kind != "twisted_trivial" or self.epsilon == 0 or self.r == 1

    def nilpotent(self):
        return np.eye(self.r, k=1)

    # pointwise --------------------------------------------------------

    def h_polarized(self, y, z):
        """h(y, z) holomorphic in y and in z; h(y, conj(y)) is the metric.

        Vectorized over equal-shape arrays; returns shape (..., r, r).
        """
        y = np.asarray(y, dtype=complex)
        z = np.asarray(z, dtype=complex)
        w = 1 + y * z
        if self.kind == "fs_line":
            out = w ** (-self.d) * np.exp(-self.epsilon * y * z / w)
            return out[..., None, None]
        if self.kind == "direct_sum":
            vals = [s.h_polarized(y, z)[..., 0, 0] for s in self.summands]
            out = np.zeros(y.shape + (self.rank, self.rank), dtype=complex)
            for i, v in enumerate(vals):
                out[..., i, i] = v
            return out
        N = self.nilpotent()
        Gy = np.eye(self.r) + (self.epsilon * y / w)[..., None, None] * N
        Gz = np.eye(self.r) + (self.epsilon * z / w)[..., None, None] * N.T
        return (w ** (-self.a))[..., None, None] * (Gz @ Gy)

    def metric(self, x):
        """Hermitian metric h(x) (row-vector convention)."""
        x = np.asarray(x, dtype=complex)
        H = self.h_polarized(x, np.conj(x))
        return 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))

    def density(self, x):
        return self.kahler.density(x)

    def trace_curvature(self, x):
        """tr Ft at x in closed form (the twist has determinant one)."""
        s = np.abs(np.asarray(x, dtype=complex)) ** 2
        if self.kind == "fs_line":
            return self.d / (1 + s) ** 2 + self.epsilon * (1 - s) / (1 + s) ** 3
        if self.kind == "direct_sum":
            return sum(m.trace_curvature(x) for m in self.summands)
        return self.a * self.r / (1 + s) ** 2

    # jets -------------------------------------------------------------

    def psi_jet(self, center, order):
        """-log h as a jet in (y, yb) centered at (center, conj(center))."""
        y, z = _coord_jets(center, order, 1)
        w = 1 + jet_mul(y, z)
        logw = jet_log(w)
        if self.kind == "fs_line":
            return _line_psi(self.d, self.epsilon, y, z, w, logw)
        if self.kind == "direct_sum":
            out = MatrixJet.zeros(CHART_VARS, order, self.rank)
            for i, s in enumerate(self.summands):
                out.data[:, i, i] = _line_psi(s.d, s.epsilon, y, z, w, logw).data[:, 0, 0]
            return out
        N = self.nilpotent()
        winv = jet_inverse(w)
        r = self.r
        Gy = MatrixJet.unit(CHART_VARS, order, r) + jet_mul(jet_mul(y, winv), MatrixJet.constant(N, CHART_VARS, order)) * self.epsilon
        Gz = MatrixJet.unit(CHART_VARS, order, r) + jet_mul(jet_mul(z, winv), MatrixJet.constant(N.T, CHART_VARS, order)) * self.epsilon
        Hpol = jet_mul(Gz, Gy)
        logH = jet_log(Hpol, hermitian=True)
        psi = jet_mul(logw, MatrixJet.unit(CHART_VARS, order, r)) * self.a - logH
        # clean roundoff so the Hermitian-symmetry check sees an exact pair
        return _symmetrize(psi)

    def chart(self, center, order):
        return chart_from_model(self, center, order)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "fs_line":
            d.update(d=self.d, epsilon=self.epsilon)
        elif self.kind == "direct_sum":
            # summands share the parent's Kahler form
            d["summands"] = [{k: v for k, v in s.to_dict().items() if k != "kahler"} for s in self.summands]
        else:
            d.update(a=self.a, r=self.r, epsilon=self.epsilon)
        d["kahler"] = self.kahler.to_dict()
        return d


def _line_psi(d, eps, y, z, w, logw):
    psi = logw * d
    if eps:
        psi = psi + jet_mul(jet_mul(y, z), jet_inverse(w)) * eps
    return psi


def _symmetrize(J):
    """Average a two-variable jet with its Hermitian-symmetric partner."""
    out = J.copy()
    for i, (a, b) in enumerate(J.monomials):
        j = J.index((b, a))
        out.data[i] = 0.5 * (J.data[i] + J.data[j].conj().T)
    return out


def chart_from_model(model, center, order):
    center = complex(center)
    if not np.isfinite(center) or abs(center) > EXCLUDED_RADIUS:
        raise NumericalDomainError(f"center {center} is outside the affine chart")
    phi = model.psi_jet(center, order)
    g = model.kahler.jet(center, order)
    return make_chart(phi, _symmetrize(g), center, model.name)


# ----------------------------------------------------------------------
# Griffiths positivity


def griffiths_matrix(chart):
    """h^{-1/2} Ft h^{1/2} at the center (Hermitian part)."""
    F, _ = curvature_from_psi(chart.psi_jet(), chart.g_polar())
    h0 = chart.h0
    M = inv_sqrtm_pd(h0) @ F.data[0] @ sqrtm_pd(h0)
    return 0.5 * (M + M.conj().T)


@lru_cache(maxsize=None)
def griffiths_min_eigenvalue(model, grid=config.GRIFFITHS_GRID):
    """Smallest curvature eigenvalue, times (1+|z|^2)^2, over a stereographic grid.

    The weight makes the quantity a curvature density against the round
    metric, so it stays bounded away from zero near infinity.
    """
    t = (np.arange(grid) + 0.5) / grid
    radii = np.sqrt(t / (1 - t))
    angles = 2 * np.pi * np.arange(grid) / grid
    worst = np.inf
    for rho in radii:
        for th in angles:
            c = rho * np.exp(1j * th)
            ch = ChartData(model.rank, model.psi_jet(c, 2), MatrixJet.unit(CHART_VARS, 2, 1), c)
            w = eigh(griffiths_matrix(ch)).eigenvalues[0] * (1 + rho ** 2) ** 2
            worst = min(worst, w)
    return float(worst)


def check_griffiths(model, grid=config.GRIFFITHS_GRID):
    lam = griffiths_min_eigenvalue(model, grid)
    if lam <= config.GRIFFITHS_MIN_EIG:
        raise NumericalDomainError(f"model {model.name or model.kind} is not Griffiths positive (min {lam:.3e})")
    return lam


# ----------------------------------------------------------------------
# catalog and loading


def fs_line(d=1, epsilon=0.0, kahler=None, name=""):
    return BundleModel("fs_line", d=d, epsilon=epsilon, kahler=kahler or KahlerSpec(), name=name)


def direct_sum(summands, kahler=None, name=""):
    return BundleModel("direct_sum", summands=tuple(summands), kahler=kahler or KahlerSpec(), name=name)


def twisted_trivial(a=1, r=2, epsilon=0.1, kahler=None, name=""):
    return BundleModel("twisted_trivial", a=a, r=r, epsilon=epsilon, kahler=kahler or KahlerSpec(), name=name)


CATALOG = {
    "fs1": lambda: fs_line(1, name="fs1"),
    "fs2": lambda: fs_line(2, name="fs2"),
    "fs1_pert": lambda: fs_line(1, 0.3, name="fs1_pert"),
    "o1o2": lambda: direct_sum([fs_line(1), fs_line(2)], name="o1o2"),
    "twisted": lambda: twisted_trivial(1, 2, 0.1, name="twisted"),
    "twisted0": lambda: twisted_trivial(1, 2, 0.0, name="twisted0"),
}


def catalog_model(name):
    try:
        return CATALOG[name]()
    except KeyError:
        raise ConfigError(f"unknown catalog model {name!r}; choose from {sorted(CATALOG)}") from None


_KEYS = {
    "fs_line": {"kind", "d", "epsilon", "kahler", "name"},
    "direct_sum": {"kind", "summands", "kahler", "name"},
    "twisted_trivial": {"kind", "a", "r", "epsilon", "kahler", "name"},
}


def _kahler_from(d):
    if d is None:
        return KahlerSpec()
    if not isinstance(d, dict):
        raise ConfigError("kahler must be an object")
    extra = set(d) - {"kind", "c"}
    if extra:
        raise ConfigError(f"unknown kahler keys {sorted(extra)}")
    return KahlerSpec(d.get("kind", "fubini_study"), float(d.get("c", 0.0)))


def model_from_dict(d):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("model spec must be an object with a 'kind' key")
    kind = d["kind"]
    if kind not in _KEYS:
        raise ConfigError(f"unknown model kind {kind!r}")
    extra = set(d) - _KEYS[kind]
    if extra:
        raise ConfigError(f"unknown keys for {kind}: {sorted(extra)}")
    kahler = _kahler_from(d.get("kahler"))
    name = str(d.get("name", ""))
    try:
        if kind == "fs_line":
            return fs_line(int(d.get("d", 1)), float(d.get("epsilon", 0.0)), kahler, name)
        if kind == "direct_sum":
            subs = []
            for s in d.get("summands", []):
                if isinstance(s, dict) and "kahler" in s:
                    raise ConfigError("summands take the kahler form of the parent")
                subs.append(model_from_dict(dict(s, kind=s.get("kind", "fs_line"))))
            return direct_sum(subs, kahler, name)
        return twisted_trivial(int(d.get("a", 1)), int(d.get("r", 2)), float(d.get("epsilon", 0.1)), kahler, name)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value in model spec: {exc}") from exc


def load_model(spec):
    """Catalog name, path to a JSON file, or an already-parsed dict."""
    if isinstance(spec, BundleModel):
        return spec
    if isinstance(spec, dict):
        return model_from_dict(spec)
    if spec in CATALOG:
        return catalog_model(spec)
    try:
        with open(spec) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no catalog model or file named {spec!r}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(data)


# ----------------------------------------------------------------------
# synthetic charts


def random_hermitian_jet(rng, rank, order, decay=0.3, variables=CHART_VARS):
    """Random Hermitian-symmetric two-variable jet with geometric decay."""
    J = MatrixJet.zeros(variables, order, rank)
    for i, (a, b) in enumerate(J.monomials):
        if (a, b) > (b, a):
            continue
        M = rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank))
        M *= decay ** (a + b)
        if a == b:
            M = 0.5 * (M + M.conj().T)
        J.data[i] = M
        J.data[J.index((b, a))] = M.conj().T
    return J


def random_chart(rng, rank, order, decay=0.3, min_curvature=0.2, flat=False):
    """Random real-analytic chart with Griffiths-positive curvature at the center."""
    for _ in range(100):
        phi = random_hermitian_jet(rng, rank, order, decay)
        A = rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank))
        phi.data[phi.index((1, 1))] = A @ A.conj().T / rank + np.eye(rank)
        phi.data[0] *= 0.5
        if flat:
            g = MatrixJet.unit(CHART_VARS, order, 1)
        else:
            sigma = random_hermitian_jet(rng, 1, order, decay * 0.5)
            sigma.data[0] = 0.0
            g = jet_exp(sigma)
            g = _symmetrize(g)
        chart = make_chart(phi, g)
        if eigh(griffiths_matrix(chart)).eigenvalues[0] > min_curvature:
            return chart
    raise NumericalDomainError("could not draw a Griffiths-positive chart")


def hermitian_einstein_chart(rng, rank, order, c=1.0, gauge=0.3):
    """Chart of h = T(y) (1+y ybar)^-c T*(ybar) with Fubini-Study density.

    T is a random holomorphic gauge I + yB + y^2 C, so g^-1 Ft = c I exactly
    while the potential is far from diagonal.
    """
    V = CHART_VARS
    B = gauge * (rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank)))
    C = gauge ** 2 * (rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank)))
    y = MatrixJet.variable("y", V, order, rank)
    yb = MatrixJet.variable("yb", V, order, rank)
    T = MatrixJet.unit(V, order, rank) + jet_mul(y, MatrixJet.constant(B, V, order)) + jet_mul(jet_mul(y, y), MatrixJet.constant(C, V, order))
    Ts = MatrixJet.unit(V, order, rank) + jet_mul(yb, MatrixJet.constant(B.conj().T, V, order)) + jet_mul(jet_mul(yb, yb), MatrixJet.constant(C.conj().T, V, order))
    ys, zs = _coord_jets(0.0, order, 1)
    w = 1 + jet_mul(ys, zs)
    base = jet_exp(jet_log(w) * (-c))
    h = jet_mul(jet_mul(T, base), Ts)
    phi = _symmetrize(-jet_log(h, hermitian=True))
    g = KahlerSpec().jet(0.0, order)
    return make_chart(phi, g, 0.0, "hermitian_einstein")


def bargmann_fock_chart(order, rank=1):
    V = CHART_VARS
    phi = MatrixJet.zeros(V, order, rank)
    if order >= 2:
        phi.data[phi.index((1, 1))] = np.eye(rank)
    return make_chart(phi, MatrixJet.unit(V, order, 1), 0.0, "bargmann_fock")
