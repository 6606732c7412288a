"""Direct Bergman kernels of catalog models on P^1.

Sections of Sym^k of a split bundle O(d_1) + ... + O(d_r) are z^j e_n with
n a weak composition of k and j <= sum_i n_i d_i.  The twisted models have
the same sections with all d_i = a.  Integrals use the variable
t = |z|^2 / (1 + |z|^2) in which the Fubini-Study integrands are
polynomials.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import config
from .errors import FactorizationError, InvalidInputError, NumericalDomainError
from .expansion import build_phase, coeff_recursion, required_order
from .geometry import chart_from_model
from .numerics import cholesky, eigh, inv_sqrtm_pd, op_norm, sqrtm_pd
from .sympow import sym_pow_matrix, sym_rank, weak_compositions


# ----------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    radial: int
    angular: int
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)  # include the Kahler density
    label: str = ""

    @property
    def size(self):
        return len(self.points)


def quadrature(model, radial=config.QUAD_RADIAL, angular=config.QUAD_ANGULAR):
    """Gauss-Legendre in t times uniform angles; omega = g dt dtheta / (1-t)^2."""
    if not model.kahler.is_global:
        raise InvalidInputError("global quadrature needs a compact Kahler form")
    if radial < 2 or angular < 1:
        raise InvalidInputError("need at least 2 radial and 1 angular nodes")
    x, w = np.polynomial.legendre.leggauss(radial)
    t = 0.5 * (x + 1)
    wt = 0.5 * w
    rho = np.sqrt(t / (1 - t))
    ang = 2 * np.pi * np.arange(angular) / angular
    pts = (rho[:, None] * np.exp(1j * ang)[None, :]).reshape(-1)
    g = model.density(pts)
    jac = np.repeat(wt / (1 - t) ** 2, angular) * (2 * np.pi / angular)
    return QuadratureRule(radial, angular, pts, jac * g, f"gl{radial}x{angular}")


def disk_quadrature(model, radius, radial=64, angular=96):
    """Polar rule on |z| < radius with weights for omega = 2 g dA."""
    x, w = np.polynomial.legendre.leggauss(radial)
    rho = 0.5 * radius * (x + 1)
    wr = 0.5 * radius * w
    ang = 2 * np.pi * np.arange(angular) / angular
    pts = (rho[:, None] * np.exp(1j * ang)[None, :]).reshape(-1)
    jac = np.repeat(2 * rho * wr, angular) * (2 * np.pi / angular)
    return QuadratureRule(radial, angular, pts, jac * model.density(pts), f"disk{radius}")


# ----------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class SectionBasis:
    model: object
    k: int
    sections: tuple  # (composition index, exponent j)
    degrees: tuple  # degree of each Sym^k basis line

    @property
    def size(self):
        return len(self.sections)

    @property
    def rank(self):
        return len(self.degrees)

    def max_degree(self):
        return max(self.degrees)


def section_basis(model, k):
    if k < 0:
        raise InvalidInputError("k must be nonnegative")
    basis = weak_compositions(k, model.rank)
    degs = tuple(int(np.dot(n, model.degrees)) for n in basis)
    secs = tuple((i, j) for i, d in enumerate(degs) for j in range(d + 1))
    if not secs:
        raise InvalidInputError("no holomorphic sections")
    return SectionBasis(model, k, secs, degs)


def expected_dimension(model, k):
    """Combinatorial count of sections."""
    return sum(int(np.dot(n, model.degrees)) + 1 for n in weak_compositions(k, model.rank))


def sym_metric_values(model, k, pts):
    """Sym^k h at an array of points, shape (P, r_k, r_k), with the scalar
    factor (1+|z|^2)^{-k a} split off for the twisted models.

    Returns (matrices, scalar factor) with the metric equal to their product.
    """
    pts = np.asarray(pts, dtype=complex)
    s = np.abs(pts) ** 2
    if model.kind == "twisted_trivial":
        H = model.metric(pts) * ((1 + s) ** model.a)[:, None, None]
        return sym_pow_matrix(H, k), (1 + s) ** (-k * model.a)
    basis = weak_compositions(k, model.rank)
    hd = np.real(np.einsum("qii->qi", model.metric(pts)))
    diag = np.ones((len(pts), len(basis)))
    for b, n in enumerate(basis):
        for i, e in enumerate(n):
            if e:
                diag[:, b] *= hd[:, i] ** e
    out = np.zeros((len(pts), len(basis), len(basis)), dtype=complex)
    idx = np.arange(len(basis))
    out[:, idx, idx] = diag
    return out, np.ones(len(pts))


def section_values(sb, x):
    """d_k x r_k matrix of basis section values at x (rows are sections)."""
    V = np.zeros((sb.size, sb.rank), dtype=complex)
    for a, (n, j) in enumerate(sb.sections):
        V[a, n] = complex(x) ** j
    return V


# ----------------------------------------------------------------------
# Gram and Bergman function


def _gram_split(sb, quad):
    Hk, scal = sym_metric_values(sb.model, sb.k, quad.points)
    z = quad.points
    G = np.zeros((sb.size, sb.size), dtype=complex)
    start = 0
    for n, d in enumerate(sb.degrees):
        u = np.sqrt(quad.weights * scal * Hk[:, n, n].real)
        X = z[:, None] ** np.arange(d + 1)[None, :] * u[:, None]
        G[start:start + d + 1, start:start + d + 1] = X.T @ X.conj()
        start += d + 1
    return G


def _gram_general(sb, quad):
    Hk, scal = sym_metric_values(sb.model, sb.k, quad.points)
    z = quad.points
    J = sb.max_degree() + 1
    R = sb.rank
    X = z[:, None] ** np.arange(J)[None, :] * np.sqrt(scal)[:, None]
    P = (X[:, :, None] * X.conj()[:, None, :]).reshape(len(z), J * J) * quad.weights[:, None]
    G4 = (P.T @ Hk.reshape(len(z), R * R)).reshape(J, J, R, R)
    rows = np.array([n for n, _ in sb.sections])
    cols = np.array([j for _, j in sb.sections])
    return G4[cols[:, None], cols[None, :], rows[:, None], rows[None, :]]


def gram(model, k, quad, basis=None):
    sb = basis or section_basis(model, k)
    G = _gram_split(sb, quad) if model.is_split else _gram_general(sb, quad)
    return 0.5 * (G + G.conj().T)


@dataclass(frozen=True)
class BergmanSample:
    k: int
    x: complex
    B: np.ndarray
    op_norm: float
    trace: float
    model: str = ""
    quad: str = ""


class BergmanSpace:
    """Gram matrix and its Cholesky factor for one (model, k, quadrature)."""

    def __init__(self, model, k, quad=None):
        self.model = model
        self.k = k
        self.quad = quad or quadrature(model)
        self.basis = section_basis(model, k)
        self.gram = gram(model, k, self.quad, self.basis)
        try:
            self.chol = cholesky(self.gram)
        except FactorizationError as exc:
            w = eigh(self.gram).eigenvalues[0]
            raise NumericalDomainError(f"Gram matrix is not positive definite (smallest eigenvalue {w:.3e})") from exc

    @property
    def dim(self):
        return self.basis.size

    def metric_at(self, x):
        return sym_pow_matrix(self.model.metric(x), self.k)

    def frame_matrix(self, x):
        """S = L^-1 V(x) H(x)^{1/2}; rows are orthonormal sections in an orthonormal frame."""
        H = self.metric_at(x)
        V = section_values(self.basis, x)
        return np.linalg.solve(self.chol, V @ sqrtm_pd(H))

    def bergman(self, x):
        S = self.frame_matrix(x)
        B = S.conj().T @ S
        B = 0.5 * (B + B.conj().T)
        return BergmanSample(self.k, complex(x), B, op_norm(B), float(np.trace(B).real), self.model.name, self.quad.label)

    def trace_integral(self, quad=None):
        """int tr B omega = tr(G^-1 G_quad); with a finer rule this checks the Gram quadrature."""
        quad = quad or self.quad
        Gq = gram(self.model, self.k, quad, self.basis)
        return float(np.trace(np.linalg.solve(self.gram, Gq)).real)


def bergman_function(model, k, x, quad=None):
    return BergmanSpace(model, k, quad).bergman(x)


def extremal_lower_bound(space, x, trials, rng, seed_top=True):
    """max over random sections of |s(x)|^2 / (s, s)."""
    S = space.frame_matrix(x)
    best = 0.0
    if trials > 0:
        coef = rng.normal(size=(trials, space.dim)) + 1j * rng.normal(size=(trials, space.dim))
        vals = coef @ S
        ratios = np.sum(np.abs(vals) ** 2, axis=1) / np.sum(np.abs(coef) ** 2, axis=1)
        best = float(ratios.max())
    if seed_top:
        U, sv, _ = np.linalg.svd(S, full_matrices=False)
        alpha = U[:, 0].conj()
        best = max(best, float(np.sum(np.abs(alpha @ S) ** 2) / np.sum(np.abs(alpha) ** 2)))
    return best


# ----------------------------------------------------------------------
# Riemann-Roch


RR_C1 = 1 / (2 * np.pi)
RR_C2 = 1 / (4 * np.pi)


def curvature_integral(model, k, quad=None):
    """int tr s_k(Ft) i dy ^ dybar = (k r_k / r) int tr Ft, by quadrature."""
    quad = quad or quadrature(model)
    r = model.rank
    trF = model.trace_curvature(quad.points)
    base = float(np.sum(quad.weights * trF / model.density(quad.points)))
    return k * sym_rank(r, k) / r * base


def scal_integral(model, quad=None):
    quad = quad or quadrature(model)
    return float(np.sum(quad.weights * model.kahler.scal(quad.points)))


def pin_normalization(quad_model=None):
    """Solve c1 * curv + c2 * r_k * scal = d_k on fs_line(1) at k = 1, 2."""
    from .geometry import fs_line

    m = quad_model or fs_line(1)
    A = np.array([[curvature_integral(m, k), sym_rank(1, k) * scal_integral(m)] for k in (1, 2)])
    d = np.array([expected_dimension(m, k) for k in (1, 2)], dtype=float)
    return tuple(np.linalg.solve(A, d))


@dataclass(frozen=True)
class RRRecord:
    model: str
    k: int
    d_k: int
    curvature_integral: float
    scal_integral: float
    predicted: float
    error: float
    error_times_k_over_rk: float
    trace_integral: float = None


def riemann_roch_report(model, k, constants=None, quad=None, trace_check=False):
    quad = quad or quadrature(model)
    c1, c2 = constants or pin_normalization()
    dk = expected_dimension(model, k)
    rk = sym_rank(model.rank, k)
    ci = curvature_integral(model, k, quad)
    si = scal_integral(model, quad)
    pred = c1 * ci + c2 * rk * si
    err = dk - pred
    tr = None
    if trace_check:
        tr = BergmanSpace(model, k, quad).trace_integral()
    return RRRecord(model.name or model.kind, k, dk, ci, si, pred, err, err * k / rk, tr)


# ----------------------------------------------------------------------
# comparison with the expansion


def expansion_at(model, k_list, x, N, chart_order=None):
    """Recursion coefficients at x for several k, sharing one rank-level phase."""
    order = chart_order or required_order(N)
    chart = chart_from_model(model, x, order)
    phase = build_phase(chart)
    return chart, {k: coeff_recursion(chart, k, N, phase) for k in k_list}


def expansion_residual(sample, table, metric):
    """|| 2 pi B_k - H^{-1/2} (sum_m b_m k^{1-m}) H^{1/2} ||_op in the orthonormal frame."""
    his = inv_sqrtm_pd(metric)
    hs = sqrtm_pd(metric)
    approx = his @ table.expansion() @ hs
    return op_norm(2 * np.pi * sample.B - approx)


def fit_exponent(ks, residuals):
    ks = np.asarray(ks, float)
    r = np.asarray(residuals, float)
    keep = r > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(ks[keep]), np.log(r[keep]), 1)[0])


COMPARE_COLUMNS = ("model", "k", "x_re", "x_im", "residual_op_norm", "b0k_norm", "fitted_exponent")
RR_COLUMNS = ("model", "k", "d_k", "predicted", "error", "error_times_k_over_rk")


def compare_expansion(model, k_list, points, N=1, quad=None):
    """Rows of the comparison table (dicts keyed by COMPARE_COLUMNS)."""
    quad = quad or quadrature(model)
    spaces = {k: BergmanSpace(model, k, quad) for k in k_list}
    rows = []
    for x in points:
        _, tables = expansion_at(model, k_list, x, N)
        res = []
        for k in k_list:
            sample = spaces[k].bergman(x)
            H = spaces[k].metric_at(x)
            res.append((k, expansion_residual(sample, tables[k], H), op_norm(tables[k].b[0]) * k))
        slope = fit_exponent([k for k, _, _ in res], [r for _, r, _ in res]) if len(res) > 1 else float("nan")
        for k, r, b0k in res:
            rows.append(dict(zip(COMPARE_COLUMNS, (model.name or model.kind, k, complex(x).real, complex(x).imag, r, b0k, slope))))
    return rows


def global_bound_sweep(model, k_list, points, quad=None):
    """max over points of op_norm(B_k)/k for each k."""
    quad = quad or quadrature(model)
    out = {}
    for k in k_list:
        sp = BergmanSpace(model, k, quad)
        out[k] = max(sp.bergman(x).op_norm for x in points) / k
    return out


# ----------------------------------------------------------------------
# reproducing property


def reproducing_check(model, k, N, x, exponents=(0, 1, 2), radius=config.REPRO_DISK_RADIUS, chart_order=14, rule=None):
    """Relative residuals || u(x) - (u, K_k^(N)(., x))_disk ||_{h(x)} / ||u||_disk.

    Test sections are z^j times the first Sym^k basis vector.
    """
    if N > (chart_order - 4) // 2:
        raise InvalidInputError("chart order too low for the requested N")
    chart = chart_from_model(model, x, chart_order)
    table = coeff_recursion(chart, k, N)
    quad = rule or disk_quadrature(model, radius)
    y = quad.points
    b = table.b_total_jet().evaluate({"x": np.zeros_like(y), "z": np.conj(y) - np.conj(chart.center)})
    Epsi = sym_pow_matrix(np.linalg.inv(model.h_polarized(np.full_like(y, x), np.conj(y))), k)
    Hy = sym_pow_matrix(model.metric(y), k)
    kern = Epsi @ b / (2 * np.pi)  # conj(K(y, x))
    Hx = sym_pow_matrix(model.metric(x), k)
    rk = Hx.shape[0]
    out = []
    for j in exponents:
        u = np.zeros((len(y), rk), dtype=complex)
        u[:, 0] = y ** j
        uH = np.einsum("qa,qab->qb", u, Hy)
        rep = np.einsum("q,qa,qab->b", quad.weights, uH, kern)
        ux = np.zeros(rk, dtype=complex)
        ux[0] = complex(x) ** j
        diff = ux - rep
        num = np.sqrt(abs(diff @ Hx @ diff.conj()))
        den = np.sqrt(abs(np.sum(quad.weights * np.einsum("qa,qa->q", uH, u.conj()))))
        out.append(float(num / den))
    return out


# ----------------------------------------------------------------------
# tables


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12e}"
    return str(v)


def table_to_csv(columns, rows, header_lines=()):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, list):
        return [_jsonable(a) for a in v]
    if isinstance(v, dict):
        return {k: _jsonable(a) for k, a in v.items()}
    return v


def table_to_json(columns, rows, header=None):
    doc = {"header": header or {}, "columns": list(columns), "rows": [{c: _jsonable(r[c]) for c in columns} for r in rows]}
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def rr_rows(records):
    return [{c: getattr(rec, c) for c in RR_COLUMNS} for rec in records]


BERGMAN_COLUMNS = ("model", "k", "x_re", "x_im", "op_norm", "trace", "op_norm_over_k")
PLOT_COLUMNS = ("model", "x_re", "x_im", "k", "log_k", "log_residual")
REPRO_COLUMNS = ("model", "k", "N", "x_re", "x_im", "exponent", "relative_residual")


def bergman_rows(model, k_list, points, quad=None):
    quad = quad or quadrature(model)
    rows = []
    for k in k_list:
        sp = BergmanSpace(model, k, quad)
        for x in points:
            s = sp.bergman(x)
            rows.append(dict(zip(BERGMAN_COLUMNS, (model.name or model.kind, k, s.x.real, s.x.imag, s.op_norm, s.trace, s.op_norm / k))))
    return rows


def plot_rows(compare_rows):
    """k against log residual, one series per point (plot data only)."""
    out = []
    for r in compare_rows:
        res = r["residual_op_norm"]
        out.append(
            {
                "model": r["model"],
                "x_re": r["x_re"],
                "x_im": r["x_im"],
                "k": r["k"],
                "log_k": float(np.log(r["k"])),
                "log_residual": float(np.log(res)) if res > 0 else float("-inf"),
            }
        )
    return out


def reproduce_rows(model, k_list, N, points, exponents=(0, 1, 2)):
    rows = []
    for x in points:
        for k in k_list:
            res = reproducing_check(model, k, N, x, exponents)
            for j, v in zip(exponents, res):
                rows.append(dict(zip(REPRO_COLUMNS, (model.name or model.kind, k, N, complex(x).real, complex(x).imag, j, v))))
    return rows
