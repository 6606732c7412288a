"""Truncated power series in up to three variables with matrix coefficients.

A :class:`MatrixJet` stores the coefficients of all monomials of total
degree at most ``order``.  Variables carry names, and operations that
substitute or merge variables look them up by name.  Coefficients are
kept in one array of shape ``(n_monomials, dim, dim)`` whose first axis
follows the graded order of :func:`monomials`; a jet of lower order is
therefore always a prefix of the same jet at higher order.

Multiplication is the non-commutative Cauchy product.  Values are
immutable by convention: every operation returns a new jet.
"""

from functools import lru_cache
from itertools import product
from math import comb, factorial

import numpy as np

from . import config
from .errors import ConvergenceError, InvalidInputError, NonDivisibleError, NumericalDomainError, TruncationError
from .numerics import expm, logm_principal

MAX_VARS = 3


def _compositions(total, nvars):
    if nvars == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, nvars - 1):
            out.append((first,) + rest)
    return out


@lru_cache(maxsize=None)
def monomials(nvars, order):
    """Exponent tuples of total degree <= order, graded then reverse-lex."""
    out = []
    for deg in range(order + 1):
        out.extend(_compositions(deg, nvars))
    return tuple(out)


@lru_cache(maxsize=None)
def _position(nvars, order):
    return {m: i for i, m in enumerate(monomials(nvars, order))}


def n_monomials(nvars, order):
    return comb(order + nvars, nvars)


@lru_cache(maxsize=None)
def _mul_table(nvars, order):
    """Index pairs (i, j) -> t with m_i + m_j = m_t, grouped by t, i = 0 first."""
    mons = monomials(nvars, order)
    pos = _position(nvars, order)
    I, J, starts = [], [], []
    for t, mt in enumerate(mons):
        starts.append(len(I))
        for mi in product(*(range(e + 1) for e in mt)):
            mj = tuple(a - b for a, b in zip(mt, mi))
            I.append(pos[mi])
            J.append(pos[mj])
    I = np.array(I)
    J = np.array(J)
    starts = np.array(starts)
    # put the (0, t) pair first in every group so the inverse recursion can skip it
    for s in starts:
        e = np.searchsorted(starts, s, side="right")
        stop = starts[e] if e < len(starts) else len(I)
        grp = slice(s, stop)
        zero = np.nonzero(I[grp] == 0)[0][0] + s
        I[[s, zero]] = I[[zero, s]]
        J[[s, zero]] = J[[zero, s]]
    return I, J, starts


def _poly_mul(p, q, order):
    out = {}
    for a, ca in p.items():
        for b, cb in q.items():
            e = tuple(x + y for x, y in zip(a, b))
            if sum(e) <= order:
                out[e] = out.get(e, 0.0) + ca * cb
    return out


@lru_cache(maxsize=None)
def _linear_substitution(n_in, n_out, order, forms):
    """Matrix sending coefficients in the old variables to the new ones.

    ``forms[i]`` is a tuple of (new_var_index, coefficient) pairs giving old
    variable i as a linear form in the new variables.
    """
    mons_in = monomials(n_in, order)
    pos_out = _position(n_out, order)
    T = np.zeros((len(pos_out), len(mons_in)))
    lin = []
    for f in forms:
        p = {}
        for j, c in f:
            e = [0] * n_out
            e[j] = 1
            p[tuple(e)] = p.get(tuple(e), 0.0) + c
        lin.append(p)
    powers = [[{(0,) * n_out: 1.0}] for _ in range(n_in)]
    for i in range(n_in):
        for _ in range(order):
            powers[i].append(_poly_mul(powers[i][-1], lin[i], order))
    for col, m in enumerate(mons_in):
        poly = {(0,) * n_out: 1.0}
        for i, e in enumerate(m):
            poly = _poly_mul(poly, powers[i][e], order)
        for e, c in poly.items():
            if c != 0.0:
                T[pos_out[e], col] += c
    T.setflags(write=False)
    return T


@lru_cache(maxsize=None)
def _segment_table(order, first_index, second_index, nvars):
    """x1^a -> (x^a + x^(a-1) y + ... + y^a) / (a + 1), other exponents kept."""
    mons = monomials(nvars, order)
    pos = _position(nvars, order)
    T = np.zeros((len(mons), len(mons)))
    for col, m in enumerate(mons):
        a = m[first_index]
        for j in range(a + 1):
            e = list(m)
            e[first_index] = j
            e[second_index] += a - j
            T[pos[tuple(e)], col] += 1.0 / (a + 1)
    T.setflags(write=False)
    return T


class MatrixJet:
    """Truncated series sum_m C_m X^m with ``dim x dim`` complex coefficients."""

    __slots__ = ("vars", "order", "dim", "data")

    def __init__(self, variables, order, dim, data=None):
        variables = tuple(variables)
        if not 1 <= len(variables) <= MAX_VARS:
            raise InvalidInputError(f"jets have 1 to {MAX_VARS} variables, got {variables}")
        if len(set(variables)) != len(variables):
            raise InvalidInputError(f"repeated variable names {variables}")
        if order < 0 or dim < 1:
            raise InvalidInputError("order must be >= 0 and dim >= 1")
        self.vars = variables
        self.order = int(order)
        self.dim = int(dim)
        n = n_monomials(len(variables), order)
        if data is None:
            data = np.zeros((n, dim, dim), dtype=complex)
        else:
            data = np.asarray(data, dtype=complex)
            if data.shape != (n, dim, dim):
                raise InvalidInputError(f"coefficient array has shape {data.shape}, expected {(n, dim, dim)}")
        self.data = data

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, variables, order, dim):
        return cls(variables, order, dim)

    @classmethod
    def constant(cls, M, variables, order):
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        J = cls(variables, order, M.shape[0])
        J.data[0] = M
        return J

    @classmethod
    def unit(cls, variables, order, dim):
        return cls.constant(np.eye(dim), variables, order)

    @classmethod
    def variable(cls, name, variables, order, dim=1, coefficient=None):
        J = cls(variables, order, dim)
        if order >= 1:
            e = [0] * len(J.vars)
            e[J.var_index(name)] = 1
            J.data[J.index(tuple(e))] = np.eye(dim) if coefficient is None else coefficient
        return J

    @classmethod
    def from_dict(cls, coeffs, variables, order, dim):
        J = cls(variables, order, dim)
        for deg, M in coeffs.items():
            deg = tuple(deg)
            if sum(deg) <= order:
                J.data[J.index(deg)] = M
        return J

    def copy(self):
        return MatrixJet(self.vars, self.order, self.dim, self.data.copy())

    # inspection ---------------------------------------------------------

    @property
    def num_vars(self):
        return len(self.vars)

    @property
    def monomials(self):
        return monomials(self.num_vars, self.order)

    def index(self, degree):
        try:
            return _position(self.num_vars, self.order)[tuple(degree)]
        except KeyError:
            raise InvalidInputError(f"degree {degree} not stored in a jet of order {self.order}") from None

    def var_index(self, name):
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.num_vars:
                raise InvalidInputError(f"variable index {name} out of range")
            return int(name)
        try:
            return self.vars.index(name)
        except ValueError:
            raise InvalidInputError(f"no variable {name!r} in {self.vars}") from None

    def coeff(self, degree):
        degree = tuple(degree)
        if sum(degree) > self.order:
            raise TruncationError(f"degree {degree} exceeds jet order {self.order}")
        return self.data[self.index(degree)]

    @property
    def coeffs(self):
        """Nonzero coefficients as a dict keyed by degree."""
        return {m: self.data[i] for i, m in enumerate(self.monomials) if np.any(self.data[i] != 0)}

    def coeff_norms(self):
        return np.array([np.linalg.norm(c, 2) if self.dim > 1 else abs(c[0, 0]) for c in self.data])

    def max_coeff_norm(self):
        return float(self.coeff_norms().max())

    def degree_norms(self):
        """Largest coefficient norm in each total degree."""
        norms = self.coeff_norms()
        out = np.zeros(self.order + 1)
        for i, m in enumerate(self.monomials):
            out[sum(m)] = max(out[sum(m)], norms[i])
        return out

    def scalar(self):
        """Coefficient array of a dim-1 jet as complex numbers."""
        if self.dim != 1:
            raise InvalidInputError("not a scalar jet")
        return self.data[:, 0, 0]

    def __repr__(self):
        return f"MatrixJet(vars={self.vars}, order={self.order}, dim={self.dim})"

    def dump(self):
        """One line per stored degree, in graded order."""
        lines = []
        for i, m in enumerate(self.monomials):
            c = self.data[i]
            rows = ", ".join(
                "[" + ", ".join(f"{z.real:.12e}{z.imag:+.12e}j" for z in row) + "]" for row in c
            )
            lines.append(f"deg={m} norm={np.linalg.norm(c, 2):.12e} matrix=[{rows}]")
        return "\n".join(lines)

    # arithmetic ---------------------------------------------------------

    def truncate(self, order):
        if order > self.order:
            raise TruncationError(f"cannot raise jet order from {self.order} to {order}")
        if order == self.order:
            return self
        return MatrixJet(self.vars, order, self.dim, self.data[: n_monomials(self.num_vars, order)].copy())

    def _aligned(self, other):
        if not isinstance(other, MatrixJet):
            raise InvalidInputError("expected a MatrixJet")
        if other.vars != self.vars:
            if set(other.vars) != set(self.vars):
                raise InvalidInputError(f"variable mismatch {self.vars} vs {other.vars}")
            other = other.reorder(self.vars)
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order), order

    def __add__(self, other):
        if not isinstance(other, MatrixJet):
            return self + MatrixJet.constant(np.asarray(other) * np.eye(self.dim), self.vars, self.order)
        a, b, order = self._aligned(other)
        if a.dim != b.dim:
            raise InvalidInputError("dimension mismatch in jet sum")
        return MatrixJet(self.vars, order, self.dim, a.data + b.data)

    __radd__ = __add__

    def __neg__(self):
        return MatrixJet(self.vars, self.order, self.dim, -self.data)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, MatrixJet):
            return jet_mul(self, c)
        return MatrixJet(self.vars, self.order, self.dim, self.data * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return MatrixJet(self.vars, self.order, self.dim, self.data / c)

    def __matmul__(self, other):
        return jet_mul(self, other)

    def map_coeffs(self, fn, dim=None):
        """Apply a linear map to the stacked coefficient array."""
        out = np.asarray(fn(self.data), dtype=complex)
        return MatrixJet(self.vars, self.order, out.shape[-1] if dim is None else dim, out)

    def left(self, M):
        """Constant matrix times jet."""
        return MatrixJet(self.vars, self.order, self.dim, np.asarray(M) @ self.data)

    def right(self, M):
        return MatrixJet(self.vars, self.order, self.dim, self.data @ np.asarray(M))

    def conj_transpose(self):
        """Entrywise conjugate transpose of each coefficient (no variable swap)."""
        return MatrixJet(self.vars, self.order, self.dim, np.conj(np.swapaxes(self.data, 1, 2)))

    # variables ----------------------------------------------------------

    def reorder(self, variables):
        variables = tuple(variables)
        if set(variables) != set(self.vars) or len(variables) != len(self.vars):
            raise InvalidInputError(f"cannot reorder {self.vars} as {variables}")
        perm = [self.vars.index(v) for v in variables]
        return self._substitute(variables, [((perm.index(i), 1.0),) for i in range(self.num_vars)])

    def rename(self, mapping):
        new = tuple(mapping.get(v, v) for v in self.vars)
        return MatrixJet(new, self.order, self.dim, self.data.copy())

    def embed(self, variables):
        """View as a jet in a larger variable set (new variables absent)."""
        variables = tuple(variables)
        missing = [v for v in self.vars if v not in variables]
        if missing:
            raise InvalidInputError(f"variables {missing} missing from {variables}")
        forms = [((variables.index(v), 1.0),) for v in self.vars]
        return self._substitute(variables, forms)

    def _substitute(self, new_vars, forms):
        T = _linear_substitution(self.num_vars, len(new_vars), self.order, tuple(forms))
        data = np.tensordot(T, self.data, axes=(1, 0))
        return MatrixJet(new_vars, self.order, self.dim, data)

    def linear_change(self, new_vars, forms):
        """Substitute each old variable by a linear form in ``new_vars``.

        ``forms`` maps old variable names to dicts {new_name: coefficient}.
        """
        new_vars = tuple(new_vars)
        packed = []
        for v in self.vars:
            f = forms.get(v, {v: 1.0})
            packed.append(tuple((new_vars.index(n), float(c)) for n, c in sorted(f.items())))
        return self._substitute(new_vars, packed)

    def set_value(self, name, value):
        """Fix one variable at a (centered) value; the result drops it."""
        i = self.var_index(name)
        if self.num_vars == 1:
            raise InvalidInputError("cannot remove the only variable; use evaluate")
        rest = tuple(v for v in self.vars if v != self.vars[i])
        out = MatrixJet(rest, self.order, self.dim)
        pos = _position(len(rest), self.order)
        for j, m in enumerate(self.monomials):
            e = m[:i] + m[i + 1:]
            out.data[pos[e]] += self.data[j] * (value ** m[i])
        return out

    def drop(self, name):
        """Restrict to ``name = 0`` (the center value of that variable)."""
        return self.set_value(name, 0.0)

    def evaluate(self, point):
        """Sum of the series at centered coordinates ``point`` (dict or sequence)."""
        if isinstance(point, dict):
            vals = [point[v] for v in self.vars]
        else:
            vals = list(point)
        if len(vals) != self.num_vars:
            raise InvalidInputError("point has the wrong number of coordinates")
        vals = np.broadcast_arrays(*[np.asarray(v, dtype=complex) for v in vals])
        shape = vals[0].shape
        flat = [v.reshape(-1) for v in vals]
        exps = np.array(self.monomials)
        mon = np.ones((flat[0].size, len(exps)), dtype=complex)
        for i, v in enumerate(flat):
            powers = v[:, None] ** np.arange(self.order + 1)[None, :]
            mon *= powers[:, exps[:, i]]
        out = mon @ self.data.reshape(len(exps), -1)
        return out.reshape(shape + (self.dim, self.dim))

    def hermitian_symmetry_defect(self):
        """max ||C_(a,b) - C_(b,a)^dagger|| for a two-variable jet."""
        if self.num_vars != 2:
            raise InvalidInputError("Hermitian symmetry is defined for two-variable jets")
        worst = 0.0
        for i, (a, b) in enumerate(self.monomials):
            j = self.index((b, a))
            worst = max(worst, np.abs(self.data[i] - self.data[j].conj().T).max())
        return worst


# ----------------------------------------------------------------------
# ring operations


def jet_mul(A, B):
    """Cauchy product, order kept as given (A first).  A dim-1 jet acts as a scalar."""
    a, b, order = A._aligned(B)
    I, J, starts = _mul_table(a.num_vars, order)
    if a.dim == b.dim:
        prod = a.data[I] @ b.data[J]
        dim = a.dim
    elif a.dim == 1:
        prod = a.data[I] * b.data[J]
        dim = b.dim
    elif b.dim == 1:
        prod = a.data[I] * b.data[J]
        dim = a.dim
    else:
        raise InvalidInputError(f"dimension mismatch {a.dim} vs {b.dim}")
    data = np.add.reduceat(prod, starts, axis=0)
    return MatrixJet(a.vars, order, dim, data)


def jet_inverse(J):
    """Two-sided inverse through the jet order, by B_g = -B_0 sum_(a<g) A_(g-a) B_a."""
    A0 = J.data[0]
    cond = np.linalg.cond(A0)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalDomainError(f"constant term is singular (condition estimate {cond:.3e})")
    B0 = np.linalg.inv(A0)
    I, Jx, starts = _mul_table(J.num_vars, J.order)
    out = MatrixJet(J.vars, J.order, J.dim)
    out.data[0] = B0
    ends = list(starts[1:]) + [len(I)]
    for t in range(1, len(starts)):
        s, e = starts[t] + 1, ends[t]  # skip the (0, t) pair
        acc = np.sum(J.data[I[s:e]] @ out.data[Jx[s:e]], axis=0)
        out.data[t] = -B0 @ acc
    return out


def _max_norm(data):
    return float(np.abs(data).max()) if data.size else 0.0


def jet_exp(J):
    """sum J^n / n! with scaling and squaring in the jet ring."""
    c0 = np.linalg.norm(J.data[0])
    s = 0
    if c0 > config.EXPM_SCALE_TARGET:
        s = int(np.ceil(np.log2(c0 / config.EXPM_SCALE_TARGET)))
    X = J / 2.0 ** s
    total = MatrixJet.unit(J.vars, J.order, J.dim)
    term = total.copy()
    for n in range(1, config.SERIES_MAX_TERMS):
        term = jet_mul(term, X) / n
        total = MatrixJet(J.vars, J.order, J.dim, total.data + term.data)
        tn = _max_norm(term.data)
        if tn == 0.0 or (n > J.order and tn < config.JET_SERIES_STOP_REL * _max_norm(total.data)):
            break
    else:
        raise ConvergenceError("jet exponential series did not settle")
    for _ in range(s):
        total = jet_mul(total, total)
    return total


def _dexp_inverse_operator(L0):
    """Matrix of (e^u - 1)/u at u = ad(-L0), acting on row-major flattened matrices."""
    d = L0.shape[0]
    X = -L0
    I = np.eye(d)
    K = np.kron(X, I) - np.kron(I, X.T)
    n = d * d
    block = np.zeros((2 * n, 2 * n), dtype=complex)
    block[:n, :n] = K
    block[:n, n:] = np.eye(n)
    return expm(block)[:n, n:]


def _jet_mercator(R):
    """log(I + R) for R with zero constant term (finite sum)."""
    total = MatrixJet.zeros(R.vars, R.order, R.dim)
    power = MatrixJet.unit(R.vars, R.order, R.dim)
    for n in range(1, R.order + 1):
        power = jet_mul(power, R)
        total = total + power * ((-1) ** (n + 1) / n)
    return total


def jet_log(J, hermitian=False):
    """Logarithm of a jet whose constant term has a principal logarithm.

    The constant term is ``logm_principal(J_0)``.  Higher coefficients are
    found by a Newton-type iteration: with ``R = exp(-L) J - I`` the update
    solves ``dexp_(-L0)(delta) = log(I + R)`` coefficientwise.  Each step
    raises the lowest degree of the residual, so ``order + 1`` steps suffice.
    """
    if J.num_vars < 1:
        raise InvalidInputError("bad jet")
    L0 = logm_principal(J.data[0], hermitian=hermitian)
    L = MatrixJet.constant(L0, J.vars, J.order)
    if J.order == 0:
        return L
    if J.dim == 1:
        # commutative: log J = log J0 + log(1 + (J - J0)/J0)
        R = J / J.data[0, 0, 0]
        R.data[0] = 0.0
        return L + _jet_mercator(R)
    G = _dexp_inverse_operator(L0)
    d = J.dim
    scale = max(_max_norm(J.data), 1.0)
    unit = MatrixJet.unit(J.vars, J.order, d)
    for _ in range(J.order + config.JET_LOG_EXTRA_STEPS):
        R = jet_mul(jet_exp(-L), J) - unit
        if _max_norm(R.data) <= 1e-15 * scale:
            return L
        rhs = _jet_mercator(R)
        flat = rhs.data.reshape(len(rhs.data), d * d).T
        delta = np.linalg.solve(G, flat).T.reshape(rhs.data.shape)
        L = MatrixJet(J.vars, J.order, d, L.data + delta)
    R = jet_mul(jet_exp(-L), J) - unit
    if _max_norm(R.data) > 1e-9 * scale:
        raise ConvergenceError(f"jet logarithm residual {_max_norm(R.data):.3e} after {J.order + 2} steps")
    return L


def jet_partial(J, var):
    """Formal partial derivative; the order drops by one."""
    i = J.var_index(var)
    if J.order == 0:
        raise TruncationError("cannot differentiate an order-0 jet")
    out = MatrixJet(J.vars, J.order - 1, J.dim)
    pos = _position(J.num_vars, J.order)
    for t, m in enumerate(out.monomials):
        up = list(m)
        up[i] += 1
        out.data[t] = J.data[pos[tuple(up)]] * (m[i] + 1)
    return out


def segment_average(J, first="x1", second="y", new_name="x"):
    """Replace ``first`` by t*new + (1-t)*second and integrate t over [0, 1].

    Monomial rule: x1^a -> (x^a + x^(a-1) y + ... + y^a) / (a + 1).
    """
    i = J.var_index(first)
    j = J.var_index(second)
    T = _segment_table(J.order, i, j, J.num_vars)
    data = np.tensordot(T, J.data, axes=(1, 0))
    new_vars = tuple(new_name if v == first else v for v in J.vars)
    return MatrixJet(new_vars, J.order, J.dim, data)


def divide_by_xy(J, x="x", y="y", tol_rel=None, scale=None):
    """Jet of J / (x - y) for J vanishing on the diagonal y = x.

    Works in variables (x, w = y - x, ...): the w^0 part must vanish, then
    w-exponents shift down by one and the sign flips.  The result has order
    one less than the input.  ``scale`` sets the reference norm for the
    divisibility tolerance when J is a difference of larger terms.
    """
    tol_rel = config.DIVIDE_TOL_REL if tol_rel is None else tol_rel
    ix, iy = J.var_index(x), J.var_index(y)
    wname = "_w"
    wvars = tuple(wname if v == y else v for v in J.vars)
    shifted = J.linear_change(wvars, {y: {x: 1.0, wname: 1.0}})
    scale = max(J.max_coeff_norm(), scale or 0.0)
    tol = tol_rel * scale
    norms = shifted.coeff_norms()
    for t, m in enumerate(shifted.monomials):
        if m[iy] == 0 and norms[t] >= tol and norms[t] > 0:
            raise NonDivisibleError(
                f"jet does not vanish on the diagonal: degree {m} has norm {norms[t]:.3e}", m, norms[t]
            )
    if J.order == 0:
        raise TruncationError("cannot divide an order-0 jet")
    out = MatrixJet(wvars, J.order - 1, J.dim)
    pos = _position(J.num_vars, J.order)
    for t, m in enumerate(out.monomials):
        up = list(m)
        up[iy] += 1
        out.data[t] = -shifted.data[pos[tuple(up)]]
    return out.linear_change(J.vars, {wname: {y: 1.0, x: -1.0}})


def restrict_diagonal(J, merge="y", into="x"):
    """Set ``merge`` equal to ``into``; the result no longer has ``merge``."""
    J.var_index(merge)
    J.var_index(into)
    if merge == into:
        raise InvalidInputError("cannot merge a variable into itself")
    rest = tuple(v for v in J.vars if v != merge)
    return J.linear_change(rest, {merge: {into: 1.0}})
