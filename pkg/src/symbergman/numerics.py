"""Dense complex matrix kernel.

Exponential, principal logarithm, operator norm, Cholesky and the
product logarithm ``log(exp(X1) ... exp(Xp))``.  Hermitian input is
only treated as Hermitian when the caller says so through the
``hermitian`` flag; nothing here tries to guess.
"""

from collections import namedtuple

import numpy as np

from . import config
from .errors import ConvergenceError, FactorizationError, InvalidInputError, NumericalDomainError

Spectrum = namedtuple("Spectrum", ["eigenvalues", "eigenvectors"])


def as_matrix(A, square=True):
    """Return ``A`` as a finite complex 2-d array, or raise."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise InvalidInputError(f"expected a matrix, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")
    return M


def _check_hermitian(M):
    scale = max(np.abs(M).max(), 1.0)
    if np.abs(M - M.conj().T).max() > config.HERMITIAN_TOL * scale:
        raise InvalidInputError("matrix tagged Hermitian is not Hermitian")


def hermitian_part(A):
    M = np.asarray(A, dtype=complex)
    return 0.5 * (M + M.conj().T)


def eigh(A):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    M = as_matrix(A)
    _check_hermitian(M)
    w, V = np.linalg.eigh(hermitian_part(M))
    return Spectrum(w, V)


def op_norm(A):
    """Largest singular value."""
    M = as_matrix(A, square=False)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def _taylor_expm(M):
    n = M.shape[0]
    total = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for j in range(1, config.SERIES_MAX_TERMS):
        term = term @ M / j
        total = total + term
        if np.linalg.norm(term) < config.SERIES_STOP_REL * np.linalg.norm(total):
            return total
    raise ConvergenceError("Taylor series for expm did not settle")


def expm(A, hermitian=False):
    """Matrix exponential.

    Hermitian input (``hermitian=True``) goes through the eigendecomposition.
    Everything else uses scaling and squaring around a truncated Taylor
    series.
    """
    M = as_matrix(A)
    if hermitian:
        w, V = eigh(M)
        return (V * np.exp(w)) @ V.conj().T
    norm = np.linalg.norm(M)  # Frobenius, bounds the operator norm
    s = 0
    if norm > config.EXPM_SCALE_TARGET:
        s = int(np.ceil(np.log2(norm / config.EXPM_SCALE_TARGET)))
    E = _taylor_expm(M / 2.0 ** s)
    for _ in range(s):
        E = E @ E
    return E


def _mercator(X):
    """log(I + X) for ||X|| < 1."""
    n = X.shape[0]
    total = np.zeros((n, n), dtype=complex)
    power = np.eye(n, dtype=complex)
    for j in range(1, 20 * config.SERIES_MAX_TERMS):
        power = power @ X
        term = power * ((-1) ** (j + 1) / j)
        total = total + term
        tn = np.linalg.norm(term)
        if tn == 0.0 or tn < config.SERIES_STOP_REL * np.linalg.norm(total):
            return total
    raise ConvergenceError("Mercator series did not settle")


def _sqrtm_db(M):
    # Denman-Beavers iteration for the principal square root
    Y = M.copy()
    Z = np.eye(M.shape[0], dtype=complex)
    for _ in range(100):
        Yn = 0.5 * (Y + np.linalg.inv(Z))
        Zn = 0.5 * (Z + np.linalg.inv(Y))
        done = np.linalg.norm(Yn - Y) <= 1e-15 * np.linalg.norm(Yn)
        Y, Z = Yn, Zn
        if done:
            return Y
    raise ConvergenceError("square root iteration did not settle")


def logm_principal(A, hermitian=False):
    """Principal matrix logarithm.

    Hermitian positive definite input (``hermitian=True``) is handled by
    eigendecomposition. Otherwise the Mercator series in ``A - I`` is used,
    after repeated square roots if ``A`` is not already close to ``I``.
    """
    M = as_matrix(A)
    n = M.shape[0]
    if hermitian:
        w, V = eigh(M)
        if w[0] <= 0:
            raise NumericalDomainError(f"logm of a matrix with eigenvalue {w[0]:.3e} <= 0")
        return (V * np.log(w)) @ V.conj().T
    I = np.eye(n, dtype=complex)
    if op_norm(M - I) < config.EXPM_SCALE_TARGET:
        return _mercator(M - I)
    ev = np.linalg.eigvals(M)
    tol = 1e-14 * max(1.0, np.abs(ev).max())
    if np.any((np.abs(ev.imag) <= tol) & (ev.real <= tol)):
        raise NumericalDomainError("spectrum touches the closed negative real axis")
    s = 0
    R = M
    while op_norm(R - I) >= config.EXPM_SCALE_TARGET:
        R = _sqrtm_db(R)
        s += 1
        if s > 60:
            raise ConvergenceError("could not bring matrix near the identity")
    return _mercator(R - I) * 2.0 ** s


def sqrtm_pd(H):
    """Positive square root of a Hermitian positive definite matrix."""
    w, V = eigh(H)
    if w[0] <= 0:
        raise NumericalDomainError("square root of a non-positive matrix")
    return (V * np.sqrt(w)) @ V.conj().T


def inv_sqrtm_pd(H):
    w, V = eigh(H)
    if w[0] <= 0:
        raise NumericalDomainError("inverse square root of a non-positive matrix")
    return (V / np.sqrt(w)) @ V.conj().T


def cholesky(H):
    """Lower triangular ``L`` with ``L @ L^dagger == H``.

    Raises FactorizationError naming the first pivot that is not positive.
    """
    M = as_matrix(H)
    n = M.shape[0]
    L = np.zeros_like(M)
    for j in range(n):
        d = M[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if not np.isfinite(d) or d <= 0:
            raise FactorizationError(f"matrix is not positive definite at pivot {j} (value {d:.3e})", j)
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j]
    return L


def z_bch(Xs):
    """``log(exp(X1) exp(X2) ... exp(Xp))`` by direct evaluation."""
    if len(Xs) == 0:
        raise InvalidInputError("need at least one matrix")
    mats = [as_matrix(X) for X in Xs]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise InvalidInputError("all matrices must have the same shape")
    P = np.eye(shape[0], dtype=complex)
    for m in mats:
        P = P @ expm(m)
    return logm_principal(P)
