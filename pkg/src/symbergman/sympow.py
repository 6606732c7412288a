"""Symmetric powers of matrices.

Basis vectors of Sym^k C^r are indexed by weak compositions n of k into
r parts and normalized as e^n / sqrt(n!).  The ordering produced by
:func:`weak_compositions` is the only one used anywhere in the package.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, prod, sqrt

import numpy as np

from .errors import InvalidInputError, NumericalDomainError
from .numerics import as_matrix, eigh


@dataclass(frozen=True)
class SymBasis:
    r: int
    k: int
    indices: tuple
    position: dict = field(compare=False, repr=False)

    @property
    def size(self):
        return len(self.indices)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def _compositions(k, r):
    if r == 1:
        return [(k,)]
    out = []
    for first in range(k, -1, -1):
        for rest in _compositions(k - first, r - 1):
            out.append((first,) + rest)
    return out


@lru_cache(maxsize=None)
def weak_compositions(k, r):
    """All n with n_1 + ... + n_r = k, first part descending (reverse lex)."""
    if not isinstance(k, (int, np.integer)) or not isinstance(r, (int, np.integer)):
        raise InvalidInputError("k and r must be integers")
    if k < 0 or r < 1:
        raise InvalidInputError(f"need k >= 0 and r >= 1, got k={k}, r={r}")
    idx = tuple(_compositions(int(k), int(r)))
    assert len(idx) == comb(k + r - 1, r - 1)
    return SymBasis(int(r), int(k), idx, {n: i for i, n in enumerate(idx)})


def sym_rank(r, k):
    return comb(k + r - 1, r - 1)


def _tables(row_sums, col_sums):
    """Nonnegative integer matrices with the given row and column sums."""
    ncol = len(col_sums)
    if len(row_sums) == 1:
        yield (tuple(col_sums),)
        return
    first = row_sums[0]

    def fill(j, left, cols, acc):
        if j == ncol - 1:
            if left <= cols[j]:
                yield acc + (left,)
            return
        for t in range(min(left, cols[j]), -1, -1):
            yield from fill(j + 1, left - t, cols, acc + (t,))

    for row in fill(0, first, col_sums, ()):
        rest_cols = tuple(c - t for c, t in zip(col_sums, row))
        for tail in _tables(row_sums[1:], rest_cols):
            yield (row,) + tail


@lru_cache(maxsize=None)
def _expansion_terms(r, k):
    """Monomial data for Sym^k A as a polynomial in the entries of A.

    Terms of each entry are ordered by a key that is invariant under
    transposing the table, and a table tied with its own transpose is
    summed first.  With the pairwise products in :func:`sym_pow_matrix`
    this makes Sym^k(A^T) == Sym^k(A)^T bit for bit.
    """
    basis = weak_compositions(k, r)
    fact = [factorial(j) for j in range(k + 1)]
    exps, coefs, groups, entries = [], [], [], []
    for a, n in enumerate(basis):
        nf = prod(fact[v] for v in n)
        for b, m in enumerate(basis):
            mf = prod(fact[v] for v in m)
            keyed = []
            for T in _tables(n, m):
                flat = tuple(v for row in T for v in row)
                flat_t = tuple(T[j][i] for i in range(r) for j in range(r))
                keyed.append((min(flat, flat_t), flat))
            keyed.sort()
            entries.append(len(groups))
            prev = None
            for key, flat in keyed:
                if key != prev:
                    groups.append(len(coefs))
                    prev = key
                exps.append(flat)
                coefs.append(sqrt(nf * mf) / prod(fact[v] for v in flat))
    exps = np.array(exps, dtype=int).reshape(len(coefs), r * r)
    return exps, np.array(coefs), np.array(groups), np.array(entries)


def _commuting_product(x, y):
    # numpy's vectorized complex multiply may fuse operations and is not
    # exactly symmetric in its arguments; this one is
    re = x.real * y.real - x.imag * y.imag
    im = x.real * y.imag + x.imag * y.real
    return re + 1j * im


def sym_pow_matrix(A, k):
    """Matrix of Sym^k A in the normalized basis.

    Accepts a single r x r matrix or a stack ``(..., r, r)``.  Each entry is
    obtained by expanding the product of linear forms, so singular ``A`` is
    fine.
    """
    M = np.asarray(A, dtype=complex)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise InvalidInputError("sym_pow_matrix needs square matrices")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")
    if k < 0:
        raise InvalidInputError("k must be nonnegative")
    r = M.shape[-1]
    lead = M.shape[:-2]
    rk = sym_rank(r, k)
    exps, coefs, groups, entries = _expansion_terms(r, k)
    flat = M.reshape(lead + (r * r,))
    powers = np.ones(lead + (r * r, k + 1), dtype=complex)
    for p in range(1, k + 1):
        powers[..., p] = powers[..., p - 1] * flat
    vals = np.broadcast_to(coefs.astype(complex), lead + (len(coefs),)).copy()
    # (i, j) and (j, i) factors are multiplied together first so that A and
    # A^T go through the same floating point operations
    for i in range(r):
        for j in range(i, r):
            f = powers[..., i * r + j, exps[:, i * r + j]]
            if j != i:
                f = _commuting_product(f, powers[..., j * r + i, exps[:, j * r + i]])
            vals *= f
    vals = np.add.reduceat(vals, groups, axis=-1)
    out = np.add.reduceat(vals, entries, axis=-1)
    return out.reshape(lead + (rk, rk))


@lru_cache(maxsize=None)
def _lift_tensor(r, k):
    basis = weak_compositions(k, r)
    rk = len(basis)
    T = np.zeros((r, r, rk, rk))
    for col, n in enumerate(basis):
        for i in range(r):
            T[i, i, col, col] = n[i]
        for i in range(r):
            for j in range(r):
                if i == j or n[j] == 0:
                    continue
                m = list(n)
                m[i] += 1
                m[j] -= 1
                T[i, j, basis.position[tuple(m)], col] = sqrt((n[i] + 1) * n[j])
    T.setflags(write=False)
    return T


def s_k_lift(M, k):
    """Derivative of Sym^k at the identity in the direction ``M``.

    Built from the sparse rule: diagonal entry sum_i n_i M_ii, and
    sqrt((n_i + 1) n_j) M_ij placed at (n + e_i - e_j, n).  Works on stacks
    ``(..., r, r)``.
    """
    X = np.asarray(M)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise InvalidInputError("s_k_lift needs square matrices")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("matrix has non-finite entries")
    if k < 0:
        raise InvalidInputError("k must be nonnegative")
    T = _lift_tensor(X.shape[-1], k)
    out = np.einsum("...ij,ijab->...ab", X, T)
    if np.iscomplexobj(X):
        return out
    return out.astype(X.dtype, copy=False)


def sym_pow_metric(H, k):
    """Induced Hermitian metric on Sym^k; requires ``H`` positive definite."""
    M = as_matrix(H)
    w, _ = eigh(M)
    if w[0] <= 0:
        raise NumericalDomainError(f"metric is not positive definite (min eigenvalue {w[0]:.3e})")
    return sym_pow_matrix(M, k)


def lift_spectrum(eigenvalues, k):
    """Multiset {sum_i n_i lambda_i : |n| = k}, in basis order."""
    lam = np.asarray(eigenvalues)
    basis = weak_compositions(k, len(lam))
    return np.array([np.dot(n, lam) for n in basis])
