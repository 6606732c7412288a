import itertools
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from symbergman.errors import InvalidInputError, NumericalDomainError
from symbergman.numerics import expm
from symbergman.sympow import lift_spectrum, s_k_lift, sym_pow_matrix, sym_pow_metric, sym_rank, weak_compositions

from conftest import rand_complex, rand_herm


def sym_oracle(A, k):
    """Sym^k A through the full tensor power and orthonormal symmetric tensors."""
    r = A.shape[0]
    basis = weak_compositions(k, r)
    full = A
    for _ in range(k - 1):
        full = np.kron(full, A)
    vecs = []
    for n in basis:
        word = [i for i, c in enumerate(n) for _ in range(c)]
        v = np.zeros(r**k, dtype=complex)
        for perm in set(itertools.permutations(word)):
            idx = 0
            for i in perm:
                idx = idx * r + i
            v[idx] = 1.0
        vecs.append(v / np.linalg.norm(v))
    P = np.array(vecs).T
    return P.conj().T @ full @ P


def test_compositions_order_and_count():
    assert weak_compositions(2, 2) == weak_compositions(2, 2)
    assert [tuple(n) for n in weak_compositions(2, 2)] == [(2, 0), (1, 1), (0, 2)]
    assert len(weak_compositions(4, 3)) == sym_rank(3, 4) == 15


@pytest.mark.parametrize("r,k", [(2, 1), (2, 3), (3, 2), (3, 3)])
def test_sym_pow_matches_tensor_oracle(rng, r, k):
    A = rand_complex(rng, r)
    np.testing.assert_allclose(sym_pow_matrix(A, k), sym_oracle(A, k), atol=1e-11)


def test_sym_pow_k0_and_k1(rng):
    A = rand_complex(rng, 3)
    np.testing.assert_allclose(sym_pow_matrix(A, 1), A)
    np.testing.assert_allclose(sym_pow_matrix(A, 0), [[1.0]])


def test_sym_pow_large_k_line():
    # scalar case must not overflow
    assert sym_pow_matrix(np.array([[1.1]]), 30)[0, 0] == pytest.approx(1.1**30)


def test_sym_pow_diag_values():
    # diag(2,3) on Sym^2: monomials a^2, ab, b^2
    np.testing.assert_allclose(np.diag(sym_pow_matrix(np.diag([2.0, 3.0]), 2)).real, [4, 6, 9])


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.integers(1, 5))
def test_functoriality(seed, r, k):
    rng = np.random.default_rng(seed)
    A, B = rand_complex(rng, r), rand_complex(rng, r)
    lhs = sym_pow_matrix(A @ B, k)
    rhs = sym_pow_matrix(A, k) @ sym_pow_matrix(B, k)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(np.abs(rhs).max(), 1)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.integers(1, 6))
def test_lift_spectrum(seed, r, k):
    rng = np.random.default_rng(seed)
    H = rand_herm(rng, r)
    got = np.sort(np.linalg.eigvalsh(s_k_lift(H, k)))
    want = np.sort(lift_spectrum(np.linalg.eigvalsh(H), k))
    np.testing.assert_allclose(got, want, atol=1e-9)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.integers(1, 5))
def test_lift_exponentiates(seed, r, k):
    rng = np.random.default_rng(seed)
    M = rand_complex(rng, r, 0.4)
    lhs = expm(s_k_lift(M, k))
    rhs = sym_pow_matrix(expm(M), k)
    assert np.abs(lhs - rhs).max() <= 1e-9 * np.abs(rhs).max()


def test_lift_is_derivative(rng):
    M = rand_complex(rng, 2)
    t = 1e-6
    fd = (sym_pow_matrix(np.eye(2) + t * M, 3) - sym_pow_matrix(np.eye(2) - t * M, 3)) / (2 * t)
    np.testing.assert_allclose(fd, s_k_lift(M, 3), atol=1e-8)


def test_transpose_and_conjugation(rng):
    A = rand_complex(rng, 3)
    for k in (2, 4, 6):
        np.testing.assert_array_equal(sym_pow_matrix(A.T, k), sym_pow_matrix(A, k).T)
        np.testing.assert_array_equal(sym_pow_matrix(A.conj(), k), sym_pow_matrix(A, k).conj())
        np.testing.assert_array_equal(s_k_lift(A.conj().T, k), s_k_lift(A, k).conj().T)


def test_lift_is_linear_and_sparse(rng):
    A, B = rand_complex(rng, 3), rand_complex(rng, 3)
    np.testing.assert_allclose(s_k_lift(2 * A + B, 3), 2 * s_k_lift(A, 3) + s_k_lift(B, 3), atol=1e-13)
    # each column has at most r^2 - r + 1 nonzeros
    S = s_k_lift(A, 4)
    assert (np.abs(S) > 0).sum(axis=0).max() <= 7


def test_ladder_entry():
    # E_12 on Sym^2: (0,2) -> sqrt(2) (1,1) and (1,1) -> sqrt(2) (2,0)
    E = np.zeros((2, 2))
    E[0, 1] = 1
    S = s_k_lift(E, 2)
    assert S[1, 2] == pytest.approx(sqrt(2))
    assert S[0, 1] == pytest.approx(sqrt(2))
    assert np.count_nonzero(S) == 2


def test_metric_requires_pd():
    with pytest.raises(NumericalDomainError):
        sym_pow_metric(np.diag([1.0, -0.5]), 2)


def test_batched_matches_loop(rng):
    As = rng.normal(size=(4, 2, 2)) + 0j
    batched = sym_pow_matrix(As, 3)
    for i in range(4):
        np.testing.assert_allclose(batched[i], sym_pow_matrix(As[i], 3), atol=1e-14)


def test_bad_input():
    with pytest.raises(InvalidInputError):
        sym_pow_matrix(np.ones((2, 3)), 2)
    with pytest.raises(InvalidInputError):
        s_k_lift(np.ones((2, 2)), -1)
