import numpy as np
import pytest
from hypothesis import given, strategies as st

from symbergman.errors import FactorizationError, InvalidInputError
from symbergman.numerics import cholesky, eigh, expm, inv_sqrtm_pd, logm_principal, op_norm, sqrtm_pd, z_bch

from conftest import rand_complex, rand_herm


def expm_eig(A):
    # oracle: diagonalize (random matrices are diagonalizable a.s.)
    w, V = np.linalg.eig(A)
    return V @ np.diag(np.exp(w)) @ np.linalg.inv(V)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(0.01, 4.0))
def test_expm_matches_eigen_oracle(seed, n, scale):
    rng = np.random.default_rng(seed)
    A = rand_complex(rng, n, scale / np.sqrt(n))
    ref = expm_eig(A)
    assert op_norm(expm(A) - ref) <= 1e-10 * max(op_norm(ref), 1.0)


def test_expm_hermitian_path(rng):
    H = rand_herm(rng, 4, 2.0)
    w, V = np.linalg.eigh(H)
    ref = (V * np.exp(w)) @ V.conj().T
    np.testing.assert_allclose(expm(H, hermitian=True), ref, rtol=1e-12, atol=1e-12)


def test_expm_nilpotent_exact():
    N = np.array([[0, 1.0], [0, 0]])
    np.testing.assert_allclose(expm(N), [[1, 1], [0, 1]], atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_log_exp_roundtrip(seed, n):
    rng = np.random.default_rng(seed)
    A = rand_complex(rng, n, 0.8 / np.sqrt(n))
    L = logm_principal(expm(A))
    # principal branch: eigenvalues in the strip |Im| < pi, so log(exp A) = A here
    assert op_norm(L - A) < 1e-10


def test_logm_principal_branch():
    # rotation by 3 rad: log has eigenvalues +-3i
    c, s = np.cos(3.0), np.sin(3.0)
    R = np.array([[c, -s], [s, c]])
    L = logm_principal(R)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(L).imag), [-3.0, 3.0], atol=1e-10)
    np.testing.assert_allclose(expm(L), R, atol=1e-12)


def test_logm_rejects_negative_eigenvalue():
    with pytest.raises(Exception):
        logm_principal(np.diag([1.0, -1.0]))


def test_sqrt_and_inverse_sqrt(rng):
    A = rand_complex(rng, 4)
    H = A @ A.conj().T + np.eye(4)
    S = sqrtm_pd(H)
    np.testing.assert_allclose(S @ S, H, atol=1e-12)
    np.testing.assert_allclose(S, S.conj().T, atol=1e-14)
    np.testing.assert_allclose(inv_sqrtm_pd(H) @ S, np.eye(4), atol=1e-12)


def test_cholesky_matches_numpy(rng):
    A = rand_complex(rng, 6)
    H = A @ A.conj().T + 0.1 * np.eye(6)
    np.testing.assert_allclose(cholesky(H), np.linalg.cholesky(H), atol=1e-12)


def test_cholesky_reports_pivot():
    H = np.diag([1.0, 2.0, -1.0, 3.0])
    with pytest.raises(FactorizationError) as exc:
        cholesky(H)
    assert exc.value.pivot == 2


def test_op_norm_is_top_singular_value(rng):
    A = rand_complex(rng, 5)
    assert op_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-13)


def test_eigh_sorted(rng):
    w, V = eigh(rand_herm(rng, 5))
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(5), atol=1e-13)


def test_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        expm(np.array([[np.nan, 0], [0, 1]]))


def test_z_bch_product(rng):
    Xs = [rand_complex(rng, 3, 0.2) for _ in range(3)]
    Z = z_bch(Xs)
    prod = expm(Xs[0]) @ expm(Xs[1]) @ expm(Xs[2])
    np.testing.assert_allclose(expm(Z), prod, atol=1e-12)


def test_z_bch_second_order_term(rng):
    # X + Y + [X, Y]/2 up to third order in the size
    X, Y = rand_complex(rng, 2, 1e-3), rand_complex(rng, 2, 1e-3)
    Z = z_bch([X, Y])
    approx = X + Y + 0.5 * (X @ Y - Y @ X)
    assert op_norm(Z - approx) < 1e-8
