import json
from math import factorial

import numpy as np
import pytest

from symbergman.bergman import (
    COMPARE_COLUMNS,
    RR_C1,
    RR_C2,
    RR_COLUMNS,
    BergmanSpace,
    bergman_function,
    compare_expansion,
    expected_dimension,
    extremal_lower_bound,
    fit_exponent,
    global_bound_sweep,
    gram,
    pin_normalization,
    quadrature,
    reproducing_check,
    riemann_roch_report,
    rr_rows,
    section_basis,
    table_to_csv,
    table_to_json,
)
from symbergman.errors import InvalidInputError, NumericalDomainError
from symbergman.geometry import CATALOG, KahlerSpec, catalog_model, fs_line
from symbergman.sympow import sym_rank


def beta_gram(d, j):
    # 2 pi int_0^inf s^j (1+s)^(-d-2) ds
    return 2 * np.pi * factorial(j) * factorial(d - j) / factorial(d + 1)



@pytest.mark.parametrize("name", sorted(CATALOG))
def test_quadrature_volume(name):
    m = catalog_model(name)
    q = quadrature(m)
    assert np.all(q.weights > 0)
    assert q.weights.sum() == pytest.approx(m.kahler.volume(), rel=1e-10)


def test_quadrature_volume_density_expr():
    m = fs_line(1, kahler=KahlerSpec("density_expr", 0.7))
    assert quadrature(m).weights.sum() == pytest.approx(2 * np.pi * 1.35, rel=1e-10)


def test_flat_kahler_rejected():
    with pytest.raises(InvalidInputError):
        quadrature(fs_line(1, kahler=KahlerSpec("flat_chart")))


@pytest.mark.parametrize(
    "name,k,dim", [("fs2", 1, 3), ("o1o2", 1, 5), ("twisted", 2, 9), ("o1o2", 3, 4 + 5 + 6 + 7)]
)
def test_section_counts(name, k, dim):
    m = catalog_model(name)
    assert section_basis(m, k).size == dim == expected_dimension(m, k)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gram_beta_integrals(d):
    m = fs_line(d)
    G = gram(m, 1, quadrature(m))
    np.testing.assert_allclose(np.diag(G).real, [beta_gram(d, j) for j in range(d + 1)], rtol=1e-12)
    assert np.abs(G - np.diag(np.diag(G))).max() < 1e-13


def test_gram_refinement():
    m = catalog_model("twisted")
    G1 = gram(m, 3, quadrature(m))
    G2 = gram(m, 3, quadrature(m, 192, 256))
    assert np.abs(G1 - G2).max() < 1e-8 * np.abs(G2).max()


def test_twisted_zero_kronecker():
    m = catalog_model("twisted0")
    k = 2
    sb = section_basis(m, k)
    G = gram(m, k, quadrature(m))
    want = np.zeros_like(G)
    for i, (n, j) in enumerate(sb.sections):
        want[i, i] = beta_gram(k, j)
    np.testing.assert_allclose(G, want, atol=1e-12)
    B = bergman_function(m, k, 0.4 - 0.2j).B
    np.testing.assert_allclose(2 * np.pi * B, (k + 1) * np.eye(sym_rank(2, k)), atol=1e-9)


@pytest.mark.parametrize("d,k", [(1, 1), (1, 7), (2, 4)])
def test_fs_bergman_constant(d, k):
    m = fs_line(d)
    sp = BergmanSpace(m, k)
    for x in (0.0, 0.3 + 0.4j, -2.5):
        s = sp.bergman(x)
        assert 2 * np.pi * s.B[0, 0].real == pytest.approx(k * d + 1, rel=1e-10)


def test_direct_sum_blocks():
    m = catalog_model("o1o2")
    k = 3
    B = bergman_function(m, k, 0.3 + 0.2j).B
    assert np.abs(B - np.diag(np.diag(B))).max() < 1e-10
    # basis vector n = (i, k - i) is the line bundle O(i + 2(k - i))
    for idx, deg in enumerate(i + 2 * (k - i) for i in range(k, -1, -1)):
        line = bergman_function(fs_line(deg), 1, 0.3 + 0.2j).B[0, 0]
        assert B[idx, idx] == pytest.approx(line, rel=1e-10)


def test_bergman_sample_properties():
    s = bergman_function(catalog_model("twisted"), 3, 0.5j)
    np.testing.assert_allclose(s.B, s.B.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(s.B)[0] > -1e-10
    assert s.trace == pytest.approx(np.trace(s.B).real)


def test_non_pd_gram_reports_eigenvalue():
    m = fs_line(1)
    with pytest.raises(NumericalDomainError, match="smallest eigenvalue"):
        BergmanSpace(m, 20, quadrature(m, 2, 1))


@pytest.mark.parametrize("name,k", [("fs1", 10), ("fs2", 6), ("o1o2", 4), ("twisted", 3), ("fs1_pert", 8)])
def test_trace_identity(name, k):
    m = catalog_model(name)
    sp = BergmanSpace(m, k, quadrature(m, 64, 64))
    assert sp.trace_integral(quadrature(m, 96, 112)) == pytest.approx(sp.dim, abs=1e-6)


def test_extremal(rng):
    m = catalog_model("twisted")
    sp = BergmanSpace(m, 2, quadrature(m, 48, 48))
    x = 0.2 - 0.3j
    top = sp.bergman(x).op_norm
    rand_only = extremal_lower_bound(sp, x, 300, rng, seed_top=False)
    assert rand_only <= top + 1e-9
    assert extremal_lower_bound(sp, x, 0, rng) == pytest.approx(top, abs=1e-9)
    assert extremal_lower_bound(sp, x, 200, rng) >= 0.95 * top


def test_extremal_line_bundle_all_sections_below(rng):
    m = fs_line(1)
    sp = BergmanSpace(m, 3, quadrature(m, 32, 32))
    assert extremal_lower_bound(sp, 0.1, 100, rng, seed_top=False) <= sp.bergman(0.1).op_norm + 1e-12


def test_rr_pinning_constants():
    c1, c2 = pin_normalization()
    assert c1 == pytest.approx(RR_C1, rel=1e-10)
    assert c2 == pytest.approx(RR_C2, rel=1e-10)


def test_rr_dimension_counts():
    m = catalog_model("o1o2")
    for k in (1, 4, 9):
        assert riemann_roch_report(m, k).d_k == sum(i + 2 * (k - i) + 1 for i in range(k + 1))


@pytest.mark.parametrize("name", ["fs1", "fs2", "o1o2"])
def test_rr_error_bounded(name):
    m = catalog_model(name)
    consts = pin_normalization()
    errs = [abs(riemann_roch_report(m, k, consts).error_times_k_over_rk) for k in (4, 8, 12)]
    assert max(errs) < 1e-6


def test_rr_trace_check():
    rec = riemann_roch_report(catalog_model("fs2"), 3, trace_check=True)
    assert rec.trace_integral == pytest.approx(rec.d_k, abs=1e-9)


def test_compare_fs1_exact():
    rows = compare_expansion(catalog_model("fs1"), [5, 10], [0.0, 0.4j], N=1)
    assert len(rows) == 4
    assert max(r["residual_op_norm"] for r in rows) < 1e-9
    assert list(rows[0]) == list(COMPARE_COLUMNS)


def test_compare_perturbed_decay():
    rows = compare_expansion(catalog_model("fs1_pert"), [5, 10, 20], [0.2], N=1, quad=quadrature(catalog_model("fs1_pert"), 48, 64))
    assert rows[0]["fitted_exponent"] <= -0.8
    # N = 2 removes the next term
    rows2 = compare_expansion(catalog_model("fs1_pert"), [5, 10, 20], [0.2], N=2, quad=quadrature(catalog_model("fs1_pert"), 48, 64))
    assert rows2[0]["fitted_exponent"] <= -1.6


def test_fit_exponent():
    ks = np.array([2, 4, 8])
    assert fit_exponent(ks, 3.0 * ks ** -1.5) == pytest.approx(-1.5)
    assert np.isnan(fit_exponent([5], [1.0]))


def test_global_bound_stable():
    vals = global_bound_sweep(catalog_model("fs1_pert"), [2, 10, 30], [0.0, 0.5, 1 + 1j, 3.0])
    assert max(vals.values()) < 2 * min(vals.values())


def test_reproducing_decay():
    m = fs_line(1)
    res = [reproducing_check(m, k, 1, 0.1, (0, 1, 2)) for k in (8, 16)]
    assert all(b < a for a, b in zip(res[0], res[1]))


def test_reproducing_vanishing_section():
    # z^j for j >= 1 vanishes at 0 and is orthogonal to the local kernel there
    res = reproducing_check(fs_line(1), 8, 1, 0.0, (3, 5))
    assert max(res) < 1e-12


def test_reproducing_needs_order():
    with pytest.raises(InvalidInputError):
        reproducing_check(fs_line(1), 8, 6, 0.0)


def test_tables_roundtrip():
    rows = [dict(zip(RR_COLUMNS, ("fs1", 4, 5, 5.0, 1e-15, 2.5e-15)))]
    text = table_to_csv(RR_COLUMNS, rows, ["seed 42"])
    assert text.splitlines()[0] == "# seed 42"
    assert text.splitlines()[1] == ",".join(RR_COLUMNS)
    assert text.splitlines()[2].startswith("fs1,4,5,5.000000000000e+00")
    doc = json.loads(table_to_json(RR_COLUMNS, rows, {"seed": 42}))
    assert doc["columns"] == list(RR_COLUMNS) and doc["rows"][0]["d_k"] == 5


def test_rr_rows_columns():
    recs = [riemann_roch_report(fs_line(1), k) for k in (1, 2)]
    rows = rr_rows(recs)
    assert [r["d_k"] for r in rows] == [2, 3]
    assert all(abs(r["error"]) < 1e-10 for r in rows)
