"""Reduced-size invariant suite behind ``symbergman selftest``.

Each check returns ``(ok, detail)``.  The suite is deterministic for a
given seed.  ``flip_sign`` injects a sign error into the curvature link
check; it exists as a negative control and must make that check fail.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import bergman, diastatic, expansion, geometry, matjet, numerics, sympow


@dataclass
class CheckResult:
    module: str
    name: str
    ok: bool
    detail: str
    seconds: float


def _rand_herm(rng, n, scale=1.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (A + A.conj().T)


# numerics


def check_expm_logm(rng, flip_sign=False):
    worst = 0.0
    for _ in range(10):
        H = _rand_herm(rng, 3, 0.5)
        back = numerics.logm_principal(numerics.expm(H, hermitian=True), hermitian=True)
        worst = max(worst, numerics.op_norm(back - H))
    return worst < 1e-12, f"max |log(exp H) - H| = {worst:.2e}"


def check_cholesky(rng, flip_sign=False):
    A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    H = A @ A.conj().T + np.eye(5)
    L = numerics.cholesky(H)
    err = numerics.op_norm(L @ L.conj().T - H)
    return err < 1e-12, f"|LL* - H| = {err:.2e}"


# sympow


def check_sym_spectrum(rng, flip_sign=False):
    worst = 0.0
    for r in (2, 3):
        for k in (1, 3, 5):
            H = _rand_herm(rng, r)
            lam = np.linalg.eigvalsh(H)
            got = np.sort(np.linalg.eigvalsh(sympow.s_k_lift(H, k)))
            want = np.sort(sympow.lift_spectrum(lam, k))
            worst = max(worst, float(np.abs(got - want).max()))
    return worst < 1e-9, f"spectrum error {worst:.2e}"


def check_sym_functor(rng, flip_sign=False):
    worst = 0.0
    for k in (2, 4):
        H = _rand_herm(rng, 2, 0.5)
        lhs = numerics.expm(sympow.s_k_lift(H, k), hermitian=True)
        rhs = sympow.sym_pow_matrix(numerics.expm(H, hermitian=True), k)
        worst = max(worst, numerics.op_norm(lhs - rhs) / numerics.op_norm(rhs))
    return worst < 1e-9, f"relative error {worst:.2e}"


# matjet


def check_jet_inverse(rng, flip_sign=False):
    J = geometry.random_hermitian_jet(rng, 2, 6) + 3.0
    P = matjet.jet_mul(J, matjet.jet_inverse(J))
    err = (P - 1.0).max_coeff_norm()
    return err < 1e-12, f"|J J^-1 - I| = {err:.2e}"


def check_jet_exp_log(rng, flip_sign=False):
    J = geometry.random_hermitian_jet(rng, 2, 6, decay=0.2) * 0.3
    back = matjet.jet_log(matjet.jet_exp(J))
    err = (back - J).max_coeff_norm()
    return err < 1e-11, f"|log exp J - J| = {err:.2e}"


# geometry


def check_fs_scal(rng, flip_sign=False):
    ch = geometry.chart_from_model(geometry.fs_line(1), 0.3 + 0.2j, 4)
    pack = geometry.curvature_pack(ch)
    err = abs(pack.scal.data[0, 0, 0] - 2.0)
    return err < 1e-10, f"|Scal - 2| = {err:.2e}"


def check_griffiths(rng, flip_sign=False):
    val = geometry.griffiths_min_eigenvalue(geometry.catalog_model("twisted"), grid=12)
    return val > 0, f"min Griffiths eigenvalue {val:.3e}"


# diastatic


def check_pure_coefficients(rng, flip_sign=False):
    ch = geometry.random_chart(rng, 2, 6)
    dj = diastatic.diastasis_jet(ch)
    rel = dj.pure_defect() / max(dj.D_jet.max_coeff_norm(), 1e-300)
    return rel < 1e-10, f"pure/max = {rel:.2e}"


def check_curvature_link(rng, flip_sign=False):
    ch = geometry.random_chart(rng, 2, 4)
    sign = 1.0 if flip_sign else -1.0
    err = diastatic.curvature_link_defect(ch, sign=sign)
    return err < 1e-9, f"link defect {err:.2e}" + (" (sign flipped)" if flip_sign else "")


def check_decay(rng, flip_sign=False):
    model = geometry.catalog_model("twisted")
    delta = diastatic.fit_delta(model, diastatic.disk_pairs(0.3, 6))
    return delta > 0, f"fitted delta {delta:.3f}"


# expansion


def check_recursion_closed(rng, flip_sign=False):
    ch = geometry.random_chart(rng, 2, expansion.required_order(1))
    worst = 0.0
    for k in (2, 3):
        rows = expansion.coeff_report(ch, k, 1)
        worst = max(worst, max(r["agreement"] for r in rows))
    return worst < 1e-8, f"recursion vs closed {worst:.2e}"


def check_he_scalar(rng, flip_sign=False):
    ch = geometry.hermitian_einstein_chart(rng, 2, expansion.required_order(2))
    t = expansion.coeff_recursion(ch, 2, 2)
    worst = max(expansion.scalar_defect(b) for b in t.b)
    return worst < 1e-8, f"scalar defect {worst:.2e}"


def check_line_cross(rng, flip_sign=False):
    ch = geometry.random_chart(rng, 1, 4)
    err = abs(expansion.cross_identity(ch) - 1)
    return err < 1e-10, f"|b0 Lambda - 1| = {err:.2e}"


# bergman


def check_fs_constant(rng, flip_sign=False):
    model = geometry.fs_line(1)
    sp = bergman.BergmanSpace(model, 4, bergman.quadrature(model, 32, 24))
    vals = [2 * np.pi * sp.bergman(x).op_norm for x in (0.0, 0.5j, 1.7)]
    err = max(abs(v - 5) for v in vals)
    return err < 1e-9, f"|2 pi B - (k+1)| = {err:.2e}"


def check_trace_identity(rng, flip_sign=False):
    model = geometry.catalog_model("o1o2")
    sp = bergman.BergmanSpace(model, 3, bergman.quadrature(model, 48, 48))
    tr = sp.trace_integral(bergman.quadrature(model, 80, 72))
    err = abs(tr - sp.dim)
    return err < 1e-6, f"|int tr B - d_k| = {err:.2e}"


def check_extremal(rng, flip_sign=False):
    model = geometry.catalog_model("twisted")
    sp = bergman.BergmanSpace(model, 2, bergman.quadrature(model, 32, 32))
    x = 0.3 + 0.1j
    top = sp.bergman(x).op_norm
    got = bergman.extremal_lower_bound(sp, x, 50, rng)
    ok = got <= top + 1e-9 and got >= 0.95 * top
    return ok, f"extremal {got:.6f} vs op norm {top:.6f}"


SUITE = {
    "numerics": [check_expm_logm, check_cholesky],
    "sympow": [check_sym_spectrum, check_sym_functor],
    "matjet": [check_jet_inverse, check_jet_exp_log],
    "geometry": [check_fs_scal, check_griffiths],
    "diastatic": [check_pure_coefficients, check_curvature_link, check_decay],
    "expansion": [check_recursion_closed, check_he_scalar, check_line_cross],
    "bergman": [check_fs_constant, check_trace_identity, check_extremal],
}


def run_suite(seed=42, only=None, flip_sign=False):
    """Run the suite, optionally restricted to module names in ``only``."""
    if only:
        unknown = set(only) - set(SUITE)
        if unknown:
            from .errors import ConfigError

            raise ConfigError(f"unknown selftest module(s) {sorted(unknown)}; choose from {sorted(SUITE)}")
    results = []
    for module, checks in SUITE.items():
        if only and module not in only:
            continue
        # one generator per module so filtering does not shift the draws
        rng = np.random.default_rng([seed, sorted(SUITE).index(module)])
        for fn in checks:
            t0 = time.perf_counter()
            try:
                ok, detail = fn(rng, flip_sign=flip_sign)
            except Exception as exc:  # a crash is a failure, not an abort
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(module, fn.__name__.removeprefix("check_"), bool(ok), detail, time.perf_counter() - t0))
    return results
