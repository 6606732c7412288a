"""Dimension of holomorphic sections vs the integrated expansion."""

from symbergman.bergman import pin_normalization, quadrature, riemann_roch_report
from symbergman.geometry import catalog_model

consts = pin_normalization()
for name in ("fs1", "fs2", "o1o2"):
    model = catalog_model(name)
    quad = quadrature(model)
    for k in (4, 8, 16):
        rep = riemann_roch_report(model, k, consts, quad)
        print(f"{name:5s} k={k:2d} d_k={rep.d_k} predicted={rep.predicted:.6f} err*k/r_k={rep.error_times_k_over_rk:.1e}")
