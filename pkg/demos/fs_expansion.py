"""Compare 2 pi B_k with the expansion on the perturbed round line bundle."""

from symbergman import catalog_model, compare_expansion

rows = compare_expansion(catalog_model("fs1_pert"), [5, 10, 20, 30], [0.2 + 0.1j], N=1)
for r in rows:
    print(f"k={r['k']:3d}  residual {r['residual_op_norm']:.3e}")
print("fitted exponent", rows[0]["fitted_exponent"])
