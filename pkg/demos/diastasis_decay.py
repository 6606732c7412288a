"""Largest eigenvalue of the matrix diastasis on a small disk."""

from symbergman.diastatic import diastasis_point, disk_pairs, fit_delta, lambda_max
from symbergman.geometry import catalog_model

model = catalog_model("twisted")
pairs = disk_pairs(0.3, 8)
print("fitted delta", fit_delta(model, pairs))
for x, y in pairs[:5]:
    print(x, y, lambda_max(diastasis_point(model, x, y)))
