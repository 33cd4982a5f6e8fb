"""Recovering the anisotropy from the critical Besov exponent.

Reading the field through diag(lam, 2 - lam) gives a critical exponent
H0 * min(lam / 1.2, (2 - lam) / 0.8), a tent peaked at the true
lam = 1.2.  The search estimates the exponent for every candidate,
averages over realizations and returns the maximizer.  Single realizations
are noisy (about +-0.1 at 256x256), hence several replicates.

Run:  python demos/02_anisotropy_search.py      (about a minute)
"""
import numpy as np

from osgrf import FieldSpec, anisotropy_search, candidate_grid, synthesize_many

spec = FieldSpec.create(np.diag([1.2, 0.8]), 0.4, n=512, seed=7)
reals = synthesize_many(spec, 4)
res = anisotropy_search(reals, candidate_grid(2, 0.6, 1.4, 0.1), truth=((1.2, 0.8), 0.4))

print(" lambda  alpha_hat  stderr  predicted")
for lam, a, se, pred in res.curve:
    bar = "#" * int(round(60 * a))
    print(f"{lam:7.1f} {a:10.3f} {se:7.3f} {pred:10.3f}  {bar}")
print(f"\nargmax lambda = {res.argmax_lambda}, H_hat = {res.H_hat:.3f}")
print(f"per-realization votes: {res.votes}")
print(f"tent fit: lambda0 = {res.tent['lambda0']:.3f}, H = {res.tent['H']:.3f}, R^2 = {res.tent['r2']:.3f}")
print("\nThe estimates sit a little below the prediction: the finest and coarsest\n"
      "scales bend log2 S_j, so finite grids bias alpha_hat down by a few hundredths.")
