"""
How the ratio guarantee scales
==============================

Tabulates the min-model guarantee over M and eps for both fields, and the
max-model guarantee for a few rank-one instances.
"""
from mbqcqp import bounds
from mbqcqp.instance import Field, Sense, generate_gaussian_instance

eps_grid = [0.0, 0.1, 0.5, 0.9, 1.0]
for fld in (Field.REAL, Field.COMPLEX):
    print(f"\nmin model, {fld.value} field, Q = M/2")
    print("   M  " + "".join(f"{e:>11}" for e in eps_grid))
    for M in (4, 8, 16, 32):
        row = [bounds.min_bound_value(fld, M, M // 2, e).mu for e in eps_grid]
        print(f"{M:4d}  " + "".join(f"{v:11.2f}" for v in row))

# %%
# The binding term of the max{...} changes with eps.
for e in (0.05, 0.5, 0.95):
    rep = bounds.min_bound_value(Field.REAL, 16, 8, e)
    print(f"eps={e:<5} active: {rep.active_branch}")

# %%
# Max model: the guarantee reads the ranks of the H_i through K.
print("\nmax model, eps = 0.5")
for fld in (Field.REAL, Field.COMPLEX):
    for M in (4, 16):
        inst = generate_gaussian_instance(M, 2, fld, seed=0, Q=M // 2, epsilon=0.5, sense=Sense.MAXIMIZE)
        rep = bounds.max_bound(inst)
        print(f"{fld.value:>8} M={M:3d}  K={rep.K:5.1f}  mu={rep.mu:.3e}")

# with eps = 0 there is nothing to report
inst = generate_gaussian_instance(4, 2, Field.REAL, seed=0, Q=2, sense=Sense.MAXIMIZE)
try:
    bounds.max_bound(inst)
except bounds.NoGuaranteeError as exc:
    print("eps = 0:", exc)
