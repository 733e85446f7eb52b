"""
Relax, round and check a small instance
=======================================

A walk through the main pipeline on one random min-model instance: solve the
relaxation, look at the selector vector, round it and compare the rounded
value with the relaxation value and the closed-form guarantee.
"""
import numpy as np

from mbqcqp import bounds, relaxation, rounding
from mbqcqp.instance import Field, generate_gaussian_instance

# eight rank-one constraints in C^4, four of which must reach level 1
inst = generate_gaussian_instance(8, 4, Field.COMPLEX, seed=3, Q=4, epsilon=0.2)
print(f"M={inst.M}  N={inst.N}  Q={inst.Q}  eps={inst.epsilon}")

# %%
# The relaxation replaces w w^H by a PSD matrix and the binary selectors by
# beta in [0, 1] with sum Q.
sol = relaxation.solve_relaxation(inst)
print(f"v_SDP = {sol.value:.6f}   ({sol.raw.iterations} interior-point iterations)")
print("beta  =", np.round(sol.beta, 4))
print("rank X2 =", np.linalg.matrix_rank(sol.X2, tol=1e-8))

# %%
# Rounding keeps the Q largest selectors, draws Gaussian vectors with the
# relaxed covariance and scales each draw until every constraint holds.
out = rounding.round_relaxation(inst, sol, trials=1000, seed=3)
print("support   =", out.support.indices)
print(f"rank before/after reduction: {out.rank_before} -> {out.rank_after}")
print(f"v_UBQP    = {out.v_ubqp:.6f}   ratio = {out.v_ubqp / sol.value:.4f}")
print(f"worst slack over all trials = {out.worst_slacks.min():.2e}")

# %%
# The guarantee only depends on (field, M, Q, eps).
rep = bounds.certify(bounds.min_bound(inst), out.v_ubqp, sol.value)
print(bounds.format_report(rep))
