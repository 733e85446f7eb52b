"""
Relaxation <= optimum <= rounding, on instances small enough to solve exactly
=============================================================================

For N = 2 the continuous subproblem of every support can be solved by a
direction scan, so enumerating the supports gives the true optimum.
"""
import numpy as np

from mbqcqp import oracle, relaxation, rounding
from mbqcqp.instance import Field, Sense, generate_gaussian_instance

print(f"{'field':>8} {'model':>5} {'v_SDP':>10} {'oracle':>10} {'v_UBQP':>10} {'grid err':>9}")
for k in range(6):
    fld = Field.REAL if k % 2 == 0 else Field.COMPLEX
    sense = Sense.MINIMIZE if k < 4 else Sense.MAXIMIZE
    inst = generate_gaussian_instance(5, 2, fld, seed=11, Q=2, epsilon=0.3, sense=sense, realization=k)
    sol = relaxation.solve_relaxation(inst)
    orc = oracle.oracle_value(inst)
    out = rounding.round_relaxation(inst, sol, trials=500, seed=11, realization=k)
    print(f"{fld.value:>8} {sense.value:>5} {sol.value:10.5f} {orc.value:10.5f} {out.v_ubqp:10.5f} "
          f"{orc.error_bound:9.1e}")

# %%
# The oracle also reports the optimal support and direction.
print(oracle.oracle_value(inst).to_dict())
