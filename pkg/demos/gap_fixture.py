"""
An instance family with an unbounded gap
========================================

Two 2x2 constraints parametrised by eps.  The continuous optimum grows like
2/eps while the relaxation stays below 2, so no constant ratio can hold.
"""
import numpy as np

from mbqcqp import oracle

print(f"{'eps':>8} {'closed':>10} {'scan':>10} {'sdp':>8} {'ratio':>9}")
for eps in (0.5, 0.1, 0.05, 0.01, 0.005):
    rep = oracle.gap_fixture_report(eps)
    print(f"{eps:8.3f} {rep['closed_form']:10.3f} {rep['line_search']:10.3f} {rep['sdp']:8.4f} "
          f"{rep['ratio']:9.1f}")

print("\nD1, D2 at eps = 0.01:")
print(np.round(oracle.gap_fixture_matrices(0.01), 4))
