"""
A small Monte-Carlo run
=======================

Twenty random instances, a text histogram of the ratios, and the files the
harness writes.  Pass a directory as the first argument to keep them.
"""
import sys
import tempfile

import numpy as np

from mbqcqp import experiments
from mbqcqp.instance import Field

cfg = experiments.ExperimentConfig(M=8, N=8, Q=4, field=Field.REAL, realizations=20, trials=300, seed=1)
rep = experiments.run_experiment(cfg)
agg = rep.aggregates
print(f"ratio: max {agg['max']:.3f}  mean {agg['mean']:.3f}  std {agg['std']:.3f}")
print("all certified:", all(r.certified for r in rep.records))

# %%
edges = np.array(rep.histogram["bin_edges"])
counts = np.array(rep.histogram["counts"])
for lo, c in zip(edges[:-1], counts):
    if c:
        print(f"{lo:6.3f} | {'#' * c}")

# %%
out_dir = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp()
for name, path in experiments.emit_report(rep, out_dir).items():
    print(name, path)
