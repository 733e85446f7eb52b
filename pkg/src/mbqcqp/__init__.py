"""SDP relaxations and Gaussian randomized rounding for quadratic programs in
which ``Q`` of ``M`` quadratic constraints are selected by binary variables.

Modules
-------
instance     problem data, validation, file format, random generators
conic        dense primal-dual interior-point solver for PSD + LP cones
relaxation   the SDP relaxations and the complex-to-real embedding
rounding     support selection, Gaussian sampling, scaling, rank reduction
bounds       closed-form ratio guarantees and certification
oracle       brute-force optimum for N = 2 instances
experiments  seeded Monte-Carlo harness and report writers
"""
from .instance import Field, Instance, InstanceError, Sense
from .relaxation import solve_relaxation, solve_sdp1
from .rounding import round_max, round_min, round_relaxation

__version__ = "0.1.0"
