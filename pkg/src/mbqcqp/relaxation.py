"""SDP relaxations of the two selection models and solution recovery.

Three relaxations are built as :class:`~mbqcqp.conic.ConicProblem` objects:

* ``SDP2`` (min model): selection variables relaxed to ``[0, 1]``, ``X2`` PSD.
* ``SDP1`` (min model): selection variables lifted to a PSD matrix ``X1`` of
  size ``M + 1`` whose last column carries ``2*beta - 1``.
* ``SDP3`` (max model): the analogue of ``SDP2`` for the suppression model.

Complex instances are handled on the real solver through the embedding
``H -> [[Re H, -Im H], [Im H, Re H]]``, under which ``Tr(A B)`` of Hermitian
matrices equals half the trace of the embedded product.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import conic
from .conic import ConicProblem, ConicSolution, Status
from .instance import Instance, Sense

BETA_TOL = 1e-6


class Which(enum.Enum):
    SDP1 = "SDP1"
    SDP2 = "SDP2"
    SDP3 = "SDP3"


class RelaxationError(RuntimeError):
    """The cone solver did not return a usable optimum."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True, eq=False)
class RelaxationSolution:
    beta: np.ndarray
    X2: np.ndarray
    value: float
    which: Which
    raw: ConicSolution | None = None


@dataclass(frozen=True, eq=False)
class Sdp1Solution:
    X1: np.ndarray
    X2: np.ndarray
    value: float
    raw: ConicSolution | None = None


# -- complex embedding ------------------------------------------------------

def embed_hermitian(H: np.ndarray) -> np.ndarray:
    """Real symmetric ``2N x 2N`` image of a Hermitian ``N x N`` matrix."""
    H = np.asarray(H)
    if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H), initial=0.0)):
        raise ValueError("embed_hermitian: input is not Hermitian")
    R, I = H.real, H.imag
    return np.block([[R, -I], [I, R]])


def recover_hermitian(S: np.ndarray) -> np.ndarray:
    """Hermitian matrix closest to a real ``2N x 2N`` block matrix in embedding form.

    Averages the two diagonal blocks and antisymmetrizes the off-diagonal
    ones; PSD input gives PSD output.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0] // 2
    A, B = S[:n, :n], S[:n, n:]
    C, D = S[n:, :n], S[n:, n:]
    R = 0.5 * (A + D)
    Im = 0.5 * (C - B)
    H = R + 1j * Im
    return 0.5 * (H + H.conj().T)


def _block(instance: Instance, H: np.ndarray) -> np.ndarray:
    # Solver-side coefficient for Tr(H X2) in the instance's field.
    if instance.is_complex:
        return 0.5 * embed_hermitian(H)
    return np.asarray(H, dtype=float)


def _x2_dim(instance: Instance) -> int:
    return 2 * instance.N if instance.is_complex else instance.N


def _recover_x2(instance: Instance, X: np.ndarray) -> np.ndarray:
    if instance.is_complex:
        return recover_hermitian(X)
    return 0.5 * (X + X.T)


# -- builders ---------------------------------------------------------------

def build_sdp2_min(instance: Instance) -> ConicProblem:
    """Relaxation of the min model with ``beta`` in ``[0, 1]``.

    Block 0 is ``X2`` (``2N`` when complex); the linear block is ``beta``.
    Rows: ``M`` coverage rows, the sum row, then ``M`` upper bounds.
    """
    if instance.sense is not Sense.MINIMIZE:
        raise ValueError("build_sdp2_min needs a minimization instance")
    M, eps = instance.M, instance.epsilon
    n = _x2_dim(instance)
    p = ConicProblem([n], n_lin=M, sense="min")
    p.set_objective(psd={0: _block(instance, np.eye(instance.N))})
    for i, H in enumerate(instance.matrices):
        # Tr(H X2) >= beta_i + (1 - beta_i) eps
        p.add_constraint(eps, ">=", psd={0: _block(instance, H)}, lin={i: -(1.0 - eps)})
    p.add_constraint(instance.Q, "=", lin=np.ones(M))
    for i in range(M):
        p.add_constraint(1.0, "<=", lin={i: 1.0})
    return p


def build_sdp3_max(instance: Instance) -> ConicProblem:
    """Relaxation of the max model; same layout as :func:`build_sdp2_min`."""
    if instance.sense is not Sense.MAXIMIZE:
        raise ValueError("build_sdp3_max needs a maximization instance")
    M, eps = instance.M, instance.epsilon
    n = _x2_dim(instance)
    p = ConicProblem([n], n_lin=M, sense="max")
    p.set_objective(psd={0: _block(instance, np.eye(instance.N))})
    for i, H in enumerate(instance.matrices):
        # Tr(H X2) <= beta_i eps + (1 - beta_i)
        p.add_constraint(1.0, "<=", psd={0: _block(instance, H)}, lin={i: 1.0 - eps})
    p.add_constraint(instance.Q, "=", lin=np.ones(M))
    for i in range(M):
        p.add_constraint(1.0, "<=", lin={i: 1.0})
    return p


def build_sdp1_min(instance: Instance) -> ConicProblem:
    """Lifted relaxation with a real ``(M+1) x (M+1)`` block for the selectors.

    Block 0 is ``X1``, block 1 is ``X2``.  Rows: ``M + 1`` unit-diagonal
    equalities, the column-sum row ``sum_i X1[i, M] = 2Q - M``, then ``M``
    coverage rows ``Tr(H_i X2) >= (1 + a_i)/2 + (1 - a_i)/2 * eps`` with
    ``a_i = X1[i, M]``.
    """
    if instance.sense is not Sense.MINIMIZE:
        raise ValueError("build_sdp1_min needs a minimization instance")
    M, eps, Q = instance.M, instance.epsilon, instance.Q
    n1 = M + 1
    p = ConicProblem([n1, _x2_dim(instance)], sense="min")
    p.set_objective(psd={1: _block(instance, np.eye(instance.N))})
    for i in range(n1):
        E = np.zeros((n1, n1))
        E[i, i] = 1.0
        p.add_constraint(1.0, "=", psd={0: E})
    S = np.zeros((n1, n1))
    S[:M, M] = 0.5
    S[M, :M] = 0.5
    p.add_constraint(2 * Q - M, "=", psd={0: S})
    for i, H in enumerate(instance.matrices):
        E = np.zeros((n1, n1))
        E[i, M] = E[M, i] = -0.25 * (1.0 - eps)
        p.add_constraint(0.5 * (1.0 + eps), ">=", psd={0: E, 1: _block(instance, H)})
    return p


# -- extraction -------------------------------------------------------------

def _require_optimal(raw: ConicSolution, which: Which):
    if raw.status is not Status.OPTIMAL:
        raise RelaxationError(f"{which.value} solve ended with status {raw.status.value}", raw.status)


def _clean_beta(beta: np.ndarray) -> np.ndarray:
    if np.any(beta < -BETA_TOL) or np.any(beta > 1 + BETA_TOL):
        raise RelaxationError(f"relaxed selection outside [0, 1]: {beta}", Status.NUMERICAL_FAILURE)
    return np.clip(beta, 0.0, 1.0)


def extract_solution(instance: Instance, raw: ConicSolution, which: Which):
    """Map a raw cone solution back to ``(beta, X2, value)`` or an :class:`Sdp1Solution`.

    The reported value is ``Tr X2`` in the instance's own field.
    """
    _require_optimal(raw, which)
    if which is Which.SDP1:
        X1 = 0.5 * (raw.X[0] + raw.X[0].T)
        X2 = _recover_x2(instance, raw.X[1])
        return Sdp1Solution(X1=X1, X2=X2, value=float(np.trace(X2).real), raw=raw)
    X2 = _recover_x2(instance, raw.X[0])
    beta = _clean_beta(np.asarray(raw.x, dtype=float))
    return RelaxationSolution(beta=beta, X2=X2, value=float(np.trace(X2).real), which=which, raw=raw)


def map_sdp1_beta(sol: Sdp1Solution) -> np.ndarray:
    """Selection vector ``beta_i = (1 + X1[i, M]) / 2`` read off the lifted block."""
    X1 = sol.X1
    M = X1.shape[0] - 1
    return 0.5 + 0.5 * X1[:M, M]


def solve_relaxation(instance: Instance, settings: conic.Settings | None = None) -> RelaxationSolution:
    """Solve SDP2 (min model) or SDP3 (max model)."""
    if instance.sense is Sense.MINIMIZE:
        problem, which = build_sdp2_min(instance), Which.SDP2
    else:
        problem, which = build_sdp3_max(instance), Which.SDP3
    raw = conic.solve(problem, settings)
    return extract_solution(instance, raw, which)


def solve_sdp1(instance: Instance, settings: conic.Settings | None = None) -> Sdp1Solution:
    raw = conic.solve(build_sdp1_min(instance), settings)
    return extract_solution(instance, raw, Which.SDP1)


def check_relaxation(instance: Instance, sol: RelaxationSolution, tol: float = 1e-7) -> list[str]:
    """List violated :class:`RelaxationSolution` invariants (empty when all hold)."""
    out = []
    b = sol.beta
    if abs(b.sum() - instance.Q) > 1e-6:
        out.append(f"sum(beta) = {b.sum()} != Q = {instance.Q}")
    if np.any(b < 0) or np.any(b > 1 + BETA_TOL):
        out.append("beta outside [0, 1]")
    lam = np.linalg.eigvalsh(sol.X2)
    if lam[0] < -1e-8 * (1 + lam[-1]):
        out.append(f"X2 not PSD (min eigenvalue {lam[0]:.3g})")
    q = np.einsum("iab,ba->i", instance.matrices, sol.X2).real
    eps = instance.epsilon
    if instance.sense is Sense.MINIMIZE:
        bad = np.nonzero(q < b + (1 - b) * eps - tol)[0]
    else:
        bad = np.nonzero(q > b * eps + (1 - b) + tol)[0]
    for i in bad:
        out.append(f"trace constraint violated at index {i + 1}")
    return out
