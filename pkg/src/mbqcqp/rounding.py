"""Gaussian randomized rounding for both selection models, and rank reduction.

Each trial draws ``xi ~ N(0, X2)`` from its own substream keyed by
``(seed, realization, trial)``, so trial results never depend on the order in
which trials run.  The support is the ``Q`` largest relaxed selectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .instance import Field, Instance, Sense
from .relaxation import RelaxationSolution

FEAS_TOL = 1e-8
ZERO_FORM = 1e-14
RANK_TOL = 1e-9
DEFAULT_TRIALS = 1000


class RoundingError(RuntimeError):
    """Sampling could not produce a usable trial (degenerate instance)."""


@dataclass(frozen=True)
class SupportSet:
    indices: tuple  # sorted, 0-based

    def mask(self, M: int) -> np.ndarray:
        x1 = np.zeros(M, dtype=int)
        x1[list(self.indices)] = 1
        return x1


@dataclass(frozen=True, eq=False)
class RoundingTrial:
    xi: np.ndarray
    t: float
    x2: np.ndarray
    objective: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class RoundingOutcome:
    support: SupportSet
    x1: np.ndarray
    best: RoundingTrial
    objectives: np.ndarray
    v_ubqp: float
    trials_attempted: int
    trials_resampled: int
    unbounded: bool = False
    rank_before: int = 0
    rank_after: int = 0
    worst_slacks: np.ndarray | None = None  # per trial; nan for an unbounded trial


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    slacks: np.ndarray  # signed; >= 0 means satisfied
    cardinality_ok: bool
    binary_ok: bool
    feasible: bool
    tol: float = FEAS_TOL

    @property
    def worst_slack(self) -> float:
        return float(np.min(self.slacks)) if self.slacks.size else 0.0


@dataclass(frozen=True, eq=False)
class RankReduction:
    X: np.ndarray
    rank: int
    initial_rank: int
    iterations: int
    bound_met: bool
    stalled: bool


# -- support ------------------------------------------------------------------

def select_support(beta_bar, Q: int) -> SupportSet:
    """Indices of the ``Q`` largest entries; ties go to the lower index."""
    b = np.asarray(beta_bar, dtype=float)
    if not 1 <= Q <= b.size:
        raise ValueError(f"need 1 <= Q <= {b.size}, got {Q}")
    # stable sort on -b keeps index order among equal values
    order = np.argsort(-b, kind="stable")
    return SupportSet(tuple(sorted(int(i) for i in order[:Q])))


# -- sampling -----------------------------------------------------------------

def psd_factor(X: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """``L`` with ``L L^H = X`` from an eigendecomposition; tiny negative eigenvalues are clipped."""
    X = 0.5 * (X + X.conj().T)
    lam, U = np.linalg.eigh(X)
    scale = max(1.0, float(lam[-1])) if lam.size else 1.0
    if lam.size and lam[0] < -tol * scale:
        raise np.linalg.LinAlgError(f"covariance is indefinite (min eigenvalue {lam[0]:.3g})")
    keep = lam > RANK_TOL * scale
    return U[:, keep] * np.sqrt(lam[keep])


def _draw(L: np.ndarray, field: Field, rng: np.random.Generator) -> np.ndarray:
    r = L.shape[1]
    if field is Field.REAL:
        return L @ rng.standard_normal(r)
    g = rng.standard_normal((2, r))
    return L @ ((g[0] + 1j * g[1]) / math.sqrt(2.0))


def sample_gaussian(X2: np.ndarray, field: Field, stream: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw ``xi`` with ``E[xi xi^H] = X2``.

    Complex draws use ``(g1 + 1j*g2)/sqrt(2)`` for the white part.  With
    ``size`` the result has shape ``(size, N)``.
    """
    L = psd_factor(np.asarray(X2))
    n, r = L.shape
    dtype = float if field is Field.REAL else complex
    if size is None:
        return _draw(L, field, stream) if r else np.zeros(n, dtype=dtype)
    if r == 0:
        return np.zeros((size, n), dtype=dtype)
    if field is Field.REAL:
        return stream.standard_normal((size, r)) @ L.T
    g = stream.standard_normal((2, size, r))
    return ((g[0] + 1j * g[1]) / math.sqrt(2.0)) @ L.T


def _forms(mats: np.ndarray, xi: np.ndarray) -> np.ndarray:
    return np.einsum("a,iab,b->i", xi.conj(), mats, xi).real


# -- rank reduction -----------------------------------------------------------

def _rank(lam: np.ndarray, tol: float) -> int:
    if lam.size == 0 or lam[-1] <= 0:
        return 0
    return int(np.sum(lam > tol * lam[-1]))


def _bound_met(r: int, m: int, is_complex: bool) -> bool:
    return r * r <= m if is_complex else r * (r + 1) // 2 <= m


def _herm_basis_map(B: np.ndarray, is_complex: bool) -> np.ndarray:
    # Row of Tr(B E_j) over a basis E_j of (real) symmetric / Hermitian r x r matrices.
    r = B.shape[0]
    iu = np.triu_indices(r, 1)
    parts = [np.diag(B).real, 2.0 * B[iu].real]
    if is_complex:
        parts.append(2.0 * B[iu].imag)
    return np.concatenate(parts)


def _herm_from_coords(c: np.ndarray, r: int, is_complex: bool) -> np.ndarray:
    iu = np.triu_indices(r, 1)
    k = len(iu[0])
    D = np.zeros((r, r), dtype=complex if is_complex else float)
    D[np.diag_indices(r)] = c[:r]
    off = c[r:r + k].astype(D.dtype)
    if is_complex:
        # E_ij = i, E_ji = -i carries Tr(B E) = 2 Im B_ij
        off = off + 1j * c[r + k:]
    D[iu] = off
    D[(iu[1], iu[0])] = off.conj()
    return D


def rank_reduce(matrices, X: np.ndarray, values=None, *, rank_tol: float = RANK_TOL,
                check_tol: float = 1e-7) -> RankReduction:
    """Move ``X`` to a low-rank point with the same constraint traces.

    Repeatedly finds a Hermitian direction ``D`` with ``Tr(V^H A_k V D) = 0``
    for every constraint, where ``X = V V^H``, and steps to
    ``V (I - D/lambda_max(D)) V^H``, which drops the rank by at least one.
    Stops once ``r(r+1)/2 <= m`` (real) or ``r^2 <= m`` (complex).

    Parameters
    ----------
    matrices : sequence of (n, n) arrays
        Constraint matrices ``A_k``.  Include the identity to keep the trace.
    X : (n, n) array
        PSD starting point.  Complex dtype selects the Hermitian bound.
    values : array, optional
        Right-hand sides ``b_k``; when given, ``X`` must match them to
        ``check_tol``.
    """
    A = np.asarray(matrices)
    X = np.asarray(X)
    is_complex = np.iscomplexobj(X) or np.iscomplexobj(A)
    X = 0.5 * (X + X.conj().T)
    m = A.shape[0]
    if values is not None:
        tr = np.einsum("kab,ba->k", A, X).real
        bad = np.abs(tr - np.asarray(values, dtype=float))
        if np.any(bad > check_tol):
            raise ValueError(f"X violates constraint {int(np.argmax(bad))} by {bad.max():.3g}")
    lam, U = np.linalg.eigh(X)
    r0 = r = _rank(lam, rank_tol)
    it = 0
    stalled = False
    while not _bound_met(r, m, is_complex):
        keep = lam > rank_tol * lam[-1]
        V = U[:, keep] * np.sqrt(lam[keep])
        G = np.array([_herm_basis_map(V.conj().T @ Ak @ V, is_complex) for Ak in A])
        _, s, Vt = np.linalg.svd(G)
        dof = G.shape[1]
        # last right singular vector spans part of the null space when dof > m
        if dof <= m and s[-1] > 1e-12 * max(1.0, s[0]):
            stalled = True
            break
        D = _herm_from_coords(Vt[-1], r, is_complex)
        mu = np.linalg.eigvalsh(D)
        if mu[-1] < -mu[0]:
            D, mu = -D, -mu[::-1]
        if mu[-1] <= 0:
            stalled = True
            break
        Xn = V @ (np.eye(r) - D / mu[-1]) @ V.conj().T
        Xn = 0.5 * (Xn + Xn.conj().T)
        lam_n, U_n = np.linalg.eigh(Xn)
        r_n = _rank(lam_n, rank_tol)
        it += 1
        if r_n >= r:
            stalled = True
            break
        X, lam, U, r = Xn, lam_n, U_n, r_n
    if not is_complex:
        X = X.real
    # rebuild from the kept spectrum so the returned matrix is exactly PSD
    keep = lam > rank_tol * max(lam[-1], 0.0) if lam.size and lam[-1] > 0 else np.zeros(lam.shape, bool)
    Xc = (U[:, keep] * lam[keep]) @ U[:, keep].conj().T
    if not is_complex:
        Xc = Xc.real
    return RankReduction(X=Xc, rank=r, initial_rank=r0, iterations=it,
                         bound_met=_bound_met(r, m, is_complex), stalled=stalled)


def _reduce_for_rounding(instance: Instance, X2: np.ndarray) -> tuple[np.ndarray, int, int]:
    A = np.concatenate([instance.matrices, np.eye(instance.N)[None]], axis=0)
    red = rank_reduce(A, X2)
    return red.X, red.initial_rank, red.rank


# -- feasibility --------------------------------------------------------------

def check_feasibility(instance: Instance, x1, x2, tol: float = FEAS_TOL) -> FeasibilityReport:
    """Signed slack of every quadratic constraint of the original model."""
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    if x1.shape != (instance.M,) or x2.shape != (instance.N,):
        raise ValueError(f"shape mismatch: x1 {x1.shape}, x2 {x2.shape} for M={instance.M}, N={instance.N}")
    binary_ok = bool(np.all((x1 == 0) | (x1 == 1)))
    card_ok = int(np.sum(x1)) == instance.Q
    q = _forms(instance.matrices, x2)
    eps = instance.epsilon
    if instance.sense is Sense.MINIMIZE:
        slack = q - (x1 + (1 - x1) * eps)
    else:
        slack = (x1 * eps + (1 - x1)) - q
    ok = binary_ok and card_ok and bool(np.all(slack >= -tol))
    return FeasibilityReport(slacks=slack, cardinality_ok=card_ok, binary_ok=binary_ok, feasible=ok, tol=tol)


# -- rounding -----------------------------------------------------------------

def _scale_min(q: np.ndarray, in_I: np.ndarray, eps: float) -> float | None:
    # None asks for a resample: some required form vanished
    need = in_I | (eps > 0)
    if np.any(q[need] <= ZERO_FORM):
        return None
    t2 = np.max(1.0 / q[in_I])
    if eps > 0 and np.any(~in_I):
        t2 = max(t2, np.max(eps / q[~in_I]))
    return math.sqrt(t2)


def _scale_max(q: np.ndarray, in_I: np.ndarray, eps: float, xi_norm2: float, hnorm: np.ndarray) -> float:
    if eps == 0.0:
        return 0.0
    caps = np.where(in_I, eps, 1.0)
    active = q > ZERO_FORM * max(xi_norm2, 1e-300) * hnorm
    if not np.any(active):
        return math.inf
    t2 = np.min(caps[active] / q[active])
    # nearly-null forms still cap a huge t
    if np.any(~active & (q > 0)) and np.any(t2 * q > caps + FEAS_TOL):
        t2 = np.min(caps[q > 0] / q[q > 0])
    return math.sqrt(t2)


def _run(instance: Instance, relax: RelaxationSolution, trials: int, seed: int, realization: int,
         reduce_rank: bool, minimize: bool) -> RoundingOutcome:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    support = select_support(relax.beta, instance.Q)
    M, eps = instance.M, instance.epsilon
    x1 = support.mask(M)
    in_I = x1.astype(bool)
    X2 = relax.X2
    r0 = r1 = _rank(np.linalg.eigvalsh(X2), RANK_TOL)
    if reduce_rank:
        X2, r0, r1 = _reduce_for_rounding(instance, X2)
    L = psd_factor(X2)
    mats = instance.matrices
    hnorm = np.array([np.linalg.norm(H, 2) for H in mats])
    objectives = np.empty(trials)
    worst = np.empty(trials)
    budget = 100 * trials
    resampled = 0
    best = None
    unbounded = False
    for k in range(trials):
        rng = streams.substream(seed, streams.ROUNDING, realization, k)
        while True:
            xi = _draw(L, instance.field, rng) if L.shape[1] else np.zeros(instance.N, dtype=mats.dtype)
            q = _forms(mats, xi)
            if minimize:
                t = _scale_min(q, in_I, eps)
                if t is None:
                    resampled += 1
                    if resampled > budget:
                        raise RoundingError(f"resample budget of {budget} exhausted; a constraint form keeps vanishing")
                    continue
            else:
                t = _scale_max(q, in_I, eps, float(np.vdot(xi, xi).real), hnorm)
            break
        if math.isinf(t):
            unbounded = True
            obj = math.inf
            x2 = xi
            worst[k] = math.nan
        else:
            x2 = t * xi
            obj = float(np.vdot(x2, x2).real)
            worst[k] = check_feasibility(instance, x1, x2).worst_slack
        objectives[k] = obj
        better = best is None or (obj < best.objective if minimize else obj > best.objective)
        if better:
            feas = math.isinf(t) or bool(worst[k] >= -FEAS_TOL)
            best = RoundingTrial(xi=xi, t=t, x2=x2, objective=obj, feasible=feas)
    v = float(np.min(objectives) if minimize else np.max(objectives))
    return RoundingOutcome(support=support, x1=x1, best=best, objectives=objectives, v_ubqp=v,
                           trials_attempted=trials + resampled, trials_resampled=resampled,
                           unbounded=unbounded, rank_before=r0, rank_after=r1, worst_slacks=worst)


def round_min(instance: Instance, relax: RelaxationSolution, trials: int = DEFAULT_TRIALS, seed: int = 0,
              realization: int = 0, *, reduce_rank: bool = True) -> RoundingOutcome:
    """Round a min-model relaxation.

    Each trial scales ``xi`` by ``t = max(sqrt(max_I 1/q_i), sqrt(max_notI eps/q_i))``
    with ``q_i = xi^H H_i xi``, the smallest factor meeting every constraint.
    Draws where a required ``q_i <= 1e-14`` are redrawn from the same trial
    stream, at most ``100 * trials`` times in total.

    Returns
    -------
    RoundingOutcome
        ``v_ubqp`` is the smallest objective over the trials.
    """
    if instance.sense is not Sense.MINIMIZE:
        raise ValueError("round_min needs a minimization instance")
    return _run(instance, relax, trials, seed, realization, reduce_rank, True)


def round_max(instance: Instance, relax: RelaxationSolution, trials: int = DEFAULT_TRIALS, seed: int = 0,
              realization: int = 0, *, reduce_rank: bool = True) -> RoundingOutcome:
    """Round a max-model relaxation.

    Each trial scales ``xi`` by ``t = min(sqrt(min_I eps/q_i), sqrt(min_notI 1/q_i))``,
    the largest factor keeping every constraint, where a vanishing ``q_i``
    imposes no cap.  With ``eps = 0`` the support caps force ``t = 0``.  A
    trial with no cap at all marks the outcome ``unbounded``.
    """
    if instance.sense is not Sense.MAXIMIZE:
        raise ValueError("round_max needs a maximization instance")
    return _run(instance, relax, trials, seed, realization, reduce_rank, False)


def round_relaxation(instance: Instance, relax: RelaxationSolution, trials: int = DEFAULT_TRIALS, seed: int = 0,
                     realization: int = 0, *, reduce_rank: bool = True) -> RoundingOutcome:
    fn = round_min if instance.sense is Sense.MINIMIZE else round_max
    return fn(instance, relax, trials, seed, realization, reduce_rank=reduce_rank)
