"""Dense primal-dual interior-point solver for block SDP/LP cone programs.

Problems are stated over a list of real symmetric PSD blocks plus one
nonnegative block::

    min/max   sum_j <C_j, X_j> + c . x
    s.t.      sum_j <A_kj, X_j> + a_k . x  (=, >=, <=)  b_k
              X_j PSD,  x >= 0

Inequalities get a nonnegative slack so the core iteration works on the
equality standard form ``A(X) = b``.  The iteration is an infeasible-start
Mehrotra predictor-corrector with the Nesterov-Todd scaling; the Schur
complement system is formed densely and factored by Cholesky.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

RELATIONS = ("=", ">=", "<=")


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


class ConicError(ValueError):
    pass


@dataclass
class Constraint:
    psd: dict  # block index -> symmetric matrix
    lin: np.ndarray
    relation: str
    rhs: float


@dataclass
class ConicProblem:
    """Block-structured linear cone program.

    Build with the constructor, :meth:`set_objective` and
    :meth:`add_constraint`.  Blocks missing from a constraint's ``psd`` dict
    have zero coefficients.
    """

    psd_dims: tuple
    n_lin: int = 0
    sense: str = "min"
    c_psd: list = field(default_factory=list)
    c_lin: np.ndarray | None = None
    constraints: list = field(default_factory=list)

    def __post_init__(self):
        self.psd_dims = tuple(int(n) for n in self.psd_dims)
        if self.sense not in ("min", "max"):
            raise ConicError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if not self.psd_dims and self.n_lin == 0:
            raise ConicError("problem needs at least one cone block")
        if any(n < 1 for n in self.psd_dims) or self.n_lin < 0:
            raise ConicError("block dimensions must be positive")
        if not self.c_psd:
            self.c_psd = [np.zeros((n, n)) for n in self.psd_dims]
        if self.c_lin is None:
            self.c_lin = np.zeros(self.n_lin)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def _check_block(self, j, A):
        A = np.asarray(A, dtype=float)
        n = self.psd_dims[j]
        if A.shape != (n, n):
            raise ConicError(f"block {j}: expected shape {(n, n)}, got {A.shape}")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A), initial=0.0)):
            raise ConicError(f"block {j}: coefficient matrix is not symmetric")
        return 0.5 * (A + A.T)

    def _lin_vector(self, lin):
        out = np.zeros(self.n_lin)
        if lin is None:
            return out
        if isinstance(lin, dict):
            for i, v in lin.items():
                out[i] = v
            return out
        lin = np.asarray(lin, dtype=float)
        if lin.shape != (self.n_lin,):
            raise ConicError(f"linear coefficients: expected length {self.n_lin}, got {lin.shape}")
        return lin.copy()

    def set_objective(self, psd=None, lin=None):
        psd = psd or {}
        self.c_psd = [np.zeros((n, n)) for n in self.psd_dims]
        for j, C in psd.items():
            self.c_psd[j] = self._check_block(j, C)
        self.c_lin = self._lin_vector(lin)
        return self

    def add_constraint(self, rhs, relation="=", psd=None, lin=None):
        if relation not in RELATIONS:
            raise ConicError(f"relation must be one of {RELATIONS}, got {relation!r}")
        blocks = {j: self._check_block(j, A) for j, A in (psd or {}).items()}
        self.constraints.append(Constraint(blocks, self._lin_vector(lin), relation, float(rhs)))
        return self

    # stacked views used by the solver and residual code
    def stacked(self):
        m = self.m
        A = [np.zeros((m, n, n)) for n in self.psd_dims]
        a = np.zeros((m, self.n_lin))
        for k, con in enumerate(self.constraints):
            for j, Akj in con.psd.items():
                A[j][k] = Akj
            a[k] = con.lin
        b = np.array([con.rhs for con in self.constraints])
        rel = [con.relation for con in self.constraints]
        return A, a, b, rel


@dataclass
class Settings:
    tol: float = 1e-8
    accept_tol: float = 1e-7
    max_iter: int = 100
    step_fraction: float = 0.98
    regularization: float = 1e-10
    cert_tol: float = 1e-8
    verbose: bool = False
    trace_stream: object = None


@dataclass
class ConicSolution:
    status: Status
    X: list  # PSD block values
    x: np.ndarray  # nonnegative block values
    y: np.ndarray  # one multiplier per constraint, user sign convention
    value: float
    iterations: int
    gap: float
    pinf: float = math.nan
    dinf: float = math.nan
    history: list = field(default_factory=list)
    certificate: dict | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# -- helpers ----------------------------------------------------------------

def _inner(A, B):
    return float(np.vdot(A, B).real)


def _max_step(L, D):
    """Largest alpha with L L^T + alpha D PSD (inf when D keeps it PSD)."""
    T = sla.solve_triangular(L, D, lower=True)
    T = sla.solve_triangular(L, T.T, lower=True).T
    lam = np.linalg.eigvalsh(0.5 * (T + T.T))[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _max_step_lin(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


def _chol(S):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        lam = np.linalg.eigvalsh(S)
        shift = 1e-14 * max(1.0, lam[-1]) - min(lam[0], 0.0)
        return np.linalg.cholesky(S + shift * np.eye(S.shape[0]))


class _Standard:
    """Equality standard form with slacks appended to the linear block."""

    def __init__(self, problem: ConicProblem):
        A, a, b, rel = problem.stacked()
        m = problem.m
        slack_cols = [k for k, r in enumerate(rel) if r != "="]
        self.n_user_lin = problem.n_lin
        S = np.zeros((m, len(slack_cols)))
        for col, k in enumerate(slack_cols):
            S[k, col] = -1.0 if rel[k] == ">=" else 1.0
        self.sign = 1.0 if problem.sense == "min" else -1.0
        self.A = A
        self.a = np.hstack([a, S]) if m else np.zeros((0, problem.n_lin + len(slack_cols)))
        self.b = b
        self.C = [self.sign * C for C in problem.c_psd]
        self.c = np.concatenate([self.sign * problem.c_lin, np.zeros(len(slack_cols))])
        self.dims = problem.psd_dims
        self.m = m
        self.nl = self.a.shape[1]

    def op(self, X, x):
        out = self.a @ x if self.nl else np.zeros(self.m)
        for Aj, Xj in zip(self.A, X):
            out = out + np.tensordot(Aj, Xj, axes=([1, 2], [0, 1]))
        return out

    def adj(self, y):
        return [np.tensordot(y, Aj, axes=(0, 0)) for Aj in self.A], self.a.T @ y

    def pobj(self, X, x):
        return sum(_inner(C, Xj) for C, Xj in zip(self.C, X)) + float(self.c @ x)

    def data_norms(self):
        nb = float(np.linalg.norm(self.b))
        nc = math.sqrt(sum(np.sum(C * C) for C in self.C) + float(self.c @ self.c))
        return nb, nc


def _initial_point(std: _Standard):
    m = std.m
    X, Z = [], []
    nb, nc = std.data_norms()
    for j, n in enumerate(std.dims):
        Aj = std.A[j]
        nrm = np.sqrt(np.sum(Aj * Aj, axis=(1, 2))) if m else np.zeros(0)
        xi = max(10.0, math.sqrt(n), n * float(np.max((1 + np.abs(std.b)) / (1 + nrm), initial=0.0)))
        eta = max(10.0, math.sqrt(n), float(np.max(nrm, initial=0.0)), float(np.linalg.norm(std.C[j])))
        X.append(xi * np.eye(n))
        Z.append(eta * np.eye(n))
    nl = std.nl
    if nl:
        nrm = np.linalg.norm(std.a, axis=1) if m else np.zeros(0)
        xi = max(10.0, math.sqrt(nl), math.sqrt(nl) * float(np.max((1 + np.abs(std.b)) / (1 + nrm), initial=0.0)))
        eta = max(10.0, math.sqrt(nl), float(np.max(nrm, initial=0.0)), float(np.linalg.norm(std.c)))
        x = np.full(nl, xi)
        z = np.full(nl, eta)
    else:
        x = np.zeros(0)
        z = np.zeros(0)
    return X, x, np.zeros(m), Z, z


class _Scaling:
    """Nesterov-Todd scaling of one PSD block: X = G Lam G^T, Z = G^-T Lam G^-1."""

    def __init__(self, X, Z):
        L = _chol(X)
        R = _chol(Z)
        U, s, Vt = np.linalg.svd(L.T @ R)
        self.lam = s
        self.G = L @ U / np.sqrt(s)
        self.Ginv = (np.sqrt(s)[:, None] * U.T) @ sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
        self.W = self.G @ self.G.T
        self.L = L
        self.R = R

    def scale_x(self, D):
        return self.Ginv @ D @ self.Ginv.T

    def scale_z(self, D):
        return self.G.T @ D @ self.G

    def lyap_inv(self, Rhs):
        """Solve Lam*S + S*Lam = 2*Rhs for S, then map back by G S G^T."""
        lam = self.lam
        S = 2.0 * Rhs / (lam[:, None] + lam[None, :])
        return self.G @ S @ self.G.T


def solve(problem: ConicProblem, settings: Settings | None = None) -> ConicSolution:
    """Solve ``problem`` to ``settings.tol`` relative accuracy.

    Returns a :class:`ConicSolution`; ``status`` is OPTIMAL when relative gap
    and primal/dual infeasibilities are all below ``settings.accept_tol``.
    INFEASIBLE / UNBOUNDED carry a normalized ray in ``certificate``.
    """
    st = settings or Settings()
    std = _Standard(problem)
    m, nl = std.m, std.nl
    nb, nc = std.data_norms()
    nu = sum(std.dims) + nl
    X, x, y, Z, z = _initial_point(std)
    history = []
    status = Status.MAX_ITERATIONS
    certificate = None
    trace = st.trace_stream or sys.stderr
    if st.verbose:
        print("iter,pobj,dobj,relgap,pinf,dinf,mu", file=trace)

    def residuals(X, x, y, Z, z):
        rp = std.b - std.op(X, x)
        ATy, aty = std.adj(y)
        Rd = [C - Aty - Zj for C, Aty, Zj in zip(std.C, ATy, Z)]
        rd = std.c - aty - z
        return rp, Rd, rd

    best = None
    it = 0
    for it in range(st.max_iter + 1):
        rp, Rd, rd = residuals(X, x, y, Z, z)
        pobj = std.pobj(X, x)
        dobj = float(std.b @ y)
        compl = sum(_inner(Xj, Zj) for Xj, Zj in zip(X, Z)) + float(x @ z)
        mu = compl / nu
        pinf = float(np.linalg.norm(rp)) / (1 + nb)
        dinf = math.sqrt(sum(np.sum(R * R) for R in Rd) + float(rd @ rd)) / (1 + nc)
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        history.append(dict(iter=it, pobj=pobj, dobj=dobj, compl=compl, relgap=relgap, pinf=pinf, dinf=dinf))
        if st.verbose:
            print(f"{it},{pobj:.12e},{dobj:.12e},{relgap:.3e},{pinf:.3e},{dinf:.3e},{mu:.3e}", file=trace)
        err = max(relgap, pinf, dinf)
        if best is None or err < best[0]:
            best = (err, [Xj.copy() for Xj in X], x.copy(), y.copy(), it)
        if err <= st.tol:
            status = Status.OPTIMAL
            break
        if best[0] <= st.accept_tol and it - best[4] >= 5:
            # round-off has taken over; keep the best iterate
            break

        # infeasibility certificates: normalized rays
        if dobj > 0:
            ATy, aty = std.adj(y)
            ray = math.sqrt(sum(np.sum((Aty + Zj) ** 2) for Aty, Zj in zip(ATy, Z)) + float(np.sum((aty + z) ** 2)))
            if ray / dobj <= st.cert_tol * (1 + nc) and pinf > st.tol:
                status = Status.INFEASIBLE
                certificate = dict(kind="farkas", y=y / dobj, residual=ray / dobj)
                break
        if pobj < 0:
            AX = std.op(X, x)
            ray = float(np.linalg.norm(AX)) / (-pobj)
            if ray <= st.cert_tol * (1 + nb) and dinf > st.tol:
                status = Status.UNBOUNDED
                certificate = dict(kind="ray", X=[Xj / -pobj for Xj in X], x=x / -pobj, residual=ray)
                break
        if it == st.max_iter:
            break

        try:
            step = _newton_step(std, st, X, x, y, Z, z, rp, Rd, rd, mu)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError):
            status = Status.NUMERICAL_FAILURE
            break
        if step is None:
            status = Status.NUMERICAL_FAILURE
            break
        X, x, y, Z, z, ap, ad = step
        if max(ap, ad) < 1e-10:
            status = Status.NUMERICAL_FAILURE
            break

    if status in (Status.MAX_ITERATIONS, Status.NUMERICAL_FAILURE) and best is not None and best[0] <= st.accept_tol:
        status = Status.OPTIMAL
        _, X, x, y, _ = best

    sign = std.sign
    pobj = std.pobj(X, x)
    dobj = float(std.b @ y)
    last = history[-1]
    value = sign * pobj
    if status is Status.UNBOUNDED:
        value = -sign * math.inf
    elif status is Status.INFEASIBLE:
        value = sign * math.inf
    return ConicSolution(
        status=status,
        X=[0.5 * (Xj + Xj.T) for Xj in X],
        x=x[: std.n_user_lin].copy(),
        y=sign * y,
        value=value,
        iterations=it,
        gap=abs(pobj - dobj),
        pinf=last["pinf"],
        dinf=last["dinf"],
        history=history,
        certificate=certificate,
    )


def _newton_step(std, st, X, x, y, Z, z, rp, Rd, rd, mu):
    m, nl = std.m, std.nl
    nu = sum(std.dims) + nl
    scal = [_Scaling(Xj, Zj) for Xj, Zj in zip(X, Z)]
    d = x / z if nl else np.zeros(0)

    # Schur complement  M_kl = sum_j <A_kj, W_j A_lj W_j> + a_k diag(d) a_l
    Msch = (std.a * d) @ std.a.T if nl else np.zeros((m, m))
    WAW = []
    for Aj, sc in zip(std.A, scal):
        T = sc.W @ Aj @ sc.W
        WAW.append(T)
        Msch = Msch + np.tensordot(Aj, T, axes=([1, 2], [1, 2]))
    Msch = 0.5 * (Msch + Msch.T)
    # Jacobi-scaled static regularization; refinement below removes its bias
    dg = np.sqrt(np.maximum(np.diag(Msch), 1e-300))
    Ms = Msch / dg[:, None] / dg[None, :]
    Ms[np.diag_indices(m)] += st.regularization
    try:
        fac = sla.cho_factor(Ms, lower=True, check_finite=True)
        msolve = lambda r: sla.cho_solve(fac, r / dg) / dg
    except (np.linalg.LinAlgError, ValueError):
        lu = sla.lu_factor(Ms)
        msolve = lambda r: sla.lu_solve(lu, r / dg) / dg

    def direction(Rc_scaled, r_lin):
        # Rc_scaled: per block complementarity rhs in scaled space; r_lin for x*z
        Rc = [sc.lyap_inv(R) for sc, R in zip(scal, Rc_scaled)]
        rhs = rp.copy()
        for Aj, sc, Rcj, Rdj in zip(std.A, scal, Rc, Rd):
            rhs -= np.tensordot(Aj, Rcj - sc.W @ Rdj @ sc.W, axes=([1, 2], [0, 1]))
        if nl:
            rhs -= std.a @ (r_lin / z - d * rd)
        dy = msolve(rhs)

        def complete(dy):
            ATdy, atdy = std.adj(dy)
            dZ = [Rdj - Ad for Rdj, Ad in zip(Rd, ATdy)]
            dX = [Rcj - sc.W @ dZj @ sc.W for Rcj, sc, dZj in zip(Rc, scal, dZ)]
            dX = [0.5 * (D + D.T) for D in dX]
            dz = rd - atdy
            dx = r_lin / z - d * dz if nl else np.zeros(0)
            return dX, dx, dZ, dz

        # iterative refinement against the primal equation A(dX) = rp
        dX, dx, dZ, dz = complete(dy)
        for _ in range(5):
            err = rp - std.op(dX, dx)
            if np.linalg.norm(err) <= 1e-14 * (1 + np.linalg.norm(rp)):
                break
            dy = dy + msolve(err)
            dX, dx, dZ, dz = complete(dy)
        if not np.all(np.isfinite(dy)):
            raise FloatingPointError("non-finite search direction")
        return dX, dx, dy, dZ, dz

    def steps(dX, dx, dZ, dz):
        ap = min([_max_step(sc.L, D) for sc, D in zip(scal, dX)] + [_max_step_lin(x, dx) if nl else math.inf])
        ad = min([_max_step(sc.R, D) for sc, D in zip(scal, dZ)] + [_max_step_lin(z, dz) if nl else math.inf])
        return ap, ad

    # predictor
    pred = [-np.diag(sc.lam ** 2) for sc in scal]
    dXa, dxa, dya, dZa, dza = direction(pred, -x * z)
    ap, ad = steps(dXa, dxa, dZa, dza)
    ap, ad = min(1.0, ap), min(1.0, ad)
    compl_aff = sum(_inner(Xj + ap * D, Zj + ad * E) for Xj, D, Zj, E in zip(X, dXa, Z, dZa))
    if nl:
        compl_aff += float((x + ap * dxa) @ (z + ad * dza))
    sigma = min(1.0, max(0.0, compl_aff / (mu * nu))) ** 3

    # corrector
    corr = []
    for sc, D, E in zip(scal, dXa, dZa):
        Dt = sc.scale_x(D)
        Et = sc.scale_z(E)
        sym = 0.5 * (Dt @ Et + Et @ Dt)
        corr.append(sigma * mu * np.eye(len(sc.lam)) - np.diag(sc.lam ** 2) - sym)
    r_lin = sigma * mu - x * z - dxa * dza if nl else np.zeros(0)
    dX, dx, dy, dZ, dz = direction(corr, r_lin)
    ap, ad = steps(dX, dx, dZ, dz)
    ap = min(1.0, st.step_fraction * ap)
    ad = min(1.0, st.step_fraction * ad)

    Xn = [Xj + ap * D for Xj, D in zip(X, dX)]
    xn = x + ap * dx
    yn = y + ad * dy
    Zn = [Zj + ad * E for Zj, E in zip(Z, dZ)]
    zn = z + ad * dz
    Zn = [0.5 * (E + E.T) for E in Zn]
    return Xn, xn, yn, Zn, zn, ap, ad


# -- residual evaluation ----------------------------------------------------

@dataclass
class ResidualReport:
    primal: np.ndarray  # per-constraint violation (>= 0)
    primal_rel: np.ndarray
    cone: float  # distance of X, x outside their cones (>= 0)
    dual: float  # worst negative eigenvalue of dual slack / sign violation of y
    dual_rel: float
    complementarity: float
    complementarity_rel: float
    gap: float
    gap_rel: float
    pobj: float
    dobj: float

    @property
    def max_abs(self) -> float:
        return max(float(np.max(self.primal, initial=0.0)), self.cone, self.dual, self.complementarity, self.gap)

    @property
    def max_rel(self) -> float:
        return max(float(np.max(self.primal_rel, initial=0.0)), self.dual_rel, self.complementarity_rel, self.gap_rel)

    def summary(self) -> dict:
        return dict(
            primal_max=float(np.max(self.primal, initial=0.0)),
            primal_max_rel=float(np.max(self.primal_rel, initial=0.0)),
            cone=self.cone,
            dual=self.dual,
            dual_rel=self.dual_rel,
            complementarity=self.complementarity,
            complementarity_rel=self.complementarity_rel,
            gap=self.gap,
            gap_rel=self.gap_rel,
        )


def residuals(problem: ConicProblem, solution: ConicSolution) -> ResidualReport:
    """Primal/dual feasibility, complementarity and gap of ``solution``.

    Pure evaluation in the user's sign convention: the dual slack is
    ``s * (C - A^T y)`` with ``s = +1`` for min and ``-1`` for max, and the
    multiplier of a ``>=`` row must have sign ``s`` (``<=`` rows: ``-s``).
    """
    A, a, b, rel = problem.stacked()
    X = solution.X
    x = np.asarray(solution.x, dtype=float)
    y = np.asarray(solution.y, dtype=float)
    if len(X) != len(problem.psd_dims) or any(Xj.shape != (n, n) for Xj, n in zip(X, problem.psd_dims)):
        raise ConicError("solution block shapes do not match the problem")
    s = 1.0 if problem.sense == "min" else -1.0
    lhs = a @ x if problem.n_lin else np.zeros(problem.m)
    for Aj, Xj in zip(A, X):
        lhs = lhs + np.tensordot(Aj, Xj, axes=([1, 2], [0, 1]))
    viol = np.zeros(problem.m)
    slack = np.zeros(problem.m)
    for k, r in enumerate(rel):
        if r == "=":
            viol[k] = abs(lhs[k] - b[k])
        elif r == ">=":
            viol[k] = max(0.0, b[k] - lhs[k])
            slack[k] = max(0.0, lhs[k] - b[k])
        else:
            viol[k] = max(0.0, lhs[k] - b[k])
            slack[k] = max(0.0, b[k] - lhs[k])
    primal_rel = viol / (1 + np.abs(b))

    nc = math.sqrt(sum(np.sum(C * C) for C in problem.c_psd) + float(problem.c_lin @ problem.c_lin))
    dual = 0.0
    compl = 0.0
    cone = float(np.max(-x, initial=0.0))
    for Aj, C, Xj in zip(A, problem.c_psd, X):
        Zj = s * (C - np.tensordot(y, Aj, axes=(0, 0)))
        lam = np.linalg.eigvalsh(0.5 * (Zj + Zj.T))
        dual = max(dual, -float(lam[0]))
        compl += abs(_inner(Xj, Zj))
        cone = max(cone, -float(np.linalg.eigvalsh(0.5 * (Xj + Xj.T))[0]))
    if problem.n_lin:
        zl = s * (problem.c_lin - a.T @ y)
        dual = max(dual, float(np.max(-zl, initial=0.0)))
        compl += abs(float(x @ zl))
    for k, r in enumerate(rel):
        want = 0.0 if r == "=" else (s if r == ">=" else -s)
        if want and y[k] * want < 0:
            dual = max(dual, abs(y[k]))
        compl += abs(y[k]) * slack[k]
    pobj = sum(_inner(C, Xj) for C, Xj in zip(problem.c_psd, X)) + float(problem.c_lin @ x)
    dobj = float(b @ y)
    gap = abs(pobj - dobj)
    return ResidualReport(
        primal=viol,
        primal_rel=primal_rel,
        cone=cone,
        dual=dual,
        dual_rel=dual / (1 + nc),
        complementarity=compl,
        complementarity_rel=compl / (1 + abs(pobj) + abs(dobj)),
        gap=gap,
        gap_rel=gap / (1 + abs(pobj) + abs(dobj)),
        pobj=pobj,
        dobj=dobj,
    )
