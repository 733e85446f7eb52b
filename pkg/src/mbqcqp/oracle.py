"""Brute-force reference values for tiny instances.

Every support of size ``Q`` is enumerated and the remaining continuous
problem is solved over a dense grid of unit directions in two dimensions:
for a direction ``u`` the best scale follows from the quadratic forms
``q_i = u^H H_i u`` in closed form, so only the direction is searched.
The best grid point is then polished by a local 1-D or 2-D search.

Also hosts a two-variable fixture with a unit-modulus coordinate whose
relaxation gap grows like ``1/eps``.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import conic
from .instance import Field, Instance, Sense

MAX_SUPPORTS = 10**6
DEFAULT_GRID_REAL = 8192
DEFAULT_GRID_COMPLEX = 256
FORM_TOL = 1e-12


class OracleStatus(enum.Enum):
    EXACT_ISH = "exact-ish"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class OracleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ContinuousResult:
    value: float
    w: np.ndarray | None
    error_bound: float
    status: OracleStatus


@dataclass(frozen=True, eq=False)
class OracleResult:
    value: float
    support: tuple | None  # 0-based indices
    x1: np.ndarray | None
    w: np.ndarray | None
    grid_resolution: tuple
    error_bound: float
    status: OracleStatus

    def to_dict(self) -> dict:
        w = None
        if self.w is not None and np.iscomplexobj(self.w):
            w = [[float(v.real), float(v.imag)] for v in self.w]
        elif self.w is not None:
            w = [float(v) for v in self.w]
        return {
            "status": self.status.value,
            "value": _json_float(self.value),
            "error_bound": _json_float(self.error_bound),
            "support": None if self.support is None else list(self.support),
            "w": w,
            "grid": list(self.grid_resolution),
        }


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else str(v)


def enumerate_supports(M: int, Q: int) -> list[tuple]:
    """All ``Q``-subsets of ``range(M)`` in lexicographic order.

    Refuses when there are more than ``10**6`` of them.
    """
    if not 0 <= Q <= M:
        raise OracleError(f"need 0 <= Q <= M, got Q={Q}, M={M}")
    n = math.comb(M, Q)
    if n > MAX_SUPPORTS:
        raise OracleError(f"C({M},{Q}) = {n} supports exceeds the limit of {MAX_SUPPORTS}")
    return list(itertools.combinations(range(M), Q))


# -- direction grid -----------------------------------------------------------

def _grid_shape(fld: Field, grid: int | None) -> tuple:
    if fld is Field.REAL:
        return (int(grid or DEFAULT_GRID_REAL),)
    n = int(grid or DEFAULT_GRID_COMPLEX)
    return (n, 2 * n)


def _directions(fld: Field, shape: tuple) -> tuple[np.ndarray, list]:
    # unit vectors plus their parameter axes; complex has a real first entry
    if fld is Field.REAL:
        th = np.arange(shape[0]) * (math.pi / shape[0])
        return np.stack([np.cos(th), np.sin(th)], axis=1), [th]
    a = np.linspace(0.0, 0.5 * math.pi, shape[0])
    phi = np.arange(shape[1]) * (2.0 * math.pi / shape[1])
    A, P = np.meshgrid(a, phi, indexing="ij")
    U = np.stack([np.cos(A).astype(complex), np.sin(A) * np.exp(1j * P)], axis=-1)
    return U.reshape(-1, 2), [a, phi]


def _unit(fld: Field, p) -> np.ndarray:
    if fld is Field.REAL:
        return np.array([math.cos(p[0]), math.sin(p[0])])
    return np.array([math.cos(p[0]), math.sin(p[0]) * complex(math.cos(p[1]), math.sin(p[1]))])


def _forms(mats: np.ndarray, U: np.ndarray) -> np.ndarray:
    # (M, G) quadratic forms u^H H_i u
    return np.einsum("ga,iab,gb->ig", U.conj(), mats, U, optimize=True).real


def _field_of(mats) -> Field:
    return Field.COMPLEX if np.iscomplexobj(mats) and np.any(np.asarray(mats).imag) else Field.REAL


def _check_n2(mats):
    mats = np.asarray(mats)
    if mats.ndim != 3 or mats.shape[1:] != (2, 2):
        raise OracleError(f"the grid oracle needs N = 2, got matrices of shape {mats.shape}")
    return mats


# -- scale profiles -----------------------------------------------------------

def _min_profile(q: np.ndarray, targets: np.ndarray, tol: np.ndarray) -> np.ndarray:
    # s^2 per direction; inf where some positive target meets a vanishing form
    need = targets > 0
    if not np.any(need):
        return np.zeros(q.shape[1])
    qn = q[need]
    bad = np.any(qn <= tol[need, None], axis=0)
    with np.errstate(divide="ignore"):
        s2 = np.max(targets[need, None] / np.where(qn > 0, qn, np.nan), axis=0)
    return np.where(bad, np.inf, s2)


def _max_profile(q: np.ndarray, caps: np.ndarray, tol: np.ndarray) -> np.ndarray:
    # c/0 = inf: a vanishing form imposes no cap
    live = q > tol[:, None]
    ratio = np.where(live, caps[:, None] / np.where(live, q, 1.0), np.inf)
    return np.min(ratio, axis=0)


def _local_error(f: np.ndarray, shape: tuple, k: int, periodic: tuple) -> float:
    # half the largest jump to a grid neighbour of the best point
    F = f.reshape(shape)
    idx = np.unravel_index(k, shape)
    best = F[idx]
    err = 0.0
    for ax, n in enumerate(shape):
        jumps = []
        for d in (-1, 1):
            j = list(idx)
            j[ax] += d
            if not 0 <= j[ax] < n:
                if not periodic[ax]:
                    continue
                j[ax] %= n
            v = F[tuple(j)]
            if np.isfinite(v):
                jumps.append(abs(v - best))
        if jumps:
            err += 0.5 * max(jumps)
    return err


def _continuous(mats, profile_vals, fld, shape, axes, value_fn, minimize: bool):
    f = profile_vals
    finite = np.isfinite(f)
    k = int(np.argmin(f) if minimize else np.argmax(np.where(finite, f, -np.inf)))
    periodic = (True,) if fld is Field.REAL else (False, True)
    err = _local_error(f, shape, k, periodic)
    idx = np.unravel_index(k, shape)
    p0 = np.array([axes[d][idx[d]] for d in range(len(shape))])
    steps = np.array([axes[d][1] - axes[d][0] if len(axes[d]) > 1 else 0.1 for d in range(len(shape))])
    best_val = float(f[k])
    best_p = p0
    sign = 1.0 if minimize else -1.0

    def obj(p):
        v = value_fn(_unit(fld, np.atleast_1d(p)))
        return sign * v if np.isfinite(v) else math.inf

    if len(shape) == 1:
        res = optimize.minimize_scalar(obj, bounds=(p0[0] - steps[0], p0[0] + steps[0]), method="bounded",
                                       options={"xatol": 1e-12})
        cand_p, cand_v = np.atleast_1d(res.x), res.fun
    else:
        simplex = np.array([p0, p0 + [steps[0], 0.0], p0 + [0.0, steps[1]]])
        res = optimize.minimize(obj, p0, method="Nelder-Mead",
                                options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
        cand_p, cand_v = res.x, res.fun
    # cand_v is the signed objective
    if np.isfinite(cand_v) and cand_v < sign * best_val:
        best_val, best_p = sign * cand_v, cand_p
    u = _unit(fld, best_p)
    return best_val, u, err


def _tols(mats):
    return FORM_TOL * np.maximum(1.0, np.array([np.linalg.norm(H, 2) for H in mats]))


def exact_continuous_min(matrices, targets, grid: int | None = None) -> ContinuousResult:
    """``min ||w||^2`` subject to ``w^H H_i w >= target_i`` for ``N = 2``.

    Parameters
    ----------
    matrices : (M, 2, 2) array
    targets : (M,) array of nonnegative right-hand sides
    grid : int, optional
        Real: number of angles in ``[0, pi)``.  Complex: ``n`` gives an
        ``n x 2n`` grid over ``(a, phi)`` with ``u = (cos a, sin a e^{i phi})``.
    """
    mats = _check_n2(matrices)
    t = np.asarray(targets, dtype=float)
    fld = _field_of(mats)
    if not np.any(t > 0):
        return ContinuousResult(0.0, np.zeros(2, dtype=mats.dtype), 0.0, OracleStatus.EXACT_ISH)
    shape = _grid_shape(fld, grid)
    U, axes = _directions(fld, shape)
    tol = _tols(mats)
    f = _min_profile(_forms(mats, U), t, tol)
    return _finish_min(mats, f, t, tol, fld, shape, axes)


def _finish_min(mats, f, t, tol, fld, shape, axes) -> ContinuousResult:
    if not np.any(np.isfinite(f)):
        return ContinuousResult(math.inf, None, 0.0, OracleStatus.INFEASIBLE)

    def value_fn(u):
        return float(_min_profile(_forms(mats, u[None]), t, tol)[0])

    val, u, err = _continuous(mats, f, fld, shape, axes, value_fn, True)
    w = math.sqrt(val) * u
    return ContinuousResult(val, w if fld is Field.COMPLEX else w.real, err, OracleStatus.EXACT_ISH)


def _common_null(mats) -> np.ndarray | None:
    S = np.sum(mats, axis=0)
    lam, V = np.linalg.eigh(S)
    if lam[0] <= FORM_TOL * max(1.0, lam[-1]):
        return V[:, 0]
    return None


def exact_continuous_max(matrices, caps, grid: int | None = None) -> ContinuousResult:
    """``max ||w||^2`` subject to ``w^H H_i w <= cap_i`` for ``N = 2``.

    Unbounded exactly when the ``H_i`` share a null direction.
    """
    mats = _check_n2(matrices)
    c = np.asarray(caps, dtype=float)
    fld = _field_of(mats)
    shape = _grid_shape(fld, grid)
    null = _common_null(mats)
    if null is not None:
        return ContinuousResult(math.inf, null, 0.0, OracleStatus.UNBOUNDED)
    U, axes = _directions(fld, shape)
    tol = _tols(mats)
    f = _max_profile(_forms(mats, U), c, tol)
    return _finish_max(mats, f, c, tol, fld, shape, axes)


def _finish_max(mats, f, c, tol, fld, shape, axes) -> ContinuousResult:
    def value_fn(u):
        return float(_max_profile(_forms(mats, u[None]), c, tol)[0])

    val, u, err = _continuous(mats, f, fld, shape, axes, value_fn, False)
    w = math.sqrt(val) * u
    return ContinuousResult(val, w if fld is Field.COMPLEX else w.real, err, OracleStatus.EXACT_ISH)


def oracle_value(instance: Instance, grid: int | None = None) -> OracleResult:
    """Global optimum of a two-dimensional instance by support enumeration.

    Min model: targets are 1 on the support and ``eps`` off it.  Max model:
    caps are ``eps`` on the support and 1 off it.  Ties between supports go
    to the first in lexicographic order.
    """
    mats = _check_n2(instance.matrices)
    fld = instance.field
    shape = _grid_shape(fld, grid)
    M, Q, eps = instance.M, instance.Q, instance.epsilon
    supports = enumerate_supports(M, Q)
    minimize = instance.sense is Sense.MINIMIZE
    if not minimize:
        null = _common_null(mats)
        if null is not None:
            x1 = np.zeros(M, dtype=int)
            x1[list(supports[0])] = 1
            return OracleResult(math.inf, supports[0], x1, null, shape, 0.0, OracleStatus.UNBOUNDED)
    U, axes = _directions(fld, shape)
    q = _forms(mats, U)
    tol = _tols(mats)
    best = None
    for S in supports:
        x1 = np.zeros(M, dtype=int)
        x1[list(S)] = 1
        if minimize:
            rhs = np.where(x1 == 1, 1.0, eps)
            f = _min_profile(q, rhs, tol)
            if not np.any(np.isfinite(f)):
                continue
            # cheap screen: polish only supports that can still win
            if best is not None and np.min(f) - best[2] > best[0]:
                continue
            res = _finish_min(mats, f, rhs, tol, fld, shape, axes)
            better = best is None or res.value < best[0]
        else:
            rhs = np.where(x1 == 1, eps, 1.0)
            f = _max_profile(q, rhs, tol)
            if best is not None and np.max(f) + best[2] < best[0]:
                continue
            res = _finish_max(mats, f, rhs, tol, fld, shape, axes)
            better = best is None or res.value > best[0]
        if better:
            best = (res.value, S, res.error_bound, res.w)
    if best is None:
        return OracleResult(math.inf, None, None, None, shape, 0.0, OracleStatus.INFEASIBLE)
    x1 = np.zeros(M, dtype=int)
    x1[list(best[1])] = 1
    return OracleResult(best[0], best[1], x1, best[3], shape, best[2], OracleStatus.EXACT_ISH)


# -- coordinate-constrained gap fixture ---------------------------------------

def gap_fixture_matrices(eps: float) -> np.ndarray:
    """Two PSD constraint matrices of the fixture ``min ||x||^2``,
    ``x^T D_i x >= 1``, ``x[0]^2 = 1``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    r = math.sqrt(eps * (1 - eps))
    s = math.sqrt(eps / 2)
    D1 = np.array([[1 - eps, r], [r, eps]])
    D2 = np.array([[1.0, -s], [-s, eps]])
    return np.stack([D1, D2])


def gap_fixture_closed_form(eps: float) -> float:
    x2 = min(math.sqrt(2 / eps), (math.sqrt(1 - eps) + 1) / math.sqrt(eps))
    return 1.0 + x2 * x2


def gap_fixture_line_search(eps: float, n: int = 200001) -> tuple[float, float]:
    """Optimum by scanning ``x = (1, s)``; the sign of ``x[0]`` is immaterial.

    Returns ``(value, s)``.  The scan window doubles until it holds a
    feasible point; the boundary of the feasible set nearest zero is then
    refined by bisection on the binding constraint.
    """
    D = gap_fixture_matrices(eps)

    def slack(s):
        x = np.stack([np.ones_like(s), s])
        return np.min(np.einsum("ag,iab,bg->ig", x, D, x) - 1.0, axis=0)

    span = 1.0
    while True:
        s = np.linspace(-span, span, n)
        g = slack(s)
        ok = g >= 0
        if np.any(ok) or span > 1e8:
            break
        span *= 2
    if not np.any(ok):
        raise OracleError("no feasible point found")
    j = int(np.argmin(np.where(ok, np.abs(s), np.inf)))
    # neighbour toward zero is infeasible unless s[j] is already the grid's closest to zero
    k = j - 1 if s[j] > 0 else j + 1
    if 0 <= k < n and not ok[k]:
        root = optimize.brentq(lambda v: float(slack(np.array([v]))[0]), s[k], s[j], xtol=1e-15)
        # step onto the feasible side
        cand = np.array([root, np.nextafter(root, s[j])])
        sj = float(cand[slack(cand) >= 0][0]) if np.any(slack(cand) >= 0) else float(s[j])
    else:
        sj = float(s[j])
    return 1.0 + sj * sj, sj


def gap_fixture_sdp(eps: float, settings: conic.Settings | None = None) -> float:
    """Relaxation ``min Tr X`` with ``Tr(D_i X) >= 1`` and ``X[0,0] = 1``."""
    D = gap_fixture_matrices(eps)
    p = conic.ConicProblem([2], sense="min")
    p.set_objective(psd={0: np.eye(2)})
    for Di in D:
        p.add_constraint(1.0, ">=", psd={0: Di})
    E = np.zeros((2, 2))
    E[0, 0] = 1.0
    p.add_constraint(1.0, "=", psd={0: E})
    sol = conic.solve(p, settings)
    if not sol.optimal:
        raise OracleError(f"fixture relaxation ended with status {sol.status.value}")
    return float(sol.value)


def gap_fixture_report(eps: float = 0.01) -> dict:
    closed = gap_fixture_closed_form(eps)
    scanned, s = gap_fixture_line_search(eps)
    sdp = gap_fixture_sdp(eps)
    return {"eps": eps, "closed_form": closed, "line_search": scanned, "x2": s, "sdp": sdp,
            "ratio": scanned / sdp}
