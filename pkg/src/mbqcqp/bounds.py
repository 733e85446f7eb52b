"""Closed-form approximation-ratio guarantees and their certification.

For the min model the guarantee is an upper bound ``mu >= 1`` with
``v_QP <= mu * v_SDP``; for the max model it is a lower bound ``0 < mu <= 1``
with ``v_QP >= mu * v_SDP``.  ``min_bound`` depends only on
``(field, M, Q, epsilon)``; ``max_bound`` also reads the ranks of the ``H_i``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .instance import Field, Instance, Sense

CERTIFY_TOL = 1e-9


class NoGuaranteeError(ValueError):
    """The requested model admits no positive ratio guarantee."""


@dataclass(frozen=True)
class BoundReport:
    sense: Sense
    field: Field
    mu: float
    active_branch: str
    M: int
    Q: int
    epsilon: float
    c: float | None = None
    c_tilde: float | None = None
    K: float | None = None
    terms: dict = dataclasses.field(default_factory=dict)
    empirical_ratio: float | None = None
    certified: bool | None = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sense"] = self.sense.value
        d["field"] = self.field.value
        d["notes"] = list(self.notes)
        return d


def c_eps(epsilon: float, M: int, Q: int) -> float:
    """``epsilon + (1 - epsilon)/(M - Q + 1)``."""
    _check_args(epsilon, M, Q)
    return epsilon + (1.0 - epsilon) / (M - Q + 1)


def c_tilde(epsilon: float, M: int, Q: int) -> float:
    """``1 - (1 - epsilon)/(M - Q + 1)``."""
    _check_args(epsilon, M, Q)
    return 1.0 - (1.0 - epsilon) / (M - Q + 1)


def _check_args(epsilon, M, Q):
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if not 1 <= Q <= M:
        raise ValueError(f"need 1 <= Q <= M, got Q={Q}, M={M}")


def _pick(terms: dict) -> tuple[str, float]:
    # the binding term of a max{...}; first listed wins ties
    name = max(terms, key=lambda k: terms[k])
    return name, terms[name]


def min_bound_value(fld: Field, M: int, Q: int, epsilon: float) -> BoundReport:
    """Min-model ratio bound for the given parameters; see :func:`min_bound`."""
    _check_args(epsilon, M, Q)
    c = c_eps(epsilon, M, Q)
    pi = math.pi
    if Q == M or epsilon == 1.0:
        if fld is Field.REAL:
            terms = {"27M^2/pi": 27.0 * M**2 / pi}
        else:
            terms = {"8M": 8.0 * M, "24(sqrt(M)-1)^2": 24.0 * (math.sqrt(M) - 1.0) ** 2}
        branch = "continuous"
    elif epsilon == 0.0:
        if fld is Field.REAL:
            terms = {"27Q^2(M-Q+1)/pi": 27.0 * Q**2 * (M - Q + 1) / pi}
        else:
            d = M - Q + 1
            terms = {"8Q(M-Q+1)": 8.0 * Q * d, "24(sqrt(Q)-1)^2(M-Q+1)": 24.0 * (math.sqrt(Q) - 1.0) ** 2 * d}
        branch = "eps=0"
    else:
        if fld is Field.REAL:
            terms = {
                "27[M-Q+Q/sqrt(c)]^2/pi": 27.0 * (M - Q + Q / math.sqrt(c)) ** 2 / pi,
                "12(sqrt(2M)-1)^2/((pi-2)^2 c)": 12.0 * (math.sqrt(2 * M) - 1.0) ** 2 / ((pi - 2.0) ** 2 * c),
            }
        else:
            terms = {
                "8[M-Q+Q/c]": 8.0 * (M - Q + Q / c),
                "24(sqrt(M)-1)^2/c": 24.0 * (math.sqrt(M) - 1.0) ** 2 / c,
            }
        branch = "0<eps<1"
    name, mu = _pick(terms)
    return BoundReport(sense=Sense.MINIMIZE, field=fld, mu=mu, active_branch=f"{branch}: {name}",
                       M=M, Q=Q, epsilon=epsilon, c=c, terms=terms)


def min_bound(instance: Instance) -> BoundReport:
    """Upper bound ``mu`` on ``v_QP / v_SDP2`` for a min-model instance.

    Dispatches on the field and on the three regimes ``Q = M or eps = 1``,
    ``eps = 0`` and ``0 < eps < 1``.  The report names the binding term of
    the ``max{...}`` in ``active_branch``.
    """
    if instance.sense is not Sense.MINIMIZE:
        raise ValueError("min_bound needs a minimization instance")
    return min_bound_value(instance.field, instance.M, instance.Q, instance.epsilon)


def numerical_ranks(matrices, rank_tolerance: float = 1e-9) -> np.ndarray:
    out = []
    for H in np.asarray(matrices):
        lam = np.linalg.eigvalsh(H)
        out.append(int(np.sum(lam > rank_tolerance * lam[-1])) if lam[-1] > 0 else 0)
    return np.array(out)


def max_bound(instance: Instance, rank_tolerance: float = 1e-9) -> BoundReport:
    """Lower bound ``mu`` on ``v_QP / v_SDP`` for a max-model instance.

    Real: ``(eps/c~)/(200 ln(50K))`` with ``K = sum_i min(rank H_i, sqrt(2M))``.
    Complex: ``(eps/c~)/(4 ln(100K))`` with the cap ``sqrt(M)`` in ``K``.

    Raises
    ------
    NoGuaranteeError
        For ``eps = 0``, where the ratio can be exactly zero: two identical
        identity constraints with ``Q = 1`` give ``v_QP = 0`` against a
        relaxation value of ``0.5``.
    """
    if instance.sense is not Sense.MAXIMIZE:
        raise ValueError("max_bound needs a maximization instance")
    M, Q, eps = instance.M, instance.Q, instance.epsilon
    _check_args(eps, M, Q)
    if eps == 0.0:
        raise NoGuaranteeError(
            "no guarantee exists for epsilon = 0: the ratio can be zero "
            "(two identical identity constraints, Q = 1, give v_QP = 0 with v_SDP = 0.5)")
    ct = c_tilde(eps, M, Q)
    ranks = numerical_ranks(instance.matrices, rank_tolerance)
    if not np.any(ranks):
        raise ValueError("all constraint matrices vanish; K = 0")
    notes = []
    if instance.field is Field.REAL:
        K = float(np.sum(np.minimum(ranks, math.sqrt(2 * M))))
        mu = (eps / ct) / (200.0 * math.log(50.0 * K))
        name = "(eps/c~)/(200 ln(50K))"
    else:
        K = float(np.sum(np.minimum(ranks, math.sqrt(M))))
        mu = (eps / ct) / (4.0 * math.log(100.0 * K))
        name = "(eps/c~)/(4 ln(100K))"
        notes.append("complex K caps ranks at sqrt(M)")
    return BoundReport(sense=Sense.MAXIMIZE, field=instance.field, mu=mu, active_branch=name,
                       M=M, Q=Q, epsilon=eps, c_tilde=ct, K=K, terms={name: mu}, notes=tuple(notes))


def bound_for(instance: Instance) -> BoundReport:
    return min_bound(instance) if instance.sense is Sense.MINIMIZE else max_bound(instance)


def certify(bound: BoundReport, v_candidate: float, v_sdp: float) -> BoundReport:
    """Attach ``v_candidate / v_sdp`` and check it against ``bound.mu``.

    A rounded min-model value is at least ``v_QP``, so passing here is a
    stronger statement than the guarantee itself; the max model mirrors this.
    """
    if not v_sdp > 0:
        raise ValueError(f"v_sdp must be positive, got {v_sdp}")
    ratio = float(v_candidate) / float(v_sdp)
    if bound.sense is Sense.MINIMIZE:
        ok = ratio <= bound.mu + CERTIFY_TOL
    else:
        ok = ratio >= bound.mu - CERTIFY_TOL
    return dataclasses.replace(bound, empirical_ratio=ratio, certified=bool(ok))


def format_report(rep: BoundReport) -> str:
    rows = [("model", rep.sense.value), ("field", rep.field.value), ("M", rep.M), ("Q", rep.Q),
            ("epsilon", rep.epsilon)]
    if rep.c is not None:
        rows.append(("c(eps)", f"{rep.c:.6g}"))
    if rep.c_tilde is not None:
        rows.append(("c~(eps)", f"{rep.c_tilde:.6g}"))
    if rep.K is not None:
        rows.append(("K", f"{rep.K:.6g}"))
    for k, v in rep.terms.items():
        rows.append((f"term {k}", f"{v:.6g}"))
    rows.append(("active", rep.active_branch))
    rows.append(("mu", f"{rep.mu:.6g}"))
    if rep.empirical_ratio is not None:
        rows.append(("ratio", f"{rep.empirical_ratio:.6g}"))
        rows.append(("certified", rep.certified))
    w = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{w}}  {v}" for k, v in rows)
