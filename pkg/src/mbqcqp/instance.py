"""Problem data for the min-norm (coverage) and max-norm (suppression) models.

An :class:`Instance` holds the PSD matrices ``H_i`` together with the
selection count ``Q`` and the weak level ``epsilon``.  The minimization model
asks for the shortest ``w`` with ``w^H H_i w >= 1`` on ``Q`` selected indices
and ``>= epsilon`` elsewhere; the maximization model asks for the longest ``w``
with ``w^H H_i w <= epsilon`` on ``Q`` selected indices and ``<= 1`` elsewhere.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import streams

HERMITIAN_TOL = 1e-12
PSD_REL_TOL = 1e-9


class Field(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


class Sense(enum.Enum):
    MINIMIZE = "min"
    MAXIMIZE = "max"


class InstanceError(ValueError):
    """Raised for malformed or invalid instance data."""


@dataclass(frozen=True, eq=False)
class Instance:
    field: Field
    sense: Sense
    matrices: np.ndarray  # (M, N, N); float64 for REAL, complex128 for COMPLEX
    Q: int
    epsilon: float

    def __post_init__(self):
        dtype = np.float64 if self.field is Field.REAL else np.complex128
        mats = np.array(self.matrices, dtype=dtype, copy=True)
        if mats.ndim != 3:
            raise InstanceError(f"matrices must be a stack of square matrices, got shape {mats.shape}")
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "Q", int(self.Q))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def M(self) -> int:
        return self.matrices.shape[0]

    @property
    def N(self) -> int:
        return self.matrices.shape[1]

    @property
    def is_complex(self) -> bool:
        return self.field is Field.COMPLEX

    def replace(self, **changes) -> "Instance":
        kw = dict(field=self.field, sense=self.sense, matrices=self.matrices, Q=self.Q, epsilon=self.epsilon)
        kw.update(changes)
        return Instance(**kw)


def validate(instance: Instance) -> list[str]:
    """Return a list of violated invariants; empty means valid.

    Indices in messages are 1-based to match the usual ``H_1 .. H_M`` naming.
    """
    report = []
    mats = instance.matrices
    M = mats.shape[0]
    if mats.shape[1] != mats.shape[2]:
        report.append(f"matrices are not square: shape {mats.shape[1:]}")
        return report
    N = mats.shape[1]
    if M < 2:
        report.append(f"M out of range: M={M} < 2")
    if N < 2:
        report.append(f"N out of range: N={N} < 2")
    if not 1 <= instance.Q <= M:
        report.append(f"Q out of range: Q={instance.Q} not in [1, {M}]")
    if not (0.0 <= instance.epsilon <= 1.0) or math.isnan(instance.epsilon):
        report.append(f"epsilon out of range: {instance.epsilon} not in [0, 1]")
    for i, H in enumerate(mats, start=1):
        if not np.all(np.isfinite(H)):
            report.append(f"non-finite entries at index {i}")
            continue
        asym = np.max(np.abs(H - H.conj().T)) if N else 0.0
        if asym > HERMITIAN_TOL:
            report.append(f"not Hermitian at index {i} (asymmetry {asym:.3g})")
            continue
        lam = np.linalg.eigvalsh(H)
        if lam[0] < -PSD_REL_TOL * max(1.0, lam[-1]):
            report.append(f"not PSD at index {i} (min eigenvalue {lam[0]:.3g})")
    return report


def check(instance: Instance) -> Instance:
    report = validate(instance)
    if report:
        raise InstanceError("; ".join(report))
    return instance


# -- file format ------------------------------------------------------------

def _decode_matrix(raw, k: int):
    if not isinstance(raw, list) or not raw or not all(isinstance(row, list) for row in raw):
        raise InstanceError(f"matrices[{k}]: expected a list of rows")
    n = len(raw)
    out = np.zeros((n, n), dtype=np.complex128)
    for r, row in enumerate(raw):
        if len(row) != n:
            raise InstanceError(f"matrices[{k}]: dimension mismatch, row {r} has {len(row)} entries, expected {n}")
        for c, v in enumerate(row):
            if isinstance(v, list):
                if len(v) != 2:
                    raise InstanceError(f"matrices[{k}][{r}][{c}]: complex entry must be [re, im]")
                re, im = v
            else:
                re, im = v, 0.0
            if isinstance(re, bool) or isinstance(im, bool) or not isinstance(re, (int, float)) or not isinstance(im, (int, float)):
                raise InstanceError(f"matrices[{k}][{r}][{c}]: not a number")
            out[r, c] = complex(re, im)
    return out


def _reject_constant(name):
    raise InstanceError(f"non-finite number {name} is not permitted")


def parse_instance(text: str) -> Instance:
    """Parse the JSON instance format.

    Raises :class:`InstanceError` on malformed syntax, dimension mismatch or
    failed validation; the message names the offending location.
    """
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed instance file: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceError("instance file must be a JSON object")
    missing = [k for k in ("field", "model", "epsilon", "Q", "matrices") if k not in doc]
    if missing:
        raise InstanceError(f"missing fields: {', '.join(missing)}")
    try:
        fld = Field(doc["field"])
    except ValueError:
        raise InstanceError(f"field: expected 'real' or 'complex', got {doc['field']!r}") from None
    try:
        sense = Sense(doc["model"])
    except ValueError:
        raise InstanceError(f"model: expected 'min' or 'max', got {doc['model']!r}") from None
    if not isinstance(doc["Q"], int) or isinstance(doc["Q"], bool):
        raise InstanceError("Q: expected an integer")
    if not isinstance(doc["epsilon"], (int, float)) or isinstance(doc["epsilon"], bool):
        raise InstanceError("epsilon: expected a number")
    raw = doc["matrices"]
    if not isinstance(raw, list) or not raw:
        raise InstanceError("matrices: expected a non-empty list")
    mats = [_decode_matrix(m, k) for k, m in enumerate(raw)]
    sizes = {m.shape[0] for m in mats}
    if len(sizes) != 1:
        raise InstanceError(f"matrices: dimension mismatch, sizes {sorted(sizes)}")
    stack = np.stack(mats)
    if fld is Field.REAL:
        if np.any(stack.imag != 0):
            k = int(np.argmax(np.any(stack.imag != 0, axis=(1, 2))))
            raise InstanceError(f"matrices[{k}]: nonzero imaginary part in a real instance")
        stack = stack.real
    inst = Instance(field=fld, sense=sense, matrices=stack, Q=doc["Q"], epsilon=doc["epsilon"])
    return check(inst)


def encode_matrix(H: np.ndarray, complex_entries: bool):
    if complex_entries:
        return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(H, dtype=complex)]
    return [[float(v) for v in row] for row in np.real(H)]


def decode_matrix(raw) -> np.ndarray:
    """Inverse of :func:`encode_matrix`; returns a real array when all imaginary parts vanish."""
    M = _decode_matrix(raw, 0)
    return M.real.copy() if not np.any(M.imag) else M


def serialize_instance(instance: Instance) -> str:
    doc = {
        "field": instance.field.value,
        "model": instance.sense.value,
        "epsilon": instance.epsilon,
        "Q": instance.Q,
        "matrices": [encode_matrix(H, instance.is_complex) for H in instance.matrices],
    }
    return json.dumps(doc, indent=1, allow_nan=False)


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_instance(instance))


def zero_ratio_instance() -> Instance:
    """Two identical identity constraints, ``Q = 1``, ``epsilon = 0``, max model.

    Every support forces ``w = 0`` while the relaxation reaches ``0.5``.
    """
    text = resources.files("mbqcqp.data").joinpath("zero_ratio.json").read_text(encoding="utf-8")
    return parse_instance(text)


# -- generation -------------------------------------------------------------

def generate_gaussian_instance(
    M: int,
    N: int,
    field: Field,
    seed: int,
    *,
    Q: int | None = None,
    epsilon: float = 0.0,
    sense: Sense = Sense.MINIMIZE,
    realization: int = 0,
) -> Instance:
    """Rank-one instance ``H_i = h_i h_i^H`` with i.i.d. Gaussian channels.

    Complex entries are ``(g1 + 1j*g2)/sqrt(2)`` so that ``E|h|^2 = 1``.
    ``Q`` defaults to ``M // 2``.
    """
    if M < 2 or N < 2:
        raise InstanceError(f"need M >= 2 and N >= 2, got M={M}, N={N}")
    rng = streams.substream(seed, streams.INSTANCE, realization)
    if field is Field.REAL:
        h = rng.standard_normal((M, N))
    else:
        g = rng.standard_normal((M, N, 2))
        h = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2.0)
    mats = np.einsum("ia,ib->iab", h, h.conj())
    if Q is None:
        Q = max(1, M // 2)
    return Instance(field=field, sense=sense, matrices=mats, Q=Q, epsilon=epsilon)


# -- objective whitening ----------------------------------------------------

def objective_factor(A: np.ndarray) -> np.ndarray:
    """Upper-triangular ``V`` with ``V^H V = A``; raises unless ``A`` is positive definite."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InstanceError("objective matrix must be square")
    if np.max(np.abs(A - A.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(A))):
        raise InstanceError("objective matrix is not Hermitian")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise InstanceError("objective matrix is not positive definite") from None
    if np.min(np.abs(np.diag(L))) <= 0:
        raise InstanceError("objective matrix is not positive definite")
    return L.conj().T


def whiten_objective(A: np.ndarray, instance: Instance) -> Instance:
    """Change of variables turning the objective ``w^H A w`` into ``||w_hat||^2``.

    With ``V^H V = A`` and ``w_hat = V w`` every constraint matrix becomes
    ``V^{-H} H_i V^{-1}``; a solution ``w_hat`` of the returned instance maps
    back through ``w = V^{-1} w_hat``.
    """
    V = objective_factor(A)
    if V.shape[0] != instance.N:
        raise InstanceError(f"objective matrix has size {V.shape[0]}, instance has N={instance.N}")
    if np.iscomplexobj(V) and np.any(V.imag) and not instance.is_complex:
        raise InstanceError("complex objective matrix for a real instance")
    Vinv = np.linalg.inv(V)
    mats = np.einsum("ba,ibc,cd->iad", Vinv.conj(), instance.matrices, Vinv)
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2).conj())
    if not instance.is_complex:
        mats = mats.real
    return instance.replace(matrices=mats)


def unwhiten(A: np.ndarray, w_hat: np.ndarray) -> np.ndarray:
    return np.linalg.solve(objective_factor(A), w_hat)
