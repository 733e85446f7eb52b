import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbqcqp import conic, relaxation as R
from mbqcqp.instance import Field, Instance, Sense, generate_gaussian_instance, zero_ratio_instance

from conftest import random_hermitian


def continuous_value(inst, sense):
    n = inst.N * (2 if inst.is_complex else 1)
    p = conic.ConicProblem([n], sense=sense)
    p.set_objective(psd={0: R._block(inst, np.eye(inst.N))})
    for H in inst.matrices:
        p.add_constraint(1.0, ">=" if sense == "min" else "<=", psd={0: R._block(inst, H)})
    return conic.solve(p).value


def test_sdp2_constraint_count():
    inst = Instance(Field.REAL, Sense.MINIMIZE, np.array([np.eye(2)] * 2), Q=1, epsilon=0.2)
    assert R.build_sdp2_min(inst).m == 5


def test_sdp2_separable_value(separable_min):
    sol = R.solve_relaxation(separable_min)
    assert sol.which is R.Which.SDP2
    assert sol.value == pytest.approx(2.0, rel=1e-7)
    np.testing.assert_allclose(sol.X2, np.eye(2), atol=1e-6)


@pytest.mark.parametrize("fld", list(Field))
def test_sdp2_eps_one_is_continuous(fld):
    inst = generate_gaussian_instance(5, 3, fld, seed=3, Q=2, epsilon=1.0)
    assert R.solve_relaxation(inst).value == pytest.approx(continuous_value(inst, "min"), rel=1e-6)


def test_sdp1_diag_constraints():
    inst = generate_gaussian_instance(4, 3, Field.REAL, seed=5, Q=2, epsilon=0.3)
    p = R.build_sdp1_min(inst)
    unit_diag = [c for c in p.constraints if c.relation == "=" and 0 in c.psd and np.count_nonzero(c.psd[0]) == 1]
    assert len(unit_diag) == inst.M + 1


def test_sdp1_full_support_column():
    inst = generate_gaussian_instance(4, 3, Field.REAL, seed=5, Q=4, epsilon=0.3)
    s1 = R.solve_sdp1(inst)
    np.testing.assert_allclose(s1.X1[:4, 4], 1.0, atol=1e-6)
    q = np.einsum("iab,ba->i", inst.matrices, s1.X2).real
    assert np.all(q >= 1 - 1e-6)


def test_sdp1_matches_sdp2_fixture():
    inst = generate_gaussian_instance(4, 3, Field.REAL, seed=5, Q=2, epsilon=0.3)
    v1, v2 = R.solve_sdp1(inst).value, R.solve_relaxation(inst).value
    assert abs(v1 - v2) <= 1e-5


def test_sdp1_solution_invariants():
    inst = generate_gaussian_instance(6, 3, Field.COMPLEX, seed=8, Q=3, epsilon=0.3)
    s1 = R.solve_sdp1(inst)
    M = inst.M
    np.testing.assert_allclose(np.diag(s1.X1), 1.0, atol=1e-7)
    assert abs(s1.X1[:M, M].sum() - (2 * inst.Q - M)) <= 1e-6
    assert np.linalg.eigvalsh(s1.X1)[0] >= -1e-8


def test_sdp3_zero_ratio_fixture():
    sol = R.solve_relaxation(zero_ratio_instance())
    assert sol.which is R.Which.SDP3
    assert sol.value == pytest.approx(0.5, abs=1e-6)
    np.testing.assert_allclose(sol.beta, [0.5, 0.5], atol=1e-6)


@pytest.mark.parametrize("fld", list(Field))
def test_sdp3_eps_one_is_continuous(fld):
    inst = generate_gaussian_instance(6, 3, fld, seed=4, Q=2, epsilon=1.0, sense=Sense.MAXIMIZE)
    assert R.solve_relaxation(inst).value == pytest.approx(continuous_value(inst, "max"), rel=1e-6)


def test_sdp3_separable_value():
    inst = Instance(Field.REAL, Sense.MAXIMIZE, np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]), Q=1, epsilon=0.5)
    sol = R.solve_relaxation(inst)
    # every beta with sum 1 reaches 1.5 here, so only the value is pinned down
    assert sol.value == pytest.approx(1.5, rel=1e-7)
    assert R.check_relaxation(inst, sol) == []


def test_relaxation_error_propagates_status():
    inst = generate_gaussian_instance(2, 3, Field.REAL, seed=1, Q=1, epsilon=0.2, sense=Sense.MAXIMIZE)
    with pytest.raises(R.RelaxationError) as err:
        R.solve_relaxation(inst)
    assert err.value.status is conic.Status.UNBOUNDED


def test_builders_reject_wrong_sense(separable_min):
    with pytest.raises(ValueError):
        R.build_sdp3_max(separable_min)
    with pytest.raises(ValueError):
        R.build_sdp2_min(zero_ratio_instance())


# -- embedding ----------------------------------------------------------------

def test_embed_real_is_block_diagonal(rng):
    H = random_hermitian(rng, 3, complex_=False)
    E = R.embed_hermitian(H)
    np.testing.assert_array_equal(E, np.block([[H, np.zeros((3, 3))], [np.zeros((3, 3)), H]]))


def test_embed_doubles_spectrum():
    H = np.array([[1, 1j], [-1j, 1]])
    np.testing.assert_allclose(np.linalg.eigvalsh(R.embed_hermitian(H)), [0, 0, 2, 2], atol=1e-14)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [0, 2], atol=1e-14)


def test_embed_rejects_non_hermitian():
    with pytest.raises(ValueError):
        R.embed_hermitian(np.array([[1, 1j], [1j, 1]]))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 6))
def test_embed_trace_identity_and_inverse(seed, n):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(rng, n), random_hermitian(rng, n)
    lhs = np.trace(A @ B).real
    rhs = 0.5 * np.trace(R.embed_hermitian(A) @ R.embed_hermitian(B))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
    assert np.max(np.abs(R.recover_hermitian(R.embed_hermitian(A)) - A)) <= 1e-14


def test_recover_keeps_psd(rng):
    G = rng.standard_normal((6, 6))
    S = G @ G.T
    assert np.linalg.eigvalsh(R.recover_hermitian(S))[0] >= -1e-12


# -- extraction ---------------------------------------------------------------

def test_real_extraction_verbatim():
    inst = generate_gaussian_instance(4, 3, Field.REAL, seed=2, Q=2)
    sol = R.solve_relaxation(inst)
    np.testing.assert_array_equal(sol.X2, sol.raw.X[0])


def test_complex_with_real_data_has_real_solution():
    real = generate_gaussian_instance(4, 3, Field.REAL, seed=2, Q=2, epsilon=0.3)
    inst = real.replace(field=Field.COMPLEX)
    sol = R.solve_relaxation(inst)
    assert np.max(np.abs(sol.X2.imag)) <= 1e-8
    assert sol.value == pytest.approx(R.solve_relaxation(real).value, rel=1e-6)


def test_extract_requires_optimal():
    inst = generate_gaussian_instance(4, 3, Field.REAL, seed=2, Q=2)
    raw = conic.solve(R.build_sdp2_min(inst), conic.Settings(max_iter=1, accept_tol=0.0))
    with pytest.raises(R.RelaxationError):
        R.extract_solution(inst, raw, R.Which.SDP2)


def test_map_sdp1_beta_formula():
    X1 = np.eye(4)
    X1[:3, 3] = X1[3, :3] = [1.0, -1.0, 0.0]
    beta = R.map_sdp1_beta(R.Sdp1Solution(X1=X1, X2=np.eye(2), value=2.0))
    np.testing.assert_allclose(beta, [1.0, 0.0, 0.5])


@pytest.mark.parametrize("fld", list(Field))
def test_mapped_beta_feasible_for_sdp2(fld):
    inst = generate_gaussian_instance(6, 4, fld, seed=9, Q=3, epsilon=0.3)
    s1 = R.solve_sdp1(inst)
    beta = R.map_sdp1_beta(s1)
    cand = R.RelaxationSolution(beta=np.clip(beta, 0, 1), X2=s1.X2, value=s1.value, which=R.Which.SDP2)
    assert np.all(beta >= -1e-6) and np.all(beta <= 1 + 1e-6)
    assert R.check_relaxation(inst, cand, tol=1e-6) == []
    assert abs(s1.value - R.solve_relaxation(inst).value) <= 1e-5 * max(1.0, s1.value)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), cplx=st.booleans(), sense=st.sampled_from(list(Sense)))
def test_solutions_satisfy_invariants(seed, cplx, sense):
    fld = Field.COMPLEX if cplx else Field.REAL
    M = 6 if sense is Sense.MAXIMIZE else 5
    inst = generate_gaussian_instance(M, 3, fld, seed=seed, Q=2, epsilon=0.4, sense=sense)
    sol = R.solve_relaxation(inst)
    assert R.check_relaxation(inst, sol) == []
    # support lower bound at the optimum
    assert np.sort(sol.beta)[::-1][inst.Q - 1] >= 1 / (inst.M - inst.Q + 1) - 1e-6


def test_value_monotone_in_eps():
    base = generate_gaussian_instance(6, 4, Field.REAL, seed=12, Q=3)
    vals = [R.solve_relaxation(base.replace(epsilon=e)).value for e in np.linspace(0, 1, 6)]
    assert all(b >= a - 1e-7 * max(1.0, a) for a, b in zip(vals, vals[1:]))
