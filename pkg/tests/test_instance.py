import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbqcqp.instance import (Field, Instance, InstanceError, Sense, generate_gaussian_instance, parse_instance,
                             serialize_instance, unwhiten, validate, whiten_objective, zero_ratio_instance)


def _inst(mats, Q=1, eps=0.5, fld=Field.REAL, sense=Sense.MINIMIZE):
    return Instance(fld, sense, np.array(mats), Q=Q, epsilon=eps)


def test_identity_instance_is_valid():
    assert validate(_inst([np.eye(2), np.eye(2)])) == []


def test_q_out_of_range():
    rep = validate(_inst([np.eye(2), np.eye(2)], Q=3))
    assert any("Q out of range" in r for r in rep)


def test_not_psd_reported_with_index():
    rep = validate(_inst([np.diag([1.0, -0.01]), np.eye(2)]))
    assert any("not PSD at index 1" in r for r in rep)


def test_small_dimensions_and_eps_rejected():
    assert any("M out of range" in r for r in validate(_inst([np.eye(2)])))
    assert any("N out of range" in r for r in validate(_inst([np.eye(1), np.eye(1)])))
    assert any("epsilon" in r for r in validate(_inst([np.eye(2), np.eye(2)], eps=1.5)))


def test_non_hermitian_rejected():
    H = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert any("not Hermitian at index 1" in r for r in validate(_inst([H, np.eye(2)])))


def test_zero_ratio_fixture_parses():
    inst = zero_ratio_instance()
    assert inst.M == 2 and inst.N == 2 and inst.Q == 1 and inst.epsilon == 0.0
    assert inst.field is Field.REAL and inst.sense is Sense.MAXIMIZE
    np.testing.assert_array_equal(inst.matrices, [np.eye(2), np.eye(2)])


def test_non_square_block_rejected():
    doc = {"field": "real", "model": "min", "epsilon": 0.1, "Q": 1,
           "matrices": [[[1, 0, 0], [0, 1, 0]], [[1, 0], [0, 1]]]}
    with pytest.raises(InstanceError, match="dimension mismatch"):
        parse_instance(json.dumps(doc))


def test_mixed_sizes_rejected():
    doc = {"field": "real", "model": "min", "epsilon": 0.1, "Q": 1,
           "matrices": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]], [[1, 0], [0, 1]]]}
    with pytest.raises(InstanceError, match="dimension mismatch"):
        parse_instance(json.dumps(doc))


def test_complex_entries_with_zero_imaginary_parse_as_real():
    doc = {"field": "real", "model": "min", "epsilon": 0.1, "Q": 1,
           "matrices": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]] * 2}
    inst = parse_instance(json.dumps(doc))
    assert inst.field is Field.REAL and inst.matrices.dtype == np.float64


def test_nan_and_malformed_rejected():
    with pytest.raises(InstanceError):
        parse_instance('{"field": "real", "model": "min", "epsilon": NaN, "Q": 1, "matrices": [[[1]]]}')
    with pytest.raises(InstanceError, match="malformed"):
        parse_instance("{not json")
    with pytest.raises(InstanceError, match="missing"):
        parse_instance('{"field": "real"}')


@pytest.mark.parametrize("fld", list(Field))
def test_round_trip(fld):
    inst = generate_gaussian_instance(5, 3, fld, seed=4, Q=2, epsilon=0.3)
    back = parse_instance(serialize_instance(inst))
    assert back.field is inst.field and back.sense is inst.sense
    assert back.Q == inst.Q and back.epsilon == inst.epsilon
    assert np.max(np.abs(back.matrices - inst.matrices)) <= 1e-15


def test_gaussian_instance_shape_and_rank():
    inst = generate_gaussian_instance(8, 8, Field.REAL, seed=1)
    assert inst.matrices.shape == (8, 8, 8)
    assert validate(inst) == []
    for H in inst.matrices:
        lam = np.linalg.eigvalsh(H)
        assert np.sum(lam > 1e-9 * lam[-1]) == 1


def test_gaussian_instance_deterministic():
    a = generate_gaussian_instance(8, 4, Field.COMPLEX, seed=7)
    b = generate_gaussian_instance(8, 4, Field.COMPLEX, seed=7)
    np.testing.assert_array_equal(a.matrices, b.matrices)
    c = generate_gaussian_instance(8, 4, Field.COMPLEX, seed=7, realization=1)
    assert not np.array_equal(a.matrices, c.matrices)


def test_complex_unit_variance():
    # mean diagonal entry of h h^H is E|h_k|^2 = 1
    diag = [np.mean(np.diagonal(generate_gaussian_instance(8, 4, Field.COMPLEX, seed=s).matrices, axis1=1, axis2=2).real)
            for s in range(10_000)]
    assert abs(np.mean(diag) - 1.0) < 0.05


def test_complex_instance_hermitian():
    inst = generate_gaussian_instance(8, 4, Field.COMPLEX, seed=7)
    assert validate(inst) == []
    assert np.max(np.abs(inst.matrices - np.conj(np.swapaxes(inst.matrices, 1, 2)))) <= 1e-12


def test_whiten_identity_and_scaled():
    inst = generate_gaussian_instance(3, 2, Field.REAL, seed=2)
    np.testing.assert_allclose(whiten_objective(np.eye(2), inst).matrices, inst.matrices, atol=1e-15)
    np.testing.assert_allclose(whiten_objective(4 * np.eye(2), inst).matrices, inst.matrices / 4, atol=1e-15)


def test_whiten_hand_value():
    inst = _inst([np.ones((2, 2)), np.eye(2)])
    out = whiten_objective(np.diag([4.0, 1.0]), inst)
    np.testing.assert_allclose(out.matrices[0], [[0.25, 0.5], [0.5, 1.0]], atol=1e-15)


def test_whiten_rejects_indefinite():
    inst = _inst([np.eye(2), np.eye(2)])
    with pytest.raises(InstanceError, match="positive definite"):
        whiten_objective(np.diag([1.0, 0.0]), inst)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), cplx=st.booleans())
def test_whiten_preserves_constraint_values(seed, cplx):
    rng = np.random.default_rng(seed)
    fld = Field.COMPLEX if cplx else Field.REAL
    inst = generate_gaussian_instance(3, 3, fld, seed=seed)
    G = rng.standard_normal((3, 3)) + (1j * rng.standard_normal((3, 3)) if cplx else 0)
    A = G @ G.conj().T + 0.5 * np.eye(3)
    out = whiten_objective(A, inst)
    w_hat = rng.standard_normal(3) + (1j * rng.standard_normal(3) if cplx else 0)
    w = unwhiten(A, w_hat)
    lhs = np.einsum("a,iab,b->i", w.conj(), inst.matrices, w).real
    rhs = np.einsum("a,iab,b->i", w_hat.conj(), out.matrices, w_hat).real
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(np.vdot(w, A @ w).real, np.vdot(w_hat, w_hat).real, rtol=1e-10)
