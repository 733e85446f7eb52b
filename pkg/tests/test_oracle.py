import math

import numpy as np
import pytest

from mbqcqp import oracle as O, relaxation as R, rounding as RD, bounds as B
from mbqcqp.instance import Field, Instance, Sense, generate_gaussian_instance, zero_ratio_instance


def test_enumerate_small():
    s = O.enumerate_supports(4, 2)
    assert len(s) == 6 and s[0] == (0, 1) and s[-1] == (2, 3)
    assert O.enumerate_supports(3, 3) == [(0, 1, 2)]


def test_enumerate_guard():
    assert len(O.enumerate_supports(20, 10)) == 184756
    with pytest.raises(O.OracleError, match="exceeds"):
        O.enumerate_supports(30, 15)


def test_continuous_min_single():
    res = O.exact_continuous_min(np.array([np.diag([2.0, 1.0])]), [1.0])
    assert res.value == pytest.approx(0.5, abs=max(res.error_bound, 1e-9))


def test_continuous_min_separable():
    res = O.exact_continuous_min(np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]), [1.0, 1.0])
    assert res.value == pytest.approx(2.0, abs=1e-9)
    np.testing.assert_allclose(np.abs(res.w), [1.0, 1.0], atol=1e-6)


def test_continuous_min_zero_targets():
    res = O.exact_continuous_min(np.array([np.eye(2), np.eye(2)]), [0.0, 0.0])
    assert res.value == 0.0 and np.all(res.w == 0)


def test_continuous_min_infeasible():
    res = O.exact_continuous_min(np.array([np.zeros((2, 2))]), [1.0], grid=64)
    assert res.status is O.OracleStatus.INFEASIBLE


def test_continuous_max_cases():
    assert O.exact_continuous_max(np.array([np.eye(2)]), [1.0]).value == pytest.approx(1.0, abs=1e-12)
    assert O.exact_continuous_max(np.array([np.diag([2.0, 1.0])]), [1.0]).value == pytest.approx(1.0, abs=1e-9)
    res = O.exact_continuous_max(np.array([np.diag([1.0, 0.0])]), [1.0])
    assert res.status is O.OracleStatus.UNBOUNDED


def test_needs_two_dimensions():
    with pytest.raises(O.OracleError):
        O.exact_continuous_min(np.array([np.eye(3)]), [1.0])


def test_complex_grid_matches_eigen():
    H = np.array([[2.0, 0.5j], [-0.5j, 1.0]])
    res = O.exact_continuous_min(H[None], [1.0])
    assert res.value == pytest.approx(1 / np.linalg.eigvalsh(H)[-1], abs=1e-9)
    res = O.exact_continuous_max(H[None], [1.0])
    assert res.value == pytest.approx(1 / np.linalg.eigvalsh(H)[0], abs=1e-9)


def test_zero_ratio_fixture_value():
    res = O.oracle_value(zero_ratio_instance())
    assert res.value == 0.0 and res.status is O.OracleStatus.EXACT_ISH


def test_oracle_result_feasible():
    inst = generate_gaussian_instance(3, 2, Field.REAL, seed=11, Q=2, epsilon=0.3)
    res = O.oracle_value(inst)
    assert RD.check_feasibility(inst, res.x1, res.w).feasible


def test_sandwich_fixture_seed_11():
    inst = generate_gaussian_instance(3, 2, Field.REAL, seed=11, Q=2, epsilon=0.3)
    relax = R.solve_relaxation(inst)
    out = RD.round_min(inst, relax, trials=1000, seed=11)
    res = O.oracle_value(inst)
    assert relax.value <= res.value * (1 + 1e-7)
    assert res.value <= out.v_ubqp + res.error_bound


@pytest.mark.parametrize("fld", list(Field))
@pytest.mark.parametrize("sense", list(Sense))
@pytest.mark.parametrize("seed", range(4))
def test_sandwich_and_bound_random(fld, sense, seed):
    M, Q = (4, 2) if sense is Sense.MINIMIZE else (5, 2)
    inst = generate_gaussian_instance(M, 2, fld, seed=100 + seed, Q=Q, epsilon=0.3, sense=sense)
    relax = R.solve_relaxation(inst)
    out = RD.round_relaxation(inst, relax, trials=500, seed=seed)
    res = O.oracle_value(inst, 128 if fld is Field.COMPLEX else None)
    v, tol = relax.value, 1e-7 * relax.value
    if sense is Sense.MINIMIZE:
        assert v - tol <= res.value <= out.v_ubqp + res.error_bound
        assert res.value <= B.min_bound(inst).mu * v
    else:
        assert v + tol >= res.value >= out.v_ubqp - res.error_bound
        assert res.value >= B.max_bound(inst).mu * v


@pytest.mark.parametrize("sense", list(Sense))
def test_grid_refinement(sense):
    inst = generate_gaussian_instance(4, 2, Field.REAL, seed=5, Q=2, epsilon=0.2, sense=sense)
    coarse = O.oracle_value(inst, 512)
    fine = O.oracle_value(inst, 1024)
    if sense is Sense.MINIMIZE:
        assert fine.value <= coarse.value + coarse.error_bound
    else:
        assert fine.value >= coarse.value - coarse.error_bound


def test_max_unbounded_instance():
    mats = np.array([np.diag([1.0, 0.0]), np.diag([2.0, 0.0])])
    inst = Instance(Field.REAL, Sense.MAXIMIZE, mats, Q=1, epsilon=0.5)
    assert O.oracle_value(inst).status is O.OracleStatus.UNBOUNDED


def test_result_serializes():
    d = O.oracle_value(generate_gaussian_instance(3, 2, Field.COMPLEX, seed=1, Q=1), 32).to_dict()
    assert set(d) == {"status", "value", "error_bound", "support", "w", "grid"}
    assert d["grid"] == [32, 64]


# -- coordinate-constrained gap fixture --------------------------------------

def test_gap_fixture_value():
    eps = 0.01
    closed = O.gap_fixture_closed_form(eps)
    scanned, s = O.gap_fixture_line_search(eps)
    assert closed == pytest.approx(201.0, rel=1e-12)
    assert scanned == pytest.approx(201.0, rel=1e-9)
    assert abs(s) == pytest.approx(math.sqrt(200), rel=1e-9)


def test_gap_fixture_relaxation():
    rep = O.gap_fixture_report(0.01)
    assert rep["sdp"] <= 2 + 1e-6
    assert rep["ratio"] >= 100


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.05])
def test_gap_fixture_closed_form_matches_scan(eps):
    assert O.gap_fixture_line_search(eps)[0] == pytest.approx(O.gap_fixture_closed_form(eps), rel=1e-8)
