import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stcomp.errors import ConfigError
from stcomp.objectives import (
    LeastSquares,
    ObjectiveConstructionError,
    RosenbrockSum,
    check_gradient,
    gradient,
    make_least_squares,
    make_rosenbrock_sum,
    objective_from_dict,
    optimum,
)

from oracles import ls_grad, ls_optimum


def test_least_squares_well_conditioned():
    obj = make_least_squares(10, 5, np.random.default_rng(0))
    assert obj.constants.mu > 1e-3


def test_least_squares_rank_deficient():
    with pytest.raises(ObjectiveConstructionError):
        make_least_squares(1, 2, np.random.default_rng(0))


def test_identity_design():
    obj = LeastSquares(np.eye(4), np.zeros(4))
    np.testing.assert_array_equal(obj.optimum(), np.zeros(4))
    assert obj.constants.mu == 1.0


def test_identity_design_diagonal_solve():
    b = np.arange(1.0, 5.0)
    np.testing.assert_allclose(optimum(LeastSquares(np.eye(4), b)), b)


def test_gradient_example():
    obj = LeastSquares([[1, 0], [0, 1]], [2, 0])
    np.testing.assert_array_equal(gradient(obj, 0, [5, 7]), [3, 0])


def test_optimum_matches_elimination_oracle():
    obj = make_least_squares(10, 5, np.random.default_rng(4))
    want = ls_optimum(obj.H.tolist(), obj.b.tolist())
    np.testing.assert_allclose(obj.optimum(), want, rtol=1e-10, atol=1e-12)
    assert np.linalg.norm(obj.global_gradient(obj.optimum())) < 1e-9


def test_batched_gradients_match_oracle():
    obj = make_least_squares(6, 3, np.random.default_rng(1))
    X = np.random.default_rng(2).standard_normal((6, 3))
    np.testing.assert_allclose(obj.gradients(X), ls_grad(obj.H.tolist(), obj.b.tolist(), X.tolist()),
                               rtol=1e-14, atol=1e-14)


def test_rosenbrock_optimum():
    obj = make_rosenbrock_sum(10, 5)
    np.testing.assert_array_equal(obj.optimum(), np.ones(5))
    np.testing.assert_array_equal(obj.gradient(3, np.ones(5)), np.zeros(5))
    assert obj.constants.mu == 0.0


def test_rosenbrock_mixed_shifts_have_no_closed_form():
    assert RosenbrockSum(3, 2, [1.0, 0.0, 1.0]).optimum() is None


def test_rosenbrock_batched_gradients():
    obj = RosenbrockSum(4, 3, [1.0, 0.5, 2.0, -1.0])
    X = np.random.default_rng(0).uniform(-2, 2, (4, 3))
    np.testing.assert_allclose(obj.gradients(X), [obj.gradient(i, X[i]) for i in range(4)], rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fd_gradients_least_squares(seed):
    rng = np.random.default_rng(seed)
    obj = make_least_squares(8, 4, rng)
    x = rng.standard_normal(4) * 3
    assert check_gradient(obj, int(rng.integers(8)), x) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fd_gradients_rosenbrock(seed):
    rng = np.random.default_rng(seed)
    obj = make_rosenbrock_sum(5, 4)
    assert check_gradient(obj, 0, rng.uniform(-2, 2, 4)) <= 1e-5


def test_check_gradient_step_bounds():
    obj = make_rosenbrock_sum(2, 2)
    with pytest.raises(ValueError):
        check_gradient(obj, 0, np.zeros(2), h=1.0)


def test_from_dict_round_trip():
    obj = make_least_squares(5, 2, np.random.default_rng(0), seed=0)
    again = objective_from_dict(obj.to_dict())
    np.testing.assert_array_equal(again.H, obj.H)
    ros = objective_from_dict({"kind": "rosenbrock_sum", "n": 3, "d": 4, "shift": 1.0})
    np.testing.assert_array_equal(ros.optimum(), np.ones(4))


def test_from_dict_unknown_key():
    with pytest.raises(ConfigError):
        objective_from_dict({"kind": "least_squares", "n": 3, "d": 2, "bogus": 1})
