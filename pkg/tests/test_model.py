"""Cost and gradient arithmetic against naive loop-based references."""

import numpy as np
import pytest

import oracles
from slrnmf.model import (
    Objective,
    as_matrix,
    check_dims,
    check_nonneg,
    cost_smooth,
    cost_total,
    grad_phi,
    grad_w,
    joint_column_norms,
)
from slrnmf.solver import update_penalty_diag


def random_instance(seed, l=7, k=9, r=3, negative=False):
    rng = np.random.default_rng(seed)
    lo = -1.0 if negative else 0.0
    y = rng.uniform(0.0, 1.0, size=(l, k))
    phi = rng.uniform(lo, 1.0, size=(l, r))
    w = rng.uniform(lo, 1.0, size=(k, r))
    return y, phi, w


def test_as_matrix_coerces_lists():
    m = as_matrix([[1, 2], [3, 4]])
    assert m.dtype == np.float64
    assert m.shape == (2, 2)


def test_as_matrix_rejects_wrong_ndim():
    with pytest.raises(ValueError, match="2-D"):
        as_matrix(np.zeros(3), "thing")


def test_as_matrix_rejects_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        as_matrix(np.array([[1.0, np.nan]]), "thing")


def test_check_nonneg_rejects_negative():
    with pytest.raises(ValueError, match="negative"):
        check_nonneg(np.array([[1.0, -0.5]]), "thing")
    check_nonneg(np.zeros((2, 2)), "thing")


def test_check_dims_messages():
    y = np.zeros((4, 5))
    with pytest.raises(ValueError, match="expected L=4"):
        check_dims(y, np.zeros((3, 2)), np.zeros((5, 2)))
    with pytest.raises(ValueError, match="expected K=5"):
        check_dims(y, np.zeros((4, 2)), np.zeros((6, 2)))
    with pytest.raises(ValueError, match="number of columns"):
        check_dims(y, np.zeros((4, 2)), np.zeros((5, 3)))


def test_joint_column_norms_matches_loops():
    _, phi, w = random_instance(0)
    norms = joint_column_norms(phi, w)
    for i in range(phi.shape[1]):
        expected = np.sqrt(sum(v * v for v in phi[:, i])
                           + sum(v * v for v in w[:, i]))
        assert norms[i] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_cost_smooth_matches_naive(seed):
    y, phi, w = random_instance(seed)
    delta, eta = 0.37, 0.09
    ours = cost_smooth(y, phi, w, delta, eta)
    ref = oracles.naive_cost_smooth(y, phi, w, delta, eta)
    assert ours == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_cost_total_matches_naive(seed):
    y, phi, w = random_instance(seed)
    delta, lambda1, eta = 0.5, 0.03, 0.2
    ours = cost_total(y, phi, w, delta, lambda1, eta)
    ref = oracles.naive_cost_total(y, phi, w, delta, lambda1, eta)
    assert ours == pytest.approx(ref, rel=1e-12)


def test_cost_total_counts_l1_of_w_only():
    y, phi, w = random_instance(3)
    base = cost_total(y, phi, w, 0.0, 0.0, 0.1)
    with_l1 = cost_total(y, phi, w, 0.0, 0.25, 0.1)
    assert with_l1 == pytest.approx(base + 0.25 * np.abs(w).sum(), rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_grad_w_matches_finite_differences(seed):
    y, phi, w = random_instance(seed, l=5, k=6, r=2)
    delta, eta = 0.4, 0.15
    d = update_penalty_diag(phi, w, delta, eta)
    g = grad_w(y, phi, w, d)
    fd = oracles.fd_gradient(lambda v: cost_smooth(y, phi, v, delta, eta), w)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(fd), 1.0)


@pytest.mark.parametrize("seed", range(3))
def test_grad_phi_matches_finite_differences(seed):
    y, phi, w = random_instance(seed, l=5, k=6, r=2)
    delta, eta = 0.4, 0.15
    d = update_penalty_diag(phi, w, delta, eta)
    g = grad_phi(y, phi, w, d)
    fd = oracles.fd_gradient(lambda v: cost_smooth(y, v, w, delta, eta), phi)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(fd), 1.0)


def test_gradients_validate_diag_length():
    y, phi, w = random_instance(1)
    with pytest.raises(ValueError, match="length-3"):
        grad_w(y, phi, w, np.ones(2))
    with pytest.raises(ValueError, match="length-3"):
        grad_phi(y, phi, w, np.ones(4))


def test_objective_matches_free_functions():
    y, phi, w = random_instance(2)
    obj = Objective(y, 0.6, 0.02, 0.1)
    assert obj.total(phi, w) == pytest.approx(
        cost_total(y, phi, w, 0.6, 0.02, 0.1), rel=1e-14)
    assert obj.smooth(phi, w) == pytest.approx(
        cost_smooth(y, phi, w, 0.6, 0.1), rel=1e-14)


def test_objective_validates_weights():
    y, _, _ = random_instance(0)
    with pytest.raises(ValueError, match="delta"):
        Objective(y, -1.0, 0.0, 0.1)
    with pytest.raises(ValueError, match="lambda1"):
        Objective(y, 0.0, -0.1, 0.1)
    with pytest.raises(ValueError, match="eta"):
        Objective(y, 0.0, 0.0, 0.0)
