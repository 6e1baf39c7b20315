import numpy as np
import pytest
import scipy.sparse as sp

from sparseprox.design import DesignMatrix
from sparseprox.errors import DimensionMismatchError, InvalidDataError
from sparseprox.losses import (
    LeastSquaresLoss,
    LogisticLoss,
    RobustLeastSquaresLoss,
    lipschitz_upper_bound,
    logistic_value_grad,
    ls_value_grad,
    robust_ls_value_grad,
)
from sparseprox.oracles import numeric_gradient


def test_ls_identity_design():
    A = DesignMatrix(np.eye(2))
    value, grad = ls_value_grad(A, np.zeros(2), np.array([3.0, 4.0]))
    assert value == 12.5
    np.testing.assert_array_equal(grad, [3.0, 4.0])


def test_ls_zero_residual():
    A = DesignMatrix(np.eye(2))
    x = np.array([1.5, -2.0])
    value, grad = ls_value_grad(A, x, x)
    assert value == 0.0
    np.testing.assert_array_equal(grad, np.zeros(2))


def test_ls_hand_computed():
    A = DesignMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    value, grad = ls_value_grad(A, np.array([1.0, 1.0]), np.array([1.0, 1.0]))
    # residual (2, 0): value 2, grad = A.T (2, 0) = (2, 4)
    assert value == 2.0
    np.testing.assert_allclose(grad, [2.0, 4.0])


def test_ls_dimension_mismatch():
    A = DesignMatrix(np.eye(3))
    with pytest.raises(DimensionMismatchError):
        ls_value_grad(A, np.zeros(3), np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        ls_value_grad(A, np.zeros(2), np.zeros(3))


def test_ls_rejects_nonfinite():
    A = DesignMatrix(np.eye(2))
    with pytest.raises(InvalidDataError):
        ls_value_grad(A, np.zeros(2), np.array([np.nan, 0.0]))
    with pytest.raises(InvalidDataError):
        DesignMatrix(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_logistic_at_origin():
    rng = np.random.Generator(np.random.Philox(1))
    A = DesignMatrix(rng.standard_normal((5, 3)))
    b = np.array([1.0, -1.0, 1.0, 1.0, -1.0])
    value, grad = logistic_value_grad(A, b, np.zeros(3))
    assert value == pytest.approx(np.log(2.0), abs=1e-15)
    expected = -A.to_dense().T @ b / (2 * 5)
    np.testing.assert_allclose(grad, expected, atol=1e-15)


def test_logistic_perfectly_classified_limit():
    A = DesignMatrix(np.array([[1.0]]))
    b = np.array([1.0])
    vals = [logistic_value_grad(A, b, np.array([t]))[0] for t in (10.0, 100.0, 1000.0)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-300 or vals[2] == 0.0


def test_logistic_stable_at_large_margins():
    A = DesignMatrix(np.array([[1.0], [-1.0]]))
    b = np.array([1.0, 1.0])
    value, grad = logistic_value_grad(A, b, np.array([1000.0]))
    assert np.isfinite(value) and np.all(np.isfinite(grad))


def test_logistic_rejects_bad_labels():
    A = DesignMatrix(np.eye(2))
    with pytest.raises(InvalidDataError):
        logistic_value_grad(A, np.array([1.0, 0.5]), np.zeros(2))


def test_robust_residual_fully_absorbed():
    rng = np.random.Generator(np.random.Philox(2))
    A = DesignMatrix(rng.standard_normal((4, 3)))
    b = rng.standard_normal(4)
    x = rng.standard_normal(3)
    z = A.matvec(x) - b
    value, gx, gz = robust_ls_value_grad(A, b, x, z)
    assert value == 0.0
    np.testing.assert_allclose(gx, np.zeros(3), atol=1e-15)
    np.testing.assert_allclose(gz, np.zeros(4), atol=1e-15)


def test_robust_reduces_to_ls_at_zero_z():
    rng = np.random.Generator(np.random.Philox(3))
    A = DesignMatrix(rng.standard_normal((6, 4)))
    b = rng.standard_normal(6)
    x = rng.standard_normal(4)
    v1, g1 = ls_value_grad(A, b, x)
    v2, gx, _ = robust_ls_value_grad(A, b, x, np.zeros(6))
    assert v1 == v2
    np.testing.assert_array_equal(g1, gx)


def test_robust_hand_computed():
    A = DesignMatrix(np.eye(2))
    value, gx, gz = robust_ls_value_grad(
        A, np.array([1.0, 0.0]), np.zeros(2), np.array([1.0, 0.0])
    )
    # r = Ax - b - z = (-2, 0)
    assert value == 2.0
    np.testing.assert_array_equal(gx, [-2.0, 0.0])
    np.testing.assert_array_equal(gz, [2.0, 0.0])


@pytest.mark.parametrize("kind", ["least_squares", "logistic", "robust"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.Generator(np.random.Philox(11))
    for _ in range(100):
        n, p = int(rng.integers(2, 7)), int(rng.integers(1, 6))
        A = DesignMatrix(rng.standard_normal((n, p)))
        x = rng.standard_normal(p)
        if kind == "least_squares":
            b = rng.standard_normal(n)
            _, grad = ls_value_grad(A, b, x)
            num = numeric_gradient(lambda v: 0.5 * np.sum((A.matvec(v) - b) ** 2), x)
        elif kind == "logistic":
            b = rng.choice([-1.0, 1.0], size=n)
            _, grad = logistic_value_grad(A, b, x)
            num = numeric_gradient(
                lambda v: np.mean(np.log1p(np.exp(-b * (A.matvec(v))))), x
            )
        else:
            b = rng.standard_normal(n)
            z = rng.standard_normal(n)
            _, grad, gz = robust_ls_value_grad(A, b, x, z)
            num = numeric_gradient(
                lambda v: 0.5 * np.sum((A.matvec(v) - b - z) ** 2), x
            )
            num_z = numeric_gradient(
                lambda w: 0.5 * np.sum((A.matvec(x) - b - w) ** 2), z
            )
            scale_z = max(1.0, np.max(np.abs(gz)))
            np.testing.assert_allclose(gz / scale_z, num_z / scale_z, atol=1e-5)
        scale = max(1.0, np.max(np.abs(grad)))
        np.testing.assert_allclose(grad / scale, num / scale, atol=1e-5)


def test_csr_and_dense_products_agree():
    rng = np.random.Generator(np.random.Philox(4))
    dense = rng.standard_normal((15, 9))
    dense[rng.random((15, 9)) < 0.5] = 0.0
    A_dense = DesignMatrix(dense)
    A_csr = DesignMatrix(sp.csr_matrix(dense))
    x = rng.standard_normal(9)
    r = rng.standard_normal(15)
    np.testing.assert_allclose(A_csr.matvec(x), A_dense.matvec(x), rtol=1e-12)
    np.testing.assert_allclose(A_csr.rmatvec(r), A_dense.rmatvec(r), rtol=1e-12)


def test_csr_invariants_checked():
    with pytest.raises(InvalidDataError):
        DesignMatrix.from_csr([0, 2, 1], [0, 1, 0], [1.0, 2.0, 3.0], (2, 2))
    with pytest.raises(InvalidDataError):
        DesignMatrix.from_csr([0, 1, 2], [0, 5], [1.0, 2.0], (2, 2))


def test_lipschitz_identity_and_diagonal():
    est = lipschitz_upper_bound(LeastSquaresLoss(DesignMatrix(np.eye(7)), np.zeros(7)))
    assert est.L == 1.0
    tol = 1e-9
    est = lipschitz_upper_bound(
        LeastSquaresLoss(DesignMatrix(np.diag([3.0, 1.0])), np.zeros(2)), tol=tol
    )
    assert 9.0 <= est.L <= 9.0 * (1 + 10 * tol)


def test_lipschitz_power_iteration_matches_dense_oracle():
    rng = np.random.Generator(np.random.Philox(5))
    A = rng.standard_normal((20, 10))
    loss = LeastSquaresLoss(DesignMatrix(A), np.zeros(20))
    est = lipschitz_upper_bound(loss, tol=1e-12, method="power_iteration")
    lam_max = np.linalg.eigvalsh(A.T @ A)[-1]
    assert est.method == "power_iteration"
    assert abs(est.L - lam_max) <= 1e-6 * lam_max


def test_lipschitz_never_below_dense_oracle():
    rng = np.random.Generator(np.random.Philox(6))
    for _ in range(20):
        n = int(rng.integers(2, 51))
        p = int(rng.integers(1, 51))
        A = rng.standard_normal((n, p))
        loss = LeastSquaresLoss(DesignMatrix(A), np.zeros(n))
        lam_max = np.linalg.eigvalsh(A.T @ A)[-1]
        est = lipschitz_upper_bound(loss, tol=1e-10)
        assert est.L >= lam_max * (1 - 1e-12)
        est_p = lipschitz_upper_bound(loss, tol=1e-10, method="power_iteration")
        assert est_p.L >= lam_max * (1 - 1e-9)


def test_lipschitz_logistic_scaling():
    rng = np.random.Generator(np.random.Philox(7))
    A = rng.standard_normal((12, 5))
    b = rng.choice([-1.0, 1.0], size=12)
    est = lipschitz_upper_bound(LogisticLoss(DesignMatrix(A), b))
    lam_max = np.linalg.eigvalsh(A.T @ A)[-1]
    np.testing.assert_allclose(est.L, lam_max / (4 * 12), rtol=1e-9)


def test_lipschitz_robust_joint_block_matrix():
    rng = np.random.Generator(np.random.Philox(8))
    A = rng.standard_normal((6, 4))
    loss = RobustLeastSquaresLoss(DesignMatrix(A), np.zeros(6))
    hess = np.block([[A.T @ A, -A.T], [-A, np.eye(6)]])
    lam_max = np.linalg.eigvalsh(hess)[-1]
    est = loss.joint_lipschitz()
    np.testing.assert_allclose(est.L, lam_max, rtol=1e-10)
    est_p = loss.joint_lipschitz(tol=1e-12, method="power_iteration")
    assert abs(est_p.L - lam_max) <= 1e-6 * lam_max
    est_cheap = loss.joint_lipschitz(cheap_bound=True)
    np.testing.assert_allclose(est_cheap.L, lam_max, rtol=1e-10)


def test_lipschitz_zero_matrix_degenerate():
    est = lipschitz_upper_bound(
        LeastSquaresLoss(DesignMatrix(np.zeros((3, 2))), np.zeros(3))
    )
    assert est.degenerate
    assert est.L > 0.0
