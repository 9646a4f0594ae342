import numpy as np
import pytest

from spiral import EUCLIDEAN, QUARTIC, NNBall, Zero, lasso_problem, nnpca_problem, objective, phase_retrieval_problem
from spiral.bregman import bregman_distance
from spiral.problems import L1, L_FLOOR, FiniteSumProblem, SquaredLoss


def test_lasso_examples():
    p = lasso_problem(np.array([[1.0, 0.0]]), np.array([0.0]), 1.0)
    z = np.array([2.0, 0.0])
    assert p.f(z) == 2.0
    assert p.g.value(z) == 2.0
    assert objective(p, z) == 4.0
    assert p.L[0] == 1.0
    assert p.kernel is EUCLIDEAN
    p = lasso_problem(np.array([[1.0]]), np.array([1.0]), 0.0)
    assert isinstance(p.g, Zero)
    assert objective(p, np.array([1.0])) == 0.0


def test_lasso_consistency():
    rng = np.random.default_rng(0)
    A, b = rng.standard_normal((30, 7)), rng.standard_normal(30)
    p = lasso_problem(A, b, 0.5)
    for _ in range(20):
        z = rng.standard_normal(7)
        assert p.f(z) == pytest.approx(0.5 * np.sum((A @ z - b) ** 2), rel=1e-12)


def test_nnpca_examples():
    p = nnpca_problem(np.array([[1.0, 0.0], [3.0, 4.0]]))
    assert p.value_i(0, np.array([1.0, 0.0])) == -0.5
    assert p.L[1] == 25.0
    assert objective(p, np.array([2.0, 0.0])) == np.inf
    assert objective(p, np.array([-0.1, 0.0])) == np.inf
    assert np.isfinite(objective(p, np.array([0.6, 0.8])))


def test_phase_examples():
    p = phase_retrieval_problem(np.array([[1.0, 0.0]]), np.array([1.0]), 0.1)
    assert p.value_i(0, np.array([1.0, 0.0])) == 0.0
    assert p.kernel is QUARTIC
    q = phase_retrieval_problem(np.array([[1.0, 0.0]]), np.array([0.0]), 0.1)
    assert q.value_i(0, np.array([1.0, 0.0])) == 0.25
    assert objective(q, np.array([1.0, 0.0])) == pytest.approx(0.25 + 0.1)
    with pytest.raises(ValueError):
        phase_retrieval_problem(np.eye(2), np.array([1.0, -1.0]), 0.1)
    with pytest.raises(ValueError):
        phase_retrieval_problem(np.eye(2), np.ones(2), 0.1, kernel="euclidean")


def test_zero_row_floor_and_validation():
    p = lasso_problem(np.array([[0.0, 0.0], [1.0, 1.0]]), np.zeros(2), 1.0)
    assert p.L[0] == L_FLOOR
    with pytest.raises(ValueError):
        FiniteSumProblem(np.eye(2), np.zeros(3), SquaredLoss(), Zero(), EUCLIDEAN, np.ones(2))
    with pytest.raises(ValueError):
        FiniteSumProblem(np.eye(2), np.zeros(2), SquaredLoss(), Zero(), EUCLIDEAN, [1.0, 0.0])
    with pytest.raises(ValueError):
        L1(0.0)


def test_data_is_read_only():
    p = lasso_problem(np.eye(2), np.ones(2), 1.0)
    with pytest.raises(ValueError):
        p.A[0, 0] = 5.0


def _families(rng):
    A = rng.standard_normal((8, 4))
    b = np.abs(rng.standard_normal(8))
    return [
        lasso_problem(A, b, 0.1),
        nnpca_problem(A),
        phase_retrieval_problem(A, b, 0.1),
        phase_retrieval_problem(A, b, 0.1, kernel="euclidean", radius=3.0),
    ]


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    for p in _families(rng):
        for _ in range(100):
            z = rng.standard_normal(p.n)
            i = int(rng.integers(p.N))
            g = p.grad_i(i, z)
            fd = np.array([(p.value_i(i, z + e) - p.value_i(i, z - e)) / 2e-5 for e in np.eye(p.n) * 1e-5])
            assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, np.linalg.norm(g))


def test_grad_sum_and_matrix_agree():
    rng = np.random.default_rng(2)
    for p in _families(rng):
        z = rng.standard_normal(p.n)
        gsum, fsum, m = p.grad_sum(z)
        G = p.grad_matrix(z)
        np.testing.assert_allclose(G.sum(axis=0), gsum, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(fsum, p.values(z).sum(), rtol=1e-14)
        np.testing.assert_allclose(m, p.A @ z)
        for i in range(p.N):
            np.testing.assert_allclose(p.grad_i_from_margin(i, m[i]), G[i], rtol=1e-14, atol=1e-14)


def test_gaps_match_definition():
    rng = np.random.default_rng(3)
    for p in _families(rng):
        x, y = rng.standard_normal((2, p.n))
        direct = p.values(y) - p.values(x) - p.grad_matrix(x) @ (y - x)
        gaps = p.gaps(p.margins(x), p.A @ (y - x))
        np.testing.assert_allclose(gaps, direct, rtol=1e-9, atol=1e-9)
        assert p.gap_i(2, p.margins(x)[2], float(p.A[2] @ (y - x))) == pytest.approx(direct[2], rel=1e-9, abs=1e-9)


def test_relative_smoothness_declared_constants():
    rng = np.random.default_rng(4)
    for p in _families(rng)[:3]:
        for _ in range(2000):
            i = int(rng.integers(p.N))
            x = rng.standard_normal(p.n) * rng.uniform(0, 10) / 2
            y = rng.standard_normal(p.n) * rng.uniform(0, 10) / 2
            gap = abs(p.gap_i(i, float(p.A[i] @ x), float(p.A[i] @ (y - x))))
            assert gap <= p.L[i] * bregman_distance(p.kernel, y, x) * (1 + 1e-12)


def test_euclidean_phase_constant_holds_inside_ball():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((8, 4))
    b = np.abs(rng.standard_normal(8))
    R = 2.0
    p = phase_retrieval_problem(A, b, 0.1, kernel="euclidean", radius=R)
    for _ in range(2000):
        i = int(rng.integers(p.N))
        x, y = rng.standard_normal((2, 4))
        x *= R * rng.uniform() / np.linalg.norm(x)
        y *= R * rng.uniform() / np.linalg.norm(y)
        gap = abs(p.gap_i(i, float(p.A[i] @ x), float(p.A[i] @ (y - x))))
        assert gap <= p.L[i] * 0.5 * float((y - x) @ (y - x)) * (1 + 1e-12)


def test_nonsmooth_proxes():
    np.testing.assert_allclose(L1(1.0).prox(np.array([3.0, -0.2]), 0.5), [2.5, 0.0])
    np.testing.assert_allclose(NNBall().prox(np.array([-1.0, 3.0]), 7.0), [0.0, 1.0])
    np.testing.assert_allclose(Zero().prox(np.array([1.0, 2.0]), 3.0), [1.0, 2.0])
