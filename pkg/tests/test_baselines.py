import numpy as np
import pytest

from spiral import EUCLIDEAN, FiniteSumProblem, SpiralConfig, Zero, lasso_problem, run
from spiral.baselines import (
    FinitoConfig,
    FinitoMemoryError,
    FinitoMiso,
    ProxSgdConfig,
    finito_miso_run,
    prox_sgd_run,
    prox_sgd_step,
    prox_sgd_stepsize,
)
from spiral.oracle import UnsupportedOracleError
from spiral.problems import L_FLOOR
from toys import lasso_toy, phase_toy


class _ZeroLoss:
    def value(self, m, b):
        return 0.0 * m

    def deriv(self, m, b):
        return 0.0 * m


def test_stepsize_examples():
    assert prox_sgd_stepsize(0) == 0.1
    assert prox_sgd_stepsize(2) == 0.05


def test_stepsizes_strictly_decrease_to_zero():
    steps = np.array([prox_sgd_stepsize(t) for t in range(10_000)])
    assert np.all(np.diff(steps) < 0)
    assert steps[-1] < 1e-4


def test_prox_sgd_zero_objective():
    p = FiniteSumProblem(np.ones((3, 2)), np.zeros(3), _ZeroLoss(), Zero(), EUCLIDEAN, [L_FLOOR] * 3)
    z = np.array([0.3, -2.0])
    np.testing.assert_array_equal(prox_sgd_step(p, z, 0, rng=np.random.default_rng(0)), z)


def test_prox_sgd_step_formula():
    p, _ = lasso_toy()
    rng = np.random.default_rng(0)
    z = rng.standard_normal(p.n)
    out = prox_sgd_step(p, z, 3, idx=[7])
    gamma = 0.1 / 2.5
    x = z - gamma * p.grad_i(7, z)
    np.testing.assert_allclose(out, np.sign(x) * np.maximum(np.abs(x) - gamma * p.g.lam, 0))


def test_prox_sgd_run_deterministic():
    A = np.random.default_rng(0).standard_normal((50, 5)) / 5
    p = lasso_problem(A, A @ np.ones(5), 0.01)
    cfg = ProxSgdConfig(max_epochs=20, seed=3)
    a, b = prox_sgd_run(p, cfg), prox_sgd_run(p, cfg)
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.column("epoch"), np.arange(1, 21))
    assert a.final.suboptimality < a.records[0].suboptimality
    with pytest.raises(ValueError):
        ProxSgdConfig(gamma0=0.0)


def test_finito_single_component_matches_no_ls():
    p = lasso_problem(np.array([[1.0, -2.0, 0.5]]), np.array([1.5]), 0.2)
    fin = finito_miso_run(p, FinitoConfig(max_epochs=61, tol=0, record_iterates=True))
    spi = run(p, SpiralConfig(variant="no-ls", max_epochs=61, tol=0, record_iterates=True))
    # no-ls performs three forward-backward steps per outer iteration; both
    # runs stop once they land on the exact fixed point
    K = min(len(spi.iterates), (len(fin.iterates) + 2) // 3)
    assert K >= 10
    for k in range(K):
        np.testing.assert_allclose(spi.iterates[k], fin.iterates[3 * k], rtol=0, atol=1e-10)
    np.testing.assert_allclose(spi.z, fin.z, rtol=0, atol=1e-10)


def test_finito_zero_objective():
    p = FiniteSumProblem(np.ones((3, 2)), np.zeros(3), _ZeroLoss(), Zero(), EUCLIDEAN, [L_FLOOR] * 3)
    z0 = np.array([0.4, 0.1])
    tr = finito_miso_run(p, z_init=z0)
    assert len(tr.records) == 1
    np.testing.assert_allclose(tr.z, z0, rtol=1e-15)


def test_finito_matches_spiral_solution():
    p, zstar = lasso_toy()
    # Finito/MISO needs about 770 epochs here
    fin = finito_miso_run(p, FinitoConfig(max_epochs=1000, tol=1e-11))
    spi = run(p, SpiralConfig(max_epochs=400, tol=1e-11))
    np.testing.assert_allclose(fin.z, spi.z, atol=1e-8)
    np.testing.assert_allclose(fin.z, zstar, atol=1e-8)


def test_finito_memory():
    p, _ = lasso_toy()
    assert FinitoMiso.table_bytes(p) == 2 * p.N * p.n * 8
    with pytest.raises(FinitoMemoryError, match="bytes"):
        FinitoMiso(p, FinitoConfig(memory_cap=1000))
    solver = FinitoMiso(p, FinitoConfig(max_epochs=2))
    solver.run()
    assert solver.working_set()["points"].shape == (p.N, p.n)


def test_finito_requires_euclidean_kernel():
    with pytest.raises(UnsupportedOracleError):
        FinitoMiso(phase_toy()[0])
