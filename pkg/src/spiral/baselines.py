"""Reference competitors: proximal SGD and Finito/MISO.

Both use Euclidean proximal steps ``prox_{gamma g}``. Their traces report
the same suboptimality as SPIRAL, measured with the reference stepsizes
``gamma_i = alpha N / L_i`` (these evaluations are not counted as epochs).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bregman import EuclideanKernel
from .core import reference_gammas, suboptimality
from .oracle import UnsupportedOracleError
from .trace import Trace, TraceRecord

__all__ = [
    "ProxSgdConfig",
    "prox_sgd_stepsize",
    "prox_sgd_step",
    "prox_sgd_run",
    "FinitoConfig",
    "FinitoMemoryError",
    "FinitoMiso",
    "finito_miso_run",
]


@dataclass
class ProxSgdConfig:
    gamma0: float = 0.1
    gamma_tilde: float = 0.5
    batch: int = 1
    seed: int = 0
    max_epochs: float = 100.0
    tol: float = 0.0
    alpha_metric: float = 0.999

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if not self.gamma_tilde >= 0:
            raise ValueError("gamma_tilde must be nonnegative")
        if int(self.batch) < 1:
            raise ValueError("batch size must be at least 1")
        if self.max_epochs <= 0:
            raise ValueError("max_epochs must be positive")


def prox_sgd_stepsize(t, config=None):
    """Diminishing stepsize ``gamma0 / (1 + t gamma_tilde)`` at epoch ``t``."""
    cfg = config or ProxSgdConfig()
    return cfg.gamma0 / (1.0 + t * cfg.gamma_tilde)


def prox_sgd_step(problem, z, t, config=None, rng=None, idx=None):
    """One proximal stochastic gradient step at epoch ``t``.

    Components are drawn with replacement (``batch`` of them, averaged)
    unless ``idx`` fixes them.
    """
    cfg = config or ProxSgdConfig()
    z = np.asarray(z, dtype=float)
    if idx is None:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        idx = rng.integers(problem.N, size=int(cfg.batch))
    idx = np.atleast_1d(idx)
    A = problem.A[idx]
    grad = A.T @ problem.loss.deriv(A @ z, problem.b[idx]) / len(idx)
    gamma = prox_sgd_stepsize(t, cfg)
    return problem.g.prox(z - gamma * grad, gamma)


def _metric(problem, z, gammas):
    try:
        return suboptimality(problem, z, gammas)
    except UnsupportedOracleError:
        return float("nan")


def prox_sgd_run(problem, config=None, z_init=None):
    cfg = config or ProxSgdConfig()
    N = problem.N
    rng = np.random.default_rng(cfg.seed)
    z = np.zeros(problem.n) if z_init is None else np.array(z_init, dtype=float)
    gammas = reference_gammas(problem, cfg.alpha_metric)
    batch = int(cfg.batch)
    steps = max(1, N // batch)
    trace = Trace(solver="proxsgd")
    t0 = time.perf_counter()
    evals, t = 0, 0
    while True:
        gamma = prox_sgd_stepsize(t, cfg)
        for _ in range(steps):
            z = prox_sgd_step(problem, z, t, cfg, rng=rng)
        evals += steps * batch
        t += 1
        D = _metric(problem, z, gammas)
        trace.records.append(TraceRecord(
            epoch=evals / N,
            suboptimality=D,
            objective=problem.objective(z),
            tau=gamma,
            backtracks=0,
            wall_time=time.perf_counter() - t0,
        ))
        if D <= cfg.tol or evals / N >= cfg.max_epochs:
            break
    trace.z = z
    trace.info.update(grad_evals=evals)
    return trace


# -- Finito/MISO -------------------------------------------------------


class FinitoMemoryError(MemoryError):
    pass


@dataclass
class FinitoConfig:
    alpha: float = 0.999
    max_epochs: float = 100.0
    tol: float = 1e-10
    # refuse tables larger than this many bytes
    memory_cap: int = 1 << 30
    record_iterates: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.max_epochs <= 0:
            raise ValueError("max_epochs must be positive")


class FinitoMiso:
    """Finito/MISO with a table of per-component points and gradients.

    The table holds ``N`` points ``z_i`` and ``N`` gradients
    ``grad f_i(z_i)``, i.e. ``2 N n`` floats. Each inner step is

        z = prox_{gamma_hat g}(gamma_hat sum_i z_i / gamma_i
                               - (gamma_hat / N) sum_i grad f_i(z_i))

    followed by replacing entry ``i`` of the table with ``z``.
    """

    def __init__(self, problem, config=None, z_init=None):
        if not isinstance(problem.kernel, EuclideanKernel):
            raise UnsupportedOracleError("Finito/MISO is implemented for Euclidean kernels")
        self.problem = problem
        self.config = cfg = config or FinitoConfig()
        need = self.table_bytes(problem)
        if need > cfg.memory_cap:
            raise FinitoMemoryError(
                f"Finito/MISO table needs {need} bytes (N={problem.N}, n={problem.n}), "
                f"cap is {cfg.memory_cap}"
            )
        self.gammas = reference_gammas(problem, cfg.alpha)
        self.gamma_hat = 1.0 / float(np.sum(1.0 / self.gammas))
        z0 = np.zeros(problem.n) if z_init is None else np.array(z_init, dtype=float)
        if z0.shape != (problem.n,):
            raise ValueError(f"z_init must have shape ({problem.n},)")
        self.z_init = z0
        self.points = None
        self.grads = None

    @staticmethod
    def table_bytes(problem):
        return 2 * problem.N * problem.n * np.dtype(float).itemsize

    def working_set(self):
        return {
            "points": self.points,
            "grads": self.grads,
            "sum_points": self.sum_points,
            "sum_grads": self.sum_grads,
        }

    def _center(self):
        gh, N = self.gamma_hat, self.problem.N
        return self.problem.g.prox(gh * self.sum_points - (gh / N) * self.sum_grads, gh)

    def run(self):
        p, cfg = self.problem, self.config
        N = p.N
        inv = 1.0 / self.gammas
        self.points = np.tile(self.z_init, (N, 1))
        self.grads = p.grad_matrix(self.z_init)
        self.sum_points = inv @ self.points
        self.sum_grads = self.grads.sum(axis=0)
        evals = N
        trace = Trace(solver="finito")
        t0 = time.perf_counter()
        while True:
            z = self._center()
            D = _metric(p, z, self.gammas)
            trace.records.append(TraceRecord(
                epoch=evals / N,
                suboptimality=D,
                objective=p.objective(z),
                tau=1.0,
                backtracks=0,
                wall_time=time.perf_counter() - t0,
            ))
            if cfg.record_iterates:
                trace.iterates.append(z.copy())
            if D <= cfg.tol or evals / N >= cfg.max_epochs:
                break
            for i in range(N):
                if i:
                    z = self._center()
                gi = p.grad_i(i, z)
                self.sum_points += inv[i] * (z - self.points[i])
                self.sum_grads += gi - self.grads[i]
                self.points[i] = z
                self.grads[i] = gi
            evals += N
        trace.z = z
        trace.info.update(grad_evals=evals, table_bytes=self.table_bytes(p))
        return trace


def finito_miso_run(problem, config=None, z_init=None):
    return FinitoMiso(problem, config, z_init).run()
