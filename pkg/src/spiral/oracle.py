"""Closed-form solvers for the proximal oracle

    T(s) = argmin_w  g(w) + c h(w) - <s, w>,   c = sum_i 1/gamma_i,

for the supported pairs of nonsmooth term and (shared) kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bregman import EuclideanKernel, Kernel, QuarticKernel
from .problems import L1, NNBall, NonsmoothSpec, Zero

__all__ = [
    "UnsupportedOracleError",
    "OracleConvergenceError",
    "ThatInstance",
    "that_solve",
    "soft_threshold",
    "project_nnball",
    "quartic_l1_solve",
    "cubic_root",
]


class UnsupportedOracleError(NotImplementedError):
    """No closed form is available for this (g, kernel) combination."""


class OracleConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ThatInstance:
    c: float
    g: NonsmoothSpec
    kernel: Kernel

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("kernel coefficient c must be positive")


def soft_threshold(x, t):
    x = np.asarray(x, dtype=float)
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def project_nnball(x):
    """Euclidean projection onto ``{w : w >= 0, ||w|| <= 1}``."""
    y = np.maximum(np.asarray(x, dtype=float), 0.0)
    nrm = float(np.linalg.norm(y))
    if nrm > 1.0:
        y = y / nrm
    return y


def cubic_root(c, q2, maxiter=200):
    """Positive root of ``rho^3 - c rho^2 - c q2 = 0`` (``c > 0``, ``q2 >= 0``).

    Safeguarded Newton on the bracket ``[c, c + (c q2)^(1/3)]``; the cubic
    is increasing there and changes sign across it.
    """
    if q2 == 0.0:
        return c
    lo = c
    hi = c + np.cbrt(c * q2)
    rho = c + q2 ** (1.0 / 3.0)
    if not lo < rho < hi:
        rho = 0.5 * (lo + hi)
    for _ in range(maxiter):
        val = rho * rho * (rho - c) - c * q2
        if val > 0:
            hi = rho
        else:
            lo = rho
        der = rho * (3.0 * rho - 2.0 * c)
        step = val / der if der > 0 else np.inf
        new = rho - step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - rho) <= 4e-16 * new or hi - lo <= 4e-16 * hi:
            return new
        rho = new
    raise OracleConvergenceError("cubic root finder did not converge")


def quartic_l1_solve(c, lam, s):
    """Minimize ``lam ||w||_1 + c (||w||^4/4 + ||w||^2/2) - <s, w>``.

    With ``q = soft_threshold(s, lam)`` the minimizer is ``q / rho`` where
    ``rho`` solves ``rho^3 - c rho^2 - c ||q||^2 = 0``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    q = soft_threshold(s, lam)
    rho = cubic_root(float(c), float(q @ q))
    return q / rho


def that_solve(inst, s):
    """Minimizer of ``g(w) + c h(w) - <s, w>`` for the instance's (g, h)."""
    s = np.asarray(s, dtype=float)
    g, h, c = inst.g, inst.kernel, inst.c
    if isinstance(h, EuclideanKernel):
        step = 1.0 / c
        return g.prox(step * s, step)
    if isinstance(h, QuarticKernel):
        if isinstance(g, L1):
            return quartic_l1_solve(c, g.lam, s)
        if isinstance(g, Zero):
            return quartic_l1_solve(c, 0.0, s)
    raise UnsupportedOracleError(
        f"no oracle for g={g!r} with kernel {h!r}"
    )


def supported(g, kernel):
    """Whether :func:`that_solve` handles the pair."""
    if kernel is None:
        return False
    if isinstance(kernel, EuclideanKernel):
        return isinstance(g, (L1, NNBall, Zero))
    if isinstance(kernel, QuarticKernel):
        return isinstance(g, (L1, Zero))
    return False
