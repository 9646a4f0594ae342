"""Distance-generating functions, Bregman distances and the surrogate kernel.

Two kernels are provided: the Euclidean ``h(x) = 0.5 ||x||^2`` and the
quartic ``h(x) = 0.25 ||x||^4 + 0.5 ||x||^2`` used for phase retrieval.
Both are defined on all of R^n.
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

__all__ = [
    "Kernel",
    "EuclideanKernel",
    "QuarticKernel",
    "EUCLIDEAN",
    "QUARTIC",
    "bregman_distance",
    "quartic_gradient",
    "SurrogateKernel",
]


class Kernel:
    """Abstract distance-generating function."""

    kind = "abstract"

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(self.kind)

    def __repr__(self):
        return f"{type(self).__name__}()"


class EuclideanKernel(Kernel):
    kind = "euclidean"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ x)

    def gradient(self, x):
        return np.array(x, dtype=float)


def quartic_gradient(x):
    """Gradient ``(||x||^2 + 1) x`` of ``0.25 ||x||^4 + 0.5 ||x||^2``."""
    x = np.asarray(x, dtype=float)
    return (float(x @ x) + 1.0) * x


class QuarticKernel(Kernel):
    kind = "quartic"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        sq = float(x @ x)
        return 0.25 * sq * sq + 0.5 * sq

    def gradient(self, x):
        return quartic_gradient(x)


EUCLIDEAN = EuclideanKernel()
QUARTIC = QuarticKernel()


def bregman_distance(kernel, y, x):
    """Return ``D_h(y, x) = h(y) - h(x) - <grad h(x), y - x>``.

    The Euclidean kernel uses ``0.5 ||y - x||^2`` directly, which avoids
    cancellation when ``y`` is close to ``x``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape:
        raise ValueError(f"dimension mismatch: {y.shape} vs {x.shape}")
    diff = y - x
    if isinstance(kernel, EuclideanKernel):
        return 0.5 * float(diff @ diff)
    if isinstance(kernel, QuarticKernel):
        # Expanded form of the quartic distance; every term is >= 0.
        sx = float(x @ x)
        sd = float(diff @ diff)
        xd = float(x @ diff)
        quad = 0.5 * sd
        quart = 0.25 * (2.0 * xd + sd) ** 2 + 0.5 * sx * sd
        return quad + quart
    d = kernel.value(y) - kernel.value(x) - float(kernel.gradient(x) @ diff)
    return max(d, 0.0)


KernelSpec = Union[Kernel, Sequence[Kernel]]


class SurrogateKernel:
    """The kernel ``sum_i (1/gamma_i) h_i - (1/N) f_i`` of a problem.

    Parameters
    ----------
    problem : FiniteSumProblem
        Supplies the component gradients and the per-component kernels.
    gammas : array_like
        Positive stepsizes, one per component.
    check : bool
        If true, verify ``gamma_i < N / L_i`` for the problem's declared
        constants. Adaptive runs pass ``False``.
    """

    def __init__(self, problem, gammas, check=True):
        gammas = np.asarray(gammas, dtype=float)
        if gammas.shape != (problem.N,):
            raise ValueError("need one stepsize per component")
        if np.any(gammas <= 0):
            raise ValueError("stepsizes must be positive")
        if check and np.any(gammas >= problem.N / problem.L):
            raise ValueError("stepsizes must satisfy gamma_i < N / L_i")
        self.problem = problem
        self.gammas = gammas
        self.kernels = problem.kernels

    @property
    def shared_kernel(self):
        return self.problem.kernel

    def kernel_part(self, z):
        """``sum_i (1/gamma_i) grad h_i(z)``."""
        if self.shared_kernel is not None:
            return float(np.sum(1.0 / self.gammas)) * self.shared_kernel.gradient(z)
        out = np.zeros_like(np.asarray(z, dtype=float))
        for gam, h in zip(self.gammas, self.kernels):
            out += h.gradient(z) / gam
        return out

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        gsum = self.problem.grad_sum(z)[0]
        return self.kernel_part(z) - gsum / self.problem.N

    def component_gradient(self, i, z):
        z = np.asarray(z, dtype=float)
        h = self.kernels[i]
        return h.gradient(z) / self.gammas[i] - self.problem.grad_i(i, z) / self.problem.N

    def distance(self, y, x):
        """``D_hhat(y, x)`` by its definition as a sum over components."""
        p = self.problem
        y = np.asarray(y, dtype=float)
        x = np.asarray(x, dtype=float)
        fy = p.values(y)
        fx = p.values(x)
        gx = p.grad_matrix(x)
        lin = fy - fx - gx @ (y - x)
        dh = np.array([bregman_distance(h, y, x) for h in self.kernels])
        return float(np.sum(dh / self.gammas) - np.sum(lin) / p.N)
