"""Finite-sum test problems: lasso, nonnegative PCA and sparse phase retrieval.

Every component is a function of a single data margin ``m_i = <a_i, z>``,
so gradients are ``loss'(m_i) a_i``. Solvers exploit this by caching the
``N`` margins at a point instead of ``N`` gradient vectors.
"""

from __future__ import annotations

import numpy as np

from .bregman import EUCLIDEAN, QUARTIC, Kernel

__all__ = [
    "NonsmoothSpec",
    "L1",
    "NNBall",
    "Zero",
    "SquaredLoss",
    "NegativeQuadratic",
    "QuarticLoss",
    "FiniteSumProblem",
    "lasso_problem",
    "nnpca_problem",
    "phase_retrieval_problem",
    "objective",
    "L_FLOOR",
]

L_FLOOR = 1e-12


class NonsmoothSpec:
    """Tagged nonsmooth term ``g``."""

    tag = "abstract"

    def value(self, z):
        raise NotImplementedError

    def prox(self, x, step):
        """Euclidean proximal map of ``step * g`` at ``x``."""
        raise NotImplementedError


class L1(NonsmoothSpec):
    tag = "l1"

    def __init__(self, lam):
        lam = float(lam)
        if not lam > 0:
            raise ValueError("l1 weight must be positive")
        self.lam = lam

    def value(self, z):
        return self.lam * float(np.sum(np.abs(z)))

    def prox(self, x, step):
        from .oracle import soft_threshold

        return soft_threshold(x, step * self.lam)

    def __repr__(self):
        return f"L1(lam={self.lam!r})"


class NNBall(NonsmoothSpec):
    """Indicator of ``{w : ||w|| <= 1, w >= 0}``."""

    tag = "nnball"
    radius = 1.0
    # slack for iterates produced by the projection itself
    feas_tol = 1e-12

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < 0) or float(np.linalg.norm(z)) > 1.0 + self.feas_tol:
            return np.inf
        return 0.0

    def prox(self, x, step):
        from .oracle import project_nnball

        return project_nnball(x)

    def __repr__(self):
        return "NNBall()"


class Zero(NonsmoothSpec):
    tag = "zero"

    def value(self, z):
        return 0.0

    def prox(self, x, step):
        return np.array(x, dtype=float)

    def __repr__(self):
        return "Zero()"


# Margin losses. ``value``/``deriv`` act elementwise on margin arrays.


class SquaredLoss:
    """``(scale/2) (m - b)^2``."""

    def __init__(self, scale=1.0):
        self.scale = float(scale)

    def value(self, m, b):
        r = m - b
        return 0.5 * self.scale * r * r

    def deriv(self, m, b):
        return self.scale * (m - b)

    def gap(self, mx, d, b):
        """``loss(mx + d) - loss(mx) - loss'(mx) d`` without cancellation."""
        return 0.5 * self.scale * d * d


class NegativeQuadratic:
    """``-m^2 / 2``; ``b`` is ignored."""

    def value(self, m, b):
        return -0.5 * m * m

    def deriv(self, m, b):
        return -m

    def gap(self, mx, d, b):
        return -0.5 * d * d


class QuarticLoss:
    """``(m^2 - b)^2 / 4``."""

    def value(self, m, b):
        r = m * m - b
        return 0.25 * r * r

    def deriv(self, m, b):
        return (m * m - b) * m

    def gap(self, mx, d, b):
        # exact Taylor expansion of a quartic polynomial around mx
        d2 = d * d
        return 0.5 * (3.0 * mx * mx - b) * d2 + mx * d2 * d + 0.25 * d2 * d2


class FiniteSumProblem:
    """``phi(z) = (1/N) sum_i f_i(z) + g(z)`` with ``f_i(z) = loss(<a_i, z>, b_i)``.

    Parameters
    ----------
    A : ndarray, shape (N, n)
        Data rows ``a_i``.
    b : ndarray, shape (N,)
        Labels.
    loss : object
        Margin loss with elementwise ``value(m, b)`` and ``deriv(m, b)``.
    g : NonsmoothSpec
    kernel : Kernel or sequence of Kernel
        A single kernel shared by all components, or one per component.
    L : ndarray, shape (N,)
        Relative-smoothness constants of the ``f_i`` w.r.t. their kernels.
    """

    def __init__(self, A, b, loss, g, kernel, L, name="problem"):
        A = np.ascontiguousarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError("A must be a nonempty 2-D array")
        b = np.asarray(b, dtype=float).reshape(-1)
        if b.shape[0] != A.shape[0]:
            raise ValueError("b must have one entry per row of A")
        L = np.asarray(L, dtype=float).reshape(-1)
        if L.shape[0] != A.shape[0] or np.any(~(L > 0)):
            raise ValueError("need a positive smoothness constant per component")
        A.setflags(write=False)
        b.setflags(write=False)
        L.setflags(write=False)
        self.A = A
        self.b = b
        self.loss = loss
        self.g = g
        self.L = L
        self.name = name
        self.N, self.n = A.shape
        if isinstance(kernel, Kernel):
            self.kernel = kernel
            self.kernels = [kernel] * self.N
        else:
            kernels = list(kernel)
            if len(kernels) != self.N:
                raise ValueError("need one kernel per component")
            first = kernels[0]
            self.kernel = first if all(k == first for k in kernels) else None
            self.kernels = kernels

    # -- evaluations ---------------------------------------------------

    def margins(self, z):
        return self.A @ np.asarray(z, dtype=float)

    def values(self, z):
        """Array of ``f_i(z)``."""
        return self.loss.value(self.margins(z), self.b)

    def f(self, z):
        return float(np.mean(self.values(z)))

    def grad_i(self, i, z):
        a = self.A[i]
        m = float(a @ z)
        return self.loss.deriv(m, self.b[i]) * a

    def grad_i_from_margin(self, i, m):
        return self.loss.deriv(m, self.b[i]) * self.A[i]

    def value_i(self, i, z):
        return float(self.loss.value(float(self.A[i] @ z), self.b[i]))

    def grad_sum(self, z):
        """Return ``(sum_i grad f_i(z), sum_i f_i(z), margins)`` in one pass."""
        m = self.margins(z)
        gsum = self.A.T @ self.loss.deriv(m, self.b)
        fsum = float(np.sum(self.loss.value(m, self.b)))
        return gsum, fsum, m

    def gaps(self, mx, dm):
        """Array of ``l_i(y, x) = f_i(y) - f_i(x) - <grad f_i(x), y - x>``.

        ``mx`` are the margins at ``x`` and ``dm = A (y - x)`` the margin
        increments; passing the increment avoids the cancellation in
        ``<a_i, y> - <a_i, x>``.
        """
        return self.loss.gap(mx, dm, self.b)

    def gap_i(self, i, mx, dm):
        return float(self.loss.gap(mx, dm, self.b[i]))

    def grad_matrix(self, z):
        """Rows are ``grad f_i(z)``; allocates ``N x n`` (for tests only)."""
        m = self.margins(z)
        return self.loss.deriv(m, self.b)[:, None] * self.A

    def objective(self, z):
        gz = self.g.value(z)
        if not np.isfinite(gz):
            return np.inf
        return self.f(z) + gz

    def __repr__(self):
        return f"FiniteSumProblem({self.name!r}, N={self.N}, n={self.n}, g={self.g!r})"


def objective(problem, z):
    """``phi(z)``; ``+inf`` outside the domain of ``g``."""
    return problem.objective(z)


def _g_l1(lam):
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return L1(lam) if lam > 0 else Zero()


def lasso_problem(A, b, lam):
    """``0.5 ||A z - b||^2 + lam ||z||_1`` written as a finite sum.

    Components are ``f_i(z) = (N/2)(<a_i, z> - b_i)^2`` so their average is
    the least-squares term; ``L_i = N ||a_i||^2`` (floored for zero rows).
    """
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    L = np.maximum(N * np.einsum("ij,ij->i", A, A), L_FLOOR)
    return FiniteSumProblem(A, b, SquaredLoss(N), _g_l1(lam), EUCLIDEAN, L, "lasso")


def nnpca_problem(A):
    """Nonnegative PCA: ``f_i(z) = -0.5 <a_i, z>^2`` over the nonnegative unit ball."""
    A = np.asarray(A, dtype=float)
    L = np.maximum(np.einsum("ij,ij->i", A, A), L_FLOOR)
    return FiniteSumProblem(
        A, np.zeros(A.shape[0]), NegativeQuadratic(), NNBall(), EUCLIDEAN, L, "nnpca"
    )


def phase_retrieval_problem(A, b, lam, kernel="quartic", radius=None):
    """Sparse phase retrieval with ``f_i(z) = (<a_i, z>^2 - b_i)^2 / 4``.

    With the quartic kernel the constants are ``L_i = 3||a_i||^4 + b_i ||a_i||^2``.
    The ``f_i`` have no global Lipschitz gradient, so the Euclidean kernel
    needs a ``radius``: the declared ``L_i`` then bound the Hessian on the
    ball of that radius only (adaptive runs ignore them).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ValueError("phase retrieval measurements must be nonnegative")
    sq = np.einsum("ij,ij->i", A, A)
    if kernel == "quartic":
        L = 3.0 * sq * sq + b * sq
        kern = QUARTIC
    elif kernel == "euclidean":
        if radius is None:
            raise ValueError("euclidean phase retrieval needs a radius")
        L = (3.0 * sq * radius**2 + b) * sq
        kern = EUCLIDEAN
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    L = np.maximum(L, L_FLOOR)
    return FiniteSumProblem(A, b, QuarticLoss(), _g_l1(lam), kern, L, "phase")
