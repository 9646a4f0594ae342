"""Incremental proximal quasi-Newton solvers for regularized finite sums."""

from .bregman import EUCLIDEAN, QUARTIC, EuclideanKernel, QuarticKernel, SurrogateKernel, bregman_distance, quartic_gradient
from .core import SpiralConfig, SpiralSolver, lyapunov, run, run_euclidean, suboptimality
from .problems import L1, NNBall, Zero, FiniteSumProblem, lasso_problem, nnpca_problem, objective, phase_retrieval_problem
from .oracle import ThatInstance, UnsupportedOracleError, that_solve

__version__ = "0.1.0"
