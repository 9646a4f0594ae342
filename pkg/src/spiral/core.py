"""SPIRAL iterations: full updates, linesearch and the incremental loop.

The aggregate vector ``s`` always stands for ``sum_i grad hhat_i`` at a
(lifted) point, where ``hhat_i = h_i / gamma_i - f_i / N``. Two
representations are available:

* :class:`BregmanGeometry` keeps ``s`` as is and solves the general
  oracle ``argmin g + c h - <s, .>``.
* :class:`EuclideanGeometry` keeps ``gamma_hat * s`` with
  ``gamma_hat = 1 / sum_i gamma_i^{-1}`` and uses the Euclidean prox of
  ``gamma_hat g`` directly.

Both drive the same iteration, so runs with either one agree up to
rounding on Euclidean problems.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bregman import EuclideanKernel, SurrogateKernel, bregman_distance
from .directions import LbfgsMemory, direction, push_pair, safeguard
from .oracle import ThatInstance, UnsupportedOracleError, supported, that_solve
from .trace import Trace, TraceRecord

__all__ = [
    "VARIANTS",
    "SpiralConfig",
    "SpiralState",
    "AdaptiveCache",
    "BregmanGeometry",
    "EuclideanGeometry",
    "SpiralSolver",
    "StepsizeUnderflowError",
    "lyapunov",
    "suboptimality",
    "reference_gammas",
    "run",
    "run_euclidean",
]

VARIANTS = ("full", "no-ls", "adaptive")
SWEEPS = ("cyclic", "shuffled")
GAMMA_MIN = 1e-16
# relative slack, in units of the magnitude of the terms compared, used
# where an inequality is evaluated from sums that cancel
ROUNDING_SLACK = 1e-13


class StepsizeUnderflowError(FloatingPointError):
    pass


@dataclass
class SpiralConfig:
    variant: str = "full"
    beta: float = 0.5
    alpha_step: float = 0.999
    sweep: str = "cyclic"
    seed: int = 0
    sigma: float = 0.5
    adaptive_alpha: float = 0.999
    gamma_init_factor: float = 10.0
    memory: int = 5
    safeguard_D: float = 1e6
    max_epochs: float = 100.0
    tol: float = 1e-10
    max_backtracks: int = 50
    direction: str = "lbfgs"
    metric: str = "native"
    record_iterates: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        for name in ("beta", "alpha_step", "sigma", "adaptive_alpha"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")
        if not self.safeguard_D > 0:
            raise ValueError("safeguard_D must be positive")
        if not self.gamma_init_factor > 0:
            raise ValueError("gamma_init_factor must be positive")
        if self.max_epochs <= 0:
            raise ValueError("max_epochs must be positive")
        if self.direction not in ("lbfgs", "nominal"):
            raise ValueError("direction must be 'lbfgs' or 'nominal'")
        if self.metric not in ("native", "reference"):
            raise ValueError("metric must be 'native' or 'reference'")

    @property
    def adaptive(self):
        return self.variant == "adaptive"


@dataclass
class AdaptiveCache:
    """Sums over the last incremental loop's points ``zt_i``.

    ``P = sum (1/gamma_i) grad h(zt_i)``, ``G = sum grad f_i(zt_i)``,
    ``F = sum f_i(zt_i)``, ``M = sum <grad f_i(zt_i), zt_i>``,
    ``H = sum (1/gamma_i) h(zt_i)``, ``K = sum (1/gamma_i) <grad h(zt_i), zt_i>``.
    """

    P: np.ndarray
    G: np.ndarray
    F: float = 0.0
    M: float = 0.0
    H: float = 0.0
    K: float = 0.0

    @classmethod
    def empty(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def at_point(cls, kernel, c, z, gsum, fsum):
        hz = kernel.gradient(z)
        return cls(c * hz, gsum.copy(), fsum, float(gsum @ z),
                   c * kernel.value(z), c * float(hz @ z))

    def rescale_kernel(self, factor):
        self.P = self.P * factor
        self.H *= factor
        self.K *= factor


@dataclass
class SpiralState:
    s: np.ndarray
    z: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    sbar: Optional[np.ndarray] = None
    stilde: Optional[np.ndarray] = None
    gsum_z: Optional[np.ndarray] = None
    fsum_z: float = 0.0
    margins_z: Optional[np.ndarray] = None
    gsum_u: Optional[np.ndarray] = None
    fsum_u: float = 0.0
    margins_u: Optional[np.ndarray] = None
    lyapunov_vz: float = np.inf
    grad_evals: int = 0
    tau: float = 1.0
    backtracks: int = 0
    fallbacks: int = 0
    shrinks: int = 0
    cache: Optional[AdaptiveCache] = None
    prev: Optional[tuple] = None


class _Geometry:
    def __init__(self, problem, gammas):
        if problem.kernel is None or not supported(problem.g, problem.kernel):
            raise UnsupportedOracleError(
                f"no oracle for g={problem.g!r} with kernel(s) of {problem.name!r}"
            )
        self.problem = problem
        self.N = problem.N
        self.kernel = problem.kernel
        self.g = problem.g
        self.gammas = np.array(gammas, dtype=float)
        self._refresh()

    def _refresh(self):
        self.c = float(np.sum(1.0 / self.gammas))

    def shrink_all(self, sigma):
        self.gammas *= sigma
        self._refresh()

    def lyapunov_terms(self, z, v, fz_mean, gsum_z):
        """Terms of ``L(v, z) = f(z) + <grad f(z), v - z> + g(v) + sum D_{h_i}(v, z)/gamma_i``."""
        return (
            fz_mean,
            float(gsum_z @ (v - z)) / self.N,
            self.g.value(v),
            self.c * bregman_distance(self.kernel, v, z),
        )

    def lyapunov(self, z, v, fz_mean, gsum_z):
        return float(sum(self.lyapunov_terms(z, v, fz_mean, gsum_z)))


class BregmanGeometry(_Geometry):
    """Aggregate vector kept as ``s = sum_i grad hhat_i``."""

    name = "bregman"

    def full(self, x, gsum):
        return self.c * self.kernel.gradient(x) - gsum / self.N

    def from_parts(self, P, G):
        return P - G / self.N

    def solve(self, s):
        return that_solve(ThatInstance(self.c, self.g, self.kernel), s)

    def begin_sweep(self, u):
        self._hu = self.kernel.gradient(u)

    def inner(self, s, i, zt, u, gzt, gu):
        return s + (self.kernel.gradient(zt) - self._hu) / self.gammas[i] - (gzt - gu) / self.N

    def shrink_one(self, s, i, u, new_gamma):
        old = self.gammas[i]
        self.gammas[i] = new_gamma
        self._refresh()
        return s + (1.0 / new_gamma - 1.0 / old) * self._hu


class EuclideanGeometry(_Geometry):
    """Aggregate vector kept as ``gamma_hat * s`` (Euclidean kernels only)."""

    name = "euclidean"

    def __init__(self, problem, gammas):
        if not isinstance(problem.kernel, EuclideanKernel):
            raise UnsupportedOracleError("the Euclidean iteration needs Euclidean kernels")
        super().__init__(problem, gammas)

    def _refresh(self):
        super()._refresh()
        self.gamma_hat = 1.0 / self.c

    def full(self, x, gsum):
        return x - (self.gamma_hat / self.N) * gsum

    def from_parts(self, P, G):
        return self.gamma_hat * P - (self.gamma_hat / self.N) * G

    def solve(self, s):
        return self.g.prox(s, self.gamma_hat)

    def begin_sweep(self, u):
        pass

    def inner(self, s, i, zt, u, gzt, gu):
        gh = self.gamma_hat
        return s + (gh / self.N) * (gu - gzt) + (gh / self.gammas[i]) * (zt - u)

    def shrink_one(self, s, i, u, new_gamma):
        old = self.gammas[i]
        unscaled = s / self.gamma_hat + (1.0 / new_gamma - 1.0 / old) * u
        self.gammas[i] = new_gamma
        self._refresh()
        return self.gamma_hat * unscaled


def reference_gammas(problem, alpha=0.999):
    """Stepsizes ``gamma_i = alpha N / L_i``."""
    return alpha * problem.N / problem.L


def suboptimality(problem, z, gammas):
    """``||z - v||`` with ``v = T(grad hhat(z))`` for the given stepsizes."""
    geo = BregmanGeometry(problem, gammas)
    gsum = problem.grad_sum(z)[0]
    v = geo.solve(geo.full(z, gsum))
    return float(np.linalg.norm(np.asarray(z) - v))


def lyapunov(problem, gammas, y, x):
    """``phi(y) + D_hhat(y, x)`` evaluated from the definition of ``D_hhat``."""
    sk = SurrogateKernel(problem, gammas, check=False)
    return problem.objective(y) + sk.distance(y, x)


class SpiralSolver:
    """Stateful SPIRAL run on one problem.

    Parameters
    ----------
    problem : FiniteSumProblem
    config : SpiralConfig
    z_init : array_like, optional
        Starting point (zeros by default).
    euclidean : bool
        Use the Euclidean representation of the iteration.
    direction_fn : callable, optional
        ``direction_fn(z, v, r) -> d`` overriding the L-BFGS directions.
    """

    def __init__(self, problem, config=None, z_init=None, euclidean=False,
                 direction_fn: Optional[Callable] = None, gammas=None):
        self.problem = problem
        self.config = config = config or SpiralConfig()
        N = problem.N
        if gammas is None:
            if config.adaptive:
                gammas = np.full(N, config.gamma_init_factor * N)
            else:
                gammas = reference_gammas(problem, config.alpha_step)
        gammas = np.array(gammas, dtype=float)
        if not config.adaptive:
            SurrogateKernel(problem, gammas, check=True)
        geo_cls = EuclideanGeometry if euclidean else BregmanGeometry
        self.geometry = geo_cls(problem, gammas)
        self.memory = LbfgsMemory(config.memory)
        self.direction_fn = direction_fn
        self.rng = np.random.default_rng(config.seed)
        self._ref_gammas = None
        if config.metric == "reference":
            self._ref_gammas = reference_gammas(problem, config.alpha_step)
        z0 = np.zeros(problem.n) if z_init is None else np.array(z_init, dtype=float)
        if z0.shape != (problem.n,):
            raise ValueError(f"z_init must have shape ({problem.n},)")
        self.z_init = z0
        self.state = None

    # -- bookkeeping ---------------------------------------------------

    @property
    def gammas(self):
        return self.geometry.gammas

    @property
    def epochs(self):
        return self.state.grad_evals / self.problem.N

    def _count(self, k):
        self.state.grad_evals += k

    def _grad_sum(self, x):
        self._count(self.problem.N)
        return self.problem.grad_sum(x)

    def _shrink_all(self):
        self.geometry.shrink_all(self.config.sigma)
        self.state.shrinks += 1
        self._check_underflow()
        self.memory.reset()
        self.state.prev = None

    def _check_underflow(self):
        if np.min(self.geometry.gammas) < GAMMA_MIN:
            raise StepsizeUnderflowError(
                f"stepsize fell below {GAMMA_MIN:g} after {self.state.shrinks} shrinks"
            )

    def working_set(self):
        """Arrays owned by the solver between iterations (for memory accounting)."""
        st = self.state
        out = {"gammas": self.geometry.gammas}
        for name in ("s", "z", "v", "u", "y", "sbar", "stilde", "gsum_z",
                     "margins_z", "gsum_u", "margins_u"):
            val = getattr(st, name)
            if val is not None:
                out[name] = val
        if st.cache is not None:
            out["cache.P"] = st.cache.P
            out["cache.G"] = st.cache.G
        for k, (dz, dr, _) in enumerate(self.memory.pairs):
            out[f"lbfgs.dz{k}"] = dz
            out[f"lbfgs.dr{k}"] = dr
        return out

    # -- algorithm -----------------------------------------------------

    def initialize(self):
        z0 = self.z_init
        self.state = SpiralState(s=np.zeros(self.problem.n))
        gsum, fsum, _ = self._grad_sum(z0)
        self.state.s = self.geometry.full(z0, gsum)
        if self.config.adaptive:
            self.state.cache = AdaptiveCache.at_point(
                self.geometry.kernel, self.geometry.c, z0, gsum, fsum)
        self.memory.reset()
        return self.state

    def adaptive_check(self, stage, y, x=None, mx=None, i=None):
        """Return True if the stage's relative-smoothness inequality holds.

        Stages ``'1b'``, ``'3b'``, ``'5d'`` test the sum over all components,
        ``'7b'`` tests component ``i`` alone.
        """
        p, geo, N = self.problem, self.geometry, self.problem.N
        kern = geo.kernel
        if stage == "1b":
            st, cache = self.state, self.state.cache
            terms_l = (st.fsum_z, cache.F, float(cache.G @ y), cache.M)
            lhs = terms_l[0] - terms_l[1] - terms_l[2] + terms_l[3]
            terms_r = (geo.c * kern.value(y), cache.H, float(cache.P @ y), cache.K)
            scale = self.config.adaptive_alpha * N
            rhs = scale * (terms_r[0] - terms_r[1] - terms_r[2] + terms_r[3])
            mag = sum(abs(t) for t in terms_l) + scale * sum(abs(t) for t in terms_r)
            return lhs <= rhs + ROUNDING_SLACK * mag
        if stage in ("3b", "5d"):
            lhs = float(np.sum(p.gaps(mx, p.A @ (y - x))))
            rhs = N * geo.c * bregman_distance(kern, y, x)
            return lhs <= rhs * (1.0 + ROUNDING_SLACK)
        if stage == "7b":
            lhs = p.gap_i(i, mx, float(p.A[i] @ (y - x)))
            rhs = N / geo.gammas[i] * bregman_distance(kern, y, x)
            return lhs <= rhs * (1.0 + ROUNDING_SLACK)
        raise ValueError(f"unknown adaptive stage {stage!r}")

    def _stage1(self):
        st, geo = self.state, self.geometry
        while True:
            z = geo.solve(st.s)
            gz, fz, mz = self._grad_sum(z)
            st.z, st.gsum_z, st.fsum_z, st.margins_z = z, gz, fz, mz
            if self.config.adaptive and not self.adaptive_check("1b", z):
                self._shrink_all()
                st.cache.rescale_kernel(1.0 / self.config.sigma)
                st.s = geo.from_parts(st.cache.P, st.cache.G)
                continue
            return z

    def _stage3(self):
        st, geo = self.state, self.geometry
        while True:
            st.sbar = geo.full(st.z, st.gsum_z)
            st.v = geo.solve(st.sbar)
            if self.config.adaptive:
                if not self.adaptive_check("3b", st.v, st.z, st.margins_z):
                    self._shrink_all()
                    continue
            break
        st.lyapunov_vz = geo.lyapunov(st.z, st.v, st.fsum_z / self.problem.N, st.gsum_z)
        return st.v

    def full_step(self):
        """Steps 1-3: ``z = T(s)``, ``sbar = grad hhat(z)``, ``v = T(sbar)``."""
        self._stage1()
        self._stage3()
        return self.state.z, self.state.sbar, self.state.v

    def residual(self):
        return self.state.z - self.state.v

    def _direction(self):
        st = self.state
        z, v = st.z, st.v
        r = z - v
        if self.direction_fn is not None:
            d = np.asarray(self.direction_fn(z, v, r), dtype=float)
        elif self.config.direction == "nominal":
            d = v - z
        else:
            if st.prev is not None:
                push_pair(self.memory, st.prev[0], z, st.prev[1], r)
            d = direction(self.memory, r)
        st.prev = (z, r)
        return safeguard(d, z, v, self.config.safeguard_D)

    def _set_u(self, u):
        st = self.state
        st.u = u
        st.gsum_u, st.fsum_u, st.margins_u = self._grad_sum(u)
        st.stilde = self.geometry.full(u, st.gsum_u)

    def linesearch(self, d):
        """Step 5. Returns ``(u, stilde, y, tau, backtracks)``.

        Returns ``None`` when an adaptive shrink (stage 5d) requires the
        caller to restart from the computation of ``v``.
        """
        st, geo, cfg = self.state, self.geometry, self.config
        z, v = st.z, st.v
        L_vz = st.lyapunov_vz
        terms = geo.lyapunov_terms(z, v, st.fsum_z / self.problem.N, st.gsum_z)
        slack = ROUNDING_SLACK * sum(abs(t) for t in terms)
        tau, bt = 1.0, 0
        while True:
            u = z + (1.0 - tau) * (v - z) + tau * d
            self._set_u(u)
            y = geo.solve(st.stilde)
            if cfg.adaptive:
                if not self.adaptive_check("5d", y, u, st.margins_u):
                    self._shrink_all()
                    return None
            L_yu = geo.lyapunov(u, y, st.fsum_u / self.problem.N, st.gsum_u)
            if L_yu <= L_vz + slack:
                break
            bt += 1
            tau *= cfg.beta
            if bt >= cfg.max_backtracks:
                # tau -> 0 limit of the interpolation
                self._set_u(v.copy())
                y = geo.solve(st.stilde)
                st.fallbacks += 1
                tau = 0.0
                break
        st.y = y
        st.tau, st.backtracks = tau, bt
        return st.u, st.stilde, y, tau, bt

    def incremental_sweep(self, u, order, callback=None):
        """Steps 6-9: one pass of proximal steps, replacing one block at a time.

        ``callback(i, zt_i, s)`` is invoked after each inner update.
        """
        st, geo, p = self.state, self.geometry, self.problem
        N = p.N
        A, b, loss = p.A, p.b, p.loss
        adaptive = self.config.adaptive
        kern = geo.kernel
        mu = st.margins_u
        geo.begin_sweep(u)
        s = st.stilde.copy()
        if adaptive:
            cache = AdaptiveCache.empty(p.n)
        for i in order:
            a = A[i]
            gu = loss.deriv(mu[i], b[i]) * a
            while True:
                zt = geo.solve(s)
                m = float(a @ zt)
                self._count(1)
                if adaptive and not self.adaptive_check("7b", zt, u, mu[i], i=i):
                    s = geo.shrink_one(s, i, u, self.config.sigma * geo.gammas[i])
                    st.shrinks += 1
                    self._check_underflow()
                    self.memory.reset()
                    st.prev = None
                    continue
                break
            gzt = loss.deriv(m, b[i]) * a
            s = geo.inner(s, i, zt, u, gzt, gu)
            if adaptive:
                inv = 1.0 / geo.gammas[i]
                hz = kern.gradient(zt)
                cache.P += inv * hz
                cache.G += gzt
                cache.F += float(loss.value(m, b[i]))
                cache.M += float(gzt @ zt)
                cache.H += inv * kern.value(zt)
                cache.K += inv * float(hz @ zt)
            if callback is not None:
                callback(i, zt, s)
        if adaptive:
            st.cache = cache
        st.s = s
        return s

    def sweep_order(self):
        N = self.problem.N
        if self.config.sweep == "shuffled":
            return self.rng.permutation(N)
        return range(N)

    def _outer_tail(self):
        """Steps 4-9 after ``z, v`` are known (restarts at step 3 if needed)."""
        cfg = self.config
        st = self.state
        while True:
            if cfg.variant == "no-ls":
                self._set_u(st.v.copy())
                st.y = None
                st.tau, st.backtracks = 0.0, 0
                break
            d = self._direction()
            if self.linesearch(d) is not None:
                break
            self._stage3()
        self.incremental_sweep(st.u, self.sweep_order())

    def _metric(self):
        st = self.state
        if self._ref_gammas is None:
            return float(np.linalg.norm(st.z - st.v))
        return suboptimality(self.problem, st.z, self._ref_gammas)

    def run(self):
        cfg, p = self.config, self.problem
        trace = Trace(solver=self._label())
        t0 = time.perf_counter()
        self.initialize()
        st = self.state
        prev_shrinks = 0
        while True:
            self.full_step()
            D = self._metric()
            rec = TraceRecord(
                epoch=self.epochs,
                suboptimality=D,
                objective=p.objective(st.z),
                tau=st.tau,
                backtracks=st.backtracks + st.shrinks - prev_shrinks,
                wall_time=time.perf_counter() - t0,
                lyapunov=st.lyapunov_vz,
                shrinks=st.shrinks,
            )
            prev_shrinks = st.shrinks
            trace.records.append(rec)
            if cfg.record_iterates:
                trace.iterates.append(st.z.copy())
            if D <= cfg.tol or self.epochs >= cfg.max_epochs:
                break
            self._outer_tail()
            # adaptive restarts may have changed the stepsizes behind L(v, z)
            rec.lyapunov = st.lyapunov_vz
        trace.z = st.z.copy()
        trace.info.update(
            v=st.v.copy(),
            gammas=self.geometry.gammas.copy(),
            grad_evals=st.grad_evals,
            shrinks=st.shrinks,
            fallbacks=st.fallbacks,
            converged=bool(trace.final.suboptimality <= cfg.tol),
        )
        return trace

    def _label(self):
        names = {"full": "spiral", "no-ls": "spiral-no-ls", "adaptive": "adaspiral"}
        label = names[self.config.variant]
        if isinstance(self.geometry, EuclideanGeometry):
            label += "-euclidean"
        return label


def run(problem, config=None, z_init=None, **kwargs):
    """Run SPIRAL with the general (Bregman) oracle and return its :class:`Trace`."""
    return SpiralSolver(problem, config, z_init, euclidean=False, **kwargs).run()


def run_euclidean(problem, config=None, z_init=None, **kwargs):
    """Run the Euclidean form of SPIRAL (``gamma_hat``-scaled aggregate, plain prox)."""
    return SpiralSolver(problem, config, z_init, euclidean=True, **kwargs).run()
