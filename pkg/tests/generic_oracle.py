"""Independent reference minimizers for the proximal oracle (scipy based).

None of this uses the closed forms in ``spiral.oracle``: the l1 cases are
solved with L-BFGS-B on the split variables ``w = p - q`` followed by a
Newton polish on the identified sign pattern, the ball case with SLSQP.
"""

import numpy as np
from scipy.optimize import minimize


def _h(w, quartic):
    nw = float(w @ w)
    if quartic:
        return 0.25 * nw * nw + 0.5 * nw, (nw + 1.0) * w
    return 0.5 * nw, w.copy()


def _hess(w, quartic):
    n = w.size
    if quartic:
        return (float(w @ w) + 1.0) * np.eye(n) + 2.0 * np.outer(w, w)
    return np.eye(n)


def objective(c, lam, s, w, quartic):
    return c * _h(w, quartic)[0] - float(s @ w) + lam * float(np.sum(np.abs(w)))


def _polish(c, lam, s, w, quartic, iters=20):
    """Newton steps on the smooth problem with the sign pattern of ``w`` frozen."""
    sign = np.sign(w)
    S = np.flatnonzero(sign)
    if S.size == 0:
        return w
    best = w.copy()
    x = w[S].copy()
    for _ in range(iters):
        full = np.zeros_like(w)
        full[S] = x
        g = c * _h(full, quartic)[1][S] - s[S] + lam * sign[S]
        H = c * _hess(full, quartic)[np.ix_(S, S)]
        step = np.linalg.solve(H, g)
        x = x - step
        if np.linalg.norm(step) <= 1e-17 * max(1.0, np.linalg.norm(x)):
            break
    cand = np.zeros_like(w)
    cand[S] = x
    if np.all(np.sign(cand[S]) == sign[S]) and (
        objective(c, lam, s, cand, quartic) <= objective(c, lam, s, best, quartic) + 1e-12
    ):
        return cand
    return best


def generic_l1(c, lam, s, quartic):
    """``argmin lam ||w||_1 + c h(w) - <s, w>``."""
    s = np.asarray(s, dtype=float)
    n = s.size

    def fg(x):
        p, q = x[:n], x[n:]
        w = p - q
        val, gh = _h(w, quartic)
        g = c * gh - s
        return c * val - s @ w + lam * (p.sum() + q.sum()), np.r_[g + lam, -g + lam]

    res = minimize(fg, np.zeros(2 * n), jac=True, method="L-BFGS-B",
                   bounds=[(0, None)] * (2 * n),
                   options=dict(ftol=0.0, gtol=1e-14, maxiter=20000, maxcor=30))
    w = res.x[:n] - res.x[n:]
    # tiny entries are split-variable noise
    w[np.abs(w) <= 1e-10 * max(1.0, np.abs(w).max())] = 0.0
    return _polish(c, lam, s, w, quartic)


def generic_smooth(c, s, quartic):
    """``argmin c h(w) - <s, w>`` (no nonsmooth term)."""
    s = np.asarray(s, dtype=float)

    def fg(w):
        val, gh = _h(w, quartic)
        return c * val - s @ w, c * gh - s

    w = minimize(fg, np.zeros(s.size), jac=True, method="BFGS",
                 options=dict(gtol=1e-13, maxiter=10000)).x
    for _ in range(20):
        w = w - np.linalg.solve(c * _hess(w, quartic), c * _h(w, quartic)[1] - s)
    return w


def generic_nnball(c, s):
    """``argmin (c/2)||w||^2 - <s, w>`` over ``{w >= 0, ||w|| <= 1}``."""
    s = np.asarray(s, dtype=float)
    n = s.size
    cons = [{"type": "ineq", "fun": lambda w: 1.0 - w @ w, "jac": lambda w: -2.0 * w}]
    res = minimize(lambda w: (0.5 * c * (w @ w) - s @ w, c * w - s), np.full(n, 0.1 / np.sqrt(n)),
                   jac=True, method="SLSQP", bounds=[(0, None)] * n, constraints=cons,
                   options=dict(ftol=1e-16, maxiter=1000))
    return _polish_nnball(c, s, np.maximum(res.x, 0.0))


def _polish_nnball(c, s, w, iters=30):
    """Newton on the KKT equations of the active set found by SLSQP."""
    P = np.flatnonzero(w > 1e-9)
    out = np.zeros_like(w)
    if P.size == 0:
        return out
    if float(np.linalg.norm(w)) < 1.0 - 1e-6:
        out[P] = s[P] / c
        return out if np.all(out[P] > 0) else w
    x, mu = w[P].copy(), max(float((s[P] - c * w[P]) @ w[P]) / 2.0, 0.0)
    k = P.size
    for _ in range(iters):
        F = np.r_[(c + 2.0 * mu) * x - s[P], x @ x - 1.0]
        J = np.zeros((k + 1, k + 1))
        J[:k, :k] = (c + 2.0 * mu) * np.eye(k)
        J[:k, k] = 2.0 * x
        J[k, :k] = 2.0 * x
        step = np.linalg.solve(J, F)
        x, mu = x - step[:k], mu - step[k]
    out[P] = x
    return out if np.all(x > 0) and mu >= 0 else w


def l1_residual(c, lam, s, w, quartic):
    """Distance of ``0`` to ``lam d||w||_1 + c grad h(w) - s``."""
    g = s - c * _h(np.asarray(w, dtype=float), quartic)[1]
    nz = w != 0
    r = np.where(nz, g - lam * np.sign(w), np.maximum(np.abs(g) - lam, 0.0))
    return float(np.linalg.norm(r))


def nnball_residual(c, s, w, tol=1e-12):
    """KKT residual of the ball problem, including feasibility."""
    w = np.asarray(w, dtype=float)
    g = s - c * w
    feas = float(np.linalg.norm(np.minimum(w, 0.0))) + max(float(np.linalg.norm(w)) - 1.0, 0.0)
    mu = 0.0
    if float(np.linalg.norm(w)) >= 1.0 - tol:
        mu = max(float(g @ w), 0.0)
    pos = w > 0
    r = np.where(pos, g - mu * w, np.maximum(g, 0.0))
    return feas + float(np.linalg.norm(r))
