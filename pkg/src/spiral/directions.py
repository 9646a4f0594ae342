"""Limited-memory BFGS directions on the forward-backward residual."""

from __future__ import annotations

from collections import deque

import numpy as np

__all__ = ["LbfgsMemory", "push_pair", "direction", "safeguard"]


class LbfgsMemory:
    """Ring buffer of at most ``m`` curvature pairs ``(dz, dr)``."""

    def __init__(self, m=5, curvature_tol=1e-12):
        if m < 1:
            raise ValueError("memory size must be at least 1")
        self.m = m
        self.curvature_tol = curvature_tol
        self.pairs = deque(maxlen=m)

    def __len__(self):
        return len(self.pairs)

    def reset(self):
        self.pairs.clear()

    def push(self, dz, dr):
        """Store ``(dz, dr)`` if it passes the curvature guard; return whether stored."""
        dz = np.array(dz, dtype=float)
        dr = np.array(dr, dtype=float)
        if dz.shape != dr.shape:
            raise ValueError("pair vectors must have the same shape")
        curv = float(dz @ dr)
        if curv <= self.curvature_tol * np.linalg.norm(dz) * np.linalg.norm(dr):
            return False
        self.pairs.append((dz, dr, 1.0 / curv))
        return True

    def apply(self, r):
        """Two-loop recursion: return ``H r`` for the inverse-Jacobian estimate ``H``."""
        q = np.array(r, dtype=float)
        if not self.pairs:
            return q
        alphas = []
        for dz, dr, rho in reversed(self.pairs):
            a = rho * float(dz @ q)
            alphas.append(a)
            q -= a * dr
        dz, dr, rho = self.pairs[-1]
        q *= float(dz @ dr) / float(dr @ dr)
        for (dz, dr, rho), a in zip(self.pairs, reversed(alphas)):
            bb = rho * float(dr @ q)
            q += (a - bb) * dz
        return q


def push_pair(mem, z_prev, z_cur, r_prev, r_cur):
    z_prev, z_cur = np.asarray(z_prev, dtype=float), np.asarray(z_cur, dtype=float)
    r_prev, r_cur = np.asarray(r_prev, dtype=float), np.asarray(r_cur, dtype=float)
    if not (z_prev.shape == z_cur.shape == r_prev.shape == r_cur.shape):
        raise ValueError("vectors must have the same dimension")
    mem.push(z_cur - z_prev, r_cur - r_prev)
    return mem


def direction(mem, r):
    """Quasi-Newton direction ``d = -B r``; ``-r`` for an empty memory."""
    return -mem.apply(r)


def safeguard(d, z, v, D):
    """Rescale ``d`` so that ``||d|| <= D ||z - v||``."""
    if not D > 0:
        raise ValueError("safeguard constant must be positive")
    d = np.asarray(d, dtype=float)
    bound = D * float(np.linalg.norm(np.asarray(z, dtype=float) - v))
    nd = float(np.linalg.norm(d))
    if nd > bound:
        if nd == 0.0 or bound == 0.0:
            return np.zeros_like(d)
        return d * (bound / nd)
    return d
