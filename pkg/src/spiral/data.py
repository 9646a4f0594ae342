"""LIBSVM text I/O and synthetic instance generators."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.linalg import hadamard

__all__ = [
    "LibsvmParseError",
    "Dataset",
    "parse_libsvm",
    "load_libsvm",
    "write_libsvm",
    "synth_lasso",
    "hadamard_phase_data",
    "spectral_init",
]


class LibsvmParseError(ValueError):
    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class Dataset:
    """Sparse rows as (0-based index, value) arrays plus labels."""

    indices: List[np.ndarray]
    values: List[np.ndarray]
    labels: np.ndarray
    n: int
    provenance: str = ""

    @property
    def N(self):
        return len(self.labels)

    def to_dense(self):
        X = np.zeros((self.N, self.n))
        for i, (idx, val) in enumerate(zip(self.indices, self.values)):
            X[i, idx] = val
        return X

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.labels, other.labels)
            and len(self.indices) == len(other.indices)
            and all(np.array_equal(a, b) for a, b in zip(self.indices, other.indices))
            and all(np.array_equal(a, b) for a, b in zip(self.values, other.values))
        )

    @classmethod
    def from_dense(cls, X, y, provenance="dense"):
        X = np.asarray(X, dtype=float)
        idx, val = [], []
        for row in X:
            nz = np.flatnonzero(row)
            idx.append(nz.astype(np.int64))
            val.append(row[nz].copy())
        return cls(idx, val, np.asarray(y, dtype=float).copy(), X.shape[1], provenance)


def _number(tok, lineno, what):
    try:
        x = float(tok)
    except ValueError:
        raise LibsvmParseError(lineno, f"non-numeric {what} {tok!r}") from None
    if not np.isfinite(x):
        raise LibsvmParseError(lineno, f"non-finite {what} {tok!r}")
    return x


def parse_libsvm(stream, n=None, provenance="stream"):
    """Parse ``label idx:val idx:val ...`` lines (1-based, strictly increasing indices)."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    indices, values, labels = [], [], []
    max_idx = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        labels.append(_number(toks[0], lineno, "label"))
        idx = np.empty(len(toks) - 1, dtype=np.int64)
        val = np.empty(len(toks) - 1)
        last = 0
        for k, tok in enumerate(toks[1:]):
            key, sep, v = tok.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, f"expected idx:val, got {tok!r}")
            try:
                j = int(key)
            except ValueError:
                raise LibsvmParseError(lineno, f"non-integer index {key!r}") from None
            if j < 1:
                raise LibsvmParseError(lineno, f"index {j} < 1")
            if j <= last:
                raise LibsvmParseError(lineno, f"index {j} not increasing")
            last = j
            idx[k] = j - 1
            val[k] = _number(v, lineno, "value")
        max_idx = max(max_idx, last)
        indices.append(idx)
        values.append(val)
    if n is None:
        n = max_idx
    elif n < max_idx:
        raise ValueError(f"dimension override {n} smaller than max index {max_idx}")
    return Dataset(indices, values, np.array(labels, dtype=float), int(n), provenance)


def load_libsvm(path, n=None):
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, n=n, provenance=str(path))


def write_libsvm(dataset, stream):
    """Serialize so that :func:`parse_libsvm` recovers the dataset exactly."""
    for lab, idx, val in zip(dataset.labels, dataset.indices, dataset.values):
        parts = [repr(float(lab))]
        parts += [f"{j + 1}:{float(x)!r}" for j, x in zip(idx, val)]
        stream.write(" ".join(parts) + "\n")


def synth_lasso(N, n, density=0.1, seed=0, lam=1.0):
    """Lasso instance with a known solution (dual-certificate construction).

    A Gaussian matrix ``B`` and a unit residual ``y*`` are drawn. Each
    column is shifted along ``y*`` so that ``<a_j, y*> = lam sign(z*_j)``
    on the support and ``|<a_j, y*>| < lam`` off it; with
    ``b = A z* + y*`` the optimality condition
    ``A^T (b - A z*) in lam d||z*||_1`` then holds by construction.
    The shift is rank one, so ``A`` keeps the conditioning of ``B``.

    Returns ``(A, b, lam, z_star)``.
    """
    if N < 1 or n < 1:
        raise ValueError("N and n must be positive")
    if not lam > 0:
        raise ValueError("lam must be positive")
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((N, n))
    ystar = rng.standard_normal(N)
    ystar /= np.linalg.norm(ystar)
    k = min(n, max(1, int(round(density * n))))
    on = np.zeros(n, dtype=bool)
    on[rng.choice(n, size=k, replace=False)] = True
    signs = rng.choice([-1.0, 1.0], size=n)
    # off-support correlations strictly inside (-0.9 lam, 0.9 lam)
    target = np.where(on, lam, rng.uniform(0.0, 0.9, size=n) * lam) * signs
    A = B + np.outer(ystar, target - B.T @ ystar)
    zstar = np.zeros(n)
    zstar[on] = rng.uniform(0.5, 1.5, size=k) * signs[on]
    b = A @ zstar + ystar
    return A, b, float(lam), zstar


def hadamard_phase_data(n, d=5, p_c=0.02, seed=0, z_true=None):
    """Phase-retrieval design ``A = [M S_1; ...; M S_d]`` with ``M`` the normalized Hadamard matrix.

    ``S_j`` are random sign diagonals, ``b_i = <a_i, z_true>^2``, and each
    measurement is independently zeroed with probability ``p_c``.
    """
    if n < 1 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")
    if d < 1:
        raise ValueError("d must be a positive integer")
    if not 0.0 <= p_c <= 1.0:
        raise ValueError("p_c must be a probability")
    rng = np.random.default_rng(seed)
    if z_true is None:
        z_true = rng.standard_normal(n)
    z_true = np.asarray(z_true, dtype=float)
    if z_true.shape != (n,):
        raise ValueError(f"z_true must have shape ({n},)")
    M = hadamard(n).astype(float) / np.sqrt(n)
    blocks = [M * rng.choice([-1.0, 1.0], size=n) for _ in range(d)]
    A = np.vstack(blocks)
    b = (A @ z_true) ** 2
    corrupt = rng.random(A.shape[0]) < p_c
    b[corrupt] = 0.0
    return A, b


def spectral_init(A, b, iters=20, seed=0):
    """Power iteration on ``(1/N) sum b_i a_i a_i^T`` scaled to the estimated signal norm."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    for _ in range(iters):
        x = A.T @ (b * (A @ x)) / A.shape[0]
        nrm = np.linalg.norm(x)
        if nrm == 0:
            break
        x /= nrm
    sq = np.einsum("ij,ij->i", A, A)
    norm2 = A.shape[1] * np.sum(b) / np.sum(sq)
    return np.sqrt(norm2) * x
