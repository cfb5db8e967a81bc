"""Precision-generic dense kernels.

The limit pipeline runs either in double precision (numpy ``complex128``) or
in extended precision (numpy ``object`` arrays of ``mpmath.mpc``).  Only the
handful of operations needed by the frame and direction code live here, written
once so both precisions share a single code path.
"""

from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np

EXTENDED_DPS = 40


class Context:
    """Scalar functions for one precision mode."""

    def __init__(self, precision: str = "double", dps: int = EXTENDED_DPS):
        if precision not in ("double", "extended"):
            raise ValueError(f"unknown precision {precision!r}")
        self.precision = precision
        self.extended = precision == "extended"
        if self.extended:
            self.mp = mpmath.mp.clone()
            self.mp.dps = dps

    # scalars
    def num(self, x):
        if self.extended:
            if isinstance(x, (int, float)):
                return self.mp.mpc(x)
            if isinstance(x, complex):
                return self.mp.mpc(x.real, x.imag)
            return self.mp.mpc(x)
        return complex(x)

    def sqrt(self, x):
        return self.mp.sqrt(x) if self.extended else cmath.sqrt(x)

    def exp(self, x):
        return self.mp.exp(x) if self.extended else cmath.exp(x)

    def sin(self, x):
        return self.mp.sin(x) if self.extended else cmath.sin(x)

    def cos(self, x):
        return self.mp.cos(x) if self.extended else cmath.cos(x)

    def log(self, x):
        return self.mp.log(x) if self.extended else cmath.log(x)

    @property
    def pi(self):
        return self.mp.pi if self.extended else math.pi

    def root(self, x, q: int):
        """Principal q-th root."""
        if q == 1:
            return x
        if self.extended:
            return self.mp.root(x, q) if self.mp.im(x) == 0 and self.mp.re(x) > 0 else x ** (self.mp.mpf(1) / q)
        x = complex(x)
        if x.imag == 0 and x.real > 0:
            return complex(x.real ** (1.0 / q))
        return x ** (1.0 / q)

    def real_abs(self, x):
        return abs(x)

    # arrays
    def array(self, rows):
        if self.extended:
            return np.array([[self.num(v) for v in row] for row in rows], dtype=object)
        return np.array(rows, dtype=complex)

    def zeros(self, shape):
        if self.extended:
            out = np.empty(shape, dtype=object)
            out.fill(self.mp.mpc(0))
            return out
        return np.zeros(shape, dtype=complex)

    def eye(self, k):
        out = self.zeros((k, k))
        for i in range(k):
            out[i, i] = self.num(1)
        return out

    def to_complex(self, a) -> np.ndarray:
        if self.extended:
            return np.vectorize(lambda v: complex(v), otypes=[complex])(a)
        return np.asarray(a, dtype=complex)


def conj_t(a: np.ndarray) -> np.ndarray:
    if a.dtype == object:
        return np.vectorize(lambda v: v.conjugate(), otypes=[object])(a).T
    return a.conj().T


def forward_substitution(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``lower @ x = rhs`` for lower-triangular ``lower``."""
    n = lower.shape[0]
    x = np.empty_like(rhs)
    for i in range(n):
        acc = rhs[i].copy()
        for j in range(i):
            acc = acc - lower[i, j] * x[j]
        x[i] = acc / lower[i, i]
    return x


def projector(ctx: Context, basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span of ``basis`` (full column rank).

    Modified Gram-Schmidt with one reorthogonalisation pass.
    """
    d, k = basis.shape
    q = ctx.zeros((d, k))
    for j in range(k):
        v = basis[:, j].copy()
        for _ in range(2):
            for i in range(j):
                v = v - (conj_t(q[:, i:i + 1]) @ v.reshape(d, 1))[0, 0] * q[:, i]
        nrm = sum(abs(x) ** 2 for x in v)
        nrm = ctx.mp.sqrt(nrm) if ctx.extended else math.sqrt(nrm)
        q[:, j] = v / nrm
    if k == 0:
        return ctx.zeros((d, d))
    return q @ conj_t(q)


def neville_at_zero(hs, mats):
    """Polynomial extrapolation to ``h = 0`` through ``(hs[i], mats[i])``."""
    p = [m.copy() for m in mats]
    n = len(hs)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (hs[i + m] * p[i] - hs[i] * p[i + 1]) / (hs[i + m] - hs[i])
    return p[0]


def top_frame(ctx: Context, proj: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal frame (complex128, d x k) of the top-k eigenspace of a near-projector."""
    d = proj.shape[0]
    if k == 0:
        return np.zeros((d, 0), dtype=complex)
    if ctx.extended:
        herm = (proj + conj_t(proj)) / 2
        m = ctx.mp.matrix(herm.tolist())
        evals, evecs = ctx.mp.eigh(m)
        order = sorted(range(d), key=lambda i: ctx.mp.re(evals[i]), reverse=True)[:k]
        frame = np.array([[complex(evecs[r, c]) for c in order] for r in range(d)], dtype=complex)
        q, _ = np.linalg.qr(frame)
        return q
    herm = (proj + proj.conj().T) / 2
    _, vecs = np.linalg.eigh(herm)
    return vecs[:, ::-1][:, :k]
