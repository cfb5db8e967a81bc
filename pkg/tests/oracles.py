"""Independent reference computations used only by the tests."""

import itertools

import numpy as np

from illab.poly import Polynomial, monomials_upto


def quadrature_coordinates(f: Polynomial, axes, nodes: int = 64, radius: float = 1.0) -> np.ndarray:
    """Newton coordinates of ``f`` on a 2-D grid by trapezoidal torus quadrature.

    ``c_alpha = (2 pi i)^-2 \\oint\\oint f(w) / prod_j prod_{i <= alpha_j} (w_j - b_j^i) dw``,
    i.e. the tensor divided difference of ``f`` on the first ``alpha_j + 1`` nodes per axis.
    """
    theta = 2 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * theta)
    w1, w2 = np.meshgrid(w, w, indexing="ij")
    values = np.asarray(f(w1, w2), dtype=complex)
    shape = tuple(len(a) for a in axes)
    out = []
    for alpha in itertools.product(*(range(n) for n in shape)):
        kernel = np.ones_like(w1)
        for j, (a, ax) in enumerate(zip(alpha, axes)):
            wj = w1 if j == 0 else w2
            for i in range(a + 1):
                kernel = kernel * (wj - ax[i])
        # dw_j = i w_j dtheta_j, so each circle contributes w_j / nodes
        out.append(np.sum(values * w1 * w2 / kernel) / nodes ** 2)
    return np.array(out)


def brute_vanishing_space(points, degree: int):
    """Nullspace (rows, monomial columns) of the evaluation matrix on monomials up to ``degree``."""
    monos = monomials_upto(degree)
    evals = np.array([[p[0] ** a[0] * p[1] ** a[1] for a in monos] for p in points], dtype=complex)
    _, s, vh = np.linalg.svd(evals)
    rank = int(np.sum(s > 1e-10 * s[0]))
    return monos, vh[rank:].conj()


def binary_roots(f: Polynomial) -> list:
    """Projective roots ``(x, y)`` of a binary quadratic form, as unit vectors."""
    a, b, c = f.coeff((2, 0)), f.coeff((1, 1)), f.coeff((0, 2))
    out = []
    if abs(a) > 1e-14:
        out.extend((r, 1.0) for r in np.roots([a, b, c]))
    else:
        out.append((1.0, 0.0))
        if abs(b) > 1e-14:
            out.append((-c / b, 1.0))
        else:
            out.append((1.0, 0.0))
    return [np.array(v, dtype=complex) / np.linalg.norm(v) for v in out]


def share_projective_root(f: Polynomial, g: Polynomial, tol: float = 1e-6) -> bool:
    for u in binary_roots(f):
        for v in binary_roots(g):
            if abs(u[0] * v[1] - u[1] * v[0]) < tol:
                return True
    return False


def random_frame(rng, d: int, k: int) -> np.ndarray:
    m = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    q, _ = np.linalg.qr(m)
    return q[:, :k]


def random_unitary(rng, d: int) -> np.ndarray:
    return random_frame(rng, d, d)


def well_conditioned_matrix(rng, limit: float = 1e3) -> np.ndarray:
    while True:
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if np.linalg.cond(a) <= limit:
            return a
