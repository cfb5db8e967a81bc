"""Explicit ideal members along a family, used to cross-check computed limits.

Two sources: cubic witnesses built from a normalized frame (one per cubic
monomial) and the three quadratic members of the four-point family
``{(0,0), (eps,0), (rho, delta*rho), (0, beta)}``.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DegenerateDirections
from .geometry import CHORDAL_TOL, PointFamily, Schedule, chordal_distance, limit_directions, normalize_frame
from .poly import Polynomial, monomials_of_degree

VANISH_RTOL = 1e-9

z1 = Polynomial.variable(0)
z2 = Polynomial.variable(1)


def relative_residual(p: Polynomial, point) -> float:
    """``|p(a)| / sum |c_alpha a^alpha|``: size of the value against the size of its terms."""
    a = [complex(c) for c in point]
    terms = [abs(c) * abs(a[0]) ** e[0] * abs(a[1]) ** e[1] for e, c in p.terms.items()]
    denom = max(sum(terms), 1e-300)
    return abs(p(a[0], a[1])) / denom


def separating_vertex(fam: PointFamily, sch: Schedule, tol: float = CHORDAL_TOL) -> tuple[int, int, int]:
    """First ``(i, j, k)`` (1-based) with distinct limit directions ``v_ij`` and ``v_ik``."""
    dirs = limit_directions(fam, sch)
    for i in range(1, 5):
        others = [m for m in range(1, 5) if m != i]
        for j, k in itertools.combinations(others, 2):
            if chordal_distance(dirs[tuple(sorted((i, j)))], dirs[tuple(sorted((i, k)))]) >= tol:
                return i, j, k
    raise DegenerateDirections("all limit directions coincide")


def cubic_witnesses(points, order=(1, 2, 3, 4)) -> list[Polynomial]:
    """Four cubics vanishing on the points of a normalized frame.

    ``points`` must already be translated so ``a_i = 0`` and mapped so that
    ``a_j - a_i`` tends to the z1-axis and ``a_k - a_i`` to the z2-axis;
    ``order`` lists ``(i, j, k, l)`` (1-based).  The limits are
    ``z1^3, z1^2 z2, z1 z2^2, z2^3``.
    """
    _, j, k, l = (o - 1 for o in order)
    pts = [tuple(complex(c) for c in p) for p in points]
    rho2, delta2 = pts[j]
    delta3, rho3 = pts[k]
    x4, y4 = pts[l]
    along1 = z1 - (delta3 / rho3) * z2   # through a_i and a_k
    along2 = z2 - (delta2 / rho2) * z1   # through a_i and a_j
    return [
        along1 * (z1 - rho2) * (z1 - x4),
        along1 * (z1 - rho2) * (z2 - y4),
        along1 * along2 * (z2 - y4),
        along2 * (z2 - rho3) * (z2 - y4),
    ]


def witness_check(fam: PointFamily, sch: Schedule) -> dict:
    """Vanishing of the cubic witnesses on every sample and distance of their coefficients to the monomials."""
    i, j, k = separating_vertex(fam, sch)
    l = next(m for m in range(1, 5) if m not in (i, j, k))
    matrix, normalized = normalize_frame(fam, i, j, k, sch)
    targets = [Polynomial.monomial(a) for a in monomials_of_degree(3)]  # z1^3, z1^2 z2, z1 z2^2, z2^3
    residual = 0.0
    distances = []
    for eps in sch.samples:
        pts = normalized.points(eps)
        ws = cubic_witnesses(pts, (i, j, k, l))
        residual = max(residual, max(relative_residual(w, p) for w in ws for p in pts))
        distances.append(max((w - t).norm() for w, t in zip(ws, targets)))
    return {
        "frame": [i, j, k],
        "matrix": [[[complex(x).real, complex(x).imag] for x in row] for row in np.asarray(matrix)],
        "max_relative_residual": residual,
        "limit_distances": distances,
        "limits": [t.to_text() for t in targets],
    }


def prop44_members(eps: complex, rho: complex, delta: complex, beta: complex) -> dict[str, Polynomial]:
    """Quadratic members of the ideal of ``{(0,0), (eps,0), (rho, delta*rho), (0, beta)}``."""
    q_slope = delta / (rho - eps)
    q_mid = q_slope * (delta * rho - beta)
    q = (eps * q_mid) * z1 - beta * z2 - q_mid * z1 ** 2 + z2 ** 2
    ratio = (rho - eps) / (delta * beta)
    shifted = delta * rho / beta - 1
    p = -eps * z1 + (ratio * beta / shifted) * z2 + z1 ** 2 - (ratio / shifted) * z2 ** 2
    r_coef = (delta * beta / eps) * shifted * (eps / (rho - eps))
    r = (r_coef * eps) * z1 - beta * z2 - r_coef * z1 ** 2 + z2 ** 2
    return {"Q": q, "P": p, "R": r}


def prop44_points(eps, rho, delta, beta) -> list[tuple[complex, complex]]:
    return [(0, 0), (eps, 0), (rho, delta * rho), (0, beta)]


def prop44_check(samples, params_at) -> dict:
    """Relative residuals of the three members at the four points for each sample.

    ``params_at(eps)`` returns ``(rho, delta, beta)``.
    """
    worst = {"Q": 0.0, "P": 0.0, "R": 0.0}
    for eps in samples:
        rho, delta, beta = (complex(v) for v in params_at(eps))
        members = prop44_members(complex(eps), rho, delta, beta)
        for name, poly in members.items():
            for pt in prop44_points(complex(eps), rho, delta, beta):
                worst[name] = max(worst[name], relative_residual(poly, pt))
    return {"max_relative_residual": worst, "passed": all(v <= VANISH_RTOL for v in worst.values())}
