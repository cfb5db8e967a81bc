"""Green-function side: line products, complete-intersection maps and log-gap statistics.

Everything lives on the unit bidisk.  No Green function is ever solved for;
the module only produces explicit candidates, bounds and sampled gaps.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .errors import (CoincidentPoints, ExtraCommonZeros, NotConverging, OriginSingularity, PoleHit,
                     ZeroOnSphere)
from .geometry import CHORDAL_TOL, PointFamily, ProjectiveDirection, Schedule, chordal_distance
from .poly import Polynomial, resultant_binary_quadratics

RESULTANT_TOL = 1e-8
SPHERE_MIN_NORM = 1e-6
MATCH_RTOL = 1e-6
COEFF_CONV_TOL = 1e-3
PAIRS = ((1, 2), (1, 3), (2, 3))
PRODUCT_LINES = {1: ((1, 2), (3, 4)), 2: ((1, 3), (2, 4)), 3: ((1, 4), (2, 3))}

# generic shear used before eliminating z1; irrational-looking entries avoid
# accidental alignment with the coordinate axes of the test families
_SHEAR = np.array([[1.0, 0.3183098861 + 0.1414213562j], [-0.2718281828 + 0.0577350269j, 1.0]])


# -- lines and products ------------------------------------------------------------

def _canonical_phase(u1: complex, u2: complex) -> complex:
    pivot = u1 if abs(u1) >= abs(u2) * (1 - 1e-12) else u2
    return pivot.conjugate() / abs(pivot)


@dataclass(frozen=True)
class AffineLine:
    """``l(z) = u1 z1 + u2 z2 + c`` with ``|(u1, u2)| = 1``."""

    u: tuple
    c: complex = 0j

    def __call__(self, z1, z2):
        return self.u[0] * z1 + self.u[1] * z2 + self.c

    def polynomial(self) -> Polynomial:
        return Polynomial.linear(self.u, self.c)

    def to_json(self) -> dict:
        return {"u": [[complex(x).real, complex(x).imag] for x in self.u],
                "c": [complex(self.c).real, complex(self.c).imag]}


def line_equation(p: Sequence[complex], q: Sequence[complex]) -> AffineLine:
    """Normalized equation of the complex line through ``p`` and ``q``."""
    p = [complex(x) for x in p]
    q = [complex(x) for x in q]
    w = (q[0] - p[0], q[1] - p[1])
    nrm = math.hypot(abs(w[0]), abs(w[1]))
    scale = max(math.hypot(abs(p[0]), abs(p[1])), math.hypot(abs(q[0]), abs(q[1])))
    if nrm == 0 or nrm <= 1e-12 * scale:
        raise CoincidentPoints("a line needs two distinct points")
    u1, u2 = w[1] / nrm, -w[0] / nrm
    phase = _canonical_phase(u1, u2)
    u1, u2 = u1 * phase, u2 * phase
    return AffineLine((u1, u2), -(u1 * p[0] + u2 * p[1]))


def line_through_origin(v: ProjectiveDirection) -> AffineLine:
    """Limit line with direction ``v`` through the origin."""
    return line_equation((0, 0), v.rep)


def pairing_products(points) -> tuple[Polynomial, Polynomial, Polynomial]:
    """``(l12 l34, l13 l24, l14 l23)`` for four points (1-based labels)."""
    pts = [tuple(complex(c) for c in p) for p in points]
    if len(pts) != 4:
        raise ValueError("pairing products need exactly four points")
    out = []
    for k in (1, 2, 3):
        (i, j), (m, n) = PRODUCT_LINES[k]
        out.append(line_equation(pts[i - 1], pts[j - 1]).polynomial()
                   * line_equation(pts[m - 1], pts[n - 1]).polynomial())
    return tuple(out)


def family_products(fam: PointFamily, eps) -> tuple[Polynomial, Polynomial, Polynomial]:
    return pairing_products(fam.points(eps))


def limit_products(dirs: dict) -> tuple[Polynomial, Polynomial, Polynomial]:
    """Limits of the pairing products from the six limit directions (keys ``(i, j)``, 1-based)."""
    out = []
    for k in (1, 2, 3):
        a, b = PRODUCT_LINES[k]
        out.append(line_through_origin(dirs[a]).polynomial() * line_through_origin(dirs[b]).polynomial())
    return tuple(out)


def _intersect(xs: Sequence[ProjectiveDirection], ys: Sequence[ProjectiveDirection], tol: float) -> list:
    out: list[ProjectiveDirection] = []
    for x in xs:
        if any(chordal_distance(x, y) < tol for y in ys) and not any(chordal_distance(x, o) < tol for o in out):
            out.append(x)
    return out


def independence_sets(dirs: dict, tol: float = CHORDAL_TOL) -> tuple[list, list, list]:
    """Shared limit directions between the line pairs of the three products.

    ``A1`` compares products 2 and 1, ``A2`` products 2 and 3, ``A3``
    products 1 and 3.  An empty set means the two products have no common
    factor direction.
    """
    sets = {k: [dirs[p] for p in PRODUCT_LINES[k]] for k in (1, 2, 3)}
    return (_intersect(sets[2], sets[1], tol), _intersect(sets[2], sets[3], tol),
            _intersect(sets[1], sets[3], tol))


def _forms_resultant(f: Polynomial, g: Polynomial) -> float:
    return abs(resultant_binary_quadratics(f.homogeneous_part(2), g.homogeneous_part(2)))


def independent_pair(f_limits: Sequence[Polynomial], tol: float = RESULTANT_TOL) -> tuple[int, int] | None:
    """First pair ``(i, j)`` whose leading quadratics have no common projective root."""
    for i, j in PAIRS:
        if _forms_resultant(f_limits[i - 1], f_limits[j - 1]) > tol:
            return (i, j)
    return None


# -- complete-intersection maps ------------------------------------------------------

@dataclass
class CIMap:
    """A pair of quadratics and its limit pair."""

    pair: tuple
    g: Polynomial | None
    h: Polynomial | None
    g0: Polynomial
    h0: Polynomial

    @property
    def resultant(self) -> complex:
        return resultant_binary_quadratics(self.g0.homogeneous_part(2), self.h0.homogeneous_part(2))

    def limit_norm(self, z1, z2):
        return np.hypot(np.abs(self.g0(z1, z2)), np.abs(self.h0(z1, z2)))

    def to_json(self) -> dict:
        return {"pair": list(self.pair), "limit": [self.g0.to_text(), self.h0.to_text()],
                "resultant_abs": abs(self.resultant)}


def _sylvester_det(g_coeffs, h_coeffs) -> complex:
    a, b, c = g_coeffs
    d, e, f = h_coeffs
    m = np.array([[a, b, c, 0], [0, a, b, c], [d, e, f, 0], [0, d, e, f]], dtype=complex)
    return complex(np.linalg.det(m))


def _in_x1(p: Polynomial, x2: complex) -> list[complex]:
    """Coefficients (x1^2, x1, 1) of ``p(x1, x2)`` for fixed ``x2``."""
    out = [0j, 0j, 0j]
    for (e1, e2), c in p.terms.items():
        out[2 - e1] += c * x2 ** e2
    return out


def common_zeros(g: Polynomial, h: Polynomial, scale: float = 1.0) -> list[tuple[complex, complex]]:
    """Finite common zeros of two polynomials of degree <= 2 in (z1, z2).

    Coordinates are rescaled by ``scale`` and sheared generically, ``x1`` is
    eliminated with the Sylvester resultant (sampled on the unit circle and
    recovered by FFT), the degree <= 4 univariate resultant is solved through
    its companion matrix, and each root is back-substituted and polished with
    Newton steps.  A resultant that vanishes identically means a common curve
    and raises :class:`ExtraCommonZeros`.
    """
    if max(g.degree, h.degree) > 2:
        raise ValueError("common_zeros handles polynomials of degree <= 2")
    m = _SHEAR * scale
    gs, hs = g.compose_linear(m), h.compose_linear(m)
    gs = gs / max(gs.max_coeff(), 1e-300)
    hs = hs / max(hs.max_coeff(), 1e-300)
    nodes = np.exp(2j * np.pi * np.arange(16) / 16)
    vals = np.array([_sylvester_det(_in_x1(gs, t), _in_x1(hs, t)) for t in nodes])
    coeffs = np.fft.fft(vals) / len(nodes)  # coeffs[k] multiplies x2^k
    coeffs = coeffs[:5]
    top = np.max(np.abs(coeffs))
    if top < 1e-12:
        raise ExtraCommonZeros("the two polynomials share a common factor", roots=None)
    coeffs[np.abs(coeffs) < 1e-13 * top] = 0
    poly = np.trim_zeros(coeffs[::-1], "f")
    roots2 = np.roots(poly) if len(poly) > 1 else np.array([])
    out = []
    for x2 in roots2:
        cand = []
        for p in (gs, hs):
            a, b, c = _in_x1(p, x2)
            cand.extend(np.roots(np.trim_zeros(np.array([a, b, c]), "f")) if (abs(a) + abs(b)) > 0 else [])
        if not cand:
            continue
        x1 = min(cand, key=lambda x: abs(gs(x, x2)) + abs(hs(x, x2)))
        x = np.array([x1, x2], dtype=complex)
        x = _newton_polish(gs, hs, x)
        z = m @ x
        out.append((complex(z[0]), complex(z[1])))
    return out


def _newton_polish(g: Polynomial, h: Polynomial, x: np.ndarray, steps: int = 3) -> np.ndarray:
    grads = [[_partial(p, j) for j in range(2)] for p in (g, h)]
    for _ in range(steps):
        f = np.array([g(*x), h(*x)])
        jac = np.array([[grads[r][c](*x) for c in range(2)] for r in range(2)])
        if abs(np.linalg.det(jac)) < 1e-14:
            break
        x = x - np.linalg.solve(jac, f)
    return x


def _partial(p: Polynomial, j: int) -> Polynomial:
    terms = {}
    for a, c in p.terms.items():
        if a[j]:
            b = list(a)
            b[j] -= 1
            terms[tuple(b)] = c * a[j]
    return Polynomial(terms, p.n)


def verify_common_zeros(g: Polynomial, h: Polynomial, points, match_tol: float) -> dict:
    """Match the common zeros of ``(g, h)`` inside the bidisk with ``points``.

    Raises :class:`ExtraCommonZeros` listing zeros in the open bidisk that are
    not within ``match_tol`` of a given point.
    """
    pts = [tuple(complex(c) for c in p) for p in points]
    scale = max(max(abs(c) for c in p) for p in pts) or 1.0
    roots = common_zeros(g, h, scale)
    inside = [r for r in roots if abs(r[0]) < 1 and abs(r[1]) < 1]
    errors = []
    matched = set()
    extra = []
    for r in inside:
        dists = [math.hypot(abs(r[0] - p[0]), abs(r[1] - p[1])) for p in pts]
        k = int(np.argmin(dists))
        if dists[k] <= match_tol:
            matched.add(k)
            errors.append(dists[k])
        else:
            extra.append(r)
    if extra:
        raise ExtraCommonZeros(f"{len(extra)} common zero(s) inside the bidisk are not poles: "
                               + ", ".join(f"({r[0]:.6g}, {r[1]:.6g})" for r in extra), roots=extra)
    return {"n_zeros": len(inside), "matched": sorted(k + 1 for k in matched),
            "max_match_error": max(errors) if errors else None,
            "all_matched": len(matched) == len(pts) and len(inside) == len(pts)}


def _aligned_distance(p: Polynomial, q: Polynomial) -> float:
    """Coefficient distance after the best unit-phase alignment of ``p`` to ``q``."""
    keys = sorted(set(p.terms) | set(q.terms))
    a = np.array([p.coeff(k) for k in keys])
    b = np.array([q.coeff(k) for k in keys])
    inner = np.vdot(a, b)
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.linalg.norm(a * phase - b))


def _local_comparability(g: Polynomial, h: Polynomial, points) -> float:
    """Max over small circles around each pole of |log|Psi(z)| - log|z - a||."""
    pts = [np.array([complex(c) for c in p]) for p in points]
    sep = min(np.linalg.norm(p - q) for p, q in itertools.combinations(pts, 2))
    r = 1e-3 * sep
    theta = 2 * np.pi * np.arange(16) / 16
    worst = 0.0
    for a in pts:
        for direction in (np.array([1, 0]), np.array([0, 1]), np.array([1, 1j]) / math.sqrt(2)):
            z1 = a[0] + r * np.exp(1j * theta) * direction[0]
            z2 = a[1] + r * np.exp(1j * theta) * direction[1]
            norm = np.hypot(np.abs(g(z1, z2)), np.abs(h(z1, z2)))
            worst = max(worst, float(np.max(np.abs(np.log(norm) - math.log(r)))))
    return worst


@dataclass
class UCIReport:
    pair: tuple
    samples: list = field(default_factory=list)
    coefficient_distances: list = field(default_factory=list)
    comparability: list = field(default_factory=list)
    verified: bool = False

    def to_json(self) -> dict:
        return {"pair": list(self.pair), "verified": self.verified, "samples": self.samples,
                "coefficient_distances": self.coefficient_distances,
                "local_comparability": self.comparability}


def uci_verify(fam: PointFamily, sch: Schedule, pair: tuple[int, int], limits: Sequence[Polynomial],
               match_rtol: float = MATCH_RTOL, conv_tol: float = COEFF_CONV_TOL) -> UCIReport:
    """Check the uniform complete intersection conditions along the schedule.

    For every sample the common zeros of ``(f_i, f_j)`` inside the bidisk must
    be exactly the four points (within ``match_rtol`` times the configuration
    size); the coefficients must approach ``limits`` and the final distance
    must be below ``conv_tol``.  Local comparability constants are reported.
    """
    i, j = pair
    report = UCIReport(tuple(pair))
    for eps in sch.samples:
        pts = fam.points(eps)
        size = float(np.max(np.abs(pts)))
        products = pairing_products(pts)
        g, h = products[i - 1], products[j - 1]
        info = verify_common_zeros(g, h, pts, match_rtol * size)
        info["eps"] = complex(eps).real if complex(eps).imag == 0 else str(complex(eps))
        report.samples.append(info)
        report.coefficient_distances.append(
            max(_aligned_distance(g, limits[i - 1]), _aligned_distance(h, limits[j - 1])))
        report.comparability.append(_local_comparability(g, h, pts))
    dists = report.coefficient_distances
    if dists[-1] > conv_tol or dists[-1] > dists[0]:
        raise NotConverging(f"coefficients of f{i}, f{j} do not approach their limits "
                            f"(last distance {dists[-1]:.3e})")
    report.verified = all(s["all_matched"] for s in report.samples)
    return report


# -- gap statistics -------------------------------------------------------------------

def green_candidate(z1, z2):
    """``2 max(log|z1|, log|z2|)``; vectorized."""
    m = np.maximum(np.abs(z1), np.abs(z2))
    if np.any(m == 0):
        raise OriginSingularity("the candidate has its pole at the origin")
    out = 2 * np.log(m)
    return float(out) if np.ndim(out) == 0 else out


def torus_sample(n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    theta = 2 * np.pi * np.arange(n) / n
    t1, t2 = np.meshgrid(theta, theta, indexing="ij")
    return np.exp(1j * t1).ravel(), np.exp(1j * t2).ravel()


def sphere_sample(n: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic low-discrepancy points on the unit sphere of C^2 (Hopf coordinates)."""
    u = qmc.Halton(d=3, scramble=False).random(n + 1)[1:]
    r1 = np.sqrt(u[:, 0])
    r2 = np.sqrt(1 - u[:, 0])
    return r1 * np.exp(2j * np.pi * u[:, 1]), r2 * np.exp(2j * np.pi * u[:, 2])


def _shared_root(f: Polynomial, g: Polynomial) -> tuple[complex, complex]:
    """Unit representative of a projective root shared (approximately) by two binary forms."""
    cands = []
    for p in (f, g):
        a, b, c = p.coeff((2, 0)), p.coeff((1, 1)), p.coeff((0, 2))
        if abs(a) > 1e-14 * max(abs(b), abs(c), 1e-300):
            cands.extend((r, 1) for r in np.roots([a, b, c]))
        else:
            cands.append((1, 0))
            if abs(b) > 0:
                cands.append((-c / b, 1))
    def badness(v):
        n = math.hypot(abs(v[0]), abs(v[1]))
        w = (v[0] / n, v[1] / n)
        return abs(f(*w)) + abs(g(*w))
    v = min(cands, key=badness)
    n = math.hypot(abs(v[0]), abs(v[1]))
    return (complex(v[0]) / n, complex(v[1]) / n)


@dataclass
class GapReport:
    n_samples: int
    min: float
    max: float
    mean: float
    certified_bounded: bool
    min_norm_on_sphere: float
    kinds: np.ndarray = field(repr=False, default=None)
    z1: np.ndarray = field(repr=False, default=None)
    z2: np.ndarray = field(repr=False, default=None)
    gaps: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {"n_samples": self.n_samples, "min": self.min, "max": self.max, "mean": self.mean,
                "certified_bounded": self.certified_bounded,
                "min_norm_on_sphere": self.min_norm_on_sphere}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "z1_re", "z1_im", "z2_re", "z2_im", "gap"])
            for k, a, b, gap in zip(self.kinds, self.z1, self.z2, self.gaps):
                w.writerow([k, repr(a.real), repr(a.imag), repr(b.real), repr(b.imag), repr(float(gap))])


def gap_report(psi0, torus_n: int = 64, sphere_n: int = 1000,
               min_norm: float = SPHERE_MIN_NORM) -> GapReport:
    """Statistics of ``log|Psi0(z)| - 2 max log|z_i|`` on the torus and sphere samples.

    ``psi0`` is a :class:`CIMap` or a pair of polynomials; their degree-2
    homogeneous parts are used.
    """
    g0, h0 = (psi0.g0, psi0.h0) if isinstance(psi0, CIMap) else psi0
    f, g = g0.homogeneous_part(2), h0.homogeneous_part(2)
    scale = max(f.max_coeff(), 1e-300) * max(g.max_coeff(), 1e-300)
    res = resultant_binary_quadratics(f, g)
    if abs(res) <= RESULTANT_TOL * scale ** 2:
        point = _shared_root(f, g)
        raise ZeroOnSphere(f"Psi0 vanishes on the line through ({point[0]:.6g}, {point[1]:.6g})",
                           point=point)
    t1, t2 = torus_sample(torus_n)
    s1, s2 = sphere_sample(sphere_n)
    z1 = np.concatenate([t1, s1])
    z2 = np.concatenate([t2, s2])
    kinds = np.array(["torus"] * len(t1) + ["sphere"] * len(s1))
    norm = np.hypot(np.abs(f(z1, z2)), np.abs(g(z1, z2)))
    if np.any(norm == 0):
        k = int(np.argmin(norm))
        raise ZeroOnSphere("a sample point annihilates Psi0", point=(complex(z1[k]), complex(z2[k])))
    gaps = np.log(norm) - green_candidate(z1, z2)
    radius = np.hypot(np.abs(z1), np.abs(z2))
    on_sphere = norm / radius ** 2
    smallest = float(np.min(on_sphere))
    return GapReport(len(gaps), float(np.min(gaps)), float(np.max(gaps)), float(np.mean(gaps)),
                     bool(smallest > min_norm and np.all(np.isfinite(gaps))), smallest,
                     kinds, z1, z2, gaps)


# -- explicit envelopes -----------------------------------------------------------------

def _mobius(a: complex, w):
    return (w - a) / (1 - np.conj(a) * w)


def pole_green(a: Sequence[complex], z1, z2):
    """One-pole Green function of the unit bidisk with pole ``a``."""
    return np.maximum(np.log(np.abs(_mobius(complex(a[0]), z1))), np.log(np.abs(_mobius(complex(a[1]), z2))))


def bidisk_pole_bounds(points, z: Sequence[complex]) -> tuple[float, float]:
    """Sum and minimum of the one-pole Green functions at ``z``."""
    pts = [tuple(complex(c) for c in p) for p in points]
    if any(abs(c) >= 1 for p in pts for c in p):
        raise ValueError("poles must lie in the open bidisk")
    z1, z2 = complex(z[0]), complex(z[1])
    values = []
    for p in pts:
        if abs(z1 - p[0]) == 0 and abs(z2 - p[1]) == 0:
            raise PoleHit(f"z coincides with the pole {p}")
        with np.errstate(divide="ignore"):
            values.append(float(pole_green(p, z1, z2)))
    return float(sum(values)), float(min(values))


def ideal_green_candidate(generators: Sequence[Polynomial], z1, z2):
    """``log max_k |g_k(z)|`` over the given generators."""
    vals = np.max(np.array([np.abs(g(z1, z2)) for g in generators]), axis=0)
    with np.errstate(divide="ignore"):
        out = np.log(vals)
    return float(out) if np.ndim(out) == 0 else out
