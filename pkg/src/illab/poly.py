"""Sparse complex polynomials and zero-dimensional ideals.

Polynomials are stored as ``{exponent tuple: complex coefficient}``.  Ideals are
handled numerically through truncated Macaulay spaces: the span of all
multiples ``m * g`` of the generators up to a degree cap, brought to reduced row
echelon form with columns ordered by decreasing graded-lex monomial.  Pivot
columns are leading monomials, the remaining low-degree monomials form the
staircase (standard monomials) of the quotient.
"""

from __future__ import annotations

import itertools
import math
import re
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapTooSmall, DuplicatePoints, NotHomogeneous

RANK_RTOL = 1e-9
CLEANUP_RTOL = 1e-10
MEMBERSHIP_RTOL = 1e-8

INFINITE = math.inf


def grlex_key(alpha: Sequence[int]) -> tuple:
    """Sort key: larger key means larger monomial in graded lex with z1 > z2 > ..."""
    return (sum(alpha), tuple(alpha))


def monomials_upto(degree: int, n: int = 2) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree <= ``degree``, largest (grlex) first."""
    out = [a for a in itertools.product(range(degree + 1), repeat=n) if sum(a) <= degree]
    out.sort(key=grlex_key, reverse=True)
    return out


def monomials_of_degree(degree: int, n: int = 2) -> list[tuple[int, ...]]:
    return [a for a in monomials_upto(degree, n) if sum(a) == degree]


def divides(a: Sequence[int], b: Sequence[int]) -> bool:
    return all(x <= y for x, y in zip(a, b))


class Polynomial:
    """A sparse polynomial in ``n`` complex variables (``n = 2`` by default)."""

    __slots__ = ("terms", "n")

    def __init__(self, terms: Mapping[Sequence[int], complex] | None = None, n: int = 2):
        self.n = n
        self.terms: dict[tuple[int, ...], complex] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(e) for e in alpha)
            if len(alpha) != n or any(e < 0 for e in alpha):
                raise ValueError(f"bad exponent {alpha} for n={n}")
            c = complex(c)
            if c != 0:
                self.terms[alpha] = self.terms.get(alpha, 0) + c
        self.terms = {a: c for a, c in self.terms.items() if c != 0}

    @classmethod
    def monomial(cls, alpha: Sequence[int], coeff: complex = 1.0) -> "Polynomial":
        return cls({tuple(alpha): coeff}, n=len(alpha))

    @classmethod
    def constant(cls, c: complex, n: int = 2) -> "Polynomial":
        return cls({(0,) * n: c}, n=n)

    @classmethod
    def variable(cls, j: int, n: int = 2) -> "Polynomial":
        alpha = [0] * n
        alpha[j] = 1
        return cls({tuple(alpha): 1.0}, n=n)

    @classmethod
    def linear(cls, u: Sequence[complex], c: complex = 0.0) -> "Polynomial":
        """``u[0] z1 + u[1] z2 + ... + c``."""
        n = len(u)
        terms = {(0,) * n: c}
        for j, uj in enumerate(u):
            alpha = [0] * n
            alpha[j] = 1
            terms[tuple(alpha)] = uj
        return cls(terms, n=n)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.constant(other, self.n)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0) + c
        return Polynomial(terms, self.n)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({a: -c for a, c in self.terms.items()}, self.n)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            other = complex(other)
            return Polynomial({a: c * other for a, c in self.terms.items()}, self.n)
        terms: dict[tuple[int, ...], complex] = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                ab = tuple(x + y for x, y in zip(a, b))
                terms[ab] = terms.get(ab, 0) + c * d
        return Polynomial(terms, self.n)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def __pow__(self, k: int):
        out = Polynomial.constant(1.0, self.n)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items(), key=lambda t: grlex_key(t[0]))))

    # -- inspection -------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, alpha: Sequence[int]) -> complex:
        return self.terms.get(tuple(alpha), 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.terms.values()))

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def leading_monomial(self) -> tuple[int, ...] | None:
        if not self.terms:
            return None
        return max(self.terms, key=grlex_key)

    def homogeneous_part(self, degree: int) -> "Polynomial":
        return Polynomial({a: c for a, c in self.terms.items() if sum(a) == degree}, self.n)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = {sum(a) for a in self.terms}
        if degree is not None:
            return degs <= {degree}
        return len(degs) <= 1

    def cleaned(self, rtol: float = CLEANUP_RTOL, atol: float = 0.0) -> "Polynomial":
        """Drop coefficients below ``rtol * max|coeff|`` (or ``atol``)."""
        cut = max(rtol * self.max_coeff(), atol)
        return Polynomial({a: c for a, c in self.terms.items() if abs(c) > cut}, self.n)

    def __call__(self, *z):
        """Evaluate at a point; coordinates may be scalars or numpy arrays."""
        if len(z) == 1:
            z = tuple(z[0])
        total = 0
        for a, c in self.terms.items():
            term = c
            for zj, e in zip(z, a):
                if e:
                    term = term * zj**e
            total = total + term
        return total

    def compose_linear(self, matrix) -> "Polynomial":
        """Return ``z -> self(matrix @ z)``."""
        m = np.asarray(matrix, dtype=complex)
        rows = [Polynomial.linear(m[i]) for i in range(self.n)]
        out = Polynomial({}, self.n)
        for a, c in self.terms.items():
            term = Polynomial.constant(c, self.n)
            for j, e in enumerate(a):
                if e:
                    term = term * rows[j] ** e
            out = out + term
        return out

    def translate(self, shift: Sequence[complex]) -> "Polynomial":
        """Return ``z -> self(z + shift)``."""
        rows = [Polynomial.variable(j, self.n) + shift[j] for j in range(self.n)]
        out = Polynomial({}, self.n)
        for a, c in self.terms.items():
            term = Polynomial.constant(c, self.n)
            for j, e in enumerate(a):
                if e:
                    term = term * rows[j] ** e
            out = out + term
        return out

    def to_text(self, digits: int = 12) -> str:
        return format_polynomial(self, digits)

    def __repr__(self):
        return f"Polynomial({self.to_text()!r})"


# -- text format ------------------------------------------------------------

def _format_coeff(c: complex, digits: int) -> str:
    if c.imag == 0:
        return f"{c.real:.{digits}g}"
    return f"({c.real:.{digits}g},{c.imag:.{digits}g})"


def format_polynomial(p: Polynomial, digits: int = 12) -> str:
    """Render as ``c * z1^a * z2^b`` terms in decreasing grlex order."""
    if p.is_zero():
        return "0"
    parts = []
    for alpha in sorted(p.terms, key=grlex_key, reverse=True):
        c = p.terms[alpha]
        factors = []
        for j, e in enumerate(alpha):
            if e == 1:
                factors.append(f"z{j + 1}")
            elif e > 1:
                factors.append(f"z{j + 1}^{e}")
        sign = "+"
        if c.imag == 0 and c.real < 0:
            sign, c = "-", -c
        ctext = _format_coeff(c, digits)
        body = " * ".join(factors if factors and ctext == "1" else [ctext] + factors)
        parts.append((sign, body))
    text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


_TOKEN = re.compile(
    r"\s*(?:(?P<cplx>\(\s*[-+]?[\d.eE+-]+\s*,\s*[-+]?[\d.eE+-]+\s*\))"
    r"|(?P<num>\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<var>z(?P<idx>\d+))|(?P<op>[-+*^]))"
)


def parse_polynomial(text: str, n: int = 2) -> Polynomial:
    """Parse the ``c * z1^a * z2^b`` text grammar; ``(re,im)`` is a complex literal."""
    pos, tokens = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial near {text[pos:]!r}")
        pos = m.end()
        if m.group("cplx"):
            re_, im = m.group("cplx")[1:-1].split(",")
            tokens.append(("num", complex(float(re_), float(im))))
        elif m.group("num"):
            tokens.append(("num", complex(float(m.group("num")))))
        elif m.group("var"):
            tokens.append(("var", int(m.group("idx")) - 1))
        else:
            tokens.append(("op", m.group("op")))
    out = Polynomial({}, n)
    i, sign = 0, 1.0
    if not tokens:
        raise ValueError("empty polynomial")
    while i < len(tokens):
        if tokens[i] == ("op", "+"):
            sign, i = 1.0, i + 1
        elif tokens[i] == ("op", "-"):
            sign, i = -1.0, i + 1
        coeff, alpha = complex(sign), [0] * n
        expect_factor = True
        while i < len(tokens) and expect_factor:
            kind, val = tokens[i]
            if kind == "num":
                coeff *= val
                i += 1
            elif kind == "var":
                if val >= n:
                    raise ValueError(f"variable z{val + 1} out of range for n={n}")
                i += 1
                e = 1
                if i < len(tokens) and tokens[i] == ("op", "^"):
                    if i + 1 >= len(tokens) or tokens[i + 1][0] != "num":
                        raise ValueError("exponent expected after '^'")
                    ev = tokens[i + 1][1]
                    if ev.imag != 0 or ev.real != int(ev.real) or ev.real < 0:
                        raise ValueError("exponents must be nonnegative integers")
                    e = int(ev.real)
                    i += 2
                alpha[val] += e
            else:
                raise ValueError(f"unexpected {val!r} in polynomial {text!r}")
            if i < len(tokens) and tokens[i] == ("op", "*"):
                i += 1
            else:
                expect_factor = False
        out = out + Polynomial({tuple(alpha): coeff}, n)
        sign = 1.0
        if i < len(tokens) and tokens[i][0] != "op":
            raise ValueError(f"operator expected in {text!r}")
    return out


# -- linear algebra helpers ---------------------------------------------------

def _row_space(rows: np.ndarray, rtol: float) -> np.ndarray:
    """Orthonormal basis (as rows) of the row space, rank cut relative to the top singular value."""
    if rows.size == 0:
        return rows.reshape(0, rows.shape[1] if rows.ndim == 2 else 0)
    norms = np.linalg.norm(rows, axis=1)
    rows = rows[norms > 0] / norms[norms > 0, None]
    if rows.shape[0] == 0:
        return rows
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > rtol * s[0]))
    return vh[:rank]


def rref(rows: np.ndarray, rtol: float = RANK_RTOL, cleanup: float = CLEANUP_RTOL):
    """Reduced row echelon form with partial pivoting in the given column order.

    Returns ``(R, pivots)``; each row of ``R`` has a 1 in its pivot column and
    zeros in every other pivot column.
    """
    a = np.array(rows, dtype=complex, copy=True)
    m, ncols = a.shape
    scale = np.max(np.abs(a)) if a.size else 0.0
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        if r >= m:
            break
        k = r + int(np.argmax(np.abs(a[r:, col])))
        if abs(a[k, col]) <= rtol * scale:
            a[r:, col] = 0
            continue
        a[[r, k]] = a[[k, r]]
        a[r] /= a[r, col]
        others = np.arange(m) != r
        a[others] -= np.outer(a[others, col], a[r])
        pivots.append(col)
        r += 1
    a = a[:r]
    if r:
        cut = cleanup * np.max(np.abs(a), axis=1, keepdims=True)
        a[np.abs(a) <= cut] = 0
        a.real[np.abs(a.real) <= cut] = 0
        a.imag[np.abs(a.imag) <= cut] = 0
    return a, pivots


class Ideal:
    """An ideal given by polynomial generators, analysed up to a degree cap."""

    def __init__(self, generators: Iterable[Polynomial], cap: int | None = None,
                 n: int = 2, rank_rtol: float = RANK_RTOL):
        self.generators = [g for g in generators if not g.is_zero()]
        self.n = self.generators[0].n if self.generators else n
        maxdeg = max((g.degree for g in self.generators), default=0)
        self.cap = cap if cap is not None else max(6, maxdeg + 3)
        self.rank_rtol = rank_rtol
        self._preset = None

    @classmethod
    def _from_space(cls, rows: np.ndarray, monos: list, cap: int, n: int = 2) -> "Ideal":
        ideal = cls([], cap=cap, n=n)
        ideal._preset = (rows, monos)
        gens = ideal.reduced_basis
        ideal.generators = gens
        return ideal

    # -- Macaulay structure ------------------------------------------------
    def _structure_at(self, degree: int):
        monos = monomials_upto(degree, self.n)
        index = {a: i for i, a in enumerate(monos)}
        if self._preset is not None and degree == self.cap:
            rows, preset_monos = self._preset
            perm = [preset_monos.index(a) for a in monos]
            space = rows[:, perm]
        else:
            mat = []
            for g in self.generators:
                for shift in monomials_upto(degree - g.degree, self.n) if g.degree <= degree else []:
                    row = np.zeros(len(monos), dtype=complex)
                    for a, c in g.terms.items():
                        row[index[tuple(x + y for x, y in zip(a, shift))]] = c
                    mat.append(row)
            space = _row_space(np.array(mat, dtype=complex).reshape(len(mat), len(monos)),
                               self.rank_rtol)
        reduced, pivots = rref(space, self.rank_rtol)
        return monos, reduced, pivots

    @cached_property
    def _structure(self):
        """(degree, monomials, rref rows, pivot columns, staircase or None)."""
        for degree in (self.cap, self.cap + 2):
            if self._preset is not None and degree != self.cap:
                break
            monos, reduced, pivots = self._structure_at(degree)
            lead = {monos[p] for p in pivots}
            stair = None
            for t in range(degree + 1):
                if all(a in lead for a in monomials_of_degree(t, self.n)):
                    stair = [a for a in monos if sum(a) < t and a not in lead]
                    break
            if stair is not None:
                return degree, monos, reduced, pivots, stair
        return degree, monos, reduced, pivots, None

    @property
    def staircase(self) -> list[tuple[int, ...]] | None:
        """Standard monomials (increasing grlex); ``None`` when not finite under the cap."""
        stair = self._structure[4]
        return None if stair is None else sorted(stair, key=grlex_key)

    @property
    def length(self):
        stair = self._structure[4]
        return INFINITE if stair is None else len(stair)

    @cached_property
    def reduced_basis(self) -> list[Polynomial]:
        """Reduced Groebner basis (grlex); requires a finite staircase."""
        degree, monos, reduced, pivots, stair = self._structure
        if stair is None:
            raise CapTooSmall(f"staircase not finite under degree cap {self.cap}")
        lead = [monos[p] for p in pivots]
        out = []
        for row, lm in zip(reduced, lead):
            if any(other != lm and divides(other, lm) for other in lead):
                continue
            out.append(Polynomial({monos[i]: c for i, c in enumerate(row) if c != 0}, self.n))
        out.sort(key=lambda p: grlex_key(p.leading_monomial()))
        return out

    def normal_form(self, f: Polynomial) -> Polynomial:
        degree, monos, reduced, pivots, stair = self._structure
        if f.degree > degree:
            raise CapTooSmall(f"deg f = {f.degree} exceeds the working degree {degree}")
        index = {a: i for i, a in enumerate(monos)}
        vec = np.zeros(len(monos), dtype=complex)
        for a, c in f.terms.items():
            vec[index[a]] = c
        for row, p in zip(reduced, pivots):
            if vec[p] != 0:
                vec -= vec[p] * row
        pivot_set = set(pivots)
        out = Polynomial({monos[i]: c for i, c in enumerate(vec) if i not in pivot_set and c != 0}, self.n)
        return out.cleaned(CLEANUP_RTOL, atol=CLEANUP_RTOL * max(f.max_coeff(), 1e-300))

    def contains(self, f: Polynomial, rtol: float = MEMBERSHIP_RTOL) -> bool:
        if f.is_zero():
            return True
        return self.normal_form(f).norm() <= rtol * f.norm()

    def minimal_generator_count(self) -> int:
        """Number of minimal generators of an ideal supported at the origin.

        Uses ``dim I / (M0 I) = length(M0 I) - length(I)`` in the local ring.
        """
        shifted = [g * Polynomial.variable(j, self.n) for g in self.reduced_basis for j in range(self.n)]
        outer = Ideal(shifted, cap=max(self.cap, max(g.degree for g in shifted) + 3), n=self.n)
        if outer.length is INFINITE or self.length is INFINITE:
            raise CapTooSmall("generator count needs finite lengths")
        return int(outer.length - self.length)

    def to_json(self) -> dict:
        stair = self.staircase
        return {
            "generators": [g.to_text() for g in self.reduced_basis],
            "staircase": None if stair is None else [format_polynomial(Polynomial.monomial(a)) for a in stair],
            "length": None if stair is None else len(stair),
        }

    def __repr__(self):
        return f"Ideal([{', '.join(g.to_text() for g in self.generators)}])"


# -- constructors ---------------------------------------------------------------

def vanishing_ideal(points: Sequence[Sequence[complex]], degree_cap: int | None = None,
                    rank_rtol: float = RANK_RTOL, coincidence_rtol: float = 1e-12) -> Ideal:
    """Ideal of polynomials vanishing on a finite point set.

    The degree-``cap`` part is the nullspace of the evaluation matrix on all
    monomials of degree <= cap (computed in coordinates rescaled by the
    configuration size, then mapped back).
    """
    pts = np.asarray(points, dtype=complex)
    npts, n = pts.shape
    cap = npts if degree_cap is None else degree_cap
    if cap < npts:
        raise CapTooSmall(f"degree cap {cap} < number of points {npts}")
    scale = float(np.max(np.abs(pts))) or 1.0
    diam = max((np.linalg.norm(p - q) for p, q in itertools.combinations(pts, 2)), default=scale)
    for (i, p), (j, q) in itertools.combinations(enumerate(pts), 2):
        if np.linalg.norm(p - q) <= coincidence_rtol * max(diam, scale):
            raise DuplicatePoints(f"points {i} and {j} coincide")
    monos = monomials_upto(cap, n)
    w = pts / scale
    evals = np.array([[np.prod(wp ** np.array(a)) for a in monos] for wp in w])
    _, s, vh = np.linalg.svd(evals, full_matrices=True)
    rank = int(np.sum(s > rank_rtol * s[0]))
    if rank < npts:
        raise DuplicatePoints("evaluation matrix is rank deficient; points nearly coincide")
    null = vh[rank:].conj()
    degs = np.array([sum(a) for a in monos], dtype=float)
    null = null * scale ** (-degs)[None, :]
    ideal = Ideal._from_space(_row_space(null, rank_rtol), monos, cap, n)
    if ideal.length is INFINITE:
        raise CapTooSmall("staircase not closed under the degree cap")
    return ideal


def power_ideal(k: int, n: int = 2, cap: int | None = None) -> Ideal:
    """The k-th power of the maximal ideal at the origin."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return Ideal([Polynomial.monomial(a) for a in monomials_of_degree(k, n)], cap=cap)


def ideal_contains(big: Ideal, small: Ideal, rtol: float = MEMBERSHIP_RTOL) -> bool:
    """True when every generator of ``small`` lies in ``big``."""
    return all(big.contains(g, rtol) for g in small.generators)


def ideal_equal(a: Ideal, b: Ideal, rtol: float = MEMBERSHIP_RTOL) -> bool:
    return ideal_contains(a, b, rtol) and ideal_contains(b, a, rtol)


def resultant_binary_quadratics(f: Polynomial, g: Polynomial) -> complex:
    """Sylvester resultant of two binary quadratic forms.

    Forms are dehomogenized at ``z2 = 1`` and kept as formal degree-2
    polynomials in ``z1`` (a vanishing leading coefficient is allowed).
    """
    rows = []
    for p in (f, g):
        if p.n != 2 or not p.is_homogeneous(2):
            raise NotHomogeneous(f"{p.to_text()} is not a homogeneous quadratic in z1, z2")
        rows.append([p.coeff((2, 0)), p.coeff((1, 1)), p.coeff((0, 2))])
    (a, b, c), (d, e, h) = rows
    syl = np.array([[a, b, c, 0], [0, a, b, c], [d, e, h, 0], [0, d, e, h]], dtype=complex)
    return complex(np.linalg.det(syl))
