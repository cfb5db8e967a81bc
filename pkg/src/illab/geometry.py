"""Four-point configurations in C^2, projective directions and their classification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._numeric import Context, neville_at_zero, top_frame
from .errors import CoincidentPoints, ConfigError, DegenerateDirections, NonConvergent

CHORDAL_TOL = 1e-6
COINCIDENCE_RTOL = 1e-12
DIRECTION_CAUCHY_TOL = 1e-6
FAMILY_ORIGIN_TOL = 1e-2

PointC2 = tuple  # (z1, z2), complex components


# -- schedules and families ------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Decreasing sample values of eps used to probe the limit eps -> 0.

    Extrapolation is polynomial in ``h = eps**(1/root)`` of degree
    ``extrapolation_order`` through the last samples.
    """

    samples: tuple
    extrapolation_order: int = 1
    root: int = 1

    def __post_init__(self):
        mods = [abs(complex(s)) for s in self.samples]
        if len(mods) < 4:
            raise ConfigError("a schedule needs at least 4 samples")
        if any(b >= a for a, b in zip(mods, mods[1:])):
            raise ConfigError("schedule samples must strictly decrease in modulus")
        if not 1 <= self.extrapolation_order <= len(mods) - 2:
            raise ConfigError("extrapolation order must be between 1 and len(samples) - 2")
        if self.root < 1:
            raise ConfigError("root must be a positive integer")

    @classmethod
    def geometric(cls, eps0: float = 0.1, ratio: float = 0.5, count: int = 12,
                  order: int = 1, root: int = 1) -> "Schedule":
        return cls(tuple(eps0 * ratio**k for k in range(count)), order, root)

    def refined(self) -> "Schedule":
        """Same span with the ratio halved in log scale (geometric mean samples inserted)."""
        out = []
        for a, b in zip(self.samples, self.samples[1:]):
            out.extend([a, math.sqrt(abs(a * b)) if complex(a).imag == 0 and complex(b).imag == 0 else (a + b) / 2])
        out.append(self.samples[-1])
        return Schedule(tuple(out), self.extrapolation_order, self.root)

    def h_values(self, ctx: Context):
        return [ctx.root(ctx.num(e), self.root) for e in self.samples]


@dataclass(frozen=True)
class PointFamily:
    """``eps -> ordered points in C^2``; ``evaluator(eps, ctx)`` returns a list of pairs."""

    evaluator: Callable
    label: str = "family"
    size: int = 4

    def points(self, eps, ctx: Context | None = None) -> np.ndarray:
        ctx = ctx or Context()
        pts = self.evaluator(eps, ctx)
        return ctx.array([[ctx.num(p[0]), ctx.num(p[1])] for p in pts])

    def transformed(self, matrix, anchor: int | None = None, label: str | None = None) -> "PointFamily":
        """Family ``eps -> matrix @ (a_k - a_anchor)`` (no translation when anchor is None)."""
        m = np.asarray(matrix, dtype=complex)
        base = self.evaluator

        def evaluator(eps, ctx):
            pts = [(ctx.num(p[0]), ctx.num(p[1])) for p in base(eps, ctx)]
            if anchor is not None:
                o = pts[anchor]
                pts = [(p[0] - o[0], p[1] - o[1]) for p in pts]
            mm = [[ctx.num(complex(m[i, j])) for j in range(2)] for i in range(2)]
            return [(mm[0][0] * p[0] + mm[0][1] * p[1], mm[1][0] * p[0] + mm[1][1] * p[1]) for p in pts]

        return PointFamily(evaluator, label or f"{self.label}@linear", self.size)

    def subset(self, indices: Sequence[int]) -> "PointFamily":
        base = self.evaluator
        idx = list(indices)
        return PointFamily(lambda eps, ctx: [base(eps, ctx)[i] for i in idx],
                           f"{self.label}[{','.join(str(i + 1) for i in idx)}]", len(idx))

    def check(self, schedule: Schedule, origin_tol: float = FAMILY_ORIGIN_TOL) -> None:
        """Distinct points at every sample and convergence to the origin at the last one."""
        for eps in schedule.samples:
            pts = self.points(eps)
            diam = max(np.linalg.norm(p - q) for p, q in itertools.combinations(pts, 2))
            for (i, p), (j, q) in itertools.combinations(enumerate(pts), 2):
                if np.linalg.norm(p - q) <= COINCIDENCE_RTOL * diam:
                    raise CoincidentPoints(f"{self.label}: points {i + 1},{j + 1} coincide at eps={eps}")
        last = self.points(schedule.samples[-1])
        if np.max(np.abs(last)) > origin_tol:
            raise ConfigError(f"{self.label}: points do not tend to the origin along the schedule")


def table_family(rows: Sequence[tuple], label: str = "table") -> PointFamily:
    """Family from explicit samples ``[(eps, [(z1, z2), ...]), ...]``; unknown eps is an error."""
    lookup = {complex(eps): [tuple(complex(c) for c in p) for p in pts] for eps, pts in rows}
    sizes = {len(p) for p in lookup.values()}
    if len(sizes) != 1:
        raise ConfigError("all table rows must list the same number of points")

    def evaluator(eps, ctx):
        key = complex(eps)
        for k, pts in lookup.items():
            if abs(k - key) <= 1e-12 * abs(key):
                return pts
        raise ConfigError(f"table family has no sample at eps={eps}")

    return PointFamily(evaluator, label, sizes.pop())


# -- projective directions ----------------------------------------------------------

def canonical(v: Sequence[complex]) -> tuple[complex, complex]:
    """Canonical representative of the class of ``v`` in P^1.

    The largest-modulus coordinate is rotated onto the positive real axis (ties
    go to the first coordinate) and the vector is scaled to unit norm.  Applying
    the map twice returns bitwise the same tuple.
    """
    a, b = complex(v[0]), complex(v[1])
    k = 0 if abs(a) >= abs(b) * (1 - 1e-12) else 1
    pivot = (a, b)[k]
    if pivot == 0:
        raise CoincidentPoints("zero vector has no projective class")
    if not (pivot.imag == 0 and pivot.real > 0):
        phase = pivot.conjugate() / abs(pivot)
        a, b = a * phase, b * phase
        if k == 0:
            a = complex(abs(a), 0.0)
        else:
            b = complex(abs(b), 0.0)
    nrm = math.hypot(abs(a), abs(b))
    if abs(nrm - 1.0) > 1e-15:
        a, b = a / nrm, b / nrm
    return (a, b)


@dataclass(frozen=True)
class ProjectiveDirection:
    rep: tuple

    @classmethod
    def of(cls, v: Sequence[complex]) -> "ProjectiveDirection":
        return cls(canonical(v))

    def vector(self) -> np.ndarray:
        return np.array(self.rep, dtype=complex)

    def to_json(self) -> dict:
        return {"rep_re": [self.rep[0].real, self.rep[1].real],
                "rep_im": [self.rep[0].imag, self.rep[1].imag]}

    def __str__(self):
        a, b = self.rep
        if abs(a) >= abs(b):
            r = b / a
            return f"[1:{_short(r)}]"
        r = a / b
        return f"[{_short(r)}:1]"


def _short(z: complex) -> str:
    z = complex(round(z.real, 6) + 0.0, round(z.imag, 6) + 0.0)
    if z.imag == 0:
        return f"{z.real:g}"
    return f"({z.real:g}{z.imag:+g}i)"


def direction(p: Sequence[complex], q: Sequence[complex]) -> ProjectiveDirection:
    """Class of ``q - p`` in P^1."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    diff = q - p
    scale = max(np.linalg.norm(p), np.linalg.norm(q))
    if np.linalg.norm(diff) <= COINCIDENCE_RTOL * scale or not np.any(diff):
        raise CoincidentPoints("direction of coincident points is undefined")
    return ProjectiveDirection.of(diff)


def chordal_distance(u, v) -> float:
    """``|u ^ v| / (|u| |v|)`` on representatives; lies in [0, 1]."""
    u = np.asarray(u.rep if isinstance(u, ProjectiveDirection) else u, dtype=complex)
    v = np.asarray(v.rep if isinstance(v, ProjectiveDirection) else v, dtype=complex)
    wedge = abs(u[0] * v[1] - u[1] * v[0])
    return float(min(1.0, wedge / (np.linalg.norm(u) * np.linalg.norm(v))))


def _direction_projector(ctx: Context, p, q):
    d0, d1 = q[0] - p[0], q[1] - p[1]
    nrm2 = abs(d0) ** 2 + abs(d1) ** 2
    if nrm2 == 0:
        raise CoincidentPoints("coincident points along the schedule")
    out = ctx.zeros((2, 2))
    vec = (d0, d1)
    for r in range(2):
        for c in range(2):
            out[r, c] = vec[r] * vec[c].conjugate() / nrm2
    return out


def _cluster(directions: Sequence[ProjectiveDirection], tol: float) -> list[ProjectiveDirection]:
    reps: list[ProjectiveDirection] = []
    for d in directions:
        if not any(chordal_distance(d, r) < tol for r in reps):
            reps.append(d)
    return reps


def limit_direction(fam: PointFamily, i: int, j: int, sch: Schedule,
                    cauchy_tol: float = DIRECTION_CAUCHY_TOL,
                    precision: str = "double") -> ProjectiveDirection:
    """Extrapolated limit class of ``a_j - a_i`` as eps -> 0 (0-based indices).

    The sampled directions are turned into rank-one projectors and extrapolated
    to eps = 0 over two consecutive windows; the two estimates must agree within
    ``cauchy_tol`` (chordal), otherwise :class:`NonConvergent` is raised with the
    cluster values seen in the tail of the schedule.
    """
    if i == j:
        raise ValueError("i and j must differ")
    ctx = Context(precision)
    hs = sch.h_values(ctx)
    projs = []
    for eps in sch.samples:
        pts = fam.points(eps, ctx)
        try:
            projs.append(_direction_projector(ctx, pts[i], pts[j]))
        except CoincidentPoints:
            raise CoincidentPoints(f"{fam.label}: a_{i + 1} = a_{j + 1} at eps={eps}") from None
    m = sch.extrapolation_order
    last = top_frame(ctx, neville_at_zero(hs[-m - 1:], projs[-m - 1:]), 1)[:, 0]
    prev = top_frame(ctx, neville_at_zero(hs[-m - 2:-1], projs[-m - 2:-1]), 1)[:, 0]
    if chordal_distance(last, prev) > cauchy_tol:
        sampled = [ProjectiveDirection.of(top_frame(ctx, p, 1)[:, 0]) for p in projs[len(projs) // 2:]]
        clusters = _cluster(sampled, 0.05)
        raise NonConvergent(
            f"{fam.label}: direction v{i + 1}{j + 1} does not converge "
            f"(extrapolants differ by {chordal_distance(last, prev):.2e})",
            pair=(i + 1, j + 1), clusters=clusters)
    return ProjectiveDirection.of(last)


# -- direction sets and classification ------------------------------------------------

@dataclass
class DirectionSet:
    entries: list  # [((i, j) 1-based, ProjectiveDirection)]
    classes: list  # distinct representatives
    tol: float = CHORDAL_TOL

    @property
    def distinct_count(self) -> int:
        return len(self.classes)

    def class_index(self, d: ProjectiveDirection) -> int:
        for k, r in enumerate(self.classes):
            if chordal_distance(d, r) < self.tol:
                return k
        raise KeyError("direction not in set")

    def to_json(self) -> list:
        return [{"pair": list(pair), **d.to_json(), "converged": True} for pair, d in self.entries]


def limit_directions(fam: PointFamily, sch: Schedule, precision: str = "double",
                     cauchy_tol: float = DIRECTION_CAUCHY_TOL) -> dict:
    """All pairwise limit directions keyed by 1-based pairs ``(i, j)``, ``i < j``."""
    out = {}
    for i, j in itertools.combinations(range(fam.size), 2):
        out[(i + 1, j + 1)] = limit_direction(fam, i, j, sch, cauchy_tol, precision)
    return out


def _direction_set_from(dirs: dict, subset: Sequence[int], tol: float) -> DirectionSet:
    entries = [((i, j), dirs[(i, j)]) for i, j in itertools.combinations(sorted(subset), 2)]
    return DirectionSet(entries, _cluster([d for _, d in entries], tol), tol)


def direction_set(fam: PointFamily, sch: Schedule, subset: Sequence[int] | None = None,
                  tol: float = CHORDAL_TOL, precision: str = "double") -> DirectionSet:
    """Limit directions of all pairs within ``subset`` (1-based indices) and their class count."""
    subset = list(subset) if subset is not None else list(range(1, fam.size + 1))
    if len(subset) < 2:
        raise ValueError("subset needs at least two indices")
    dirs = {}
    for i, j in itertools.combinations(sorted(subset), 2):
        dirs[(i, j)] = limit_direction(fam, i - 1, j - 1, sch, precision=precision)
    return _direction_set_from(dirs, subset, tol)


TAGS = ("Generic", "VertexDegenerate", "TripleCollinear_ManyDirections",
        "TripleCollinear_TwoDirections", "NonConvergent", "Unclassified")


@dataclass
class Classification:
    tag: str
    evidence: dict = field(default_factory=dict)
    directions: DirectionSet | None = None

    def to_json(self) -> dict:
        return {"tag": self.tag, "evidence": self.evidence,
                "directions": self.directions.to_json() if self.directions else None}


def classify_directions(dirs: dict, tol: float = CHORDAL_TOL) -> Classification:
    """Classify a 4-point configuration from its six limit directions."""
    full = _direction_set_from(dirs, [1, 2, 3, 4], tol)
    triples = {}
    for t in itertools.combinations([1, 2, 3, 4], 3):
        triples[t] = _direction_set_from(dirs, t, tol).distinct_count
    vertex = {}
    for k in range(1, 5):
        seen = [dirs[tuple(sorted((k, m)))] for m in range(1, 5) if m != k]
        vertex[k] = len(_cluster(seen, tol))
    cond_21 = all(c >= 2 for c in triples.values())
    cond_22 = all(c >= 2 for c in vertex.values())
    cond_23 = any(c == 1 for c in vertex.values())
    collinear = [list(t) for t, c in triples.items() if c == 1]
    n_dirs = full.distinct_count
    if n_dirs == 1:
        tag = "Unclassified"
    elif cond_21 and cond_22:
        tag = "Generic"
    elif cond_21 and cond_23:
        tag = "VertexDegenerate"
    elif collinear and n_dirs >= 3:
        tag = "TripleCollinear_ManyDirections"
    elif collinear and n_dirs == 2:
        tag = "TripleCollinear_TwoDirections"
    else:
        tag = "Unclassified"
    evidence = {
        "cond_2_1": cond_21,
        "cond_2_2": cond_22,
        "cond_2_3": cond_23,
        "distinct_directions": n_dirs,
        "collinear_triples": collinear,
        "degenerate_vertices": [k for k, c in vertex.items() if c == 1],
        "triple_counts": {",".join(map(str, t)): c for t, c in triples.items()},
        "vertex_counts": {str(k): c for k, c in vertex.items()},
    }
    return Classification(tag, evidence, full)


def classify(fam: PointFamily, sch: Schedule, tol: float = CHORDAL_TOL,
             precision: str = "double") -> Classification:
    """Tag a 4-point family by its limit-direction pattern.

    A family whose directions fail to converge gets the ``NonConvergent`` tag
    with the offending pair and observed cluster values as evidence.
    """
    if fam.size != 4:
        raise ValueError("classification is defined for 4-point families")
    try:
        dirs = limit_directions(fam, sch, precision)
    except NonConvergent as exc:
        return Classification("NonConvergent", {
            "pair": list(exc.pair) if exc.pair else None,
            "clusters": [d.to_json() for d in exc.clusters],
            "message": str(exc),
        })
    return classify_directions(dirs, tol)


def normalize_frame(fam: PointFamily, i: int, j: int, k: int, sch: Schedule,
                    tol: float = CHORDAL_TOL, precision: str = "double"):
    """Linear map sending v_ij to [1:0] and v_ik to [0:1], plus the translated family.

    Indices are 1-based.  The returned family is ``eps -> A (a_m - a_i)``.
    """
    vij = limit_direction(fam, i - 1, j - 1, sch, precision=precision)
    vik = limit_direction(fam, i - 1, k - 1, sch, precision=precision)
    if chordal_distance(vij, vik) < tol:
        raise DegenerateDirections(f"v{i}{j} and v{i}{k} coincide")
    basis = np.column_stack([vij.vector(), vik.vector()])
    matrix = np.linalg.inv(basis)
    return matrix, fam.transformed(matrix, anchor=i - 1, label=f"{fam.label}@normalized")
