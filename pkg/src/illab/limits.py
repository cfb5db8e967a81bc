"""Limits of point ideals through grid ideals and Newton coordinates.

For a point set ``S`` with per-axis coordinate projections ``b_j^1, ..., b_j^{N_j}``
the grid ideal ``J = I(P)`` of the cartesian product ``P`` has quotient
``O/J`` of dimension ``d = N_1 * ... * N_n`` with basis the Newton products

    Psi_alpha(z) = prod_j prod_{i <= alpha_j} (z_j - b_j^i),    alpha < (N_1, ..., N_n).

Sending ``[Psi_alpha]`` to ``[z^alpha]`` identifies every ``O/J_eps`` with the fixed
space ``C^d``; the image of ``I(S_eps)/J_eps`` is a ``(d - N)``-dimensional
subspace whose limit along the schedule, lifted back to polynomials and
adjoined to ``<z1^N1, z2^N2>``, is the limit ideal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._numeric import Context, forward_substitution, neville_at_zero, projector, top_frame
from .errors import (AmbientMismatch, IllConditionedGrid, SanityViolation, UnstableShape)
from .geometry import PointFamily, Schedule
from .poly import INFINITE, RANK_RTOL, Ideal, Polynomial, grlex_key, monomials_upto, rref

GRID_RTOL = 1e-12
GAP_TOL = 1e-3
EXTRAP_TOL = 1e-4
MONOTONE_WINDOW = 6
GENERATOR_CUTOFF = 1e-8
GROWTH_LIMIT = 1e12
CLUSTER_GAP = 0.1
PIVOT_RTOL = 1e-3
NOISE_FACTOR = 10.0


# -- grids ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridShape:
    exponents: tuple

    @property
    def d(self) -> int:
        return int(np.prod(self.exponents))

    def box(self) -> list[tuple[int, ...]]:
        """Multi-indices alpha < exponents in row-major order."""
        return list(itertools.product(*(range(n) for n in self.exponents)))

    def to_json(self) -> dict:
        return {"exponents": list(self.exponents), "d": self.d}


@dataclass
class GridPoints:
    """Per-axis distinct coordinate values, in order of first appearance."""

    axes: list

    @property
    def shape(self) -> GridShape:
        return GridShape(tuple(len(a) for a in self.axes))

    def index_of(self, point) -> tuple[int, ...]:
        return tuple(min(range(len(ax)), key=lambda i: abs(ax[i] - point[j]))
                     for j, ax in enumerate(self.axes))

    def points(self) -> list[tuple]:
        return [tuple(ax[i] for ax, i in zip(self.axes, alpha)) for alpha in self.shape.box()]


def _cluster_axis(values, rtol: float) -> list:
    # pairwise relative test: values at very different scales stay distinct
    out = []
    for v in values:
        if not any(abs(v - u) <= rtol * max(abs(u), abs(v)) for u in out):
            out.append(v)
    return out


def grid_points(points, rtol: float = GRID_RTOL) -> GridPoints:
    pts = np.asarray(points) if not isinstance(points, np.ndarray) else points
    n = pts.shape[1]
    return GridPoints([_cluster_axis(list(pts[:, j]), rtol) for j in range(n)])


def grid_shape(points, rtol: float = GRID_RTOL) -> GridShape:
    return grid_points(points, rtol).shape


def grid_shape_along(fam: PointFamily, sch: Schedule, rtol: float = GRID_RTOL) -> GridShape:
    """Grid shape required to be the same at every schedule sample."""
    shapes = {grid_shape(fam.points(eps), rtol) for eps in sch.samples}
    if len(shapes) != 1:
        raise UnstableShape(f"{fam.label}: grid shape varies along the schedule: "
                            f"{sorted(s.exponents for s in shapes)}")
    return shapes.pop()


def limit_grid_ideal(shape: GridShape) -> Ideal:
    """``<z1^N1, ..., zn^Nn>``."""
    n = len(shape.exponents)
    gens = []
    for j, nj in enumerate(shape.exponents):
        alpha = [0] * n
        alpha[j] = nj
        gens.append(Polynomial.monomial(alpha))
    return Ideal(gens, cap=sum(shape.exponents) + 1, n=n)


# -- Newton basis --------------------------------------------------------------------

def _axis_matrix(nodes) -> np.ndarray:
    """``L[i, k] = phi_k(b^i) = prod_{l < k} (b^i - b^l)``, lower triangular."""
    m = len(nodes)
    out = np.empty((m, m), dtype=object if not isinstance(nodes[0], complex) else complex)
    for i in range(m):
        for k in range(m):
            acc = nodes[0] * 0 + 1
            for l in range(k):
                acc = acc * (nodes[i] - nodes[l])
            out[i, k] = acc
    return out


class NewtonBasis:
    """The products Psi_alpha for one grid."""

    def __init__(self, grid: GridPoints):
        self.grid = grid
        self.shape = grid.shape

    def factor(self, k: int, j: int) -> Polynomial:
        n = len(self.shape.exponents)
        out = Polynomial.constant(1.0, n)
        for l in range(k):
            out = out * (Polynomial.variable(j, n) - complex(self.grid.axes[j][l]))
        return out

    def polynomial(self, alpha) -> Polynomial:
        out = Polynomial.constant(1.0, len(alpha))
        for j, a in enumerate(alpha):
            out = out * self.factor(a, j)
        return out

    def evaluation_matrix(self) -> np.ndarray:
        """Rows: grid points, columns: basis elements, both in row-major order."""
        mats = [_axis_matrix(ax) for ax in self.grid.axes]
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out


def _to_newton_1d(coeffs: list, nodes: list, count: int) -> list:
    """Newton coefficients (first ``count``) of ``sum coeffs[k] x^k`` by repeated synthetic division."""
    zero = nodes[0] * 0
    p = list(coeffs)
    out = []
    for k in range(count):
        if not p:
            out.append(zero)
            continue
        b = nodes[k]
        q = [zero] * (len(p) - 1)
        acc = p[-1]
        for e in range(len(p) - 2, -1, -1):
            q[e] = acc
            acc = p[e] + b * acc
        out.append(acc)
        p = q
    return out


def quotient_coordinates(f: Polynomial, grid: GridPoints, method: str = "newton",
                         ctx: Context | None = None, growth_limit: float = GROWTH_LIMIT) -> np.ndarray:
    """Coordinates of ``[f]`` in the basis ``{[Psi_alpha]}`` of ``O/J`` (row-major alpha).

    ``method="newton"`` converts the monomial coefficients axis by axis with
    synthetic division (exact up to rounding, no division by node gaps).
    ``method="interpolation"`` solves the triangular system against the
    Newton evaluation matrix at the grid points and refuses grids whose
    diagonal growth exceeds ``growth_limit``.
    """
    ctx = ctx or Context()
    shape = grid.shape
    axes = [[ctx.num(v) for v in ax] for ax in grid.axes]
    if method == "interpolation":
        if len(axes) != 2:
            raise NotImplementedError("interpolation path is implemented for n = 2")
        mats = [_axis_matrix(ax) for ax in axes]
        diag = [abs(a * b) for a in np.diagonal(mats[0]) for b in np.diagonal(mats[1])]
        growth = float(max(diag) / min(diag))
        if growth > growth_limit:
            raise IllConditionedGrid(f"diagonal growth {growth:.2e} exceeds {growth_limit:.0e}")
        values = ctx.zeros((shape.exponents[0], shape.exponents[1]))
        for i1, x in enumerate(axes[0]):
            for i2, y in enumerate(axes[1]):
                values[i1, i2] = sum((ctx.num(c) * x ** a[0] * y ** a[1] for a, c in f.terms.items()),
                                     ctx.num(0))
        step = forward_substitution(mats[0], values)
        coeffs = forward_substitution(mats[1], step.T).T
        return coeffs.reshape(-1)
    if method != "newton":
        raise ValueError(f"unknown method {method!r}")
    n = len(axes)
    # iteratively convert one axis at a time; keys are partially converted exponents
    current = {a: ctx.num(c) for a, c in f.terms.items()}
    for j in range(n):
        groups: dict = {}
        for a, c in current.items():
            rest = a[:j] + a[j + 1:]
            groups.setdefault(rest, {})[a[j]] = c
        nxt = {}
        for rest, by_power in groups.items():
            deg = max(by_power)
            coeffs = [by_power.get(e, ctx.num(0)) for e in range(deg + 1)]
            newton = _to_newton_1d(coeffs, axes[j], shape.exponents[j])
            for k, c in enumerate(newton):
                if c != 0:
                    key = rest[:j] + (k,) + rest[j:]
                    nxt[key] = nxt.get(key, ctx.num(0)) + c
        current = nxt
    out = ctx.zeros(shape.d)
    for i, alpha in enumerate(shape.box()):
        if alpha in current:
            out[i] = current[alpha]
    return out


# -- subspaces -----------------------------------------------------------------------

@dataclass
class SubspaceFrame:
    """Orthonormal columns spanning a subspace of C^d."""

    frame: np.ndarray

    def __post_init__(self):
        self.frame = np.asarray(self.frame, dtype=complex)
        if self.frame.ndim != 2:
            raise ValueError("frame must be a d x k matrix")

    @property
    def d(self) -> int:
        return self.frame.shape[0]

    @property
    def k(self) -> int:
        return self.frame.shape[1]

    @classmethod
    def span(cls, vectors, d: int | None = None, rtol: float = 1e-9) -> "SubspaceFrame":
        """Orthonormal frame of the column span of ``vectors`` (d x m), rank cut relative."""
        vectors = np.asarray(vectors, dtype=complex)
        if vectors.size == 0:
            return cls(np.zeros((d if d is not None else vectors.shape[0], 0), dtype=complex))
        u, s, _ = np.linalg.svd(vectors, full_matrices=False)
        rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
        return cls(u[:, :rank])

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.frame.conj().T @ self.frame - np.eye(self.k)))) if self.k else 0.0


def subspace_gap(a: SubspaceFrame, b: SubspaceFrame) -> float:
    """Gap metric: sine of the largest principal angle; 1 when dimensions differ."""
    if a.d != b.d:
        raise AmbientMismatch(f"ambient dimensions differ: {a.d} vs {b.d}")
    if a.k != b.k:
        return 1.0
    if a.k == 0:
        return 0.0
    return float(min(1.0, np.linalg.norm(a.projector() - b.projector(), 2)))


def _projector_gap(p, q) -> float:
    return float(min(1.0, np.linalg.norm(np.asarray(p, dtype=complex) - np.asarray(q, dtype=complex), 2)))


def _kernel_basis(ctx: Context, points, grid: GridPoints) -> np.ndarray:
    """Newton coordinates (d x (d - N)) spanning the image of ``I(S)/J``."""
    shape = grid.shape
    box = shape.box()
    position = {alpha: i for i, alpha in enumerate(box)}
    idx = sorted({grid.index_of(p) for p in points}, key=lambda a: position[a])
    if len(idx) != len(points):
        raise UnstableShape("two points map to the same grid node")
    mats = [_axis_matrix([ctx.num(v) for v in ax]) for ax in grid.axes]

    def entry(row_alpha, col_alpha):
        acc = ctx.num(1)
        for m, r, c in zip(mats, row_alpha, col_alpha):
            acc = acc * m[r, c]
        return acc

    pivots = [position[a] for a in idx]
    free = [i for i in range(shape.d) if i not in set(pivots)]
    rp = ctx.zeros((len(idx), len(idx)))
    rf = ctx.zeros((len(idx), len(free)))
    for r, alpha in enumerate(idx):
        for c, col in enumerate(pivots):
            rp[r, c] = entry(alpha, box[col])
        for c, col in enumerate(free):
            rf[r, c] = entry(alpha, box[col])
    basis = ctx.zeros((shape.d, len(free)))
    if free:
        x = forward_substitution(rp, -rf)
        for r, col in enumerate(pivots):
            basis[col, :] = x[r, :]
        for c, col in enumerate(free):
            basis[col, c] = ctx.num(1)
    return basis


def ideal_projector(points, ctx: Context | None = None, rtol: float = GRID_RTOL):
    """(grid, orthogonal projector) of the image of ``I(points)/J`` in Newton coordinates."""
    ctx = ctx or Context()
    pts = points if isinstance(points, np.ndarray) and points.dtype == object else (
        ctx.array(points) if ctx.extended else np.asarray(points, dtype=complex))
    grid = grid_points(pts, rtol)
    basis = _kernel_basis(ctx, list(pts), grid)
    return grid, projector(ctx, basis), basis.shape[1]


def ideal_subspace(points, ctx: Context | None = None, rtol: float = GRID_RTOL) -> SubspaceFrame:
    """Orthonormal frame of ``Phi(I(S)/J)`` in C^d; its dimension is ``d - #S``."""
    ctx = ctx or Context()
    _, proj, k = ideal_projector(points, ctx, rtol)
    return SubspaceFrame(top_frame(ctx, proj, k))


# -- limits of subspace families ---------------------------------------------------

@dataclass
class LimitVerdict:
    status: str
    dims: list
    gaps: list
    limit_frame: SubspaceFrame | None = None
    limsup_frame: SubspaceFrame | None = None
    liminf_frame: SubspaceFrame | None = None
    extrapolation_gap: float | None = None
    clusters: int = 1

    @property
    def converged(self) -> bool:
        return self.status == "Converged"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "dims": list(self.dims),
            "gaps": [float(g) for g in self.gaps],
            "extrapolation_gap": self.extrapolation_gap,
            "limsup_dim": self.limsup_frame.k if self.limsup_frame else None,
            "liminf_dim": self.liminf_frame.k if self.liminf_frame else None,
            "clusters": self.clusters,
        }


def _monotone(values, slack: float = 1e-9) -> bool:
    return all(b <= a * (1 + slack) + 1e-14 for a, b in zip(values, values[1:]))


def _limit_from_projectors(ctx: Context, projs: list, dims: list, hs: list, order: int,
                           gap_tol: float = GAP_TOL, extrap_tol: float = EXTRAP_TOL,
                           window: int = MONOTONE_WINDOW) -> LimitVerdict:
    dense = [ctx.to_complex(p) for p in projs]
    gaps = [(_projector_gap(a, b) if da == db else 1.0)
            for a, b, da, db in zip(dense, dense[1:], dims, dims[1:])]
    stable = len(set(dims)) == 1
    extrap_gap = None
    if stable:
        k = dims[0]
        last = top_frame(ctx, neville_at_zero(hs[-order - 1:], projs[-order - 1:]), k)
        prev = top_frame(ctx, neville_at_zero(hs[-order - 2:-1], projs[-order - 2:-1]), k)
        limit = SubspaceFrame(last)
        extrap_gap = subspace_gap(limit, SubspaceFrame(prev))
        tail = gaps[-window:]
        if extrap_gap < extrap_tol and (gaps[-1] < gap_tol or _monotone(tail)):
            return LimitVerdict("Converged", list(dims), gaps, limit, limit, limit, extrap_gap, 1)
    # cluster the tail frames; limsup = sum of cluster subspaces, liminf = their intersection
    tail_frames = [SubspaceFrame(top_frame(Context(), p, k)) for p, k in
                   zip(dense[len(dense) // 2:], dims[len(dims) // 2:])]
    reps: list[SubspaceFrame] = []
    for fr in tail_frames:
        if not any(subspace_gap(fr, r) < CLUSTER_GAP for r in reps):
            reps.append(fr)
    d = dense[0].shape[0]
    limsup = SubspaceFrame.span(np.hstack([r.frame for r in reps]), d, rtol=1e-6)
    stacked = np.vstack([np.eye(d) - r.projector() for r in reps])
    _, s, vh = np.linalg.svd(stacked)
    null = vh[np.sum(s > 1e-6):].conj().T
    liminf = SubspaceFrame(null if null.size else np.zeros((d, 0), dtype=complex))
    return LimitVerdict("NotConverged", list(dims), gaps, None, limsup, liminf, extrap_gap, len(reps))


def subspace_limit(frames: list, schedule: Schedule | None = None, gap_tol: float = GAP_TOL,
                   extrap_tol: float = EXTRAP_TOL, order: int | None = None) -> LimitVerdict:
    """Decide whether a sampled family of subspaces converges.

    ``frames[i]`` belongs to ``schedule.samples[i]``; without a schedule the
    samples are taken as ``0.1 * 2**-i``.  Converged requires a constant
    dimension, agreement of the extrapolated limits of two consecutive windows
    (``extrap_tol``) and either a final step gap below ``gap_tol`` or a
    monotonically decreasing tail of step gaps.
    """
    if len(frames) < 4:
        raise ValueError("need at least 4 frames")
    if len({f.d for f in frames}) != 1:
        raise AmbientMismatch("frames live in different ambient spaces")
    if schedule is None:
        schedule = Schedule.geometric(count=len(frames), order=order or 1)
    ctx = Context()
    m = order or schedule.extrapolation_order
    projs = [f.projector() for f in frames]
    return _limit_from_projectors(ctx, projs, [f.k for f in frames], schedule.h_values(ctx), m,
                                  gap_tol, extrap_tol)


# -- lifting and the length criterion ------------------------------------------------

def quotient_frame(ideal: Ideal, shape: GridShape) -> SubspaceFrame:
    """Frame of ``(I + J)/J`` in the monomial coordinates ``z^alpha``, alpha < shape."""
    box = shape.box()
    position = {a: i for i, a in enumerate(box)}
    top = sum(n - 1 for n in shape.exponents)
    n = len(shape.exponents)
    rows = []
    for g in ideal.generators:
        for m in monomials_upto(top, n):
            vec = np.zeros(len(box), dtype=complex)
            for a, c in g.terms.items():
                key = tuple(x + y for x, y in zip(a, m))
                if key in position:
                    vec[position[key]] += c
            if np.any(vec):
                rows.append(vec)
    if not rows:
        return SubspaceFrame(np.zeros((len(box), 0), dtype=complex))
    return SubspaceFrame.span(np.array(rows).T, len(box))


def lift_frame(frame: SubspaceFrame, shape: GridShape, cutoff: float = GENERATOR_CUTOFF,
               pivot_rtol: float = PIVOT_RTOL) -> list[Polynomial]:
    """Polynomials ``sum c_alpha z^alpha`` spanning the frame, in reduced echelon form.

    Columns are pivoted in decreasing graded-lex order so each polynomial has a
    distinct leading monomial.  A column becomes a pivot only when its residual
    exceeds ``pivot_rtol`` (the frame is orthonormal, so entries are O(1) and
    residuals at the level of the frame error must not be promoted).
    Coefficients below ``cutoff`` are zeroed.
    """
    if frame.k == 0:
        return []
    box = shape.box()
    order = sorted(range(len(box)), key=lambda i: grlex_key(box[i]), reverse=True)
    rows = frame.frame.T[:, order]
    reduced, _ = rref(rows, rtol=pivot_rtol, cleanup=0.0)
    reduced.real[np.abs(reduced.real) < cutoff] = 0
    reduced.imag[np.abs(reduced.imag) < cutoff] = 0
    n = len(shape.exponents)
    return [Polynomial({box[order[i]]: c for i, c in enumerate(row) if c != 0}, n) for row in reduced]


def length_criterion(ell, n_points: int, side: str) -> bool:
    """Length test for the upper (limsup) or lower (liminf) limit.

    Raises :class:`SanityViolation` when the a-priori bounds
    ``length(limsup) <= N <= length(liminf)`` fail.
    """
    if side == "upper":
        if ell > n_points:
            raise SanityViolation(f"length of an upper limit {ell} exceeds N = {n_points}")
        return ell >= n_points
    if side == "lower":
        if ell < n_points:
            raise SanityViolation(f"length of a lower limit {ell} is below N = {n_points}")
        return ell <= n_points
    raise ValueError("side must be 'upper' or 'lower'")


@dataclass
class LimitResult:
    ideal: Ideal | None
    certified: bool
    verdict: LimitVerdict
    shape: GridShape
    n_points: int
    length: float | None = None
    recovery_gap: float | None = None
    frames: list = field(default_factory=list, repr=False)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = self.verdict.to_json()
        out.update({
            "grid_shape": self.shape.to_json(),
            "limit_generators": [g.to_text() for g in self.ideal.reduced_basis] if self.ideal is not None
            and self.length not in (None, INFINITE) else [],
            "certified": self.certified,
            "length": None if self.length in (None, INFINITE) else int(self.length),
            "recovery_gap": self.recovery_gap,
            "notes": list(self.notes),
        })
        return out


def sample_projectors(fam: PointFamily, sch: Schedule, ctx: Context, rtol: float = GRID_RTOL):
    """Per-sample (shape, projector, dimension), enforcing a stable grid shape."""
    shape = None
    projs, dims = [], []
    for eps in sch.samples:
        grid, proj, k = ideal_projector(fam.points(eps, ctx), ctx, rtol)
        if shape is None:
            shape = grid.shape
        elif grid.shape != shape:
            raise UnstableShape(f"{fam.label}: grid shape {grid.shape.exponents} at eps={eps} "
                                f"differs from {shape.exponents}")
        projs.append(proj)
        dims.append(k)
    return shape, projs, dims


def limit_ideal(fam: PointFamily, sch: Schedule, precision: str = "double",
                gap_tol: float = GAP_TOL, extrap_tol: float = EXTRAP_TOL,
                cutoff: float = GENERATOR_CUTOFF, grid_rtol: float = GRID_RTOL) -> LimitResult:
    """Limit of ``I(S_eps)`` along the schedule, certified by the length criterion."""
    ctx = Context(precision)
    shape, projs, dims = sample_projectors(fam, sch, ctx, grid_rtol)
    verdict = _limit_from_projectors(ctx, projs, dims, sch.h_values(ctx), sch.extrapolation_order,
                                     gap_tol, extrap_tol)
    frames = [SubspaceFrame(top_frame(Context(), ctx.to_complex(p), k)) for p, k in zip(projs, dims)]
    result = LimitResult(None, False, verdict, shape, fam.size, frames=frames)
    if not verdict.converged:
        result.notes.append("subspace family did not converge; no limit ideal reported")
        return result
    # digits below the estimated accuracy of the extrapolated frame carry no information
    floor = max(cutoff, NOISE_FACTOR * (verdict.extrapolation_gap or 0.0))
    gens = lift_frame(verdict.limit_frame, shape, floor)
    grid_ideal = limit_grid_ideal(shape)
    ideal = Ideal(gens + grid_ideal.generators, cap=sum(shape.exponents) + 1,
                  rank_rtol=max(RANK_RTOL, floor))
    result.ideal = ideal
    result.length = ideal.length
    try:
        result.certified = result.length is not INFINITE and length_criterion(result.length, fam.size, "upper")
    except SanityViolation as exc:
        result.notes.append(str(exc))
        result.certified = False
    if result.length is not INFINITE:
        result.recovery_gap = subspace_gap(quotient_frame(ideal, shape), verdict.limit_frame)
    if not result.certified:
        result.notes.append(f"UncertifiedLimit: length {result.length} != N = {fam.size}")
    return result
