import numpy as np
import pytest

from helpers import family
from illab._numeric import Context
from illab.errors import AmbientMismatch, IllConditionedGrid, SanityViolation, UnstableShape
from illab.geometry import Schedule
from illab.limits import (GridShape, NewtonBasis, SubspaceFrame, grid_points, grid_shape,
                          grid_shape_along, ideal_subspace, length_criterion, lift_frame, limit_grid_ideal,
                          limit_ideal, quotient_coordinates, quotient_frame, subspace_gap, subspace_limit)
from illab.poly import Ideal, Polynomial, ideal_equal, parse_polynomial, power_ideal

P = parse_polynomial
z1 = Polynomial.variable(0)
z2 = Polynomial.variable(1)
I0 = Ideal([P("z1*z2"), P("z2^2"), P("z1^3")])

SQUARE = [(0, 0), (0.1, 0), (0, 0.1), (0.1, 0.1)]
GAMMA = [(0, 0), (0.1, 0), (0, 0.1), (0.2, 0)]
SPREAD = [(0, 0), (0.1, 0), (0.01, 0.1), (0.1, 0.01)]


def line(theta):
    return SubspaceFrame(np.array([[np.cos(theta)], [np.sin(theta)]], dtype=complex))


# -- grids ------------------------------------------------------------------------------

@pytest.mark.parametrize("points, shape", [(SQUARE, (2, 2)), (GAMMA, (3, 2)), (SPREAD, (3, 3))])
def test_grid_shapes(points, shape):
    s = grid_shape(points)
    assert s.exponents == shape
    assert s.d == np.prod(shape)


def test_square_grid_is_the_point_set():
    g = grid_points(SQUARE)
    assert set(g.points()) == {(complex(a), complex(b)) for a, b in SQUARE}


def test_grid_keeps_multiscale_values_apart():
    g = grid_points([(0, 0), (1e-20, 0), (1e-10, 0), (1.0, 0)])
    assert g.shape.exponents == (4, 1)


def test_unstable_shape():
    fam = family(("0", "0"), ("eps", "0"), ("0", "eps"), ("eps - 0.025", "eps"))
    with pytest.raises(UnstableShape):
        grid_shape_along(fam, Schedule.geometric(count=6))


@pytest.mark.parametrize("shape, gens, length", [
    ((2, 2), ["z1^2", "z2^2"], 4), ((3, 2), ["z1^3", "z2^2"], 6), ((1, 4), ["z1", "z2^4"], 4)])
def test_limit_grid_ideal(shape, gens, length):
    i = limit_grid_ideal(GridShape(shape))
    assert i.length == length
    assert ideal_equal(i, Ideal([P(g) for g in gens]))


# -- Newton basis and coordinates ------------------------------------------------------------

@pytest.mark.parametrize("points", [SQUARE, GAMMA, SPREAD])
@pytest.mark.parametrize("method", ["newton", "interpolation"])
def test_basis_elements_have_unit_coordinates(points, method):
    grid = grid_points(points)
    basis = NewtonBasis(grid)
    for i, alpha in enumerate(grid.shape.box()):
        c = quotient_coordinates(basis.polynomial(alpha), grid, method)
        expected = np.zeros(grid.shape.d)
        expected[i] = 1
        np.testing.assert_allclose(c, expected, atol=1e-9)


@pytest.mark.parametrize("method", ["newton", "interpolation"])
def test_grid_ideal_members_vanish(method):
    grid = grid_points(GAMMA)
    basis = NewtonBasis(grid)
    for f in (basis.factor(3, 0), basis.factor(2, 1), basis.factor(3, 0) * (1 + z2 ** 2)):
        np.testing.assert_allclose(quotient_coordinates(f, grid, method), 0, atol=1e-12)


def test_monomial_on_square_grid():
    c = quotient_coordinates(z1 * z2, grid_points(SQUARE))
    assert c == pytest.approx([0, 0, 0, 1])


def test_coordinates_interpolate():
    rng = np.random.default_rng(5)
    grid = grid_points(SPREAD)
    basis = NewtonBasis(grid)
    f = Polynomial({a: rng.normal() + 1j * rng.normal() for a in [(0, 0), (2, 1), (3, 2), (1, 4)]})
    c = quotient_coordinates(f, grid)
    recon = sum((ci * basis.polynomial(a) for ci, a in zip(c, grid.shape.box())), Polynomial())
    for p in grid.points():
        assert recon(*p) == pytest.approx(f(*p), abs=1e-10)


def test_extended_precision_coordinates_agree():
    grid = grid_points(SPREAD)
    f = P("z1^3*z2 + (0,2)*z1*z2^2 - z2^3 + 1")
    a = quotient_coordinates(f, grid)
    b = Context("extended").to_complex(quotient_coordinates(f, grid, ctx=Context("extended")))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_evaluation_matrix_is_lower_triangular():
    grid = grid_points(SPREAD)
    m = np.asarray(NewtonBasis(grid).evaluation_matrix(), dtype=complex)
    assert np.all(np.abs(np.triu(m, 1)) == 0)
    unit = m / np.diag(m)[None, :]
    np.testing.assert_allclose(np.diag(unit), 1, rtol=1e-10)


def test_ill_conditioned_grid():
    grid = grid_points([(0, 0), (1e-7, 0), (2e-7, 0), (0, 1)])
    with pytest.raises(IllConditionedGrid):
        quotient_coordinates(z1 ** 2, grid, "interpolation")
    quotient_coordinates(z1 ** 2, grid)  # synthetic division never divides by node gaps


# -- subspaces ---------------------------------------------------------------------------------

@pytest.mark.parametrize("points, dim", [(SQUARE, 0), (GAMMA, 2), (SPREAD, 5)])
def test_ideal_subspace_dimension(points, dim):
    frame = ideal_subspace(points)
    assert frame.k == dim
    assert frame.orthonormality_error() < 1e-10


def test_ideal_subspace_contains_point_ideal():
    grid = grid_points(GAMMA)
    frame = ideal_subspace(GAMMA)
    members = [z1 * z2, z2 * (z2 - 0.1), z1 * (z1 - 0.1) * (z1 - 0.2)]
    for f in members:
        c = quotient_coordinates(f, grid)
        residual = c - frame.projector() @ c
        assert np.linalg.norm(residual) <= 1e-10 * max(np.linalg.norm(c), 1)


def test_gap_examples():
    e1 = SubspaceFrame(np.array([[1], [0]], dtype=complex))
    e2 = SubspaceFrame(np.array([[0], [1]], dtype=complex))
    assert subspace_gap(e1, e1) == 0
    assert subspace_gap(e1, e2) == pytest.approx(1)
    assert subspace_gap(e1, line(np.pi / 4)) == pytest.approx(1 / np.sqrt(2))


def test_gap_dimension_and_ambient_mismatch():
    plane = SubspaceFrame(np.eye(3, 2, dtype=complex))
    assert subspace_gap(plane, SubspaceFrame(np.eye(3, 1, dtype=complex))) == 1.0
    with pytest.raises(AmbientMismatch):
        subspace_gap(plane, SubspaceFrame(np.eye(4, 2, dtype=complex)))


def test_gap_ignores_frame_choice():
    rng = np.random.default_rng(2)
    a = np.linalg.qr(rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2)))[0]
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    b = np.linalg.qr(rng.normal(size=(5, 2)))[0]
    assert subspace_gap(SubspaceFrame(a @ u), SubspaceFrame(b)) == pytest.approx(
        subspace_gap(SubspaceFrame(a), SubspaceFrame(b)), abs=1e-12)


def test_span_rank_cut():
    v = np.array([[1, 2, 1e-12], [0, 0, 0], [1, 2, 0]], dtype=complex)
    assert SubspaceFrame.span(v).k == 1


# -- subspace limits -------------------------------------------------------------------------------

def test_constant_family_converges():
    v = subspace_limit([line(0.3)] * 8)
    assert v.status == "Converged"
    assert subspace_gap(v.limit_frame, line(0.3)) < 1e-12


def test_rotating_line_converges():
    s = Schedule.geometric(count=12, order=2)
    v = subspace_limit([line(3 * e) for e in s.samples], s)
    assert v.status == "Converged"
    assert subspace_gap(v.limit_frame, line(0)) < 1e-8
    np.testing.assert_allclose(v.gaps[0], abs(np.sin(3 * (s.samples[0] - s.samples[1]))), rtol=1e-9)


def test_alternating_family_does_not_converge():
    e1, e2 = line(0), line(np.pi / 2)
    v = subspace_limit([e1 if k % 2 == 0 else e2 for k in range(12)])
    assert v.status == "NotConverged"
    assert v.limit_frame is None
    assert v.limsup_frame.k == 2 and v.liminf_frame.k == 0
    assert v.clusters == 2


def test_dimension_jump_does_not_converge():
    frames = [line(0)] * 5 + [SubspaceFrame(np.eye(2, dtype=complex))] * 5
    assert subspace_limit(frames).status == "NotConverged"


def test_subspace_limit_preconditions():
    with pytest.raises(ValueError):
        subspace_limit([line(0)] * 3)
    with pytest.raises(AmbientMismatch):
        subspace_limit([line(0)] * 3 + [SubspaceFrame(np.eye(3, 1, dtype=complex))])


def test_verdict_json():
    out = subspace_limit([line(0.3)] * 6).to_json()
    assert set(out) >= {"status", "dims", "gaps"}
    assert out["status"] == "Converged"


# -- lifting and certification ------------------------------------------------------------------------

def test_lift_recovers_quotient_frame():
    shape = GridShape((3, 2))
    frame = quotient_frame(I0, shape)
    gens = lift_frame(frame, shape)
    assert ideal_equal(Ideal(gens + limit_grid_ideal(shape).generators), I0)


@pytest.mark.parametrize("ell, n, side, expected", [(4, 4, "upper", True), (3, 4, "upper", False),
                                                    (4, 4, "lower", True), (6, 4, "lower", False)])
def test_length_criterion(ell, n, side, expected):
    assert length_criterion(ell, n, side) is expected


def test_length_criterion_sanity():
    with pytest.raises(SanityViolation):
        length_criterion(5, 4, "upper")
    with pytest.raises(SanityViolation):
        length_criterion(3, 4, "lower")


def test_limit_ideal_square(default_schedule):
    fam = family(("0", "0"), ("eps", "0"), ("0", "eps"), ("eps", "eps"))
    res = limit_ideal(fam, default_schedule)
    assert res.certified and res.length == 4
    assert ideal_equal(res.ideal, Ideal([z1 ** 2, z2 ** 2]))


def test_limit_ideal_gamma(default_schedule):
    fam = family(("0", "0"), ("eps", "0"), ("0", "eps"), ("2*eps", "0"))
    res = limit_ideal(fam, default_schedule)
    assert res.certified
    assert ideal_equal(res.ideal, I0)
    assert res.recovery_gap < 1e-4


def test_limit_ideal_three_points(default_schedule):
    fam = family(("0", "0"), ("eps", "0"), ("0", "eps"))
    res = limit_ideal(fam, default_schedule)
    assert res.certified and res.length == 3
    assert ideal_equal(res.ideal, power_ideal(2))


def test_limit_ideal_not_converged_has_no_ideal(default_schedule):
    fam = family(("0", "0"), ("eps", "0"), ("0", "eps"), ("2*eps", "eps^2*exp(I/eps)"))
    res = limit_ideal(fam, default_schedule)
    assert res.verdict.status == "NotConverged"
    assert res.ideal is None and not res.certified
    assert res.to_json()["limit_generators"] == []


def test_limit_result_json(default_schedule):
    fam = family(("0", "0"), ("eps", "0"), ("0", "eps"), ("2*eps", "0"))
    out = limit_ideal(fam, default_schedule).to_json()
    assert out["certified"] is True and out["length"] == 4
    assert out["grid_shape"] == {"exponents": [3, 2], "d": 6}
    assert len(out["limit_generators"]) == 3


def test_dimension_is_d_minus_n_for_builtins(scenarios):
    for sc in scenarios.values():
        pts = sc.family().points(sc.schedule().samples[4])
        frame = ideal_subspace(pts)
        assert frame.k == grid_shape(pts).d - 4, sc.name


def test_recovery_gap_for_builtins(scenarios):
    for sc in scenarios.values():
        res = limit_ideal(sc.family(), sc.schedule(), sc.precision)
        assert res.certified, sc.name
        assert res.recovery_gap < 1e-4, sc.name
