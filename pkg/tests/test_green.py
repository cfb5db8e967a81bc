import csv
import math

import numpy as np
import pytest

from helpers import family
from oracles import share_projective_root
from illab.errors import CoincidentPoints, ExtraCommonZeros, OriginSingularity, PoleHit, ZeroOnSphere
from illab.geometry import ProjectiveDirection, Schedule, chordal_distance, limit_directions
from illab.green import (CIMap, bidisk_pole_bounds, common_zeros, gap_report, green_candidate,
                         ideal_green_candidate, independence_sets, independent_pair, limit_products,
                         line_equation, pairing_products, sphere_sample, torus_sample, uci_verify,
                         verify_common_zeros)
from illab.poly import Polynomial, parse_polynomial, resultant_binary_quadratics

P = parse_polynomial
z1 = Polynomial.variable(0)
z2 = Polynomial.variable(1)
SQ = family(("0", "0"), ("eps", "0"), ("0", "eps"), ("eps", "eps"))
GAMMA2 = family(("0", "0"), ("eps", "0"), ("0", "eps"), ("2*eps", "0"))
SCHED = Schedule.geometric(order=2)
LOG2 = math.log(2)


def same_up_to_phase(p: Polynomial, q: Polynomial, tol=1e-6) -> bool:
    keys = sorted(set(p.terms) | set(q.terms))
    a = np.array([p.coeff(k) for k in keys])
    b = np.array([q.coeff(k) for k in keys])
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) < tol and \
        np.linalg.norm(a) == pytest.approx(np.linalg.norm(b), rel=tol)


# -- lines and products ------------------------------------------------------------------

def test_line_examples():
    e = 0.01
    l = line_equation((0, 0), (e, 0))
    assert l.polynomial() == z2
    l = line_equation((0, 0), (0, e))
    assert l.polynomial() == z1
    l = line_equation((e, 0), (0, e))
    assert same_up_to_phase(l.polynomial(), (z1 + z2 - e) / math.sqrt(2), 1e-12)


def test_line_is_normalized_and_vanishes():
    rng = np.random.default_rng(4)
    for _ in range(20):
        p, q = rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(size=2) + 1j * rng.normal(size=2)
        l = line_equation(p, q)
        assert abs(l(*p)) < 1e-10 and abs(l(*q)) < 1e-10
        assert math.hypot(abs(l.u[0]), abs(l.u[1])) == pytest.approx(1)
        pivot = l.u[0] if abs(l.u[0]) >= abs(l.u[1]) else l.u[1]
        assert pivot.imag == pytest.approx(0, abs=1e-15) and pivot.real > 0


def test_line_needs_two_points():
    with pytest.raises(CoincidentPoints):
        line_equation((1, 2), (1, 2))


def test_products_vanish_on_points():
    rng = np.random.default_rng(8)
    for _ in range(10):
        pts = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        for f in pairing_products(pts):
            assert max(abs(f(*p)) for p in pts) < 1e-12
            assert f.degree == 2


def test_limit_products_square():
    f1, f2, f3 = limit_products(limit_directions(SQ, SCHED))
    assert same_up_to_phase(f1, z2 ** 2)
    assert same_up_to_phase(f2, z1 ** 2)
    assert same_up_to_phase(f3, (z2 - z1) * (z1 + z2) / 2)


def test_limit_products_gamma():
    f1, _, _ = limit_products(limit_directions(GAMMA2, SCHED))
    assert same_up_to_phase(f1, z2 * (z1 + 2 * z2) / math.sqrt(5))


def test_independence_sets():
    a1, a2, a3 = independence_sets(limit_directions(SQ, SCHED))
    assert a1 == a2 == a3 == []
    a1, a2, a3 = independence_sets(limit_directions(GAMMA2, SCHED))
    assert len(a3) == 1 and chordal_distance(a3[0], ProjectiveDirection.of((1, 0))) < 1e-9


def test_independence_sets_all_distinct():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    dirs = {(i + 1, j + 1): ProjectiveDirection.of(pts[j] - pts[i]) for i in range(4) for j in range(i + 1, 4)}
    assert independence_sets(dirs) == ([], [], [])


def test_independent_pair_examples(scenarios):
    limits = limit_products(limit_directions(SQ, SCHED))
    assert independent_pair(limits) == (1, 2)
    assert abs(resultant_binary_quadratics(limits[0], limits[1])) == pytest.approx(1)
    collinear = family(("0", "0"), ("eps", "0"), ("2*eps", "0"), ("3*eps", "0"))
    assert independent_pair(limit_products(limit_directions(collinear, SCHED))) is None
    sc = scenarios["thm23_vertex"]
    assert independent_pair(limit_products(limit_directions(sc.family(), sc.schedule()))) is None


def test_resultant_matches_root_oracle():
    rng = np.random.default_rng(11)

    def rand_linear():
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        return a[0] * z1 + a[1] * z2

    for k in range(50):
        if k % 2:
            f, g = rand_linear() * rand_linear(), rand_linear() * rand_linear()
        else:  # shared factor
            shared = rand_linear()
            f, g = shared * rand_linear(), shared * rand_linear()
        nonzero = abs(resultant_binary_quadratics(f, g)) > 1e-8
        assert nonzero != share_projective_root(f, g), k
        assert independent_pair([f, g, f]) == ((1, 2) if nonzero else None)


# -- common zeros and the UCI check ---------------------------------------------------------

def test_common_zeros_of_square_pair():
    pts = SQ.points(0.05)
    f1, f2, _ = pairing_products(pts)
    out = verify_common_zeros(f1, f2, pts, 1e-6 * 0.05)
    assert out["n_zeros"] == 4 and out["all_matched"]
    assert out["matched"] == [1, 2, 3, 4]


def test_common_zeros_random_pairs():
    rng = np.random.default_rng(21)
    for _ in range(20):
        pts = 0.3 * (rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)))
        f = pairing_products(pts)
        zeros = common_zeros(f[0], f[1])
        assert len(zeros) == 4
        for p in pts:
            assert min(math.hypot(abs(p[0] - r[0]), abs(p[1] - r[1])) for r in zeros) < 1e-8


def test_shared_factor_is_an_extra_zero_set():
    pts = [(0, 0), (0.1, 0), (0.2, 0), (0, 0.1)]
    with pytest.raises(ExtraCommonZeros):
        common_zeros(z2 * (z1 - 0.1), z2 * (z2 - 0.1))
    with pytest.raises(ExtraCommonZeros):
        verify_common_zeros(z2 * (z1 - 0.1), z2 * (z2 - 0.1), pts, 1e-6)


def test_unexpected_zero_inside_bidisk_is_listed():
    pts = [(0, 0), (0.1, 0), (0, 0.1), (0.1, 0.1)]
    g = z1 * (z1 - 0.1)
    h = z2 * (z2 - 0.1)
    with pytest.raises(ExtraCommonZeros) as info:
        verify_common_zeros(g, h, pts[:3], 1e-7)
    assert len(info.value.roots) == 1
    r = info.value.roots[0]
    assert abs(r[0] - 0.1) < 1e-9 and abs(r[1] - 0.1) < 1e-9


def test_zeros_outside_bidisk_are_ignored():
    g = z1 * (z1 - 3)  # two of the four common zeros sit at z1 = 3
    h = z2 * (z2 - 0.1)
    out = verify_common_zeros(g, h, [(0, 0), (0, 0.1)], 1e-7)
    assert out["n_zeros"] == 2 and out["all_matched"]


def test_uci_square():
    limits = limit_products(limit_directions(SQ, SCHED))
    rep = uci_verify(SQ, SCHED, (1, 2), limits)
    assert rep.verified
    assert all(s["n_zeros"] == 4 for s in rep.samples)
    assert all(math.isfinite(c) for c in rep.comparability)
    assert rep.to_json()["pair"] == [1, 2]


# -- candidates and gaps ------------------------------------------------------------------------

def test_green_candidate_examples():
    assert green_candidate(1, 1) == 0
    assert green_candidate(math.exp(-1), math.exp(-2)) == pytest.approx(-2)
    assert green_candidate(0.5, 0.1) == pytest.approx(2 * math.log(0.5))
    with pytest.raises(OriginSingularity):
        green_candidate(0, 0)


def test_samples_are_deterministic_and_on_the_right_sets():
    t1, t2 = torus_sample()
    assert len(t1) == 64 * 64
    np.testing.assert_allclose(np.abs(t1), 1)
    s1, s2 = sphere_sample()
    assert len(s1) == 1000
    np.testing.assert_allclose(np.abs(s1) ** 2 + np.abs(s2) ** 2, 1)
    np.testing.assert_array_equal(sphere_sample()[0], s1)


def test_gap_report_axis_forms():
    rep = gap_report((z2 ** 2, z1 ** 2))
    assert rep.certified_bounded
    assert rep.n_samples == 64 * 64 + 1000
    assert rep.min >= -0.5 * LOG2 - 1e-6
    assert rep.max <= 0.5 * LOG2 + 1e-6
    assert rep.min >= -1e-12  # max^4 <= |z1|^4 + |z2|^4


def test_gap_report_zero_resultant():
    with pytest.raises(ZeroOnSphere) as info:
        gap_report((z1 * z2, z2 * (z1 + z2)))
    u = info.value.point  # on the shared line z2 = 0
    assert abs(u[1]) < 1e-9 and abs(u[0]) == pytest.approx(1)


def test_two_generic_reports_differ_by_a_bounded_amount(scenarios):
    means = []
    for name in ("generic_diagonal", "generic_skew"):
        sc = scenarios[name]
        limits = limit_products(limit_directions(sc.family(), sc.schedule()))
        pair = independent_pair(limits)
        rep = gap_report(CIMap(pair, None, None, limits[pair[0] - 1], limits[pair[1] - 1]))
        assert rep.certified_bounded
        means.append(rep.mean)
    assert math.isfinite(means[0] - means[1])


def test_gap_report_json_and_csv(tmp_path):
    rep = gap_report((z2 ** 2, z1 ** 2), torus_n=4, sphere_n=10)
    assert set(rep.to_json()) >= {"n_samples", "min", "max", "mean", "certified_bounded"}
    path = tmp_path / "gaps.csv"
    rep.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["kind", "z1_re", "z1_im", "z2_re", "z2_im", "gap"]
    assert len(rows) == 1 + 16 + 10


def test_gap_homogeneity():
    rng = np.random.default_rng(6)
    g, h = P("z1^2 + (0,1)*z1*z2"), P("z2^2 - 2*z1*z2")
    for _ in range(100):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        t = complex(rng.normal(), rng.normal())
        norm = lambda w: math.log(math.hypot(abs(g(*w)), abs(h(*w))))  # noqa: E731
        assert abs(norm(t * z) - norm(z) - 2 * math.log(abs(t))) <= 1e-9


# -- bidisk envelopes ----------------------------------------------------------------------------

def test_pole_bounds_single_pole():
    lo, hi = bidisk_pole_bounds([(0, 0)], (0.5, 0))
    assert lo == pytest.approx(math.log(0.5)) and hi == pytest.approx(math.log(0.5))


def test_pole_bounds_two_poles():
    lo, hi = bidisk_pole_bounds([(0, 0), (0.5, 0)], (0, 0.5))
    g_first = math.log(0.5)  # pole (0, 0): max(log 0, log 0.5)
    g_second = math.log(0.5)  # pole (0.5, 0): |m(0)| = 0.5 in both coordinates
    assert lo == pytest.approx(g_first + g_second)
    assert hi == pytest.approx(min(g_first, g_second))


def test_pole_bounds_on_distinguished_boundary():
    rng = np.random.default_rng(9)
    pts = [(0, 0), (0.1, 0), (0, 0.1), (0.1j, 0.05)]
    for _ in range(20):
        z = np.exp(2j * np.pi * rng.random(2))
        lo, hi = bidisk_pole_bounds(pts, z)
        assert abs(lo) < 1e-10 and abs(hi) < 1e-10


def test_pole_bounds_ordering_and_errors():
    rng = np.random.default_rng(10)
    pts = [(0, 0), (0.1, 0), (0, 0.1), (0.1, 0.1)]
    for _ in range(200):
        z = 0.99 * rng.random(2) * np.exp(2j * np.pi * rng.random(2))
        lo, hi = bidisk_pole_bounds(pts, z)
        assert lo <= hi <= 0
    with pytest.raises(PoleHit):
        bidisk_pole_bounds(pts, (0.1, 0))


def test_ideal_candidate_matches_axis_formula():
    z = (0.3, 0.2j)
    val = ideal_green_candidate([z1 * z2, z2 ** 2, z1 ** 3], *z)
    assert val == pytest.approx(max(math.log(0.06), 2 * math.log(0.2), 3 * math.log(0.3)))


def test_green_candidate_sub_mean_value():
    rng = np.random.default_rng(12)
    theta = np.exp(2j * np.pi * np.arange(64) / 64)
    worst = np.inf
    for _ in range(1000):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        r = 0.5 * rng.random()
        centre = green_candidate(*a)
        ring = green_candidate(a[0] + r * v[0] * theta, a[1] + r * v[1] * theta)
        worst = min(worst, float(np.mean(ring)) - centre)
    assert worst >= -1e-9
