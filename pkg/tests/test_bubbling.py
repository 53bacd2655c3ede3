import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from harmonic_annuli.bubbling import (BRANCH_LOCI, DEFAULT_EPS, DomainFamily, FamilyKind,
                                      antibubbling_domain, conformal_rescale, detect_bubbling,
                                      exact_limit_table, family_condition31, family_embeddings,
                                      graph_bubbling_gap, graph_distances, neck_position,
                                      one_sided_hausdorff, reference_limit_table, pointwise_limit,
                                      pullback_map)
from harmonic_annuli.errors import NumericFailure

TABLE_KINDS = [FamilyKind.FlatRectangle, FamilyKind.PlanarAnnulus, FamilyKind.DoubleCone,
               FamilyKind.SphericalAnnulus]


def quad_length(kind, eps):
    # integral of meridian arclength over r, by quadrature
    if kind is FamilyKind.FlatRectangle:
        return quad(lambda s: 1.0 / eps, 0, 1)[0]
    if kind is FamilyKind.PlanarAnnulus:
        return quad(lambda r: 1.0 / r, eps, 1, limit=200)[0]
    if kind is FamilyKind.DoubleCone:
        f = lambda z: math.sqrt(2 * z * z + eps) / (z * z + eps)
        return quad(f, -1, 1, points=[0.0], limit=400, epsabs=1e-12, epsrel=1e-12)[0]
    if kind is FamilyKind.SphericalAnnulus:
        return quad(lambda p: 1.0 / math.sin(p), eps, math.pi - eps, limit=400)[0]
    return 2 * quad(lambda r: 1.0 / r, eps, 1)[0] + 1.0 / eps


@pytest.mark.parametrize("kind", list(FamilyKind))
@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_conformal_length_against_quadrature(kind, eps):
    fam = DomainFamily(kind, eps)
    assert fam.conformal_length == pytest.approx(quad_length(kind, eps), rel=1e-9)
    assert float(fam.conformal_coordinate(1.0)) == pytest.approx(fam.conformal_length, rel=1e-9)
    assert float(fam.conformal_coordinate(0.0)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_conformal_coordinate_monotone(kind):
    t = DomainFamily(kind, 0.05).conformal_coordinate(np.linspace(0, 1, 301))
    assert np.all(np.diff(t) > 0)


def test_rectangle_length_convention():
    # s in [0, 1] with circumference 2 pi eps gives conformal length 1/eps
    assert DomainFamily("rect", 1e-3).conformal_length == pytest.approx(1e3)


def test_antibubble_components():
    cyl = conformal_rescale(antibubbling_domain(1e-3))
    la = math.log(1e3)
    assert cyl.components == pytest.approx((la, 1e3, la))
    assert cyl.length == pytest.approx(sum(cyl.components))


def test_pullback_boundary_values():
    for kind in FamilyKind:
        fam = DomainFamily(kind, 1e-2)
        R0, _, Z0 = pullback_map(fam, 0.0, 0.0)
        R1, _, Z1 = pullback_map(fam, 1.0, 0.0)
        assert (R0, Z0) == pytest.approx((1.0, 0.0), abs=1e-12)
        assert (R1, Z1) == pytest.approx((1.0, 1.0), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 0.5), st.floats(0.0, 1.0))
def test_planar_pullback_matches_radial_solution(eps, s):
    # harmonic radial function on the planar annulus eps < r < 1, equal to 1 on both circles
    r = eps + s * (1 - eps)
    R, _, Z = pullback_map(DomainFamily("planar", eps), s, 0.0)
    assert R == pytest.approx((r + eps / r) / (1 + eps), rel=1e-9)
    assert Z == pytest.approx(math.log(r / eps) / math.log(1 / eps), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("s", [0.05, 0.2, 0.4, 0.6, 0.9])
def test_cone_limit_by_quadrature(s):
    # distance from the nearer end is the integral of sqrt(2z^2+eps)/(z^2+eps), which
    # tends to sqrt(2) log(1/|z|); the radius tends to exp(-distance)
    z = 2 * s - 1
    eps = 1e-10
    f = lambda w: math.sqrt(2 * w * w + eps) / (w * w + eps)
    d = quad(f, abs(z), 1)[0]
    assert math.exp(-d) == pytest.approx(exact_limit_table("cone", s)[0], abs=1e-6)


def test_reference_tables():
    assert reference_limit_table("rect", 0.3) == (0.0, 0.3)
    assert reference_limit_table("rect", 0.0) == (1.0, 0.0)
    assert reference_limit_table("planar", 0.5) == (1.0, 1.0)
    assert reference_limit_table("cone", 0.5) == (0.0, 0.5)
    assert reference_limit_table("cone", 0.2) == (1.0, 0.0)
    assert reference_limit_table("sphere", 0.4) == (0.0, 0.5)
    with pytest.raises(ValueError):
        reference_limit_table("antibubble", 0.5)


@pytest.mark.parametrize("kind", TABLE_KINDS)
def test_pointwise_limits_match_exact_tables(kind):
    rng = np.random.default_rng(3)
    loci = BRANCH_LOCI[kind]
    s = rng.uniform(0, 1, 400)
    s = s[np.all(np.abs(s[:, None] - np.array(loci)[None, :]) > 1e-2, axis=1)]
    worst = 0.0
    for si in s[:100]:
        lim = pointwise_limit(DomainFamily(kind, 1e-5), si, 0.0, DEFAULT_EPS)
        R, _, Z = lim.point
        R_ex, Z_ex = exact_limit_table(kind, si)
        worst = max(worst, abs(R - R_ex), abs(Z - Z_ex))
    assert worst < 1e-2


def test_limit_certificate():
    lim = pointwise_limit(DomainFamily("rect", 1e-5), 0.3, 0.0, DEFAULT_EPS)
    assert lim.certificate.converged and not lim.certificate.slow
    assert lim.point == pytest.approx((0.0, 0.0, 0.3), abs=1e-9)
    # at the cone's branch locus the limit converges like eps^(1/sqrt 2)
    neck = pointwise_limit(DomainFamily("cone", 1e-5), 0.5, 0.0, DEFAULT_EPS)
    assert neck.certificate.slow


def test_eps_sequence_validation():
    with pytest.raises(ValueError):
        pointwise_limit(DomainFamily("rect", 0.1), 0.3, 0.0, (1e-2, 1e-3))
    with pytest.raises(ValueError):
        pointwise_limit(DomainFamily("rect", 0.1), 0.3, 0.0, (1e-3, 1e-2, 1e-4))


def test_pullback_overflow_raises():
    with pytest.raises(NumericFailure), np.errstate(over="ignore"):
        pullback_map(DomainFamily("rect", 1e-310), 0.5, 0.0)


@pytest.mark.parametrize("kind,gap", [("rect", 0.5), ("planar", 1.0), ("cone", 0.5),
                                      ("sphere", 0.625)])
def test_detect_bubbling_families(kind, gap):
    rep = detect_bubbling(kind)
    assert rep.bubbled
    assert rep.graph_gap == pytest.approx(gap, abs=2e-3)
    assert len(rep.bubble_points) > 0


def test_antibubble_does_not_bubble():
    rep = detect_bubbling("antibubble")
    assert not rep.bubbled
    assert rep.graph_gap < rep.threshold / 5
    assert len(rep.bubble_points) == 0


def test_detect_bubbling_grid_guard():
    with pytest.raises(ValueError):
        detect_bubbling("rect", grid=(16, 32))


def test_bubble_gap_cross_check_with_point_clouds():
    # rectangle: limit image is the axis plus the two boundary circles; the discs
    # lose their interior, the farthest lost point is at radius 1/2 (gap 0.5)
    u = np.linspace(0, 1, 201)
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    rr, tt = np.meshgrid(u, th)
    disc = np.stack([rr * np.cos(tt), rr * np.sin(tt), np.zeros_like(rr)], axis=-1).reshape(-1, 3)
    circle = np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=1)
    axis = np.stack([np.zeros_like(u), np.zeros_like(u), u], axis=1)
    limit = np.concatenate([axis, circle, circle + [0, 0, 1]])
    d = one_sided_hausdorff(disc, limit)
    assert d == pytest.approx(0.5, abs=1e-2)


def test_graph_toy_gap():
    sup, gap = graph_bubbling_gap(1000)
    assert sup == pytest.approx(1 / math.sqrt(2 * math.e), rel=1e-12)
    assert gap == pytest.approx(sup)


def test_neck_position():
    assert neck_position(1e-3) == pytest.approx(0.9931396, abs=1e-7)
    vals = [neck_position(10.0 ** -k) for k in range(2, 7)]
    assert all(x < y for x, y in zip(vals, vals[1:]))
    assert neck_position(1e-4) > 0.999
    with pytest.raises(ValueError):
        neck_position(1.0)


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
def test_neck_position_near_tube_top(eps):
    # the closed formula ignores the top annulus; the tube top of the composite
    # domain lies within (eps log eps)^2 of it
    fam = antibubbling_domain(eps)
    s_top = (2 - eps) / (3 - 2 * eps)
    z = pullback_map(fam, s_top, 0.0)[2]
    assert z >= neck_position(eps)
    assert z - neck_position(eps) <= (eps * math.log(eps)) ** 2


def test_condition31_antibubble_converges():
    res = family_condition31("antibubble", (1e-1, 1e-2, 1e-3))
    d = res.per_step
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.02


@pytest.mark.parametrize("kind,floor", [("rect", 0.9), ("planar", 1.0)])
def test_condition31_fails_for_bubbling_families(kind, floor):
    res = family_condition31(kind, (1e-2, 1e-3, 1e-4))
    assert res.deviation > floor


def test_graph_distances_on_flat_grid():
    nodes, _ = family_embeddings(DomainFamily("rect", 0.5), grid=(11, 8))
    d = graph_distances(nodes, [(0, 0), (0, 10 * 8)])
    assert d[0] == 0.0
    assert d[1] == pytest.approx(1.0)
