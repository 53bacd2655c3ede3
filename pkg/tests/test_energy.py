import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harmonic_annuli.energy import (Bump, bilipschitz_energy_bound, check_chain, curvature_functional,
                                    curvature_integral, dirichlet_energy, dyadic_annulus_bound,
                                    first_variation, principal_curvatures, profile_energy, sample_map)
from harmonic_annuli.errors import UndefinedCurvatureError
from harmonic_annuli.geometry import MetricAnnulus, RevolutionSurface
from harmonic_annuli.profile import (ProfileData, RadialProfile, catenoid_profile, find_catenoids,
                                     fit_boundary, mesh_profile)

# direct mpmath quadrature of the energy density (30 digits), unit circles at Z = +-1
ENERGY_ORACLE = {0.5: 53.343221139574817, 1.0: 22.136845035829374, 2.0: 15.699534999898935,
                 3.0: 13.962633633183503}
# A = 1.5, B = 0.5, a = 1.3
ENERGY_ASYM = 37.211171882670662


def mp_energy(a, A, B):
    mp.mp.dps = 25
    k = mp.mpf(a) ** 2
    R = lambda z: A * mp.cosh(k * z) / mp.cosh(k) + B * mp.sinh(k * z) / mp.sinh(k)
    dR = lambda z: mp.diff(R, z)
    return float(2 * mp.pi * mp.quad(lambda z: (dR(z) ** 2 + 1) / k + k * R(z) ** 2, [-1, 0, 1]))


def richardson(profile, n):
    # trapezoid error is O(h^2): combine grids with spacing h and h/2
    coarse = profile_energy(profile, nx=n)
    fine = profile_energy(profile, nx=2 * n - 1)
    return (4 * fine - coarse) / 3


@pytest.mark.parametrize("a", sorted(ENERGY_ORACLE))
def test_energy_matches_quadrature_oracle(a):
    p = fit_boundary(a, 1.0, 1.0)
    assert profile_energy(p) == pytest.approx(ENERGY_ORACLE[a], rel=5e-4)
    assert richardson(p, 2049) == pytest.approx(ENERGY_ORACLE[a], rel=1e-9)


@pytest.mark.parametrize("a", [1.0, 3.0])
def test_energy_quadrature_is_second_order(a):
    p = fit_boundary(a, 1.0, 1.0)
    e1, e2 = (abs(profile_energy(p, nx=n) - ENERGY_ORACLE[a]) for n in (1025, 2049))
    assert e1 / e2 == pytest.approx(4.0, rel=0.02)


def test_energy_asymmetric_boundary():
    assert richardson(RadialProfile(1.5, 0.5, 1.3), 2049) == pytest.approx(ENERGY_ASYM, rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.5, 2.0), st.floats(-0.4, 0.4))
def test_energy_random_profiles_against_mpmath(a, A, B):
    assert richardson(RadialProfile(A, B, a), 2049) == pytest.approx(mp_energy(a, A, B), rel=1e-8)


def test_energy_independent_of_representative_scale():
    # conformal invariance: scaling both metric factors leaves the energy unchanged
    p = RadialProfile(1.0, 0.0, 1.2)
    m = sample_map(p, nx=513, ntheta=16)
    k = p.kappa
    m2 = sample_map(p, MetricAnnulus(7.0 * k * k, 7.0), nx=513, ntheta=16)
    assert dirichlet_energy(m) == pytest.approx(dirichlet_energy(m2), rel=1e-12)


def test_identity_map_energy_is_twice_area():
    # cylinder of radius 1 on the conformal metric diag(1, 1): energy = 2 * area = 8 pi
    p = ProfileData(lambda z: np.ones_like(z), a=1.0, deriv_func=np.zeros_like)
    m = sample_map(p, MetricAnnulus(1.0, 1.0), nx=65, ntheta=16)
    assert dirichlet_energy(m) == pytest.approx(8 * math.pi, rel=1e-12)


def test_grid_guard():
    with pytest.raises(ValueError):
        dirichlet_energy(sample_map(RadialProfile(1, 0, 1.0), nx=8, ntheta=16))


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_solutions_are_stationary(a):
    p = fit_boundary(a, 1.0, 1.0)
    E = profile_energy(p, nx=512, ntheta=64)
    for c in (-0.5, -0.25, 0.0, 0.25, 0.5):
        assert abs(first_variation(p, Bump(c, 0.4))) <= 1e-6 * E


def test_non_solution_is_detected():
    base = fit_boundary(1.0, 1.0, 1.0)
    q = ProfileData(lambda z: base.value(z) + 0.05 * np.sin(math.pi * (z + 1)), a=1.0,
                    deriv_func=lambda z: base.deriv(z) + 0.05 * math.pi * np.cos(math.pi * (z + 1)))
    E = profile_energy(q, nx=512, ntheta=64)
    dE = [abs(first_variation(q, Bump(c, 0.4))) for c in (-0.5, -0.25, 0.0, 0.25, 0.5)]
    assert max(dE) > 1e-6 * E


def test_bump_derivative():
    b = Bump(0.1, 0.3, 2.0)
    x = np.linspace(-0.25, 0.45, 9)
    h = 1e-6
    assert np.allclose(b.deriv(x), (b(x + h) - b(x - h)) / (2 * h), atol=1e-6)
    assert b(np.array([0.5]))[0] == 0.0


# --- curvature ------------------------------------------------------------------------

def test_principal_curvatures_of_cylinder_and_catenoid():
    Z = np.linspace(-1, 1, 101)
    cyl = RevolutionSurface(Z, 2 * np.ones_like(Z))
    assert principal_curvatures(cyl, 0.1) == pytest.approx((0.0, 0.5))
    c = 0.7
    cat = RevolutionSurface(Z, c * np.cosh(Z / c), dR=np.sinh(Z / c), d2R=np.cosh(Z / c) / c)
    r1, r2 = principal_curvatures(cat, 0.3)
    assert r1 == pytest.approx(-r2, rel=1e-12)  # minimal surface: mean curvature zero
    with pytest.raises(UndefinedCurvatureError):
        principal_curvatures(RevolutionSurface(Z, np.abs(Z)), 0.0)


def test_curvature_functional_infinite_on_ruled_surfaces():
    Z = np.linspace(-1, 1, 65)
    assert curvature_functional(RevolutionSurface(Z, np.ones_like(Z))).infinite
    assert curvature_functional(RevolutionSurface(Z, 1.5 + 0.5 * Z)).infinite


def test_curvature_integral_on_catenoid_is_twice_area():
    # |rho1| = |rho2| on a minimal surface, so the integrand is exactly 2
    c, h = find_catenoids(1.0, 0.4)[1], 0.4
    s = mesh_profile(catenoid_profile(c, h), 2049)
    ci = curvature_integral(s)
    assert ci.value.value == pytest.approx(2 * s.area(), rel=1e-12)
    assert ci.excluded_fraction == 0.0


def test_curvature_integral_on_sphere_with_poles():
    # R = 0 at the poles: those samples are excluded but carry no area
    Z = np.linspace(-1, 1, 2001)
    R = np.sqrt(np.clip(1 - Z * Z, 0, None))
    ci = curvature_integral(RevolutionSurface(Z, R))
    assert ci.excluded_fraction == 0.0
    assert not ci.value.infinite


def test_curvature_integral_of_cylinder_strip_is_infinite():
    # the meridian curvature vanishes on an interval
    Z = np.linspace(0, 1e-9, 5)
    s = RevolutionSurface(Z, 1 + Z * 0, dR=np.zeros(5), d2R=np.zeros(5))
    assert curvature_integral(s).value.infinite


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.3, 2.0), st.floats(0.3, 2.0))
def test_chain_holds_for_harmonic_profiles(a, r0, r1):
    p = fit_boundary(a, r0, r1)
    n = 2049
    rep = check_chain(profile_energy(p, nx=n), mesh_profile(p, n))
    assert rep.holds


def test_chain_middle_link_fails_for_nothing_but_records_values():
    p = fit_boundary(1.0, 1.0, 1.0)
    rep = check_chain(profile_energy(p), mesh_profile(p, 513))
    assert rep.energy.value == pytest.approx(rep.middle.value, rel=1e-12)
    assert rep.middle.value >= rep.twice_area


def test_energy_bounds():
    assert bilipschitz_energy_bound(1.0, 0.0) == 2.0
    assert bilipschitz_energy_bound(1.0, 0.1) == pytest.approx(2 * 1.1 ** 4)
    with pytest.raises(ValueError):
        bilipschitz_energy_bound(1.0, 1.0)
    per, total = dyadic_annulus_bound(1.0, 10)
    assert per == pytest.approx(3 * math.pi / 4)
    assert total == pytest.approx(10 * per)
