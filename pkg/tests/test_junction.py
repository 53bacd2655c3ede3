import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonic_annuli.errors import DomainError
from harmonic_annuli.geometry import Disc, ImageSet, RevolutionSurface, SurfacePiece
from harmonic_annuli.junction import (PINCH_CONSTANT, JunctionSkeleton, ModuliPath, balance_angles,
                                      candidate_energy_upper, convex_hull_check, half_angle,
                                      is_stationary, moduli_dim, path_limit, pinch_energy_bound,
                                      skeleton_from_tensions, t_junction)
from harmonic_annuli.profile import fit_boundary, mesh_profile

UNIT_CIRCLES = (Disc((0, 0, -1), (0, 0, 1), 1.0), Disc((0, 0, 1), (0, 0, 1), 1.0))


def test_moduli_dim():
    assert [moduli_dim(n) for n in (3, 4, 5)] == [3, 6, 9]
    with pytest.raises(DomainError):
        moduli_dim(2)


def test_equal_tensions_give_120_degrees():
    res = balance_angles((1, 1, 1))
    assert res.stationary
    for ang in res.angles:
        assert abs(ang - 2 * math.pi / 3) < 1e-12


def test_degenerate_tensions():
    assert not balance_angles((1, 1, 0)).stationary
    assert not balance_angles((3, 1, 1)).stationary
    with pytest.raises(ValueError):
        balance_angles((1, -1, 1))
    with pytest.raises(ValueError):
        balance_angles((1, 1))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 10), st.floats(0.05, 10), st.floats(0.05, 10))
def test_balanced_skeleton_is_stationary(a, b, c):
    T = (a, b, c)
    res = balance_angles(T)
    ok = all(T[i] <= T[(i + 1) % 3] + T[(i + 2) % 3] for i in range(3))
    assert res.stationary == ok
    if res.stationary:
        assert sum(res.angles) == pytest.approx(2 * math.pi)
        j = skeleton_from_tensions(T)
        assert is_stationary(j, tol=1e-9)


def test_half_angle_range():
    taus = np.linspace(1e-6, 1.0, 200)
    alpha = np.degrees([half_angle(t) for t in taus])
    assert alpha.min() == pytest.approx(60.0)
    assert alpha.max() < 90.0
    assert np.all(np.diff(alpha) < 0)
    with pytest.raises(ValueError):
        half_angle(0.0)


def test_half_angle_agrees_with_balance():
    # tensions (1, 1, tau): each strong segment makes alpha with the axis
    # opposite the weak one, so the strong pair meets at 2 alpha
    tau = 0.5
    ang = balance_angles((1, 1, tau)).angles
    assert ang[2] == pytest.approx(2 * half_angle(tau))


def test_t_junction_not_stationary():
    assert not is_stationary(t_junction())
    line = JunctionSkeleton((0, 0, 0), [[1, 0, 0], [-1, 0, 0]], (2.0, 2.0))
    assert is_stationary(line)
    assert len(line.segments()) == 2


def test_path_limits():
    y = path_limit(ModuliPath((lambda t: t, lambda t: t, lambda t: 0.5 * t)))
    assert y.kind == "Y" and y.stationary
    assert y.tensions == pytest.approx((1.0, 1.0, 0.5))
    strong = y.balance.angles[2]
    assert strong / 2 == pytest.approx(math.acos(0.25))
    t = path_limit(ModuliPath((lambda t: t, lambda t: t, lambda t: t * t)))
    assert t.kind == "T-singularity" and not t.stationary
    two = path_limit(ModuliPath((lambda t: t, lambda t: t, lambda t: 1e6 * t)))
    assert two.kind == "two-segments"
    bad = path_limit(ModuliPath((lambda t: t, lambda t: 0.3 * t, lambda t: 0.3 * t)))
    assert bad.kind == "non-stationary"


def test_oscillating_path_needs_subsequence():
    osc = ModuliPath((lambda t: t, lambda t: t, lambda t: t * (1.5 + math.sin(math.log2(t) * math.pi / 2))))
    res = path_limit(osc)
    assert res.kind == "diagonalization"
    assert len(res.subsequence_limits) >= 2


def test_path_validation():
    with pytest.raises(ValueError):
        ModuliPath((lambda t: t,) * 2)
    with pytest.raises(DomainError):
        ModuliPath((lambda t: t, lambda t: -t, lambda t: t))(0.5)


def test_pinch_bound():
    assert pinch_energy_bound(1e-2, 1.0, False) == pytest.approx(100 * PINCH_CONSTANT)
    assert pinch_energy_bound(1e-2, 1.0, True) == 0.0
    vals = [pinch_energy_bound(e, 1.0, False) for e in (1e-1, 1e-2, 1e-3)]
    assert vals[0] < vals[1] < vals[2]
    with pytest.raises(ValueError):
        pinch_energy_bound(1.5, 1.0, False)


def test_candidate_upper_bound_tends_to_twice_area():
    areas = (1.0, 2.0, 3.0)
    vals = [candidate_energy_upper(areas, e, (1, 1, 1)) for e in (1e-1, 1e-2, 1e-3)]
    assert all(v > 12.0 for v in vals)
    assert vals[-1] == pytest.approx(12.0, abs=0.02)


def test_convex_hull_check():
    s = mesh_profile(fit_boundary(1.0, 1.0, 1.0), 129)
    assert convex_hull_check(ImageSet((SurfacePiece(s),)), UNIT_CIRCLES)
    Z = np.linspace(-1, 1, 129)
    bulge = RevolutionSurface(Z, 2.0 - Z * Z)
    assert not convex_hull_check(ImageSet((SurfacePiece(bulge),)), UNIT_CIRCLES)
