import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonic_annuli.bundle import (LiftedMeasure, bin_measure, circle_samples, detect_collapse,
                                    hausdorff_distance, lift_curve, lift_disc, lift_image,
                                    lift_surface, measure_limit, total_variation)
from harmonic_annuli.geometry import (ConformalClass, Disc, ImageSet, ModuliBoundaryPoint,
                                      RevolutionSurface)
from harmonic_annuli.moduli import image_of_class, limit_image
from harmonic_annuli.profile import fit_boundary, mesh_profile


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 10.0))
def test_circle_lift_mass(r):
    m = lift_curve(circle_samples(r, 512), closed=True)
    assert m.total_mass == pytest.approx(2 * math.pi * math.sqrt(1 + r * r), rel=5e-3)
    np.testing.assert_allclose(np.linalg.norm(m.directions, axis=1), 1.0)


def test_straight_segment_has_no_turning():
    P = np.stack([np.linspace(0, 2, 50), np.zeros(50)], axis=1)
    m = lift_curve(P)
    assert m.total_mass == pytest.approx(2.0)
    np.testing.assert_allclose(m.directions, [[1.0, 0.0]] * 49)


def test_lift_curve_validation():
    with pytest.raises(ValueError):
        lift_curve([[0, 0], [1, 0]])
    with pytest.warns(RuntimeWarning):
        lift_curve([[0, 0], [0, 0], [1, 0], [2, 0]])


def test_lifted_measure_validation_and_add():
    with pytest.raises(ValueError):
        LiftedMeasure([[0, 0]], [[1, 0]], [0.0])
    with pytest.raises(ValueError):
        LiftedMeasure([[0, 0]], [[2, 0]], [1.0])
    a = LiftedMeasure([[0, 0]], [[1, 0]], [1.0])
    b = a + LiftedMeasure.empty(2)
    assert b.total_mass == 1.0 and len(b.weights) == 1


def test_surface_lift_mass_is_area():
    s = mesh_profile(fit_boundary(1.0, 1.0, 1.0), 257)
    m = lift_surface(s, n_theta=128)
    assert m.total_mass == pytest.approx(s.area(), rel=1e-3)


def test_cylinder_normals_are_radial():
    Z = np.linspace(-1, 1, 9)
    m = lift_surface(RevolutionSurface(Z, np.ones_like(Z)), n_theta=16)
    np.testing.assert_allclose(m.directions[:, 2], 0.0, atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(m.positions[:, :2], axis=1), 1.0)


def test_disc_lift():
    m = lift_disc(Disc((0, 0, 1), (0, 0, -1), 2.0))
    assert m.total_mass == pytest.approx(4 * math.pi)
    # unoriented: the axis sign is normalized
    np.testing.assert_allclose(m.directions, [[0, 0, 1.0]] * len(m.weights))


def test_collapsed_image_lift_is_two_discs():
    m = lift_image(limit_image(ModuliBoundaryPoint.CollapsedEnd))
    assert m.total_mass == pytest.approx(2 * math.pi)


def test_shrinking_circles_limit():
    seq = [lift_curve(circle_samples(1.0 / n, 512), closed=True) for n in (10, 100, 1000, 10000)]
    lim = measure_limit(seq, bin_width=0.5)
    assert lim.cauchy and not lim.diverged
    assert lim.total_mass == pytest.approx(2 * math.pi, rel=1e-2)
    assert len(lim.limit.position_marginal()) == 1
    # the direction marginal keeps the full circle of tangents
    assert len(lim.limit.bins) > 4


def test_growing_sequence_is_not_cauchy():
    seq = [lift_curve(circle_samples(float(r), 256), closed=True) for r in (1, 2, 4, 8)]
    assert measure_limit(seq).diverged


def test_binning_preserves_mass_and_tv():
    m = lift_curve(circle_samples(1.0, 64), closed=True)
    b = bin_measure(m, 0.25, (0.0, 0.0))
    assert b.total_mass == pytest.approx(m.total_mass)
    assert total_variation(b, b) == 0.0
    assert total_variation(b, bin_measure(LiftedMeasure.empty(2), 0.25, (0, 0))) == pytest.approx(m.total_mass)
    with pytest.raises(ValueError):
        bin_measure(m, 0.0, (0.0, 0.0))


def test_hausdorff_distance():
    A = np.array([[0.0, 0.0], [1.0, 0.0]])
    B = np.array([[0.0, 0.0]])
    assert hausdorff_distance(A, B) == 1.0
    assert hausdorff_distance(B, A) == 1.0
    with pytest.raises(ValueError):
        hausdorff_distance(A, np.empty((0, 2)))


def test_collapse_detected_towards_collapsed_end():
    seq = [image_of_class(ConformalClass(a)) for a in (2.0, 4.0, 8.0, 16.0)]
    rep = detect_collapse(seq)
    assert rep.collapsed
    assert rep.segment is not None
    assert rep.interval[0] < -0.9 and rep.interval[1] > 0.9
    assert all(x > y for x, y in zip(rep.areas, rep.areas[1:]))


def test_no_collapse_towards_ruled_end():
    seq = [image_of_class(ConformalClass(a)) for a in (0.5, 0.25, 0.125)]
    assert not detect_collapse(seq).collapsed
    same = [image_of_class(ConformalClass(1.0))] * 3
    assert not detect_collapse(same).collapsed
    assert not detect_collapse([ImageSet(())]).collapsed
