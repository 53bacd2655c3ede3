"""Discrete lifts to the sphere bundle and binned weak limits.

A curve lifts by its unit tangent and a surface by its unit normal, so each
piece becomes a measure on position x direction.  A lifted curve is weighted
by the arclength of (position, direction) in the product space, which keeps
the turning of tiny circles visible after their positions shrink to a point.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Disc, ImageSet, RevolutionSurface, Segment, SurfacePiece, point_cloud_diameter


@dataclass(frozen=True, eq=False)
class LiftedMeasure:
    """Weighted atoms (position, unit direction) in the sphere bundle."""

    positions: np.ndarray
    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.positions, dtype=float))
        D = np.asarray(self.directions, dtype=float).reshape(P.shape)
        w = np.asarray(self.weights, dtype=float).reshape(len(P))
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if len(w) and np.max(np.abs(np.linalg.norm(D, axis=1) - 1.0)) > 1e-12:
            raise ValueError("directions must be unit vectors")
        for name, v in (("positions", P), ("directions", D), ("weights", w)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @classmethod
    def empty(cls, dim: int = 3) -> "LiftedMeasure":
        return cls(np.empty((0, dim)), np.empty((0, dim)), np.empty(0))

    def __add__(self, other: "LiftedMeasure") -> "LiftedMeasure":
        return LiftedMeasure(np.concatenate([self.positions, other.positions]),
                             np.concatenate([self.directions, other.directions]),
                             np.concatenate([self.weights, other.weights]))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _canonical_sign(n: np.ndarray) -> np.ndarray:
    """Pick the representative of +-n whose last nonzero coordinate is positive
    (surfaces here are unoriented)."""
    out = n.copy()
    for k in range(n.shape[1] - 1, -1, -1):
        undecided = np.all(np.abs(out[:, k + 1:]) <= 1e-15, axis=1)
        flip = undecided & (out[:, k] < -1e-15)
        out[flip] *= -1.0
    return out


def _turning(t0: np.ndarray, t1: np.ndarray) -> np.ndarray:
    """Angle between consecutive unit tangents (rows)."""
    c = np.clip((t0 * t1).sum(axis=1), -1.0, 1.0)
    # atan2 form is accurate for small angles
    s = np.linalg.norm(t1 - t0 * c[:, None], axis=1)
    return np.arctan2(s, c)


def lift_curve(samples, closed: bool = False) -> LiftedMeasure:
    """Lift a polyline by its unit tangent.

    Each segment carries the length of its lifted arc: the position moves by the
    segment length l_i while the direction turns by psi_i, half the turning at
    each of its two vertices, giving weight sqrt(l_i^2 + psi_i^2).
    """
    P = np.asarray(samples, dtype=float)
    if P.ndim != 2 or len(P) < 3:
        raise ValueError("need at least 3 samples of a curve")
    if closed:
        P = np.concatenate([P, P[:1]])
    seg = np.diff(P, axis=0)
    length = np.linalg.norm(seg, axis=1)
    keep = length > 0
    if not keep.all():
        warnings.warn(f"skipping {int((~keep).sum())} zero-length segments", RuntimeWarning,
                      stacklevel=2)
    starts = P[:-1][keep]
    seg, length = seg[keep], length[keep]
    if len(seg) == 0:
        return LiftedMeasure.empty(P.shape[1])
    tangent = seg / length[:, None]
    psi = np.zeros(len(seg))
    if len(seg) > 1:
        turn = _turning(tangent[:-1], tangent[1:])
        psi[:-1] += turn / 2
        psi[1:] += turn / 2
        if closed:
            wrap = _turning(tangent[-1:], tangent[:1])[0]
            psi[0] += wrap / 2
            psi[-1] += wrap / 2
    return LiftedMeasure(starts + seg / 2, tangent, np.hypot(length, psi))


def circle_samples(radius: float, n: int, center=(0.0, 0.0)) -> np.ndarray:
    th = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return np.stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1)


def lift_surface(s: RevolutionSurface, n_theta: int = 64) -> LiftedMeasure:
    """Lift a surface of revolution by its unit normal, one atom per frustum cell."""
    if s.n != 1:
        raise ValueError("surface lifts are implemented in 3-space")
    dZ, dR = np.diff(s.Z), np.diff(s.R)
    slant = np.hypot(dZ, dR)
    Rm = 0.5 * (s.R[:-1] + s.R[1:])
    Zm = 0.5 * (s.Z[:-1] + s.Z[1:])
    dth = 2 * math.pi / n_theta
    th = (np.arange(n_theta) + 0.5) * dth
    area = np.broadcast_to((dth * Rm * slant)[:, None], (len(Rm), n_theta))
    c, sn = np.cos(th)[None, :], np.sin(th)[None, :]
    pos = np.stack(np.broadcast_arrays(Rm[:, None] * c, Rm[:, None] * sn, Zm[:, None]), axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        nz = (dZ / slant)[:, None]
        nr = (-dR / slant)[:, None]
    nrm = np.stack(np.broadcast_arrays(nz * c, nz * sn, nr), axis=-1)
    ok = area > 0
    if not ok.all():
        warnings.warn(f"skipping {int((~ok).sum())} degenerate cells", RuntimeWarning, stacklevel=2)
    return LiftedMeasure(pos[ok], _canonical_sign(_unit(nrm[ok])), area[ok])


def lift_disc(d: Disc, n_radial: int | None = None, n_theta: int = 64) -> LiftedMeasure:
    """Lift a flat disc: every atom points along the (sign-normalized) disc axis."""
    e1 = np.cross(d.axis, [1.0, 0.0, 0.0] if abs(d.axis[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d.axis, e1)
    n_radial = n_radial if n_radial is not None else max(n_theta // 4, 4)
    rho = np.linspace(0.0, d.radius, n_radial + 1)
    dth = 2 * math.pi / n_theta
    rc = 0.5 * (rho[:-1] + rho[1:])
    th = (np.arange(n_theta) + 0.5) * dth
    rr, tt = np.meshgrid(rc, th, indexing="ij")
    area = np.broadcast_to((0.5 * dth * (rho[1:] ** 2 - rho[:-1] ** 2))[:, None], rr.shape)
    pos = (np.asarray(d.center) + (rr * np.cos(tt))[..., None] * e1
           + (rr * np.sin(tt))[..., None] * e2).reshape(-1, 3)
    dirs = np.broadcast_to(_canonical_sign(np.asarray([d.axis])), pos.shape)
    return LiftedMeasure(pos, dirs, area.ravel())


def lift_image(img: ImageSet, n_theta: int = 64) -> LiftedMeasure:
    """Area lift of an image set; axis segments carry no area and add no atoms."""
    out = LiftedMeasure.empty(3)
    for p in img.pieces:
        if isinstance(p, SurfacePiece):
            out = out + lift_surface(p.surface, n_theta)
        elif isinstance(p, Disc):
            out = out + lift_disc(p, n_theta=n_theta)
    return out


# --- binned limits --------------------------------------------------------------

@dataclass(frozen=True)
class BinnedMeasure:
    """Histogram over (position bin, direction bin); keys are integer tuples."""

    bins: dict
    bin_width: float
    origin: tuple
    direction_bins: int

    @property
    def total_mass(self) -> float:
        return float(sum(self.bins.values()))

    def position_marginal(self) -> dict:
        d = len(self.origin)
        out: dict = {}
        for k in sorted(self.bins):
            out[k[:d]] = out.get(k[:d], 0.0) + self.bins[k]
        return out

    def position_center(self, key) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(key, dtype=float) * self.bin_width


def bin_measure(m: LiftedMeasure, bin_width: float, origin, direction_bins: int = 8) -> BinnedMeasure:
    """Accumulate atom weights into position cells centered at origin + k * bin_width
    and direction cells of width 2 / direction_bins centered on multiples of that
    width, so axis-aligned directions sit in the middle of a cell."""
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    origin = np.asarray(origin, dtype=float)
    pk = np.floor((m.positions - origin) / bin_width + 0.5).astype(np.int64)
    dk = np.floor(m.directions * direction_bins / 2.0 + 0.5)
    keys = np.concatenate([pk, dk.astype(np.int64)], axis=1)
    if len(keys) == 0:
        return BinnedMeasure({}, bin_width, tuple(origin), direction_bins)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    sums = np.bincount(inv.ravel(), weights=m.weights, minlength=len(uniq))
    bins = {tuple(int(v) for v in k): float(w) for k, w in zip(uniq, sums)}
    return BinnedMeasure(bins, bin_width, tuple(float(v) for v in origin), direction_bins)


def total_variation(a: BinnedMeasure, b: BinnedMeasure) -> float:
    keys = set(a.bins) | set(b.bins)
    return float(sum(abs(a.bins.get(k, 0.0) - b.bins.get(k, 0.0)) for k in sorted(keys)))


@dataclass(frozen=True)
class MeasureLimit:
    limit: BinnedMeasure
    tv_distances: tuple
    cauchy: bool

    @property
    def diverged(self) -> bool:
        return not self.cauchy

    @property
    def total_mass(self) -> float:
        return self.limit.total_mass


def measure_limit(sequence, bin_width: float | None = None, direction_bins: int = 8,
                  tail: int = 3, tol: float = 1e-2) -> MeasureLimit:
    """Binned weak limit of a sequence of lifted measures.

    The grid is shared by every element: cells of width ``bin_width`` (default
    1/32 of the diameter of all atom positions) centered on the mass centroid of
    the final element.  The limit is the final element's histogram.  Early
    elements straddle cell edges, so the Cauchy certificate looks at the last
    ``tail`` successive total-variation distances: they must not increase and
    the final one must be below ``tol`` times the largest mass.
    """
    seq = list(sequence)
    if not seq:
        raise ValueError("empty sequence")
    allpos = np.concatenate([m.positions for m in seq])
    if bin_width is None:
        diam = point_cloud_diameter(allpos)
        bin_width = diam / 32 if diam > 0 else 1.0
    last = seq[-1]
    origin = (last.weights @ last.positions / last.total_mass if last.total_mass > 0
              else np.zeros(last.dim))
    binned = [bin_measure(m, bin_width, origin, direction_bins) for m in seq]
    tv = tuple(total_variation(x, y) for x, y in zip(binned, binned[1:]))
    scale = max(m.total_mass for m in seq)
    end = tv[-tail:]
    cauchy = (all(b <= a + 1e-12 * scale for a, b in zip(end, end[1:]))
              and (not tv or tv[-1] <= tol * scale))
    return MeasureLimit(binned[-1], tv, cauchy)


def hausdorff_distance(A, B) -> float:
    """Symmetric Hausdorff distance between two point clouds."""
    A, B = np.atleast_2d(np.asarray(A, dtype=float)), np.atleast_2d(np.asarray(B, dtype=float))
    if len(A) == 0 or len(B) == 0:
        raise ValueError("point clouds must be nonempty")
    dab, _ = cKDTree(B).query(A)
    dba, _ = cKDTree(A).query(B)
    return float(max(dab.max(), dba.max()))


# --- dimension collapse -------------------------------------------------------------

@dataclass(frozen=True)
class CollapseReport:
    collapsed: bool
    segment: Segment | None
    areas: tuple
    interval: tuple | None


def _portion_area(s: RevolutionSurface, z0: float, z1: float) -> float:
    dR, _ = s.derivatives()
    mask = (s.Z >= z0) & (s.Z <= z1)
    if mask.sum() < 2:
        return 0.0
    return float(2 * math.pi * np.trapezoid((s.R * np.sqrt(1 + dR * dR))[mask], s.Z[mask]))


def detect_collapse(sequence, thin: float = 0.05, area_ratio: float = 0.2) -> CollapseReport:
    """Look for a surface region that keeps its height extent while its area vanishes.

    The candidate region is the longest Z-interval on which the final surface is
    thinner than ``thin`` times its largest radius.  It collapses when its area
    decreases along the sequence to below ``area_ratio`` of the first value;
    the limit is then the axis segment spanning that interval.
    """
    surfaces = []
    for img in sequence:
        pieces = img.of_type(SurfacePiece) if isinstance(img, ImageSet) else []
        if pieces:
            surfaces.append(pieces[0].surface)
    if len(surfaces) < 2:
        return CollapseReport(False, None, (), None)
    last = surfaces[-1]
    mask = last.R < thin * last.R.max()
    best, start = (0, -1), None
    for i, m in enumerate(np.append(mask, False)):
        if m and start is None:
            start = i
        elif not m and start is not None:
            if i - start > best[1] - best[0] + 1:
                best = (start, i - 1)
            start = None
    if best[1] <= best[0]:
        return CollapseReport(False, None, (), None)
    z0, z1 = float(last.Z[best[0]]), float(last.Z[best[1]])
    areas = tuple(_portion_area(s, z0, z1) for s in surfaces)
    shrinking = all(b < a for a, b in zip(areas, areas[1:]))
    collapsed = shrinking and areas[-1] < area_ratio * areas[0] and z1 > z0
    seg = Segment((0.0, 0.0, z0), (0.0, 0.0, z1)) if collapsed else None
    return CollapseReport(bool(collapsed), seg, areas, (z0, z1))
