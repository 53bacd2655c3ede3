"""Three-tube junctions: force balance, paths to the boundary of moduli space and
energy bounds for surfaces with several boundary circles.

A thin tube behaves like a line segment pulling on the junction with a force
(tension).  Tensions here are proportional to the limiting ratios of tube radii
along a path; the law is pluggable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DomainError
from .geometry import Disc, ImageSet, Segment


def moduli_dim(n: int) -> int:
    """Dimension 3n - 6 of the moduli space of a sphere with n discs removed."""
    if int(n) != n or n <= 2:
        raise DomainError("moduli_dim is defined for n >= 3 boundary components")
    return 3 * int(n) - 6


@dataclass(frozen=True)
class BalanceResult:
    """Angles between segments of a balanced three-segment junction.

    angles[i] is the angle between the two segments other than i (radians);
    stationary is False, with angles None, when no balanced configuration exists.
    """

    tensions: tuple
    angles: tuple | None
    stationary: bool
    reason: str = ""

    @property
    def degrees(self) -> tuple | None:
        return None if self.angles is None else tuple(math.degrees(a) for a in self.angles)


def balance_angles(tensions) -> BalanceResult:
    """Law of cosines on the closed force triangle T1 d1 + T2 d2 + T3 d3 = 0."""
    T = tuple(float(t) for t in tensions)
    if len(T) != 3:
        raise ValueError("need exactly three tensions")
    if any(t < 0 or not math.isfinite(t) for t in T):
        raise ValueError("tensions must be finite and nonnegative")
    if any(t == 0 for t in T):
        return BalanceResult(T, None, False, "a tension vanishes: no stationary junction")
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        if T[i] > T[j] + T[k]:
            return BalanceResult(T, None, False, "tensions violate the triangle inequality")
    angles = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        # |T_i|^2 = |T_j d_j + T_k d_k|^2
        c = (T[i] ** 2 - T[j] ** 2 - T[k] ** 2) / (2 * T[j] * T[k])
        angles.append(math.acos(min(1.0, max(-1.0, c))))
    return BalanceResult(T, tuple(angles), True)


def half_angle(tau: float) -> float:
    """Angle alpha between a strong segment and the axis opposite the weak one for
    tensions (1, 1, tau): 2 cos(alpha) = tau."""
    if not 0 < tau <= 2:
        raise ValueError("tau must lie in (0, 2]")
    return math.acos(tau / 2.0)


@dataclass(frozen=True, eq=False)
class JunctionSkeleton:
    node: tuple
    directions: np.ndarray
    tensions: tuple
    discs: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        if d.ndim != 2 or len(d) != len(self.tensions):
            raise ValueError("one direction per tension")
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "tensions", tuple(float(t) for t in self.tensions))
        object.__setattr__(self, "node", tuple(float(v) for v in self.node))

    @property
    def force(self) -> np.ndarray:
        return np.asarray(self.tensions) @ self.directions

    def segments(self, length: float = 1.0) -> list[Segment]:
        p = np.asarray(self.node)
        return [Segment(p, p + length * d) for d in self.directions]


def is_stationary(j: JunctionSkeleton, tol: float = 1e-9) -> bool:
    """Force balance |sum T_i d_i| <= tol * sum T_i."""
    return bool(np.linalg.norm(j.force) <= tol * sum(j.tensions))


def skeleton_from_tensions(tensions, node=(0.0, 0.0, 0.0)) -> JunctionSkeleton | None:
    """Planar balanced skeleton for three tensions, segment 3 pointing along -y."""
    res = balance_angles(tensions)
    if not res.stationary:
        return None
    th1, th2, _ = res.angles
    # angle between segments 3 and 1 is th2; between 2 and 3 is th1
    d3 = np.array([0.0, -1.0, 0.0])
    rot = lambda a: np.array([[math.cos(a), -math.sin(a), 0.0], [math.sin(a), math.cos(a), 0.0],
                              [0.0, 0.0, 1.0]])
    d1 = rot(th2) @ d3
    d2 = rot(-th1) @ d3
    return JunctionSkeleton(node, np.stack([d1, d2, d3]), res.tensions)


def t_junction(tensions=(1.0, 1.0, 1.0)) -> JunctionSkeleton:
    """Perpendicular abutment: two opposite segments and a third at right angles."""
    return JunctionSkeleton((0.0, 0.0, 0.0), [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]],
                            tensions)


@dataclass(frozen=True)
class ModuliPath:
    """Tube radii (x(t), y(t), z(t)) for t in (0, t0], approaching the octant origin."""

    radii: tuple
    t0: float = 1.0
    label: str = ""

    def __post_init__(self):
        if len(self.radii) != 3:
            raise ValueError("a path has three radius functions")
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")

    def __call__(self, t: float) -> np.ndarray:
        r = np.array([float(f(t)) for f in self.radii])
        if np.any(r <= 0) or not np.all(np.isfinite(r)):
            raise DomainError(f"radii must be positive at t={t}")
        return r


@dataclass(frozen=True)
class PathLimit:
    kind: str  # "Y", "T-singularity", "two-segments", "non-stationary", "diagonalization"
    tensions: tuple | None
    balance: BalanceResult | None
    skeleton: JunctionSkeleton | None
    subsequence_limits: tuple = field(default=())

    @property
    def stationary(self) -> bool:
        return self.skeleton is not None and is_stationary(self.skeleton)


def _identity_law(ratios: np.ndarray) -> np.ndarray:
    return ratios


def path_limit(path: ModuliPath, tension_law: Callable = _identity_law, t_min: float = 1e-12,
               vanish_tol: float = 1e-3, conv_tol: float = 1e-6, tail: int = 6) -> PathLimit:
    """Limiting junction along a path approaching the origin of the radius octant.

    Radii are sampled at t = t0 * 2^-k down to t_min and normalized by their
    largest entry; tensions are tension_law(ratios).  Tensions below vanish_tol
    count as zero: one vanishing tension is a T-singularity, two leave a pair of
    line segments.  A tail that neither settles nor vanishes is reported with the
    distinct values it visits (take a subsequence).
    """
    if not 0 < t_min < path.t0:
        raise ValueError("need 0 < t_min < t0")
    ks = np.arange(int(math.floor(math.log2(path.t0 / t_min))) + 1)
    ts = path.t0 * 2.0 ** (-ks)
    T = []
    for t in ts:
        r = path(t)
        T.append(np.asarray(tension_law(r / r.max()), dtype=float))
    T = np.array(T)
    T = T / T.max(axis=1, keepdims=True)
    end = T[-tail:]
    settled = np.ptp(end, axis=0) <= conv_tol * np.maximum(np.abs(end).max(axis=0), 1.0)
    vanishing = end[-1] < vanish_tol
    if not np.all(settled | vanishing):
        subs = tuple(tuple(float(round(v, 6)) for v in row) for row in np.unique(end.round(6), axis=0))
        return PathLimit("diagonalization", None, None, None, subs)
    lim = np.where(vanishing, 0.0, end[-1])
    tensions = tuple(float(v) for v in lim)
    n_zero = int(vanishing.sum())
    bal = balance_angles(tensions)
    if n_zero == 1:
        return PathLimit("T-singularity", tensions, bal, None)
    if n_zero >= 2:
        return PathLimit("two-segments", tensions, bal, None)
    if not bal.stationary:
        return PathLimit("non-stationary", tensions, bal, None)
    return PathLimit("Y", tensions, bal, skeleton_from_tensions(tensions))


# --- energy bounds ------------------------------------------------------------------

PINCH_CONSTANT = 2 * math.pi


def pinch_energy_bound(eps: float, tube_length: float, pinched: bool, k: float = 1.0) -> float:
    """Lower bound on the energy of an unpinched tube of radius eps.

    The tube's circles of length 2 pi eps must map onto circles of size k in the
    image, so the energy density is at least (k/eps)^2 over the tube area
    2 pi eps * length, giving C * length / eps with C = 2 pi k^2.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if tube_length < 0:
        raise ValueError("tube_length must be nonnegative")
    if pinched:
        return 0.0
    return PINCH_CONSTANT * k * k * tube_length / eps


def candidate_energy_upper(minimal_areas, eps: float, tube_lengths=()) -> float:
    """Energy of the candidate image: minimal surfaces joined by tubes of diameter
    eps to a common ball of diameter 2 eps, i.e. 2 sum(areas) + e(eps) with
    e(eps) = 2 (sum pi eps l_i + pi (2 eps)^2)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    tubes = sum(math.pi * eps * float(l) for l in tube_lengths)
    return 2.0 * float(sum(minimal_areas)) + 2.0 * (tubes + math.pi * (2 * eps) ** 2)


# --- convex hull ------------------------------------------------------------------------

def _rim(d: Disc, n: int) -> np.ndarray:
    # circumscribed polygon, so the polygon hull contains the true circle
    e1 = np.cross(d.axis, [1.0, 0.0, 0.0] if abs(d.axis[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d.axis, e1)
    th = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    r = d.radius / math.cos(math.pi / n)
    return np.asarray(d.center) + r * (np.cos(th)[:, None] * e1 + np.sin(th)[:, None] * e2)


def convex_hull_check(image: ImageSet, boundary, neck_eps: float = 0.0, neck_center=(0.0, 0.0, 0.0),
                      neck_axis=(0.0, 0.0, 1.0), resolution: int = 256, tol: float = 1e-9) -> bool:
    """True iff every sampled image point lies in the hull of the boundary circles
    (each given as the rim of a Disc) and, when neck_eps > 0, a neck circle of diameter neck_eps."""
    circles = list(boundary)
    if neck_eps > 0:
        circles.append(Disc(neck_center, neck_axis, neck_eps / 2))
    hull_pts = np.concatenate([_rim(c, resolution) for c in circles])
    try:
        hull = ConvexHull(hull_pts)
    except QhullError:
        hull = ConvexHull(hull_pts, qhull_options="QJ")
    pts = image.points(resolution)
    scale = max(float(np.abs(hull_pts).max()), 1.0)
    slack = pts @ hull.equations[:, :-1].T + hull.equations[:, -1]
    return bool(np.all(slack <= tol * scale + 1e-12))
