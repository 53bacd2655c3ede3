"""Domain and image data model.

Conformal classes of annuli, metric representatives on the fixed rectangle
[-1, 1] x [0, 2pi), sampled surfaces of revolution and dimension-tagged image
sets (surface pieces, axis segments and discs).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist
from scipy.special import gamma


class ModuliBoundaryPoint(enum.Enum):
    """The two ends of the one-dimensional moduli space of annuli.

    RuledEnd is a -> 0 (cylinder/cone images, infinite energy);
    CollapsedEnd is a -> infinity (discs plus an axis segment, finite energy).
    """

    RuledEnd = "ruled"
    CollapsedEnd = "collapsed"


@dataclass(frozen=True)
class ExtReal:
    """A nonnegative quantity that may be +infinity, carried as an explicit flag."""

    value: float = 0.0
    infinite: bool = False

    @classmethod
    def inf(cls) -> "ExtReal":
        return cls(math.inf, True)

    @classmethod
    def of(cls, x) -> "ExtReal":
        if isinstance(x, ExtReal):
            return x
        x = float(x)
        if math.isinf(x) and x > 0:
            return cls.inf()
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x!r}")
        return cls(x, False)

    def __float__(self) -> float:
        return math.inf if self.infinite else self.value

    def ge(self, other: "ExtReal", rtol: float = 1e-8) -> bool:
        """self >= other, with +inf dominating finite values and inf >= inf."""
        other = ExtReal.of(other)
        if self.infinite:
            return True
        if other.infinite:
            return False
        scale = max(abs(self.value), abs(other.value), 1.0)
        return self.value >= other.value - rtol * scale

    def token(self) -> str:
        return "inf" if self.infinite else repr(self.value)


@dataclass(frozen=True)
class ConformalClass:
    a: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError("conformal parameter a must be finite and > 0; "
                             "use ModuliBoundaryPoint for the ends")


@dataclass(frozen=True)
class MetricAnnulus:
    """Diagonal metric g = diag(g_xx, g_thth) on [-1, 1] x [0, 2pi)."""

    g_xx: float
    g_thth: float
    x_range: tuple = (-1.0, 1.0)
    theta_range: tuple = (0.0, 2 * math.pi)

    def __post_init__(self):
        if not (self.g_xx > 0 and self.g_thth > 0):
            raise ValueError("metric factors must be positive")


def modulus(m: MetricAnnulus) -> float:
    return math.sqrt(m.g_xx / m.g_thth)


def class_parameter(m: MetricAnnulus) -> float:
    """Recover the profile parameter a of the class represented by ``m``.

    The harmonic radial map on ``m`` satisfies R_xx = modulus(m)**2 R, while the
    closed-form profile uses the exponent a**2, so modulus(m) = a**2.
    """
    return math.sqrt(modulus(m))


class EndHint(enum.Enum):
    Short = "short"
    Long = "long"


def representative(c: ConformalClass, end_hint: EndHint | str = EndHint.Short) -> MetricAnnulus:
    """Uniformly compact metric representative of the class ``c``.

    Short corresponds to the interval [-a^2, a^2] x [0, 2pi] (bounded as a -> 0),
    Long to [-1, 1] x [0, 2pi / a^2] (bounded as a -> infinity).  Metric factors
    are squared interval stretch factors, so modulus(result) = a^2 in both cases.
    """
    hint = EndHint(end_hint) if isinstance(end_hint, str) else end_hint
    a2 = c.a * c.a
    if hint is EndHint.Short:
        return MetricAnnulus(g_xx=a2 * a2, g_thth=1.0)
    return MetricAnnulus(g_xx=1.0, g_thth=1.0 / (a2 * a2))


def matched_metric(a: float) -> MetricAnnulus:
    """Representative on which the profile with parameter ``a`` is harmonic."""
    return representative(ConformalClass(a), EndHint.Short if a <= 1 else EndHint.Long)


def sphere_area(n: int) -> float:
    """Area of the unit n-sphere (2pi for the circle)."""
    return 2 * math.pi ** ((n + 1) / 2) / gamma((n + 1) / 2)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RevolutionSurface:
    """Sampled meridian (Z_i, R_i) rotated about the Z axis.

    ``dR``/``d2R`` optionally carry exact derivative samples; when absent,
    derivatives come from second-order finite differences.
    """

    Z: np.ndarray
    R: np.ndarray
    n: int = 1
    dR: np.ndarray | None = None
    d2R: np.ndarray | None = None

    def __post_init__(self):
        Z, R = _frozen(self.Z), _frozen(self.R)
        if Z.ndim != 1 or Z.shape != R.shape:
            raise ValueError("Z and R must be 1-d arrays of equal length")
        if Z.size < 3:
            raise ValueError("need at least 3 samples")
        if np.any(np.diff(Z) <= 0):
            raise ValueError("Z must be strictly increasing")
        if np.any(R < 0):
            raise ValueError("R must be nonnegative")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "R", R)
        for name in ("dR", "d2R"):
            v = getattr(self, name)
            if v is not None:
                v = _frozen(v)
                if v.shape != Z.shape:
                    raise ValueError(f"{name} must match Z")
                object.__setattr__(self, name, v)

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        dR = self.dR if self.dR is not None else np.gradient(self.R, self.Z, edge_order=2)
        d2R = self.d2R if self.d2R is not None else np.gradient(dR, self.Z, edge_order=2)
        return dR, d2R

    def area(self) -> float:
        """Rotational measure |S^n| * integral of R^n sqrt(1 + R_Z^2) dZ (trapezoid)."""
        dR, _ = self.derivatives()
        integrand = self.R ** self.n * np.sqrt(1.0 + dR * dR)
        return float(sphere_area(self.n) * np.trapezoid(integrand, self.Z))

    def points(self, n_theta: int = 64) -> np.ndarray:
        if self.n != 1:
            raise ValueError("point sampling is implemented for surfaces in 3-space")
        th = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
        X = self.R[:, None] * np.cos(th)[None, :]
        Y = self.R[:, None] * np.sin(th)[None, :]
        Zg = np.broadcast_to(self.Z[:, None], X.shape)
        return np.stack([X.ravel(), Y.ravel(), Zg.ravel()], axis=1)


@dataclass(frozen=True, eq=False)
class SurfacePiece:
    surface: RevolutionSurface

    @property
    def mass(self) -> float:
        return self.surface.area()

    def points(self, resolution: int = 64) -> np.ndarray:
        return self.surface.points(resolution)


@dataclass(frozen=True)
class Segment:
    p: tuple
    q: tuple
    mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        if self.mass != 0.0:
            raise ValueError("segments carry no 2-dimensional mass")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.q, self.p)))

    def points(self, resolution: int = 64) -> np.ndarray:
        t = np.linspace(0.0, 1.0, resolution)[:, None]
        return (1 - t) * np.asarray(self.p) + t * np.asarray(self.q)


def _orthonormal_frame(axis) -> tuple[np.ndarray, np.ndarray]:
    axis = np.asarray(axis, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


@dataclass(frozen=True)
class Disc:
    center: tuple
    axis: tuple
    radius: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(axis)
        if not norm > 0:
            raise ValueError("disc axis must be nonzero")
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "axis", tuple(float(v) for v in axis / norm))

    @property
    def mass(self) -> float:
        return math.pi * self.radius ** 2

    def points(self, resolution: int = 64) -> np.ndarray:
        e1, e2 = _orthonormal_frame(self.axis)
        rho = np.linspace(0.0, self.radius, max(resolution // 2, 2))
        th = np.linspace(0.0, 2 * math.pi, resolution, endpoint=False)
        rr, tt = np.meshgrid(rho, th, indexing="ij")
        pts = (np.asarray(self.center)
               + (rr * np.cos(tt))[..., None] * e1
               + (rr * np.sin(tt))[..., None] * e2)
        return pts.reshape(-1, 3)


Piece = Union[SurfacePiece, Segment, Disc]


@dataclass(frozen=True)
class ImageSet:
    pieces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    @property
    def total_mass(self) -> float:
        return float(sum(p.mass for p in self.pieces))

    def of_type(self, kind) -> list:
        return [p for p in self.pieces if isinstance(p, kind)]

    def with_piece(self, piece: Piece) -> "ImageSet":
        return ImageSet(self.pieces + (piece,))

    def points(self, resolution: int = 64) -> np.ndarray:
        if not self.pieces:
            return np.empty((0, 3))
        return np.concatenate([p.points(resolution) for p in self.pieces], axis=0)

    def diameter(self, resolution: int = 64) -> float:
        return point_cloud_diameter(self.points(resolution))


def point_cloud_diameter(points: np.ndarray) -> float:
    """Largest pairwise distance, computed over convex hull vertices when possible."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    try:
        pts = pts[ConvexHull(pts).vertices]
    except (QhullError, ValueError):
        # degenerate (collinear/coplanar) cloud: fall back to a subsample
        step = max(1, len(pts) // 2000)
        pts = pts[::step]
    return float(pdist(pts).max())


def image_set(pieces: Iterable[Piece]) -> ImageSet:
    return ImageSet(tuple(pieces))
