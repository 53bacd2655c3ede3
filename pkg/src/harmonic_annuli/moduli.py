"""One-dimensional moduli space of annuli: the class-to-image map, its
extension to both ends, parameter sweeps and the energy minimizer."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .energy import adaptive_nx, check_chain, profile_energy
from .errors import NumericFailure
from .geometry import (ConformalClass, Disc, EndHint, ExtReal, ImageSet, ModuliBoundaryPoint,
                       RevolutionSurface, Segment, SurfacePiece, class_parameter, representative)
from .profile import fit_boundary, limit_profile, mesh_profile

RULED_SAMPLES = (0.4, 0.2, 0.1)
COLLAPSED_SAMPLES = (4.0, 8.0, 16.0)


@dataclass(frozen=True)
class BoundaryData:
    """Coaxial boundary circles of radius r_minus at Z = -h and r_plus at Z = +h."""

    r_minus: float = 1.0
    r_plus: float = 1.0
    half_height: float = 1.0

    def __post_init__(self):
        if self.r_minus < 0 or self.r_plus < 0 or not self.half_height > 0:
            raise ValueError("radii must be nonnegative and half_height positive")

    def unit_profile(self, a: float):
        h = self.half_height
        return fit_boundary(a, self.r_minus / h, self.r_plus / h)

    @property
    def disc_area(self) -> float:
        return math.pi * (self.r_minus ** 2 + self.r_plus ** 2)


def _scale_surface(s: RevolutionSurface, h: float) -> RevolutionSurface:
    if h == 1.0:
        return s
    return RevolutionSurface(Z=s.Z * h, R=s.R * h, n=s.n, dR=s.dR,
                             d2R=None if s.d2R is None else s.d2R / h)


def _scale_image(img: ImageSet, h: float) -> ImageSet:
    if h == 1.0:
        return img
    out = []
    for p in img.pieces:
        if isinstance(p, SurfacePiece):
            out.append(SurfacePiece(_scale_surface(p.surface, h)))
        elif isinstance(p, Segment):
            out.append(Segment(np.multiply(p.p, h), np.multiply(p.q, h)))
        else:
            out.append(Disc(np.multiply(p.center, h), p.axis, p.radius * h))
    return ImageSet(tuple(out))


def image_of_class(c: ConformalClass, bc: BoundaryData = BoundaryData(),
                   hint: EndHint | str = EndHint.Short, n_samples: int = 257) -> ImageSet:
    """Image of the harmonic map from any representative of ``c`` (Definition of H)."""
    a = class_parameter(representative(c, hint))
    surf = mesh_profile(bc.unit_profile(a), n_samples)
    return ImageSet((SurfacePiece(_scale_surface(surf, bc.half_height)),))


def limit_image(end: ModuliBoundaryPoint, bc: BoundaryData = BoundaryData(),
                n_samples: int = 257) -> ImageSet:
    """Extension of the class-to-image map to the two ends of moduli space."""
    h = bc.half_height
    A = (bc.r_plus + bc.r_minus) / (2 * h)
    B = (bc.r_plus - bc.r_minus) / (2 * h)
    return _scale_image(limit_profile(end, A, B, n_samples), h)


def energy_at(a: float, bc: BoundaryData = BoundaryData(), nx: int | None = None,
              ntheta: int = 16) -> float:
    return bc.half_height ** 2 * profile_energy(bc.unit_profile(a), nx=nx, ntheta=ntheta)


@dataclass(frozen=True)
class SweepRow:
    a: float
    energy: ExtReal | None
    area: float | None
    middle: ExtReal | None
    chain_holds: bool | None
    hint: str
    status: str = "ok"


def _classify(a: float, bc: BoundaryData) -> str:
    p = bc.unit_profile(a)
    waist = float(p.value(0.0))
    linear = p.A
    if linear <= 0:
        return "interior"
    ratio = waist / linear
    if ratio > 0.9:
        return "near-ruled"
    if ratio < 0.1:
        return "near-collapsed"
    return "interior"


def sweep_row(a: float, bc: BoundaryData = BoundaryData(), nx: int | None = None,
              ntheta: int = 16) -> SweepRow:
    try:
        p = bc.unit_profile(a)
        n = nx if nx is not None else adaptive_nx(a * a)
        h = bc.half_height
        E = h * h * profile_energy(p, nx=n, ntheta=ntheta)
        surf = _scale_surface(mesh_profile(p, n), h)
        rep = check_chain(E, surf)
    except NumericFailure as exc:
        return SweepRow(a, None, None, None, None, "", status=f"numeric-failure: {exc}")
    return SweepRow(a=a, energy=rep.energy, area=rep.twice_area / 2, middle=rep.middle,
                    chain_holds=rep.holds, hint=_classify(a, bc))


def sweep(a_grid, bc: BoundaryData = BoundaryData(), nx: int | None = None, ntheta: int = 16,
          workers: int | None = None) -> list[SweepRow]:
    """One row per a, in grid order; overflowing rows are marked rather than dropped."""
    grid = [float(a) for a in a_grid]
    if not grid:
        raise ValueError("empty grid")
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda a: sweep_row(a, bc, nx, ntheta), grid))
    return [sweep_row(a, bc, nx, ntheta) for a in grid]


@dataclass(frozen=True)
class EnergyLimit:
    end: ModuliBoundaryPoint
    value: ExtReal
    samples: tuple
    estimates: tuple = ()
    spread: float = 0.0
    low_confidence: bool = False
    exponent: float | None = None
    certified: bool = True


def energy_limit(end: ModuliBoundaryPoint, bc: BoundaryData = BoundaryData(),
                 ntheta: int = 16) -> EnergyLimit:
    """Energy limit at an end of moduli space.

    CollapsedEnd: Richardson extrapolation in a (error ~ a^-2) over a = 4, 8, 16.
    RuledEnd: +inf, certified by monotone growth at a = 0.4, 0.2, 0.1 and a
    positive exponent p in a fitted power law E ~ C a^-p.
    """
    end = ModuliBoundaryPoint(end)
    if end is ModuliBoundaryPoint.CollapsedEnd:
        E = [energy_at(a, bc, ntheta=ntheta) for a in COLLAPSED_SAMPLES]
        hi = E[2] + (E[2] - E[1]) / 3.0
        lo = E[1] + (E[1] - E[0]) / 3.0
        spread = abs(hi - lo)
        low = spread > 0.05 * abs(hi)
        if low:
            warnings.warn("collapsed-end extrapolation disagrees by more than 5%", RuntimeWarning)
        return EnergyLimit(end, ExtReal.of(hi), tuple(zip(COLLAPSED_SAMPLES, E)), (lo, hi),
                           spread, low)
    E = [energy_at(a, bc, ntheta=ntheta) for a in RULED_SAMPLES]
    slope = np.polyfit(np.log(RULED_SAMPLES), np.log(E), 1)[0]
    certified = bool(E[0] < E[1] < E[2] and slope < 0)
    if not certified:
        warnings.warn("ruled-end divergence certificate failed", RuntimeWarning)
    return EnergyLimit(end, ExtReal.inf(), tuple(zip(RULED_SAMPLES, E)), exponent=float(-slope),
                       certified=certified)


@dataclass(frozen=True)
class MinimizerResult:
    location: object  # float a* or ModuliBoundaryPoint.CollapsedEnd
    energy: float
    collapsed_energy: float
    candidates: list = field(default_factory=list)
    warning: str | None = None

    @property
    def interior(self) -> bool:
        return not isinstance(self.location, ModuliBoundaryPoint)


def minimize_energy(bc: BoundaryData = BoundaryData(), interval=(0.05, 10.0), n_scan: int = 60,
                    ntheta: int = 16, xtol: float = 1e-8) -> MinimizerResult:
    """Minimize E(a) over the interval and compare against the collapsed-end limit.

    The collapsed end is worth twice the area of the boundary discs.  A log-spaced
    scan brackets every interior local minimum, each is refined by golden-section
    search, and more than one interior minimum triggers a multimodality warning.
    """
    lo, hi = interval
    if not 0 < lo < hi:
        raise ValueError("interval must satisfy 0 < lo < hi")
    nx = adaptive_nx(hi * hi)
    f = lambda a: energy_at(a, bc, nx=nx, ntheta=ntheta)
    grid = np.geomspace(lo, hi, n_scan)
    vals = np.array([f(a) for a in grid])
    collapsed = 2.0 * bc.disc_area
    candidates = []
    for i in range(1, n_scan - 1):
        if vals[i] <= vals[i - 1] and vals[i] < vals[i + 1]:
            res = minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                                  options={"xtol": xtol})
            candidates.append((float(res.x), float(res.fun)))
    warning = None
    if len(candidates) > 1:
        warning = "energy is not unimodal over the interval; reporting the best candidate"
        warnings.warn(warning, RuntimeWarning)
    if candidates:
        a_star, e_star = min(candidates, key=lambda t: t[1])
        if e_star < collapsed:
            return MinimizerResult(a_star, e_star, collapsed, candidates, warning)
    return MinimizerResult(ModuliBoundaryPoint.CollapsedEnd, collapsed, collapsed, candidates, warning)
