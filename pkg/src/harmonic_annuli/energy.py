"""Dirichlet energy, image area, principal curvatures and the inequality chain

    Energy >= integral of (sqrt(rho1/rho2) + sqrt(rho2/rho1)) dA >= 2 Area.

Energies are computed on the fixed rectangle [-1, 1] x [0, 2pi) with a diagonal
metric; the radial map is h(x, theta) = (R(x), theta, Z(x)).  All quadrature is
trapezoidal on uniform grids (periodic in theta).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericFailure, ProfileOverflowError, UndefinedCurvatureError
from .geometry import ExtReal, MetricAnnulus, RevolutionSurface, matched_metric
from .profile import KAPPA_MAX

CURVATURE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class RadialMapSample:
    """Nodes of a radially symmetric map on the fixed rectangle.

    R and Z depend on x only; Theta = theta at every node, so they are stored
    as length-nx arrays and broadcast along theta.
    """

    x: np.ndarray
    theta: np.ndarray
    R: np.ndarray
    Z: np.ndarray
    metric: MetricAnnulus
    R_x: np.ndarray | None = None
    Z_x: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.x), len(self.theta)

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        R_x = self.R_x if self.R_x is not None else np.gradient(self.R, self.x, edge_order=2)
        Z_x = self.Z_x if self.Z_x is not None else np.gradient(self.Z, self.x, edge_order=2)
        return R_x, Z_x


def sample_map(profile, metric: MetricAnnulus | None = None, nx: int = 513,
               ntheta: int = 64, perturbation=None, step: float = 0.0) -> RadialMapSample:
    """Sample the radial map with Z = x and R = profile(Z) (+ step * perturbation)."""
    metric = metric if metric is not None else matched_metric(profile.a)
    x = np.linspace(-1.0, 1.0, nx)
    theta = np.linspace(0.0, 2 * math.pi, ntheta, endpoint=False)
    R = np.asarray(profile.value(x), dtype=float)
    R_x = np.asarray(profile.deriv(x), dtype=float)
    if perturbation is not None and step != 0.0:
        s = np.asarray(perturbation(x), dtype=float)
        ds = (np.asarray(perturbation.deriv(x), dtype=float) if hasattr(perturbation, "deriv")
              else np.gradient(s, x, edge_order=2))
        R = R + step * s
        R_x = R_x + step * ds
    return RadialMapSample(x=x, theta=theta, R=R, Z=x.copy(), metric=metric,
                           R_x=R_x, Z_x=np.ones_like(x))


def dirichlet_energy(m: RadialMapSample) -> float:
    """Trapezoidal Dirichlet energy (sum of squared Jacobian entries, no factor 1/2)."""
    nx, nt = m.shape
    if nx < 16 or nt < 16:
        raise ValueError("grid must be at least 16 x 16")
    g = m.metric
    R_x, Z_x = m.derivatives()
    dens = (R_x ** 2 + Z_x ** 2) / g.g_xx + m.R ** 2 / g.g_thth
    dens2d = np.broadcast_to(dens[:, None], (nx, nt)) * math.sqrt(g.g_xx * g.g_thth)
    if not np.all(np.isfinite(dens2d)):
        raise NumericFailure("non-finite energy density")
    per_theta = np.trapezoid(dens2d, m.x, axis=0)
    return float(per_theta.sum() * (2 * math.pi / nt))


def adaptive_nx(kappa: float, base: int = 513, kh: float = 0.02) -> int:
    """Grid size resolving the boundary layer of width ~1/kappa."""
    if not kappa < KAPPA_MAX:
        raise ProfileOverflowError(f"kappa = {kappa:g} exceeds the representable range")
    return max(base, int(math.ceil(2.0 * kappa / kh)) + 1)


def profile_energy(profile, nx: int | None = None, ntheta: int = 16) -> float:
    """Energy of the radial map realising ``profile`` on its matched metric."""
    if nx is None:
        nx = adaptive_nx(profile.a ** 2)
    return dirichlet_energy(sample_map(profile, nx=nx, ntheta=ntheta))


class Bump:
    """Smooth compactly supported perturbation exp(1 - 1/(1 - u^2)), u = (x - c)/w."""

    def __init__(self, center: float = 0.0, width: float = 0.5, amplitude: float = 1.0):
        self.center, self.width, self.amplitude = center, width, amplitude

    def _u(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.width

    def __call__(self, x):
        u = self._u(x)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    def deriv(self, x):
        u = self._u(x)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1
        ui = u[inside]
        val = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - ui ** 2))
        out[inside] = val * (-2.0 * ui / (1.0 - ui ** 2) ** 2) / self.width
        return out


def first_variation(profile, perturbation, step: float = 1e-4, nx: int = 512,
                    ntheta: int = 64) -> float:
    """Central difference (E(R + step s) - E(R - step s)) / (2 step) in the radial direction."""
    if not (step > 0 and math.isfinite(step)) or step < 1e-150:
        raise NumericFailure("step must be a positive, representable number")
    metric = matched_metric(profile.a)
    plus = dirichlet_energy(sample_map(profile, metric, nx, ntheta, perturbation, step))
    minus = dirichlet_energy(sample_map(profile, metric, nx, ntheta, perturbation, -step))
    return (plus - minus) / (2.0 * step)


def surface_area(s: RevolutionSurface) -> float:
    return s.area()


def _curvature_arrays(s: RevolutionSurface):
    if s.n != 1:
        raise ValueError("principal curvatures are implemented for surfaces in 3-space")
    dR, d2R = s.derivatives()
    w = np.sqrt(1.0 + dR * dR)
    rho1 = -d2R / w ** 3
    with np.errstate(divide="ignore"):
        rho2 = np.where(s.R > 0, 1.0 / (s.R * w), np.nan)
    return rho1, rho2, w


def principal_curvatures(s: RevolutionSurface, Z: float) -> tuple[float, float]:
    """Meridian and parallel curvature (rho1, rho2) at height Z."""
    if not (s.Z[0] < Z < s.Z[-1]):
        raise ValueError("Z must be interior to the sampled range")
    R = float(np.interp(Z, s.Z, s.R))
    if R <= 0:
        raise UndefinedCurvatureError(f"radius vanishes at Z={Z}")
    dR, d2R = s.derivatives()
    Rz = float(np.interp(Z, s.Z, dR))
    Rzz = float(np.interp(Z, s.Z, d2R))
    w = math.sqrt(1.0 + Rz * Rz)
    return -Rzz / w ** 3, 1.0 / (R * w)


@dataclass(frozen=True)
class CurvatureIntegral:
    value: ExtReal
    excluded_fraction: float


def curvature_integral(s: RevolutionSurface, eps: float = CURVATURE_EPS) -> CurvatureIntegral:
    """Integral of sqrt(|rho1/rho2|) + sqrt(|rho2/rho1|) over the image, with 0/0 = 1.

    Returns the +inf flag when exactly one curvature vanishes on an interval of
    samples (ruled pieces).  Isolated one-sided zeros and points with R = 0 are
    excluded from the integral.
    """
    rho1, rho2, w = _curvature_arrays(s)
    a1, a2 = np.abs(rho1), np.abs(np.nan_to_num(rho2, nan=0.0))
    tiny = eps * max(float(s.R.max()), 1.0)
    z1, z2 = a1 < tiny, a2 < tiny
    defined = s.R > 0
    both = z1 & z2 & defined
    one = (z1 ^ z2) & defined
    # two neighbouring one-sided zeros span an interval of positive measure
    if np.any(one[1:] & one[:-1]):
        return CurvatureIntegral(ExtReal.inf(), 0.0)
    ok = defined & ~one
    integrand = np.zeros_like(s.R)
    gen = ok & ~both
    integrand[gen] = np.sqrt(a1[gen] / a2[gen]) + np.sqrt(a2[gen] / a1[gen])
    integrand[both] = 2.0
    dA = s.R * w
    value = 2 * math.pi * np.trapezoid(integrand * dA, s.Z)
    total = np.trapezoid(dA, s.Z)
    lost = np.trapezoid(np.where(ok, 0.0, dA), s.Z)
    return CurvatureIntegral(ExtReal.of(value), float(lost / total) if total > 0 else 0.0)


def curvature_functional(s: RevolutionSurface, eps: float = CURVATURE_EPS) -> ExtReal:
    return curvature_integral(s, eps).value


@dataclass(frozen=True)
class InequalityReport:
    energy: ExtReal
    middle: ExtReal
    twice_area: float
    energy_ge_middle: bool
    middle_ge_twice_area: bool
    excluded_fraction: float = 0.0

    @property
    def holds(self) -> bool:
        return self.energy_ge_middle and self.middle_ge_twice_area


def check_chain(energy, s: RevolutionSurface, rtol: float = 1e-8) -> InequalityReport:
    """Evaluate both links of the energy / curvature / area chain for one image."""
    energy = ExtReal.of(energy)
    ci = curvature_integral(s)
    if ci.excluded_fraction > 0:
        warnings.warn(f"curvature undefined on {ci.excluded_fraction:.3g} of the image area; "
                      "excluded from the middle integral", RuntimeWarning, stacklevel=2)
    twice_area = 2.0 * s.area()
    return InequalityReport(energy=energy, middle=ci.value, twice_area=twice_area,
                            energy_ge_middle=energy.ge(ci.value, rtol),
                            middle_ge_twice_area=ci.value.ge(twice_area, rtol),
                            excluded_fraction=ci.excluded_fraction)


def bilipschitz_energy_bound(area_image: float, eps: float) -> float:
    """Energy bound 2 * area * (1 + eps)^4 for a (1 + eps)-bi-Lipschitz map."""
    if not (0 <= eps < 1):
        raise ValueError("eps must lie in [0, 1)")
    return 2.0 * area_image * (1.0 + eps) ** 4


def dyadic_annulus_bound(k: float, levels: int) -> tuple[float, float]:
    """Energy forced on dyadic annuli r..2r that fan out to image radius >= k.

    Each level costs (k / 2r)^2 * 3 pi r^2 = 3 pi k^2 / 4 independently of r, so
    the total grows without bound with the number of levels.
    """
    if k < 0 or levels < 1:
        raise ValueError("need k >= 0 and levels >= 1")
    per_level = 3.0 * math.pi * k * k / 4.0
    return per_level, levels * per_level
