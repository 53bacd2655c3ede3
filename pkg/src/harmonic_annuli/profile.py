"""Closed-form radially symmetric harmonic profiles.

A profile is R(Z) = A cosh(kZ)/cosh(k) + B sinh(kZ)/sinh(k) on Z in [-1, 1],
with k = a**2 for annuli in 3-space and k = n * a**(1 + 1/n) for the
S^n x interval generalization.  The ratios are evaluated in a form that never
forms cosh(k) itself, so the only overflow is the explicit guard in
``eval_profile``.
"""
from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import NumericFailure, ProfileOverflowError
from .geometry import Disc, ImageSet, ModuliBoundaryPoint, RevolutionSurface, Segment, SurfacePiece

# cosh(k) is representable iff k < log(DBL_MAX)
KAPPA_MAX = math.log(sys.float_info.max)


class NegativeRadiusWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RadialProfile:
    A: float
    B: float
    a: float
    n: int = 1

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("n must be a nonnegative integer")

    @property
    def kappa(self) -> float:
        if self.n == 0:
            return 0.0
        if self.n == 1:
            return self.a * self.a
        return self.n * self.a ** (1.0 + 1.0 / self.n)

    def value(self, Z):
        return eval_profile(self, Z)

    def deriv(self, Z):
        return _profile_derivative(self, Z, order=1)

    def deriv2(self, Z):
        return _profile_derivative(self, Z, order=2)


@dataclass(frozen=True)
class ProfileData:
    """Arbitrary radius data R(Z) posing as a profile with parameter ``a``.

    Used to feed non-solutions through the same residual and first-variation
    harnesses that check the closed-form family.
    """

    func: Callable
    a: float
    deriv_func: Callable | None = None
    deriv2_func: Callable | None = None
    h: float = 1e-4

    def value(self, Z):
        return np.asarray(self.func(np.asarray(Z, dtype=float)), dtype=float)

    def deriv(self, Z):
        if self.deriv_func is not None:
            return np.asarray(self.deriv_func(np.asarray(Z, dtype=float)), dtype=float)
        Z = np.asarray(Z, dtype=float)
        return (self.value(Z + self.h) - self.value(Z - self.h)) / (2 * self.h)

    def deriv2(self, Z):
        if self.deriv2_func is not None:
            return np.asarray(self.deriv2_func(np.asarray(Z, dtype=float)), dtype=float)
        Z = np.asarray(Z, dtype=float)
        return (self.value(Z + self.h) - 2 * self.value(Z) + self.value(Z - self.h)) / self.h ** 2


def cosh_ratio(k: float, Z):
    """cosh(kZ)/cosh(k) without overflow, for |Z| <= 1."""
    Z = np.asarray(Z, dtype=float)
    az = np.abs(Z)
    out = np.exp(k * (az - 1.0)) * (1.0 + np.exp(-2.0 * k * az)) / (1.0 + np.exp(-2.0 * k))
    # exact at the boundary circles, whatever the last ulp of exp does
    return np.where(az == 1.0, 1.0, out)


def sinh_ratio(k: float, Z):
    """sinh(kZ)/sinh(k) without overflow, for |Z| <= 1; tends to Z as k -> 0."""
    Z = np.asarray(Z, dtype=float)
    if k < 1e-150:
        return Z.copy()
    az = np.abs(Z)
    out = np.sign(Z) * np.exp(k * (az - 1.0)) * np.expm1(-2.0 * k * az) / np.expm1(-2.0 * k)
    return np.where(az == 1.0, np.sign(Z), out)


def _check_kappa(k: float):
    if k >= KAPPA_MAX:
        raise ProfileOverflowError(f"cosh({k:g}) is not representable")


def _check_Z(Z):
    Z = np.asarray(Z, dtype=float)
    if np.any(np.abs(Z) > 1.0 + 1e-12):
        raise ValueError("profiles are defined on |Z| <= 1")
    return np.clip(Z, -1.0, 1.0)


def eval_profile(p: RadialProfile, Z):
    """Radius of the profile at height Z (scalar or array)."""
    Z = _check_Z(Z)
    if p.n == 0:
        out = np.full_like(Z, float(p.A))
    else:
        k = p.kappa
        _check_kappa(k)
        out = p.A * cosh_ratio(k, Z) + p.B * sinh_ratio(k, Z)
    if not np.all(np.isfinite(out)):
        raise NumericFailure("non-finite profile value")
    if np.any(out < -1e-14 * (abs(p.A) + abs(p.B))):
        warnings.warn("profile radius is negative; the fit leaves the physical regime",
                      NegativeRadiusWarning, stacklevel=2)
    return out if out.ndim else float(out)


def _profile_derivative(p: RadialProfile, Z, order: int):
    Z = _check_Z(Z)
    if p.n == 0:
        out = np.zeros_like(Z)
        return out if out.ndim else 0.0
    k = p.kappa
    _check_kappa(k)
    if order == 1:
        # d/dZ cosh(kZ)/cosh(k) = k tanh(k) sinh(kZ)/sinh(k)
        tk = math.tanh(k)
        coth_term = k / tk if k > 1e-8 else 1.0 + k * k / 3.0
        out = p.A * k * tk * sinh_ratio(k, Z) + p.B * coth_term * cosh_ratio(k, Z)
    else:
        out = k * k * (p.A * cosh_ratio(k, Z) + p.B * sinh_ratio(k, Z))
    return out if out.ndim else float(out)


def fit_boundary(a: float, R_minus: float, R_plus: float, n: int = 1) -> RadialProfile:
    """Profile through circles of radius R_minus at Z=-1 and R_plus at Z=+1."""
    if R_minus < 0 or R_plus < 0:
        raise ValueError("boundary radii must be nonnegative")
    return RadialProfile(A=(R_plus + R_minus) / 2.0, B=(R_plus - R_minus) / 2.0, a=a, n=n)


def ode_residual(p, Z):
    """R_ZZ - a^4 R; vanishes identically on the closed-form family (n = 1)."""
    if isinstance(p, RadialProfile) and p.n != 1:
        raise ValueError("the Z-form residual is stated for n = 1")
    a4 = p.a ** 4
    return p.deriv2(Z) - a4 * np.asarray(p.value(Z))


def mesh_profile(p: RadialProfile, n_samples: int) -> RevolutionSurface:
    """Uniform Z-grid sampling of a profile, carrying exact derivatives."""
    if n_samples < 3:
        raise ValueError("need at least 3 samples")
    Z = np.linspace(-1.0, 1.0, n_samples)
    R = np.asarray(eval_profile(p, Z))
    tiny = 1e-14 * (abs(p.A) + abs(p.B))
    if np.any(R < -tiny):
        raise NumericFailure("profile has negative radius; cannot mesh")
    R = np.maximum(R, 0.0)
    return RevolutionSurface(Z=Z, R=R, n=max(p.n, 1), dR=_profile_derivative(p, Z, 1),
                             d2R=_profile_derivative(p, Z, 2))


# --- catenoids --------------------------------------------------------------

def _waist_extremum() -> float:
    # minimizer u* of cosh(u)/u, i.e. u tanh(u) = 1
    return brentq(lambda u: u * math.tanh(u) - 1.0, 0.5, 2.0, xtol=1e-15)


def catenoid_span(c: float, h: float) -> float:
    """Radius at height h of the catenoid with neck radius c."""
    return c * math.cosh(h / c)


def find_catenoids(r: float, h: float) -> list[float]:
    """Neck radii c of catenoids c*cosh(Z/c) through circles of radius r at Z = +-h.

    c -> c*cosh(h/c) is unimodal with minimum at c* = h/u*, so each side of c*
    holds at most one root.
    """
    if not (r > 0 and h > 0):
        raise ValueError("r and h must be positive")
    c_star = h / _waist_extremum()
    f_min = catenoid_span(c_star, h)
    if f_min > r:
        return []
    if f_min == r:
        return [c_star]
    # left bracket: shrink c until h/c is large enough that c*cosh(h/c) > r
    lo = c_star
    while catenoid_span(lo, h) <= r:
        lo *= 0.5
        if lo < 1e-300 or h / lo > 700:
            break
    roots = []
    f = lambda c: catenoid_span(c, h) - r
    if f(lo) > 0:
        roots.append(brentq(f, lo, c_star, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    # right bracket: c*cosh(h/c) > c, so the root lies below r
    roots.append(brentq(f, c_star, r, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return sorted(roots)


def catenoid_area(c: float, h: float) -> float:
    """Lateral area of c*cosh(Z/c) over Z in [-h, h]."""
    return math.pi * c * (2.0 * h + c * math.sinh(2.0 * h / c))


def catenoid_profile(c: float, h: float) -> RadialProfile:
    """The catenoid of neck c between Z = +-h rescaled to Z in [-1, 1] (by 1/h)."""
    k = h / c
    return RadialProfile(A=c * math.cosh(k) / h, B=0.0, a=math.sqrt(k))


def goldschmidt_threshold(r: float = 1.0) -> float:
    """Half-separation h at which symmetric catenoids through radius-r circles cease to exist."""
    u = _waist_extremum()
    # min_c c cosh(h/c) = h cosh(u)/u = r
    return r * u / math.cosh(u)


# --- boundary limits ----------------------------------------------------------

def limit_profile(end: ModuliBoundaryPoint, A: float, B: float, n_samples: int = 257) -> ImageSet:
    """Limit image at an end of moduli space for boundary radii A -+ B at Z = -+1."""
    r_minus, r_plus = A - B, A + B
    if r_minus < 0 or r_plus < 0:
        raise ValueError("boundary radii A +- B must be nonnegative")
    end = ModuliBoundaryPoint(end)
    if end is ModuliBoundaryPoint.RuledEnd:
        Z = np.linspace(-1.0, 1.0, n_samples)
        surf = RevolutionSurface(Z=Z, R=A + B * Z, dR=np.full_like(Z, B), d2R=np.zeros_like(Z))
        return ImageSet((SurfacePiece(surf),))
    pieces = [Segment((0.0, 0.0, -1.0), (0.0, 0.0, 1.0))]
    if r_minus > 0:
        pieces.append(Disc((0.0, 0.0, -1.0), (0.0, 0.0, 1.0), r_minus))
    if r_plus > 0:
        pieces.append(Disc((0.0, 0.0, 1.0), (0.0, 0.0, 1.0), r_plus))
    return ImageSet(tuple(pieces))
