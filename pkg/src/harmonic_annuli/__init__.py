"""Harmonic maps of annuli and their limits at the ends of moduli space."""
from .errors import DomainError, NumericFailure, ProfileOverflowError, UndefinedCurvatureError
from .geometry import (ConformalClass, Disc, EndHint, ExtReal, ImageSet, MetricAnnulus,
                       ModuliBoundaryPoint, RevolutionSurface, Segment, SurfacePiece)
from .profile import RadialProfile, eval_profile, find_catenoids, fit_boundary

__version__ = "0.1.0"
