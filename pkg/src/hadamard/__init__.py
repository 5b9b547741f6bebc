"""Numerical toolkit for conformally flat Cartan-Hadamard surfaces and 3-folds:
geodesics, Busemann functions, horoballs, weak-convexity certification and
the retraction homotopy onto weakly convex sets."""

from . import convexity, counterexample, geodesy, horo, manifold, retract, sets
from .errors import (ChartDomainError, ConvergenceError, DegenerateError, DimensionError,
                     EmptySetError, HadamardError, IntegrationError, NonUniqueProjection,
                     RangeError, SchemaError)
from .manifold import MetricModel, TangentPlane, TangentVector, conformal, disk, euclidean, half_plane

__version__ = "0.1.0"
