"""Metric models on a global chart of R^n.

Every supported model is conformally flat, g = exp(2 phi) * delta, which
covers the flat metric (phi = 0), the upper half-space model
(phi = -log x_n), the Poincare ball (phi = log 2 - log(1 - |x|^2)) and a small
catalog of closed-form conformal factors.  Christoffel symbols, geodesic
accelerations and sectional curvatures are all computed from the closed-form
gradient and Hessian of phi, never by finite differences.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .errors import ChartDomainError, DegenerateError, DimensionError, SchemaError

EUCLIDEAN = "euclidean"
HALF_PLANE = "hyperbolic-half-plane"
DISK = "hyperbolic-disk"
CONFORMAL = "conformal"
KINDS = (EUCLIDEAN, HALF_PLANE, DISK, CONFORMAL)

# chart-domain margins
HALF_PLANE_FLOOR = 1e-9
DISK_MARGIN = 1e-9

CURVATURE_TOL = 1e-6


def _phi_zero(x):
    n = x.shape[-1]
    return (np.zeros(x.shape[:-1]), np.zeros(x.shape),
            np.zeros(x.shape[:-1] + (n, n)))


def _phi_quadratic(x):
    n = x.shape[-1]
    hess = np.broadcast_to(2.0 * np.eye(n), x.shape[:-1] + (n, n)).copy()
    return np.sum(x * x, axis=-1), 2.0 * x, hess


def _phi_radial_log(x):
    n = x.shape[-1]
    s = 1.0 + np.sum(x * x, axis=-1)
    grad = x / s[..., None]
    hess = (np.eye(n) / s[..., None, None]
            - 2.0 * x[..., :, None] * x[..., None, :] / (s * s)[..., None, None])
    return 0.5 * np.log(s), grad, hess


def _phi_log_cosh(x):
    n = x.shape[-1]
    t = x[..., 0]
    phi = np.logaddexp(t, -t) - np.log(2.0)
    grad = np.zeros(x.shape)
    grad[..., 0] = np.tanh(t)
    hess = np.zeros(x.shape[:-1] + (n, n))
    hess[..., 0, 0] = 1.0 / np.cosh(t) ** 2
    return phi, grad, hess


def _phi_neg_quadratic_x(x):
    n = x.shape[-1]
    t = x[..., 0]
    grad = np.zeros(x.shape)
    grad[..., 0] = -2.0 * t
    hess = np.zeros(x.shape[:-1] + (n, n))
    hess[..., 0, 0] = -2.0
    return -t * t, grad, hess


# id -> (phi, grad, hess) evaluator.  "neg_quadratic_x" has positive
# curvature and exists so the curvature verifier has something to reject.
PHI_CATALOG = {
    "zero": _phi_zero,
    "quadratic": _phi_quadratic,
    "radial_log": _phi_radial_log,
    "log_cosh": _phi_log_cosh,
    "neg_quadratic_x": _phi_neg_quadratic_x,
}


@dataclass(frozen=True)
class MetricModel:
    """A conformally flat riemannian metric on a global chart.

    ``k`` is the curvature bound in -k^2 <= K <= 0.  When left as None it
    defaults to 0 (euclidean), 1 (hyperbolic) or, for conformal metrics, the
    largest |K| seen on the default verification grid.
    """

    kind: str
    dimension: int = 2
    phi: Optional[str] = None
    k: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown metric kind {self.kind!r}")
        if self.dimension not in (2, 3):
            raise DimensionError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.kind == CONFORMAL and self.phi not in PHI_CATALOG:
            raise SchemaError(f"unknown conformal factor {self.phi!r}")

    @property
    def n(self):
        return self.dimension

    @property
    def is_hyperbolic(self):
        return self.kind in (HALF_PLANE, DISK)

    @property
    def has_closed_form(self):
        return self.kind in (EUCLIDEAN, HALF_PLANE, DISK)

    @property
    def curvature_bound(self):
        if self.k is not None:
            return float(self.k)
        if self.kind == EUCLIDEAN:
            return 0.0
        if self.is_hyperbolic:
            return 1.0
        return _default_conformal_bound(self)

    def to_json(self):
        out = {"kind": self.kind, "dimension": self.dimension}
        if self.phi is not None:
            out["phi"] = self.phi
        if self.k is not None:
            out["k"] = self.k
        return out


@lru_cache(maxsize=None)
def _default_conformal_bound(model):
    n = model.dimension
    rep = verify_curvature_bounds(
        MetricModel(model.kind, n, model.phi, k=np.inf),
        (-2.0 * np.ones(n), 2.0 * np.ones(n)), 9)
    return float(np.sqrt(max(0.0, -rep.K_min)))


def euclidean(n=2):
    return MetricModel(EUCLIDEAN, n)


def half_plane(n=2):
    return MetricModel(HALF_PLANE, n)


def disk(n=2):
    return MetricModel(DISK, n)


def conformal(phi, n=2, k=None):
    return MetricModel(CONFORMAL, n, phi, k)


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components",
                           np.asarray(self.components, dtype=float))

    def __neg__(self):
        return TangentVector(self.base, -self.components)


@dataclass(frozen=True)
class TangentPlane:
    base: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))


def in_domain(model, p):
    """Vectorized chart-domain test over the last axis."""
    p = np.asarray(p, dtype=float)
    ok = np.all(np.isfinite(p), axis=-1)
    if model.kind == HALF_PLANE:
        ok &= p[..., -1] >= HALF_PLANE_FLOOR
    elif model.kind == DISK:
        ok &= np.sqrt(np.sum(p * p, axis=-1)) <= 1.0 - DISK_MARGIN
    return ok


def check_point(model, p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != model.dimension:
        raise DimensionError(
            f"point has {p.shape[-1]} coordinates, model dimension is {model.dimension}")
    if not np.all(in_domain(model, p)):
        raise ChartDomainError(f"point {p.tolist()} outside the {model.kind} chart domain")
    return p


def conformal_factor(model, p):
    """Return (phi, grad phi, Hess phi) at p; broadcasts over leading axes."""
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    if model.kind == EUCLIDEAN:
        return _phi_zero(p)
    if model.kind == HALF_PLANE:
        y = p[..., -1]
        grad = np.zeros(p.shape)
        grad[..., -1] = -1.0 / y
        hess = np.zeros(p.shape[:-1] + (n, n))
        hess[..., -1, -1] = 1.0 / (y * y)
        return -np.log(y), grad, hess
    if model.kind == DISK:
        s = 1.0 - np.sum(p * p, axis=-1)
        grad = 2.0 * p / s[..., None]
        hess = (2.0 * np.eye(n) / s[..., None, None]
                + 4.0 * p[..., :, None] * p[..., None, :] / (s * s)[..., None, None])
        return np.log(2.0) - np.log(s), grad, hess
    return PHI_CATALOG[model.phi](p)


def scale(model, p):
    """Conformal scale exp(phi): riemannian length per chart length."""
    p = np.asarray(p, dtype=float)
    if model.kind == EUCLIDEAN:
        return np.ones(p.shape[:-1])
    if model.kind == HALF_PLANE:
        return 1.0 / p[..., -1]
    if model.kind == DISK:
        return 2.0 / (1.0 - np.sum(p * p, axis=-1))
    return np.exp(conformal_factor(model, p)[0])


def metric_tensor(model, p):
    p = check_point(model, p)
    return scale(model, p) ** 2 * np.eye(model.dimension)


def inner(model, p, a, b):
    return float(scale(model, p) ** 2 * np.dot(a, b))


def norm(model, p, a):
    return float(scale(model, p) * np.linalg.norm(a))


def christoffel(model, p):
    """Gamma[k, i, j] = Gamma^k_ij, exactly symmetric in (i, j)."""
    p = check_point(model, p)
    _, d, _ = conformal_factor(model, p)
    eye = np.eye(model.dimension)
    return (eye[:, :, None] * d[None, None, :]
            + eye[:, None, :] * d[None, :, None]
            - eye[None, :, :] * d[:, None, None])


def geodesic_acceleration(model, p, v):
    """-Gamma^k_ij v^i v^j for conformal metrics; broadcasts."""
    if model.kind == EUCLIDEAN:
        return np.zeros_like(v)
    _, d, _ = conformal_factor(model, p)
    dv = np.sum(d * v, axis=-1)[..., None]
    vv = np.sum(v * v, axis=-1)[..., None]
    return vv * d - 2.0 * dv * v


def sectional_curvature(model, plane):
    """Sectional curvature of the plane spanned by plane.u and plane.v.

    For g = exp(2 phi) delta and delta-orthonormal X, Y spanning the plane,
    K = -exp(-2 phi) (A(X,X) + A(Y,Y)) with
    A = Hess phi - dphi (x) dphi + |dphi|^2 / 2 delta.
    """
    base = check_point(model, plane.base)
    span = np.stack([plane.u, plane.v], axis=1)
    gram = scale(model, base) ** 2 * span.T @ span
    if np.linalg.det(gram) <= 1e-12:
        raise DegenerateError("tangent plane span is singular")
    q, _ = np.linalg.qr(span)
    return float(_sectional_from_frames(model, base[None], q[None])[0])


def _sectional_from_frames(model, pts, frames):
    """Vectorized K for points (m, n) and delta-orthonormal frames (m, n, 2)."""
    phi, d, h = conformal_factor(model, pts)
    dd = np.sum(d * d, axis=-1)
    total = np.zeros(len(pts))
    for c in range(2):
        x = frames[:, :, c]
        hx = np.einsum("mi,mij,mj->m", x, h, x)
        dx = np.sum(d * x, axis=-1)
        total += hx - dx * dx + 0.5 * dd
    return -np.exp(-2.0 * phi) * total


class CurvatureReport(NamedTuple):
    K_min: float
    K_max: float
    all_in_bounds: bool
    samples: int


def verify_curvature_bounds(model, region, grid, seed=0):
    """Sample K on a chart box and test -k^2 - tol <= K <= tol.

    ``region`` is a pair (lo, hi) of corner vectors.  In three dimensions
    each grid point contributes the three coordinate planes and one random
    plane drawn from a fixed seed.
    """
    lo, hi = (np.asarray(c, dtype=float) for c in region)
    n = model.dimension
    if lo.shape != (n,) or hi.shape != (n,):
        raise DimensionError("region corners must match the model dimension")
    if grid < 2:
        raise ValueError("need at least 2 samples per axis")
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(n)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    if not np.all(in_domain(model, pts)):
        raise ChartDomainError("verification region leaves the chart domain")
    eye = np.eye(n)
    if n == 2:
        frames = [np.broadcast_to(eye, (len(pts), 2, 2))]
    else:
        frames = [np.broadcast_to(eye[:, [i, j]], (len(pts), 3, 2))
                  for i, j in ((0, 1), (0, 2), (1, 2))]
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((len(pts), 3, 2))
        q, _ = np.linalg.qr(raw)
        frames.append(q)
    ks = np.concatenate([_sectional_from_frames(model, pts, f) for f in frames])
    k = model.k if model.k is not None else (
        0.0 if model.kind == EUCLIDEAN else 1.0 if model.is_hyperbolic else np.inf)
    kmin, kmax = float(ks.min()), float(ks.max())
    ok = kmin >= -k * k - CURVATURE_TOL and kmax <= CURVATURE_TOL
    return CurvatureReport(kmin, kmax, bool(ok), int(ks.size))
