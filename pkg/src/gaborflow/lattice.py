"""Finite separated phase-space point sets, ellipsoid geometry, safe
thickening radii, and the flow-driven point-set deformation.

The central objects are a finite delta-separated point set standing in for a
lattice and an ellipsoid {H = E} given by a positive definite quadratic
Hamiltonian.  ``max_safe_epsilon`` returns the largest thickening radius of
the ellipsoid surface that captures no lattice points beyond those already on
the surface; ``deform_point_set`` moves the enclosed points along the exact
linear flow and leaves the rest untouched.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.spatial.distance import pdist

from .symplectic import PhasePoint, QuadraticHamiltonian, coords_of, flow_matrix

__all__ = [
    "Box",
    "PointSet",
    "Ellipsoid",
    "PointClasses",
    "ProjectionError",
    "separable_lattice",
    "classify_points",
    "distance_to_ellipsoid",
    "max_safe_epsilon",
    "deform_point_set",
    "count_in_ellipsoid",
]

BOUNDARY_TOL_DEFAULT = 1e-9
EPS_MAX_DEFAULT = 1.0
COLLISION_TOL_DEFAULT = 1e-9
ON_SURFACE_REL_TOL = 1e-10
# relative slack absorbing float noise in the separation / box membership checks
_REL_SLACK = 1e-9


class ProjectionError(RuntimeError):
    """Nearest-point projection onto the ellipsoid could not be certified."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in R^{2n}: componentwise lower < upper."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float, copy=True)
        hi = np.array(self.upper, dtype=float, copy=True)
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0 or lo.size % 2 != 0:
            raise ValueError("box bounds must be matching 1-D vectors of even length")
        if np.any(lo >= hi):
            raise ValueError("box requires lower < upper componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_pairs(cls, pairs) -> "Box":
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("expected a sequence of (lower, upper) pairs")
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dim(self) -> int:
        return self.lower.size // 2


@dataclass(frozen=True)
class PointSet:
    """Finite collection of phase-space points with a certified separation.

    ``points`` is an (m, 2n) array; ``delta`` is a lower bound on pairwise
    distances, checked exhaustively at construction (O(m^2), fine at desk
    scale).  ``collision_warning`` is set by ``deform_point_set`` when a moved
    point lands within the collision tolerance of another point; such sets
    bypass the separation check and carry the measured minimum distance.
    """

    points: np.ndarray
    delta: float
    collision_warning: bool = False
    _checked: bool = True

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.size == 0:
            pts = pts.reshape(0, 2 if pts.ndim < 2 else pts.shape[-1])
        if pts.ndim != 2 or pts.shape[1] % 2 != 0 or pts.shape[1] == 0:
            raise ValueError(f"points must form an (m, 2n) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if not (self.delta > 0.0):
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if self._checked and pts.shape[0] > 1:
            dmin = float(np.min(pdist(pts)))
            if dmin == 0.0:
                raise ValueError("duplicate points are not allowed")
            if dmin < self.delta * (1.0 - _REL_SLACK):
                raise ValueError(
                    f"separation violated: min pairwise distance {dmin:.6e} < delta {self.delta:.6e}"
                )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def _trusted(cls, points, delta, collision_warning=False) -> "PointSet":
        return cls(points, delta, collision_warning, _checked=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1] // 2

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return (PhasePoint(row) for row in self.points)

    def to_json(self) -> str:
        """Serialize as {"dim": n, "delta": d, "points": [...]}, doubles with
        17 significant decimal digits."""
        rows = ", ".join(
            "[" + ", ".join(format(v, ".17g") for v in row) + "]" for row in self.points
        )
        return (
            f'{{"dim": {self.dim}, "delta": {format(self.delta, ".17g")}, '
            f'"points": [{rows}]}}'
        )

    @classmethod
    def from_json(cls, text: str) -> "PointSet":
        obj = json.loads(text)
        n = int(obj["dim"])
        pts = np.asarray(obj["points"], dtype=float).reshape(-1, 2 * n)
        return cls(pts, float(obj["delta"]))


@dataclass(frozen=True)
class Ellipsoid:
    """Level set {z : H(z) = E} of a positive definite quadratic Hamiltonian.

    E > 0 and positive definiteness make the surface compact; it bounds the
    compact region {H <= E}.
    """

    H: QuadraticHamiltonian
    E: float

    def __post_init__(self):
        if not (self.E > 0.0):
            raise ValueError(f"energy E must be positive, got {self.E!r}")

    @property
    def dim(self) -> int:
        return self.H.dim

    def value(self, z) -> float:
        return self.H.value(z)

    @property
    def inner_radius(self) -> float:
        """Smallest semi-axis sqrt(2E / mu_max)."""
        return math.sqrt(2.0 * self.E / self.H.max_eigenvalue)

    @property
    def outer_radius(self) -> float:
        """Largest semi-axis sqrt(2E / mu_min)."""
        return math.sqrt(2.0 * self.E / self.H.min_eigenvalue)

    @property
    def gradient_floor(self) -> float:
        """Lower bound on |grad H| anywhere on or outside the surface."""
        return self.H.min_eigenvalue * self.inner_radius


@dataclass(frozen=True)
class PointClasses:
    """Index partition of a point set relative to an ellipsoid."""

    interior: np.ndarray
    boundary: np.ndarray
    exterior: np.ndarray

    @property
    def inside(self) -> np.ndarray:
        """Indices of the enclosed set F = interior plus boundary."""
        return np.concatenate([self.interior, self.boundary])


def separable_lattice(alpha: float, beta: float, box: Box, n: int) -> PointSet:
    """All points of (alpha Z)^n x (beta Z)^n inside the box.

    The certified separation is min(alpha, beta).  An empty intersection is
    allowed and flagged with a warning.
    """
    if not (alpha > 0.0 and beta > 0.0):
        raise ValueError("alpha and beta must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    if box.dim != n:
        raise ValueError(f"box dimension {box.dim} does not match n={n}")
    axes = []
    for i in range(2 * n):
        spacing = alpha if i < n else beta
        lo, hi = box.lower[i], box.upper[i]
        slack = _REL_SLACK * max(1.0, abs(lo), abs(hi))
        kmin = math.ceil((lo - slack) / spacing)
        kmax = math.floor((hi + slack) / spacing)
        axes.append(np.arange(kmin, kmax + 1, dtype=float) * spacing)
    if any(a.size == 0 for a in axes):
        pts = np.empty((0, 2 * n))
    else:
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
    if pts.shape[0] == 0:
        warnings.warn("separable_lattice: box contains no lattice points", stacklevel=2)
        return PointSet._trusted(np.empty((0, 2 * n)), min(alpha, beta))
    return PointSet(pts, min(alpha, beta))


def classify_points(
    P: PointSet, ell: Ellipsoid, boundary_tol: float = BOUNDARY_TOL_DEFAULT
) -> PointClasses:
    """Partition P into interior / boundary / exterior of the ellipsoid.

    A point is interior iff H(z) < E*(1 - boundary_tol), boundary iff
    |H(z) - E| <= boundary_tol*E, exterior otherwise.  The tolerance is
    relative to E because lattice coordinates held as doubles make exact
    incidence fragile.
    """
    if P.dim != ell.dim:
        raise ValueError(f"dimension mismatch: points n={P.dim}, ellipsoid n={ell.dim}")
    if boundary_tol < 0.0:
        raise ValueError("boundary_tol must be >= 0")
    vals = ell.H.values(P.points) if len(P) else np.empty(0)
    band = boundary_tol * ell.E
    idx = np.arange(len(P))
    boundary = idx[np.abs(vals - ell.E) <= band]
    interior = idx[vals < ell.E - band]
    exterior = idx[vals > ell.E + band]
    return PointClasses(interior=interior, boundary=boundary, exterior=exterior)


def _pole_candidates(mu, y, E, zero_tol):
    """Lagrange candidates with multiplier at a pole -1/mu_k, which arise when
    the point has (numerically) no component in that eigenspace."""
    cands = []
    for k in range(mu.size):
        # fold eigenspaces of equal eigenvalue into one pole
        if k > 0 and abs(mu[k] - mu[k - 1]) <= 1e-12 * mu[k]:
            continue
        space = np.abs(mu - mu[k]) <= 1e-12 * mu[k]
        if np.linalg.norm(y[space]) > zero_tol:
            continue
        rest = ~space
        denom = 1.0 - mu[rest] / mu[k]
        if np.any(np.abs(denom) < 1e-14):
            continue
        w = np.zeros_like(y)
        w[rest] = y[rest] / denom
        r2 = (2.0 * E - float(mu[rest] @ (w[rest] ** 2))) / mu[k]
        if r2 < 0.0:
            continue
        w[np.argmax(space)] = math.sqrt(r2)
        cands.append(w)
    return cands


def distance_to_ellipsoid(z, ell: Ellipsoid) -> tuple[float, PhasePoint]:
    """Euclidean distance from z to the surface {H = E} and the nearest point.

    Solves the Lagrange conditions w = (I + lam*M)^{-1} z by enumerating all
    real roots lam of the associated rational equation H(w(lam)) = E (as a
    polynomial via the eigenbasis of M), polishing each root by Newton steps,
    and returning the admissible candidate of minimal distance.  Degenerate
    multipliers at the poles -1/mu are enumerated as well, so points on
    symmetry axes (including the center) project correctly.

    Points already on the surface within 1e-10 relative in H return distance
    exactly 0 with z itself as the projection.

    Raises
    ------
    ProjectionError
        If no candidate satisfies |H(w) - E| <= 1e-10 * E; the message reports
        the scanned multiplier range rather than returning a wrong root.
    """
    zc = coords_of(z)
    if zc.size != 2 * ell.dim:
        raise ValueError(f"dimension mismatch: point has {zc.size} coords, ellipsoid n={ell.dim}")
    E = ell.E
    if abs(ell.H.value(zc) - E) <= ON_SURFACE_REL_TOL * E:
        return 0.0, PhasePoint(zc)

    M = ell.H.M
    mu, Q = np.linalg.eigh(M)
    y = Q.T @ zc
    scale = 1.0 + float(np.linalg.norm(zc))
    zero_tol = 1e-13 * scale

    def g(lam):
        with np.errstate(over="ignore", divide="ignore"):
            return 0.5 * float(np.sum(mu * y**2 / (1.0 + lam * mu) ** 2)) - E

    def gprime(lam):
        with np.errstate(over="ignore", divide="ignore"):
            return -float(np.sum(mu**2 * y**2 / (1.0 + lam * mu) ** 3))

    # polynomial form of g(lam) * prod(1 + lam*mu)^2
    squares = [npoly.polymul([1.0, m], [1.0, m]) for m in mu]
    prod_all = reduce(npoly.polymul, squares)
    poly = -E * prod_all
    for i in range(mu.size):
        if mu[i] * y[i] ** 2 == 0.0:
            continue
        partial = reduce(npoly.polymul, [squares[j] for j in range(mu.size) if j != i], [1.0])
        poly = npoly.polyadd(poly, 0.5 * mu[i] * y[i] ** 2 * partial)

    roots = npoly.polyroots(poly) if np.any(poly != 0.0) else np.empty(0)
    real = [float(r.real) for r in roots if abs(r.imag) <= 1e-9 * (1.0 + abs(r.real))]

    candidates = []
    for lam in real:
        denom = 1.0 + lam * mu
        if np.any(np.abs(denom) < 1e-14):
            continue
        # Newton polish on the rational equation; the polynomial root is the seed
        for _ in range(50):
            val = g(lam)
            if not np.isfinite(val):
                break
            if abs(val) <= 1e-13 * E:
                break
            dv = gprime(lam)
            if dv == 0.0 or not np.isfinite(dv):
                break
            step = val / dv
            lam -= step
            if abs(step) <= 1e-16 * (1.0 + abs(lam)):
                break
        denom = 1.0 + lam * mu
        if np.any(np.abs(denom) < 1e-14):
            continue
        w = y / denom
        candidates.append(w)
    candidates.extend(_pole_candidates(mu, y, E, zero_tol))

    best = None
    for w in candidates:
        if abs(0.5 * float(mu @ w**2) - E) > ON_SURFACE_REL_TOL * E:
            continue
        d = float(np.linalg.norm(y - w))
        if best is None or d < best[0]:
            best = (d, w)
    if best is None:
        lo = min(real) if real else float("nan")
        hi = max(real) if real else float("nan")
        raise ProjectionError(
            f"no admissible projection found for z={zc.tolist()}: scanned "
            f"{len(real)} real multiplier roots in [{lo:.6e}, {hi:.6e}]"
        )
    d, w = best
    return d, PhasePoint(Q @ w)


def max_safe_epsilon(
    P: PointSet,
    ell: Ellipsoid,
    boundary_tol: float = BOUNDARY_TOL_DEFAULT,
    eps_max: float = EPS_MAX_DEFAULT,
) -> float:
    """Largest thickening radius of the surface that captures no new points.

    Returns min over off-surface points of their distance to the surface; any
    thickening with radius strictly below this value contains exactly the
    points already on the surface.  If P is empty or every point lies on the
    surface, returns the configured cap ``eps_max`` (a finite cap keeps cutoff
    supports bounded).
    """
    if P.dim != ell.dim:
        raise ValueError(f"dimension mismatch: points n={P.dim}, ellipsoid n={ell.dim}")
    if len(P) == 0:
        return eps_max
    vals = ell.H.values(P.points)
    off = np.abs(vals - ell.E) > boundary_tol * ell.E
    if not np.any(off):
        return eps_max
    dists = [distance_to_ellipsoid(P.points[i], ell)[0] for i in np.nonzero(off)[0]]
    return float(min(dists))


def deform_point_set(
    P: PointSet,
    ell: Ellipsoid,
    t: float,
    boundary_tol: float = BOUNDARY_TOL_DEFAULT,
    collision_tol: float = COLLISION_TOL_DEFAULT,
) -> PointSet:
    """Move the enclosed points along the flow of the ellipsoid Hamiltonian.

    Returns (P minus F) union S_t(F) where F is the enclosed set (interior
    plus boundary) and S_t = exp(t J M).  Exterior points keep bitwise-equal
    coordinates.  Surface points stay on the surface because it is an energy
    level set of the driving Hamiltonian.

    If a moved point lands within ``collision_tol`` of any other point the
    result is flagged (``collision_warning=True``) instead of failing, and the
    certified separation is lowered to the measured minimum distance.
    """
    if P.dim != ell.dim:
        raise ValueError(f"dimension mismatch: points n={P.dim}, ellipsoid n={ell.dim}")
    if len(P) == 0:
        return P
    classes = classify_points(P, ell, boundary_tol)
    moved = classes.inside
    if moved.size == 0:
        return P
    S = flow_matrix(ell.H, t).S
    new_pts = np.array(P.points, copy=True)
    new_pts[moved] = P.points[moved] @ S.T
    if new_pts.shape[0] > 1:
        dmin = float(np.min(pdist(new_pts)))
    else:
        dmin = P.delta
    collided = dmin < collision_tol
    if collided:
        warnings.warn(
            f"deform_point_set: moved point within {collision_tol:g} of another point "
            f"(min distance {dmin:.3e}); result flagged",
            stacklevel=2,
        )
    delta_new = min(P.delta, dmin) if dmin > 0.0 else P.delta
    return PointSet._trusted(new_pts, delta_new, collision_warning=collided)


def count_in_ellipsoid(P: PointSet, ell: Ellipsoid) -> int:
    """Number of points with H(z) <= E (exact enumeration)."""
    if len(P) == 0:
        return 0
    return int(np.count_nonzero(ell.H.values(P.points) <= ell.E))
