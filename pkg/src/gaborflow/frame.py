"""Gabor systems on the discrete model, frame operators and bounds, and the
window/lattice deformation experiments.

All frame statements here concern the finite, box-truncated system: bounds
are the extremal eigenvalues of the dense frame operator, measured in the
dx-weighted inner product.  The deformation experiments transport the window
with the metaplectic lift and the lattice with the exact linear flow (either
every point, or only those enclosed by an ellipsoid) and report the relative
drift of the bounds; the mixed case is an empirical probe and is reported,
not asserted.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .lattice import (
    BOUNDARY_TOL_DEFAULT,
    Ellipsoid,
    PointSet,
    classify_points,
    deform_point_set,
    max_safe_epsilon,
)
from .metaplectic import metaplectic_lift
from .quantum import GridSpec, State, heisenberg, inner, norm
from .symplectic import QuadraticHamiltonian, coords_of, flow_matrix

__all__ = [
    "GaborSystem",
    "FrameBounds",
    "DeformationReport",
    "SweepSummary",
    "analysis_matrix",
    "analysis_coefficients",
    "frame_operator",
    "frame_bounds",
    "full_phase_space_points",
    "covariant_deform",
    "ellipsoid_deform",
    "compare_reports",
    "REPORT_COLUMNS",
]

WINDOW_NORM_TOL = 1e-10
FRAME_THRESHOLD = 1e-10  # A > threshold * B counts as a frame

REPORT_COLUMNS = ("t", "E", "eps", "moved", "A", "B", "A_prime", "B_prime", "rel_dA", "rel_dB")


@dataclass(frozen=True)
class GaborSystem:
    """A unit-norm window, a finite 2-D phase-space point set, and a grid."""

    window: State
    points: PointSet
    grid: GridSpec

    def __post_init__(self):
        if self.points.dim != 1:
            raise ValueError("Gabor systems are built on 2-D phase points (n = 1)")
        if len(self.window) != self.grid.N:
            raise ValueError("window length does not match grid")
        w = norm(self.window, self.grid)
        if abs(w - 1.0) > WINDOW_NORM_TOL:
            raise ValueError(f"window must have unit norm within {WINDOW_NORM_TOL}, got {w!r}")
        if len(self.points):
            qmax = float(np.max(np.abs(self.points.points[:, 0])))
            if qmax > self.grid.L / 2.0:
                warnings.warn(
                    f"lattice reaches |q|={qmax:g} beyond L/2={self.grid.L / 2.0:g}: "
                    "windows wrap around the box",
                    stacklevel=2,
                )


@dataclass(frozen=True)
class FrameBounds:
    """Extremal frame-operator eigenvalues A <= B and the frame verdict.

    Lower bounds beneath the numerical-rank threshold (A <= 1e-10 * B) are
    reported as exactly 0.0 so rank-deficient systems behave
    deterministically.
    """

    A: float
    B: float
    is_frame: bool

    def __post_init__(self):
        if self.A < 0.0 or self.B < self.A:
            raise ValueError(f"need 0 <= A <= B, got A={self.A!r}, B={self.B!r}")

    @classmethod
    def from_extremes(cls, lam_min: float, lam_max: float) -> "FrameBounds":
        B = max(float(lam_max), 0.0)
        A = max(float(lam_min), 0.0)
        if A <= FRAME_THRESHOLD * B:
            A = 0.0
        return cls(A=A, B=B, is_frame=A > FRAME_THRESHOLD * B)


def analysis_matrix(sys: GaborSystem) -> np.ndarray:
    """Analysis map as an m x N matrix: row j is conj(T(z_j) window) * sqrt(dx).

    With this scaling the Euclidean eigenvalues of the frame operator are the
    frame bounds of the dx-weighted inequality; rows have unit Euclidean norm
    because the translations are unitary.
    """
    m = len(sys.points)
    if m == 0:
        raise ValueError("analysis matrix of an empty point set")
    g = sys.grid
    D = np.empty((m, g.N), dtype=complex)
    root_dx = np.sqrt(g.dx)
    for j, row in enumerate(sys.points.points):
        D[j] = np.conj(heisenberg(row, sys.window, g).values) * root_dx
    return D


def analysis_coefficients(sys: GaborSystem, psi: State) -> np.ndarray:
    """The pairings (psi | T(z_j) window) in the dx-weighted inner product."""
    g = sys.grid
    return np.array([inner(psi, heisenberg(row, sys.window, g), g)
                     for row in sys.points.points])


def frame_operator(sys: GaborSystem) -> np.ndarray:
    """Dense Hermitian PSD frame operator S = D* D (N x N)."""
    D = analysis_matrix(sys)
    S = D.conj().T @ D
    return 0.5 * (S + S.conj().T)


def frame_bounds(sys: GaborSystem) -> FrameBounds:
    """Extremal eigenvalues of the frame operator via a dense Hermitian solve.

    Intended for N <= 2048; certified extremal eigenvalues at desk scale are
    preferred over iterative solvers that would need convergence tuning.
    """
    evals = np.linalg.eigvalsh(frame_operator(sys))
    return FrameBounds.from_extremes(evals[0], evals[-1])


def full_phase_space_points(g: GridSpec) -> PointSet:
    """All N translations x N modulations of the grid: (k*dx, j*dp), centered.

    The associated Gabor system is a tight frame of the discrete model for
    any window; it serves as the completeness oracle in the tests.
    """
    ks = (np.arange(g.N) - g.N // 2) * g.dx
    js = (np.arange(g.N) - g.N // 2) * g.dp
    K, Jm = np.meshgrid(ks, js, indexing="ij")
    pts = np.stack([K.ravel(), Jm.ravel()], axis=-1)
    return PointSet(pts, delta=min(g.dx, g.dp))


@dataclass(frozen=True)
class DeformationReport:
    """Frame bounds before/after a deformation and their relative drifts."""

    bounds_before: FrameBounds
    bounds_after: FrameBounds
    rel_dA: float
    rel_dB: float
    moved_count: int
    epsilon_used: float
    t: float
    E: float

    def csv_row(self) -> tuple:
        return (
            self.t,
            self.E,
            self.epsilon_used,
            self.moved_count,
            self.bounds_before.A,
            self.bounds_before.B,
            self.bounds_after.A,
            self.bounds_after.B,
            self.rel_dA,
            self.rel_dB,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "E": self.E,
                "eps": self.epsilon_used,
                "moved": self.moved_count,
                "A": self.bounds_before.A,
                "B": self.bounds_before.B,
                "A_prime": self.bounds_after.A,
                "B_prime": self.bounds_after.B,
                "rel_dA": self.rel_dA,
                "rel_dB": self.rel_dB,
            }
        )


def _rel_drift(before: float, after: float, scale: float) -> float:
    # the floor keeps drifts of numerically-zero lower bounds meaningful
    return abs(after - before) / max(before, 1e-9 * scale, 1e-300)


def _make_report(bounds0: FrameBounds, bounds1: FrameBounds, moved: int, eps: float,
                 t: float, E: float) -> DeformationReport:
    scale = max(bounds0.B, bounds1.B)
    return DeformationReport(
        bounds_before=bounds0,
        bounds_after=bounds1,
        rel_dA=_rel_drift(bounds0.A, bounds1.A, scale),
        rel_dB=_rel_drift(bounds0.B, bounds1.B, scale),
        moved_count=moved,
        epsilon_used=eps,
        t=t,
        E=E,
    )


def covariant_deform(sys: GaborSystem, H: QuadraticHamiltonian, t: float, z0) -> GaborSystem:
    """Transport the window along the flow with base point z0 and move every
    lattice point by the flow.

    The window becomes T(z_t) U_t T(z0)^{-1} window with z_t = S_t z0; the
    points become S_t applied to the whole set.  For a quadratic Hamiltonian
    the linearized flow is base-point independent, which is the only case
    implemented.
    """
    if H.dim != 1:
        raise ValueError("window transport is implemented for n = 1")
    z0c = coords_of(z0)
    S = flow_matrix(H, t)
    zt = S.S @ z0c
    U = metaplectic_lift(H.M, t, sys.grid)
    w = heisenberg(-z0c, sys.window, sys.grid)  # T(z0)^{-1} = T(-z0)
    w = U.apply(w)
    w = heisenberg(zt, w, sys.grid)
    new_pts = PointSet._trusted(sys.points.points @ S.S.T, sys.points.delta)
    return GaborSystem(window=w, points=new_pts, grid=sys.grid)


def ellipsoid_deform(
    sys: GaborSystem,
    ell: Ellipsoid,
    t: float,
    boundary_tol: float = BOUNDARY_TOL_DEFAULT,
) -> tuple[GaborSystem, DeformationReport]:
    """Deform the window by the lift and only the enclosed points by the flow.

    The window becomes U_t window (base point 0); the points enclosed by the
    ellipsoid move along the exact flow while the rest stay fixed.  The safe
    thickening radius of the surface is recorded in the report to certify
    that a cutoff flow realizing this piecewise motion exists for the set.
    Frame bounds of both systems and their relative drifts make up the
    report.
    """
    eps = max_safe_epsilon(sys.points, ell, boundary_tol)
    bounds0 = frame_bounds(sys)
    moved = len(classify_points(sys.points, ell, boundary_tol).inside)
    new_pts = deform_point_set(sys.points, ell, t, boundary_tol)
    U = metaplectic_lift(ell.H.M, t, sys.grid)
    new_sys = GaborSystem(window=U.apply(sys.window), points=new_pts, grid=sys.grid)
    bounds1 = frame_bounds(new_sys)
    return new_sys, _make_report(bounds0, bounds1, moved, eps, t, ell.E)


@dataclass(frozen=True)
class SweepSummary:
    """CSV-ready aggregation of deformation reports."""

    rows: list
    max_rel_dA: float
    max_rel_dB: float
    mean_rel_dA: float
    mean_rel_dB: float


def compare_reports(reports) -> SweepSummary:
    """Aggregate a sweep of deformation reports into CSV-ready rows."""
    reports = list(reports)
    if not reports:
        raise ValueError("compare_reports needs at least one report")
    rows = [r.csv_row() for r in reports]
    das = np.array([r.rel_dA for r in reports])
    dbs = np.array([r.rel_dB for r in reports])
    return SweepSummary(
        rows=rows,
        max_rel_dA=float(np.max(das)),
        max_rel_dB=float(np.max(dbs)),
        mean_rel_dA=float(np.mean(das)),
        mean_rel_dB=float(np.mean(dbs)),
    )
