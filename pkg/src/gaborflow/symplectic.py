"""Linear symplectic geometry: the standard form, quadratic Hamiltonians and
their matrix flows.

Conventions used throughout the package: phase-space points are ordered
z = (x_1..x_n, p_1..p_n), the standard form matrix is J = [[0, I], [-I, 0]],
and the symplectic product is sigma(z, z') = (J z) . z'.  With these choices
Hamilton's equations for H(z) = (1/2) M z . z read zdot = J M z and the flow
is the matrix exponential exp(t J M).
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass, field
from scipy.linalg import expm

__all__ = [
    "PhasePoint",
    "QuadraticHamiltonian",
    "SymplecticMatrix",
    "standard_J",
    "symplectic_form",
    "is_symplectic",
    "flow_matrix",
    "symplectic_path",
    "path_continuity_constant",
]

SYMPLECTIC_DEFECT_TOL = 1e-10
DET_TOL = 1e-9
SYMMETRY_TOL = 1e-12


def coords_of(z) -> np.ndarray:
    """Coerce a PhasePoint or array-like into a 1-D float vector."""
    if isinstance(z, PhasePoint):
        return z.coords
    return np.asarray(z, dtype=float)


@dataclass(frozen=True)
class PhasePoint:
    """A point z = (x_1..x_n, p_1..p_n) of phase space R^{2n}."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float, copy=True)
        if c.ndim != 1 or c.size == 0 or c.size % 2 != 0:
            raise ValueError(
                "phase point needs an even, positive number of coordinates, "
                f"got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.size // 2

    @property
    def x(self) -> np.ndarray:
        return self.coords[: self.n]

    @property
    def p(self) -> np.ndarray:
        return self.coords[self.n :]

    def __iter__(self):
        return iter(self.coords)


def standard_J(n: int) -> np.ndarray:
    """Standard form matrix [[0, I_n], [-I_n, 0]] on R^{2n}."""
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def symplectic_form(z, zp) -> float:
    """sigma(z, z') = (J z) . z'."""
    z = coords_of(z)
    zp = coords_of(zp)
    n = z.size // 2
    # (Jz) = (p, -x) in the (x, p) block ordering
    return float(np.dot(z[n:], zp[:n]) - np.dot(z[:n], zp[n:]))


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H(z) = (1/2) M z . z with M symmetric positive definite.

    The smallest eigenvalue of M is computed at construction and exposed as
    ``min_eigenvalue``; positive definiteness is required so that level sets
    {H = E} are compact ellipsoids.
    """

    M: np.ndarray
    dim: int = field(init=False)
    min_eigenvalue: float = field(init=False)
    max_eigenvalue: float = field(init=False)

    def __post_init__(self):
        M = np.array(self.M, dtype=float, copy=True)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"M must be square, got shape {M.shape}")
        side = M.shape[0]
        if side == 0 or side % 2 != 0:
            raise ValueError(f"M must be 2n x 2n with n >= 1, got side {side}")
        defect = np.max(np.abs(M - M.T))
        if defect > SYMMETRY_TOL:
            raise ValueError(f"M must be symmetric within {SYMMETRY_TOL}, defect {defect:.3e}")
        spectrum = np.linalg.eigvalsh(M)
        lam_min = float(spectrum[0])
        if lam_min <= 0.0:
            raise ValueError(f"M must be positive definite, smallest eigenvalue {lam_min:.3e}")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "dim", side // 2)
        object.__setattr__(self, "min_eigenvalue", lam_min)
        object.__setattr__(self, "max_eigenvalue", float(spectrum[-1]))

    def value(self, z) -> float:
        z = coords_of(z)
        return 0.5 * float(z @ self.M @ z)

    def values(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized H over rows of an (m, 2n) array."""
        pts = np.asarray(pts, dtype=float)
        return 0.5 * np.einsum("ij,jk,ik->i", pts, self.M, pts)

    def gradient(self, z) -> np.ndarray:
        return self.M @ coords_of(z)


@dataclass(frozen=True)
class SymplecticMatrix:
    """A real 2n x 2n matrix S with S^T J S = J (and hence det S = 1).

    Construction validates both properties.  ``SymplecticMatrix.trusted``
    skips validation for matrices produced by code paths that guarantee
    symplecticity; it exists for hot loops and is covered by tests.
    """

    S: np.ndarray
    validate: bool = True

    def __post_init__(self):
        S = np.array(self.S, dtype=float, copy=True)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2 != 0:
            raise ValueError(f"S must be 2n x 2n, got shape {S.shape}")
        if self.validate:
            defect = _symplectic_defect(S)
            if defect > SYMPLECTIC_DEFECT_TOL:
                raise ValueError(
                    f"matrix is not symplectic: max|S^T J S - J| = {defect:.3e} "
                    f"> {SYMPLECTIC_DEFECT_TOL}"
                )
            det = float(np.linalg.det(S))
            if abs(det - 1.0) > DET_TOL:
                raise ValueError(f"symplectic matrix must have det 1, got {det!r}")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @classmethod
    def trusted(cls, S: np.ndarray) -> "SymplecticMatrix":
        return cls(S, validate=False)

    @property
    def n(self) -> int:
        return self.S.shape[0] // 2

    def apply(self, z) -> PhasePoint:
        return PhasePoint(self.S @ coords_of(z))

    def inverse(self) -> "SymplecticMatrix":
        # S^{-1} = J^T S^T J for symplectic S; cheaper and exactly structured
        J = standard_J(self.n)
        return SymplecticMatrix.trusted(J.T @ self.S.T @ J)


def _symplectic_defect(S: np.ndarray) -> float:
    n = S.shape[0] // 2
    J = standard_J(n)
    return float(np.max(np.abs(S.T @ J @ S - J)))


def is_symplectic(S: np.ndarray, tol: float) -> bool:
    """True iff max|S^T J S - J| <= tol.  Rejects odd-dimensional input."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"S must be square, got shape {S.shape}")
    if S.shape[0] % 2 != 0:
        raise ValueError(f"S must have even dimension, got {S.shape[0]}")
    return _symplectic_defect(S) <= tol


def flow_matrix(H: QuadraticHamiltonian, t: float) -> SymplecticMatrix:
    """Flow map S_t = exp(t J M) of the linear Hamiltonian system zdot = J M z.

    Computed by scipy's scaling-and-squaring Pade matrix exponential.  The
    result is validated against the symplecticity tolerance at construction.
    """
    J = standard_J(H.dim)
    return SymplecticMatrix(expm(float(t) * (J @ H.M)))


def symplectic_path(H: QuadraticHamiltonian, t_grid) -> list[SymplecticMatrix]:
    """Sample the flow curve t -> S_t on an increasing grid starting at 0."""
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("t_grid must be a nonempty 1-D sequence")
    if ts[0] != 0.0:
        raise ValueError(f"t_grid must start at 0, got {ts[0]!r}")
    if ts.size > 1 and np.any(np.diff(ts) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")
    return [flow_matrix(H, t) for t in ts]


def path_continuity_constant(path: list[SymplecticMatrix], t_grid) -> float:
    """Witness C with max|S_{t_{k+1}} - S_{t_k}|_inf <= C * dt_k over the grid."""
    ts = np.asarray(t_grid, dtype=float)
    if len(path) != ts.size:
        raise ValueError("path and t_grid length mismatch")
    if len(path) < 2:
        return 0.0
    ratios = []
    for k in range(len(path) - 1):
        dt = ts[k + 1] - ts[k]
        step = np.max(np.abs(path[k + 1].S - path[k].S))
        ratios.append(step / dt)
    return float(max(ratios))
