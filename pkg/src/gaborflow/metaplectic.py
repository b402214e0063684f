"""Metaplectic lift of linear symplectic flows on the discrete model.

The lift of S_t = exp(t J M) is realized as the quantum propagator
U_t = exp(-i t H_op / hbar) of the symmetrically quantized quadratic
Hamiltonian H_op = (1/2)(m11 X^2 + m12 (XP + PX) + m22 P^2).  Functional
calculus through one Hermitian eigendecomposition makes U_t automatically
unitary and continuous in t through the identity, which selects one of the
two possible lifts canonically and sidesteps kernel-formula caustics.  The
closed-form Moebius action on Gaussian parameters serves as an independent
oracle for the lift.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .quantum import GridSpec, State, gaussian_window, heisenberg
from .symplectic import SymplecticMatrix, coords_of, standard_J

__all__ = [
    "QuantizedHamiltonian",
    "Propagator",
    "position_operator",
    "momentum_operator",
    "quantize_quadratic",
    "metaplectic_lift",
    "covariance_defect",
    "gaussian_mobius",
    "lift_continuity_constant",
]

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-9

_PROBE_SEED = 20260314
_PROBE_COUNT = 8
_PROBE_SPREAD = 0.4


def position_operator(g: GridSpec) -> np.ndarray:
    """Multiplication by the grid coordinate (dense diagonal)."""
    return np.diag(g.xs().astype(complex))


def momentum_operator(g: GridSpec) -> np.ndarray:
    """FFT-conjugated multiplication by the signed discrete momenta."""
    eye = np.eye(g.N, dtype=complex)
    return np.fft.ifft(g.momenta()[:, None] * np.fft.fft(eye, axis=0), axis=0)


def quantize_quadratic(M, g: GridSpec) -> "QuantizedHamiltonian":
    """Symmetric (Weyl) quantization of H(z) = (1/2) M z . z for n = 1.

    Returns H_op = (1/2)(m11 X^2 + m12 (XP + PX) + m22 P^2); the cross term is
    symmetrized so the matrix is Hermitian by construction.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError(f"M must be 2x2, got shape {M.shape}")
    if abs(M[0, 1] - M[1, 0]) > 1e-12:
        raise ValueError("M must be symmetric")
    X = position_operator(g)
    P = momentum_operator(g)
    H = 0.5 * (M[0, 0] * (X @ X) + M[1, 1] * (P @ P))
    if M[0, 1] != 0.0:
        H = H + 0.5 * M[0, 1] * (X @ P + P @ X)
    H = 0.5 * (H + H.conj().T)
    return QuantizedHamiltonian(matrix=H, M=M, grid=g)


@dataclass(frozen=True)
class QuantizedHamiltonian:
    """Dense Hermitian matrix of the quantized quadratic Hamiltonian."""

    matrix: np.ndarray
    M: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=complex)
        defect = float(np.max(np.abs(H - H.conj().T)))
        if defect > HERMITICITY_TOL:
            raise ValueError(f"quantized Hamiltonian not Hermitian: defect {defect:.3e}")
        object.__setattr__(self, "matrix", H)

    @property
    def hermiticity_defect(self) -> float:
        H = self.matrix
        return float(np.max(np.abs(H - H.conj().T)))


# Eigendecompositions are expensive (dense N x N); cache per (M, grid) under a
# single-writer lock so concurrent readers never observe a partial entry.
_eig_cache: dict = {}
_eig_lock = threading.Lock()


def _eig_factors(M: np.ndarray, g: GridSpec):
    key = (M.astype(float).tobytes(), g)
    got = _eig_cache.get(key)
    if got is not None:
        return got
    with _eig_lock:
        got = _eig_cache.get(key)
        if got is not None:
            return got
        qh = quantize_quadratic(M, g)
        evals, evecs = np.linalg.eigh(qh.matrix)
        defect = float(np.max(np.abs(evecs.conj().T @ evecs - np.eye(g.N))))
        if defect > UNITARITY_TOL:
            raise np.linalg.LinAlgError(
                f"eigenbasis not unitary within {UNITARITY_TOL}: defect {defect:.3e}"
            )
        _eig_cache[key] = (evals, evecs)
        return _eig_cache[key]


class Propagator:
    """Unitary U_t = exp(-i t H_op / hbar) held in eigenfactor form.

    ``apply`` costs two dense matrix-vector products; the full matrix is
    materialized lazily on first access.  t = 0 is the exact identity, which
    keeps zero-time deformation experiments bitwise trivial.
    """

    def __init__(self, evals: np.ndarray, evecs: np.ndarray, t: float, M: np.ndarray,
                 grid: GridSpec):
        self._evals = evals
        self._evecs = evecs
        self.t = float(t)
        self.M = M
        self.grid = grid
        self._matrix = None

    @property
    def phases(self) -> np.ndarray:
        return np.exp(-1j * self.t * self._evals / self.grid.hbar)

    @property
    def U(self) -> np.ndarray:
        if self._matrix is None:
            if self.t == 0.0:
                self._matrix = np.eye(self.grid.N, dtype=complex)
            else:
                V = self._evecs
                self._matrix = (V * self.phases) @ V.conj().T
        return self._matrix

    def apply(self, psi: State) -> State:
        if self.t == 0.0:
            return State(psi.values)
        V = self._evecs
        return State(V @ (self.phases * (V.conj().T @ psi.values)))

    def inverse(self) -> "Propagator":
        return Propagator(self._evals, self._evecs, -self.t, self.M, self.grid)

    def unitarity_defect(self) -> float:
        U = self.U
        return float(np.max(np.abs(U.conj().T @ U - np.eye(self.grid.N))))


def metaplectic_lift(M, t: float, g: GridSpec) -> Propagator:
    """Lift of the flow exp(t J M) through the identity at t = 0.

    The Hermitian eigendecomposition of the quantized generator is computed
    once per (M, grid) and reused across t, so sweeps over time are cheap.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2) or abs(M[0, 1] - M[1, 0]) > 1e-12:
        raise ValueError("M must be a symmetric 2x2 matrix")
    evals, evecs = _eig_factors(M, g)
    return Propagator(evals, evecs, t, M, g)


def _probe_states(g: GridSpec, rng: np.random.Generator) -> list[State]:
    base = gaussian_window(1j, g)
    probes = []
    for _ in range(_PROBE_COUNT):
        w = rng.uniform(-_PROBE_SPREAD, _PROBE_SPREAD, size=2)
        probes.append(heisenberg(w, base, g))
    return probes


def covariance_defect(M, t: float, z, g: GridSpec) -> float:
    """Deviation of the discrete model from exact symplectic covariance.

    Returns max over a fixed seeded family of concentrated probe states of
    ||U_t T(z) U_t^{-1} psi - T(S_t z) psi|| / ||psi||.  Small values certify
    that conjugating a phase-space translation by the lift matches the
    translated flow image on the grid in use.  Probes and therefore results
    are deterministic.
    """
    zc = coords_of(z)
    qlim = (g.N / 4) * g.dx
    plim = (g.N / 4) * g.dp
    if abs(zc[0]) > qlim or abs(zc[1]) > plim:
        warnings.warn(
            f"z={zc.tolist()} outside the reliable box |q|<={qlim:g}, |p|<={plim:g}; "
            "defect may be resolution-limited",
            stacklevel=2,
        )
    M = np.asarray(M, dtype=float)
    J = standard_J(1)
    St = expm(float(t) * (J @ M))
    U = metaplectic_lift(M, t, g)
    Uinv = U.inverse()
    rng = np.random.default_rng(_PROBE_SEED)
    worst = 0.0
    for psi in _probe_states(g, rng):
        lhs = U.apply(heisenberg(zc, Uinv.apply(psi), g))
        rhs = heisenberg(St @ zc, psi, g)
        dev = float(np.linalg.norm(lhs.values - rhs.values))
        ref = float(np.linalg.norm(psi.values))
        worst = max(worst, dev / ref)
    return worst


def gaussian_mobius(Gamma: complex, S) -> complex:
    """Action of a 2x2 symplectic matrix on the Gaussian parameter.

    For S = [[a, b], [c, d]] the evolved parameter is (c + d*Gamma)/(a +
    b*Gamma); the upper half-plane Im > 0 is preserved.  This is the
    closed-form counterpart of applying the lift to a Gaussian window and is
    used as an independent oracle for it.
    """
    Gamma = complex(Gamma)
    if not (Gamma.imag > 0.0):
        raise ValueError(f"requires Im(Gamma) > 0, got {Gamma!r}")
    Smat = S.S if isinstance(S, SymplecticMatrix) else np.asarray(S, dtype=float)
    if Smat.shape != (2, 2):
        raise ValueError(f"S must be 2x2, got shape {Smat.shape}")
    a, b = Smat[0, 0], Smat[0, 1]
    c, d = Smat[1, 0], Smat[1, 1]
    denom = a + b * Gamma
    if abs(denom) <= 1e-12 * (abs(a) + abs(b * Gamma) + 1e-300):
        raise ValueError(f"degenerate caustic: a + b*Gamma = {denom!r}")
    out = (c + d * Gamma) / denom
    if not (out.imag > 0.0):
        raise ValueError(f"Moebius image left the upper half-plane: {out!r}")
    return out


def lift_continuity_constant(M, t_grid, g: GridSpec) -> float:
    """Measured C with ||U_{t_{k+1}} - U_{t_k}||_2 <= C * dt over the grid."""
    ts = np.asarray(t_grid, dtype=float)
    if ts.size < 2:
        return 0.0
    mats = [metaplectic_lift(M, t, g).U for t in ts]
    best = 0.0
    for k in range(len(mats) - 1):
        dt = ts[k + 1] - ts[k]
        step = float(np.linalg.norm(mats[k + 1] - mats[k], ord=2))
        best = max(best, step / dt)
    return best
