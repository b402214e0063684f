"""Discretized 1-D state space with a Planck parameter: periodized grids,
phase-space translation (Heisenberg) operators, and Gaussian windows.

The phase-space translation by z = (q, p) acts as

    (T(z) psi)(x) = exp{(i/hbar)(p x - p q / 2)} psi(x - q)

with the symmetric half-phase convention; the composition law
T(z0) T(z1) = exp{(i/2 hbar) sigma(z0, z1)} T(z0 + z1) is verified numerically
by the test suite, which pins the sign convention of the symplectic product.
Translations by arbitrary real q are realized as FFT-based fractional circular
shifts, which are exactly unitary on the discrete model.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .symplectic import coords_of

__all__ = [
    "GridSpec",
    "State",
    "inner",
    "norm",
    "heisenberg",
    "gaussian_window",
    "save_state",
    "load_state",
]

HBAR_GABOR = 1.0 / (2.0 * math.pi)


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid x_k = x_min + k*dx, k = 0..N-1, with Planck parameter.

    N must be a power of two (>= 16).  The implied spatial period is
    L = N*dx and the momentum lattice spacing is dp = 2*pi*hbar/L.  The
    choice hbar = 1/(2*pi) recovers standard Gabor frame conventions.
    """

    N: int
    x_min: float
    dx: float
    hbar: float

    def __post_init__(self):
        if self.N < 16 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if not (self.dx > 0.0):
            raise ValueError(f"dx must be positive, got {self.dx!r}")
        if not (self.hbar > 0.0):
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")

    @classmethod
    def centered(cls, N: int = 1024, L: float = 16.0, hbar: float = HBAR_GABOR) -> "GridSpec":
        """Grid centered on the origin: x_min = -L/2, dx = L/N."""
        return cls(N=N, x_min=-L / 2.0, dx=L / N, hbar=hbar)

    @property
    def L(self) -> float:
        return self.N * self.dx

    @property
    def dp(self) -> float:
        return 2.0 * math.pi * self.hbar / self.L

    def xs(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.N)

    def momenta(self) -> np.ndarray:
        """Momentum samples hbar * 2*pi * f in signed FFT ordering."""
        return 2.0 * math.pi * self.hbar * np.fft.fftfreq(self.N, d=self.dx)


@dataclass(frozen=True)
class State:
    """Complex N-vector of samples psi(x_k); entries must be finite."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True)
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"state must be a nonempty 1-D vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("state contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def _check_grid(a: State, g: GridSpec):
    if len(a) != g.N:
        raise ValueError(f"state length {len(a)} does not match grid N={g.N}")


def inner(a: State, b: State, g: GridSpec) -> complex:
    """Riemann-sum pairing sum_k conj(a_k) b_k dx, conjugate-linear in the
    first slot (physics convention)."""
    _check_grid(a, g)
    _check_grid(b, g)
    return complex(np.vdot(a.values, b.values) * g.dx)


def norm(a: State, g: GridSpec) -> float:
    return math.sqrt(abs(inner(a, a, g).real))


def _fractional_shift(values: np.ndarray, q: float, g: GridSpec) -> np.ndarray:
    """Circular shift psi(x) -> psi(x - q) via the band-limited interpolant."""
    freqs = np.fft.fftfreq(g.N, d=g.dx)
    return np.fft.ifft(np.fft.fft(values) * np.exp(-2j * math.pi * freqs * q))


def heisenberg(z, psi: State, g: GridSpec) -> State:
    """Apply the phase-space translation T(z) for z = (q, p), n = 1.

    The translation part is an FFT fractional circular shift (exact and
    unitary on the band-limited discrete model, so deformed phase-space
    points may land between grid nodes); the modulation and the symmetric
    half-phase are applied pointwise.  A wrap-around warning is emitted for
    |q| >= L/2.
    """
    zc = coords_of(z)
    if zc.size != 2:
        raise ValueError(f"heisenberg requires a 2-D phase point (n=1), got {zc.size} coords")
    if not np.all(np.isfinite(zc)):
        raise ValueError("phase point must be finite")
    _check_grid(psi, g)
    q, p = float(zc[0]), float(zc[1])
    if abs(q) > (g.L / 2.0) * (1.0 + 1e-12):
        warnings.warn(
            f"translation |q|={abs(q):g} > L/2={g.L / 2.0:g}: wrap-around regime",
            stacklevel=2,
        )
    shifted = _fractional_shift(psi.values, q, g)
    phase = np.exp(1j * (p * g.xs() - 0.5 * p * q) / g.hbar)
    return State(phase * shifted)


def gaussian_window(Gamma: complex, g: GridSpec) -> State:
    """Unit-norm samples of exp{i Gamma x^2 / (2 hbar)} for Im(Gamma) > 0.

    Gamma = i gives the standard Gaussian exp{-x^2/(2 hbar)} up to
    normalization; larger Im(Gamma) narrows the window.
    """
    Gamma = complex(Gamma)
    if not (Gamma.imag > 0.0):
        raise ValueError(f"gaussian window requires Im(Gamma) > 0, got {Gamma!r}")
    x = g.xs()
    v = np.exp(1j * Gamma * x**2 / (2.0 * g.hbar))
    nrm = math.sqrt(float(np.sum(np.abs(v) ** 2)) * g.dx)
    return State(v / nrm)


def save_state(path, psi: State, g: GridSpec) -> None:
    """Binary dump: one JSON header line with the grid, then little-endian
    float64 samples interleaved (re, im)."""
    _check_grid(psi, g)
    header = json.dumps({"N": g.N, "x_min": g.x_min, "dx": g.dx, "hbar": g.hbar})
    inter = np.empty(2 * g.N, dtype="<f8")
    inter[0::2] = psi.values.real
    inter[1::2] = psi.values.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(inter.tobytes())


def load_state(path) -> tuple[State, GridSpec]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii")
        raw = fh.read()
    meta = json.loads(header)
    g = GridSpec(N=int(meta["N"]), x_min=float(meta["x_min"]), dx=float(meta["dx"]),
                 hbar=float(meta["hbar"]))
    inter = np.frombuffer(raw, dtype="<f8")
    if inter.size != 2 * g.N:
        raise ValueError(f"payload holds {inter.size} doubles, expected {2 * g.N}")
    return State(inter[0::2] + 1j * inter[1::2]), g
