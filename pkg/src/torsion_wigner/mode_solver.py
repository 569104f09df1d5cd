"""Torsional mode functions of a clamped beam.

Uniform beams have closed-form cosine/sine modes. Beams with a varying polar
moment I_p(z) are solved numerically from the Sturm-Liouville form
(I_p theta')' + k^2 I_p theta = 0 with theta(+-L/2) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import InvalidParameterError, InvalidProfileError, NoSuchModeError, NumericalError

DEFAULT_POINTS = 513


@dataclass(frozen=True)
class TorsionalMode:
    """Sampled mode function theta(z) on z in [-L/2, L/2], normalized to max|theta| = 1.

    ``analytic`` is "cos" or "sin" when theta(z) is exactly cos(k z) or sin(k z),
    otherwise None. ``parity`` is None for modes of asymmetric profiles.
    """

    mode_index: int
    parity: Optional[str]
    wavevector: float
    frequency: Optional[float]
    z: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    analytic: Optional[str] = None

    @property
    def length(self) -> float:
        return float(self.z[-1] - self.z[0])

    def evaluate(self, z):
        """Mode value at arbitrary z (exact for analytic modes, linear interpolation otherwise)."""
        z = np.asarray(z, dtype=float)
        if self.analytic == "cos":
            return np.cos(self.wavevector * z)
        if self.analytic == "sin":
            return np.sin(self.wavevector * z)
        return np.interp(z, self.z, self.theta)


@dataclass(frozen=True)
class CrossSectionProfile:
    """Polar moment of area I_p sampled on a uniform grid over [-L/2, L/2]."""

    z: np.ndarray
    polar_moment: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        ip = np.asarray(self.polar_moment, dtype=float)
        if z.ndim != 1 or z.shape != ip.shape or z.size < 3:
            raise InvalidProfileError("z and polar_moment must be 1D arrays of equal length >= 3")
        if not np.all(np.isfinite(ip)) or np.any(ip <= 0):
            raise InvalidProfileError("polar moment must be positive everywhere")
        dz = np.diff(z)
        if np.any(dz <= 0):
            raise InvalidProfileError("grid must be strictly increasing")
        if np.max(np.abs(dz - dz.mean())) > 1e-9 * dz.mean():
            raise InvalidProfileError("grid spacing must be uniform")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "polar_moment", ip)

    @property
    def length(self) -> float:
        return float(self.z[-1] - self.z[0])

    @classmethod
    def uniform(cls, length: float, polar_moment: float, points: int = DEFAULT_POINTS):
        z = np.linspace(-length / 2, length / 2, points)
        return cls(z, np.full(points, float(polar_moment)))


def _symmetric_grid(length: float, points: int) -> np.ndarray:
    # Mirror the left half so z[i] == -z[-1-i] holds exactly.
    z = np.linspace(-length / 2, length / 2, points)
    half = points // 2
    z[points - half:] = -z[:half][::-1]
    if points % 2:
        z[half] = 0.0
    return z


def _check_length(length: float):
    if not (length > 0 and math.isfinite(length)):
        raise InvalidParameterError(f"length must be positive, got {length}")


def uniform_beam_mode(length: float, c_t: float, n: int, parity: str = "even",
                      points: int = DEFAULT_POINTS) -> TorsionalMode:
    """Clamped-clamped mode of a uniform beam.

    Even modes are cos(k z) with k = 2 pi (n + 1/2) / L, odd modes are sin(k z)
    with k = 2 pi n / L (n >= 1).
    """
    _check_length(length)
    if not c_t > 0:
        raise InvalidParameterError("c_t must be positive")
    if n < 0:
        raise InvalidParameterError("mode index must be non-negative")
    z = _symmetric_grid(length, points)
    if parity == "even":
        k = 2 * math.pi * (n + 0.5) / length
        theta = np.cos(k * z)
        tag = "cos"
    elif parity == "odd":
        if n == 0:
            raise NoSuchModeError("odd mode with n = 0 vanishes identically")
        k = 2 * math.pi * n / length
        theta = np.sin(k * z)
        tag = "sin"
    else:
        raise InvalidParameterError(f"parity must be 'even' or 'odd', got {parity!r}")
    # Endpoints are exact zeros of the analytic mode.
    theta[0] = theta[-1] = 0.0
    theta = theta / np.max(np.abs(theta))
    return TorsionalMode(n, parity, k, c_t * k, z, theta, tag)


def cosine_mode(length: float, wavevector: float, c_t: Optional[float] = None,
                points: int = DEFAULT_POINTS) -> TorsionalMode:
    """theta(z) = cos(k z) for an arbitrary wavevector (no boundary condition imposed).

    Used for the drive-frequency mode whose wavevector is Omega / c_t.
    """
    _check_length(length)
    z = _symmetric_grid(length, points)
    theta = np.cos(wavevector * z)
    peak = np.max(np.abs(theta))
    if peak != 1.0:
        raise InvalidParameterError("cosine mode must contain z = 0 so that max|theta| = 1")
    freq = None if c_t is None else c_t * wavevector
    return TorsionalMode(0, "even", float(wavevector), freq, z, theta, "cos")


def webster_eigenmodes(profile: CrossSectionProfile, c_t: float, count: int = 1) -> list[TorsionalMode]:
    """Lowest ``count`` clamped modes of a beam with varying cross-section.

    The conservative central-difference scheme
    -(I_{i+1/2}(t_{i+1}-t_i) - I_{i-1/2}(t_i-t_{i-1}))/h^2 = k^2 I_i t_i
    is second-order accurate and symmetrizes to a tridiagonal eigenproblem.
    """
    if not c_t > 0:
        raise InvalidParameterError("c_t must be positive")
    if count < 1:
        raise InvalidParameterError("count must be >= 1")
    z, ip = profile.z, profile.polar_moment
    if z.size < 64:
        raise InvalidProfileError("profile grid needs at least 64 points")
    n_int = z.size - 2
    if count > n_int:
        raise InvalidParameterError("count exceeds the number of interior grid points")
    h = (z[-1] - z[0]) / (z.size - 1)
    i_half = 0.5 * (ip[1:] + ip[:-1])  # I at midpoints, length N-1
    diag = (i_half[:-1] + i_half[1:]) / h**2
    off = -i_half[1:-1] / h**2
    s = 1.0 / np.sqrt(ip[1:-1])
    d_sym = diag * s * s
    e_sym = off * s[:-1] * s[1:]
    try:
        k2, vecs = eigh_tridiagonal(d_sym, e_sym, select="i", select_range=(0, count - 1))
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    if np.any(k2 <= 0):
        raise NumericalError("non-positive eigenvalue in a clamped Sturm-Liouville problem")
    symmetric = np.allclose(ip, ip[::-1], rtol=1e-12, atol=0)
    modes = []
    for i in range(count):
        theta = np.zeros(z.size)
        theta[1:-1] = vecs[:, i] * s
        j = np.argmax(np.abs(theta))
        theta /= theta[j]
        parity = None
        if symmetric:
            parity = "even" if np.allclose(theta, theta[::-1], atol=1e-8) else "odd"
        k = math.sqrt(k2[i])
        modes.append(TorsionalMode(i, parity, k, c_t * k, z.copy(), theta, None))
    return modes


def mode_square_integral(mode: TorsionalMode) -> float:
    """Integral of theta(z)^2 over the beam by composite Simpson quadrature."""
    return float(simpson(mode.theta**2, x=mode.z))


def analytic_mode_square_integral(mode: TorsionalMode) -> float:
    """Closed-form integral of theta^2 for analytic modes."""
    L, k = mode.length, mode.wavevector
    if mode.analytic is None:
        raise InvalidParameterError("mode has no analytic form")
    if k == 0:
        return L if mode.analytic == "cos" else 0.0
    sign = 1.0 if mode.analytic == "cos" else -1.0
    return L / 2 + sign * math.sin(k * L) / (2 * k)


def load_profile_csv(path) -> CrossSectionProfile:
    """Read a two-column (z, I_p) CSV file; a non-numeric header row is allowed."""
    data = _read_two_columns(path)
    return CrossSectionProfile(data[:, 0], data[:, 1])


def save_mode_csv(mode: TorsionalMode, path) -> None:
    arr = np.column_stack([mode.z, mode.theta])
    np.savetxt(path, arr, delimiter=",", header="z,theta", comments="", fmt="%.17g")


def load_mode_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = _read_two_columns(path)
    return data[:, 0], data[:, 1]


def _read_two_columns(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.split(",")]
        skip = 0
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if data.shape[1] != 2:
        raise InvalidProfileError("expected exactly two CSV columns")
    return data
