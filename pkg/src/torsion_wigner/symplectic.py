"""Linear quadrature maps: beam splitter, pulsed optomechanical interaction, rotation.

Two-mode objects use the ordering (x_L, p_L, theta_M, L_M). A map M acts on
quadrature operators as r -> M r, so Wigner functions pull back as
W_out(r) = W_in(M^{-1} r); |det M| = 1 so no Jacobian appears.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CoverageError, InvalidParameterError, InvalidStateError
from .phase_space import NORM_TOL, GaussianState, GridWigner, symplectic_form

SYMPLECTIC_TOL = 1e-12


@dataclass(frozen=True)
class SymplecticMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise InvalidParameterError("symplectic matrix must be square with even size")
        if not np.all(np.isfinite(m)):
            raise InvalidParameterError("matrix entries must be finite")
        omega = symplectic_form(m.shape[0] // 2)
        scale = max(1.0, float(np.max(np.abs(m))) ** 2)
        if np.max(np.abs(m.T @ omega @ m - omega)) > SYMPLECTIC_TOL * scale:
            raise InvalidParameterError("matrix is not symplectic")
        if abs(np.linalg.det(m) - 1.0) > SYMPLECTIC_TOL * scale:
            raise InvalidParameterError("symplectic matrix must have unit determinant")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def inverse(self) -> np.ndarray:
        """M^{-1} = -Omega M^T Omega, exact for symplectic M."""
        omega = symplectic_form(self.n_modes)
        return -omega @ self.matrix.T @ omega

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(self.matrix @ other.matrix)

    def to_json(self) -> str:
        return json.dumps({"n_modes": self.n_modes, "matrix": self.matrix.tolist()})


def identity(n_modes: int) -> SymplecticMatrix:
    return SymplecticMatrix(np.eye(2 * n_modes))


def beam_splitter(T_tap: float) -> SymplecticMatrix:
    """x1' = sqrt(T) x1 + sqrt(1-T) x2, x2' = -sqrt(1-T) x1 + sqrt(T) x2 (same for p)."""
    if not (0.0 <= T_tap <= 1.0):
        raise InvalidParameterError(f"transmittance must lie in [0, 1], got {T_tap}")
    t = math.sqrt(T_tap)
    r = math.sqrt(1.0 - T_tap)
    return SymplecticMatrix(np.array([
        [t, 0, r, 0],
        [0, t, 0, r],
        [-r, 0, t, 0],
        [0, -r, 0, t],
    ], dtype=float))


def om_interaction(chi: float) -> SymplecticMatrix:
    """Pulsed interaction: p_L' = p_L - chi theta, L_M' = L_M - chi x_L."""
    if not math.isfinite(chi):
        raise InvalidParameterError("chi must be finite")
    return SymplecticMatrix(np.array([
        [1, 0, 0, 0],
        [0, 1, -chi, 0],
        [0, 0, 1, 0],
        [-chi, 0, 0, 1],
    ], dtype=float))


def phase_rotation(angle: float, mode_index: int = 0, n_modes: int = 1) -> SymplecticMatrix:
    """Rotation [[cos, sin], [-sin, cos]] on one mode; a quarter turn maps (x, p) to (p, -x)."""
    if n_modes < 1 or not (0 <= mode_index < n_modes):
        raise InvalidParameterError(f"mode index {mode_index} out of range for {n_modes} modes")
    m = np.eye(2 * n_modes)
    c, s = math.cos(angle), math.sin(angle)
    i = 2 * mode_index
    m[i:i + 2, i:i + 2] = [[c, s], [-s, c]]
    return SymplecticMatrix(m)


def single_mode_squeeze(r: float) -> SymplecticMatrix:
    """diag(e^r, e^-r): stretches x and compresses p."""
    return SymplecticMatrix(np.diag([math.exp(r), math.exp(-r)]))


def apply_gaussian(M: SymplecticMatrix, s: GaussianState) -> GaussianState:
    if M.matrix.shape[0] != s.mean.size:
        raise InvalidParameterError("map and state dimensions differ")
    return GaussianState(M.matrix @ s.mean, M.matrix @ s.cov @ M.matrix.T)


def _clipped_mass(m: np.ndarray, w: GridWigner, x_axis, p_axis) -> float:
    """|W| mass of source cells whose image lands outside the target box."""
    XS, PS = np.meshgrid(w.x_axis, w.p_axis, indexing="ij")
    xi = m[0, 0] * XS + m[0, 1] * PS
    pi = m[1, 0] * XS + m[1, 1] * PS
    hx = 0.5 * (x_axis[1] - x_axis[0])
    hp = 0.5 * (p_axis[1] - p_axis[0])
    outside = (xi < x_axis[0] - hx) | (xi > x_axis[-1] + hx) | (pi < p_axis[0] - hp) | (pi > p_axis[-1] + hp)
    return float(np.abs(w.values[outside]).sum() * w.cell)


def apply_grid(M: SymplecticMatrix, w: GridWigner, x_axis=None, p_axis=None) -> GridWigner:
    """Pull a single-mode grid state back through M onto (by default) the same grid.

    If the state carries its exact function the pullback is exact; otherwise the
    source samples are resampled by bicubic spline with zero extension.
    """
    if M.n_modes != 1:
        raise InvalidParameterError("apply_grid needs a single-mode map")
    if x_axis is None:
        x_axis = w.x_axis
    if p_axis is None:
        p_axis = w.p_axis
    if np.array_equal(M.matrix, np.eye(2)) and np.array_equal(x_axis, w.x_axis) \
            and np.array_equal(p_axis, w.p_axis):
        return w
    minv = M.inverse()
    X, P = np.meshgrid(x_axis, p_axis, indexing="ij")
    X0 = minv[0, 0] * X + minv[0, 1] * P
    P0 = minv[1, 0] * X + minv[1, 1] * P
    if w.function is not None:
        f = w.function
        func = lambda x, p: f(minv[0, 0] * x + minv[0, 1] * p, minv[1, 0] * x + minv[1, 1] * p)  # noqa: E731
        values = f(X0, P0)
    else:
        func = None
        values = w.interpolate(X0, P0, method="cubic")
    out = GridWigner(x_axis, p_axis, values, normalized=False, function=func,
                     provenance=w.provenance)
    if not w.normalized:
        return out
    clipped = _clipped_mass(M.matrix, w, x_axis, p_axis)
    if clipped > NORM_TOL:
        raise CoverageError(f"pullback clips {clipped:.3g} of the norm")
    if func is not None:
        return replace(out, normalized=True)
    return out.normalize()


def transform(M: SymplecticMatrix, state):
    """Apply M to a Gaussian state exactly or to a grid state by pullback."""
    if isinstance(state, GaussianState):
        return apply_gaussian(M, state)
    if isinstance(state, GridWigner):
        return apply_grid(M, state)
    raise InvalidStateError(f"unsupported state type {type(state).__name__}")
