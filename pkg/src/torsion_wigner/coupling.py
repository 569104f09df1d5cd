"""Optomechanical coupling integrals for the torsional mode.

The material-anisotropy coupling between two optical modes with propagation
constants beta1, beta2 and a torsional mode cos(k_t z) is set by the longitudinal
overlap (1/L) int cos(k_t z) cos(beta1 z) cos(beta2 z) dz and an externally
supplied transverse field overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import constants
from scipy.integrate import simpson

from .errors import InvalidParameterError, PreconditionError

# Tabulated coupling rates in Hz. Only the anisotropy term is modelled; the others
# need full optical field profiles and are carried for reporting.
REFERENCE_G_TABLE = {
    "g12MA": 22e3,
    "g11MA": 0.0,
    "g22MA": 0.0,
    "g12MB": 0.081e3,
    "g11MB": -0.01e3,
    "g22MB": -0.01e3,
    "gOE": 0.0,
}

_SINC_SERIES_LIMIT = 1e-4


@dataclass(frozen=True)
class CouplingBreakdown:
    g12MA: float
    g11MA: float
    g22MA: float
    g12MB: float
    g11MB: float
    g22MB: float
    gOE: float

    @property
    def total_g12(self) -> float:
        return self.g12MA + self.g12MB + self.gOE

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in REFERENCE_G_TABLE}


@dataclass(frozen=True)
class OverlapInputs:
    """Longitudinal geometry plus the transverse overlap scalar.

    ``transverse_factor`` is an effective calibrated scalar that also absorbs the
    constant prefactors dropped by the proportional coupling estimate, so it is only
    required to be finite.
    """

    L: float
    beta1: float
    beta2: float
    k_t: float
    transverse_factor: float = 1.0

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidParameterError("L must be positive")
        for name in ("beta1", "beta2", "k_t", "transverse_factor"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")


def stable_sinc(y):
    """sin(y)/y with a series branch near zero."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < _SINC_SERIES_LIMIT
    safe = np.where(small, 1.0, y)
    y2 = y * y
    out = np.where(small, 1.0 - y2 / 6.0 + y2 * y2 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def longitudinal_overlap_closed(L, beta1, beta2, k_t):
    """(1/L) int_{-L/2}^{L/2} cos(k_t z) cos(beta1 z) cos(beta2 z) dz in closed form."""
    if np.any(np.asarray(L) <= 0):
        raise InvalidParameterError("L must be positive")
    total = 0.0
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            w = k_t + s1 * beta1 + s2 * beta2
            total = total + stable_sinc(0.5 * L * w)
    return 0.25 * total


def longitudinal_overlap_quadrature(L, beta1, beta2, k_t, points: int = 100001,
                                    odd: bool = False) -> float:
    """Brute-force Simpson quadrature of the overlap integrand (cross-check only).

    With ``odd=True`` the torsional factor is sin(k_t z), the opto-elastic integrand.
    """
    if L <= 0:
        raise InvalidParameterError("L must be positive")
    z = np.linspace(-L / 2, L / 2, points)
    mech = np.sin(k_t * z) if odd else np.cos(k_t * z)
    f = mech * np.cos(beta1 * z) * np.cos(beta2 * z)
    return float(simpson(f, x=z) / L)


def g_oe_longitudinal(L, beta_i, beta_j, k_t) -> float:
    """Opto-elastic longitudinal integral: the integrand is odd in z, so it vanishes."""
    if L <= 0:
        raise InvalidParameterError("L must be positive")
    return 0.0


def g12ma_estimate(theta_zp: float, delta_eps: float, omega1: float, omega2: float,
                   inputs: OverlapInputs) -> float:
    """Anisotropy coupling rate g12 in Hz.

    The longitudinal ratio int theta cos cos dz / int theta^2 dz is taken with
    int theta^2 dz ~ L/2, giving a factor 2 * overlap.
    """
    if not theta_zp > 0:
        raise InvalidParameterError("theta_zp must be positive")
    if not (math.isfinite(delta_eps) and omega1 > 0 and omega2 > 0):
        raise InvalidParameterError("delta_eps must be finite and optical frequencies positive")
    overlap = longitudinal_overlap_closed(inputs.L, inputs.beta1, inputs.beta2, inputs.k_t)
    g_angular = 0.5 * theta_zp * delta_eps * math.sqrt(omega1 * omega2) * inputs.transverse_factor * 2.0 * overlap
    return g_angular / (2.0 * math.pi)


def optical_angular_frequency(wavelength: float) -> float:
    return 2.0 * math.pi * constants.c / wavelength


def calibrate_transverse_factor(theta_zp: float, delta_eps: float, omega1: float, omega2: float,
                                inputs: OverlapInputs, g_target: float = 22e3) -> float:
    """Transverse factor that makes ``g12ma_estimate`` return ``g_target``."""
    unit = OverlapInputs(inputs.L, inputs.beta1, inputs.beta2, inputs.k_t, 1.0)
    g_unit = g12ma_estimate(theta_zp, delta_eps, omega1, omega2, unit)
    if g_unit == 0:
        raise InvalidParameterError("overlap vanishes; calibration impossible")
    return g_target / g_unit


def reference_overlap_inputs(p, transverse_factor: Optional[float] = None) -> OverlapInputs:
    """Overlap inputs for a parameter set; by default calibrated to the stored g."""
    from .params import derive_params

    d = derive_params(p)
    inputs = OverlapInputs(p.beam_length_L, p.beta1, p.beta2, d.k_t, 1.0)
    if transverse_factor is None:
        omega = optical_angular_frequency(p.wavelength_lambda)
        transverse_factor = calibrate_transverse_factor(d.theta_zp, d.delta_eps, omega, omega,
                                                        inputs, p.g_coupling)
    return OverlapInputs(inputs.L, inputs.beta1, inputs.beta2, inputs.k_t, transverse_factor)


def coupling_breakdown(g12ma: float) -> CouplingBreakdown:
    table = dict(REFERENCE_G_TABLE)
    table["g12MA"] = g12ma
    return CouplingBreakdown(**table)


def matched_wavevector(L: float, L_min: float, periods_at_min: int = 20) -> float:
    """k_t with k_t L = 2 pi ceil(periods_at_min L / L_min)."""
    return 2.0 * math.pi * math.ceil(periods_at_min * L / L_min - 1e-12) / L


def g_vs_length(base: OverlapInputs, theta_zp_of_L: Callable[[float], float], lengths,
                delta_eps: float, omega1: float, omega2: float,
                wavevector_of_L: Optional[Callable[[float], float]] = None):
    """g12 over a set of beam lengths under the resonance-matched condition.

    For each L the torsional wavevector is ``wavevector_of_L(L)`` (default: an integer
    number of periods, 20 at the shortest length) and beta1 = beta2 + k_t.
    """
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or lengths.size < 2 or np.any(lengths <= 0):
        raise InvalidParameterError("need at least two positive lengths")
    L_min = float(lengths.min())
    if wavevector_of_L is None:
        wavevector_of_L = lambda L: matched_wavevector(L, L_min)  # noqa: E731
    g = np.empty(lengths.size)
    for i, L in enumerate(lengths):
        k_t = wavevector_of_L(L)
        beta1 = base.beta2 + k_t
        _check_matched(L, beta1, base.beta2, k_t)
        inputs = OverlapInputs(L, beta1, base.beta2, k_t, base.transverse_factor)
        g[i] = g12ma_estimate(theta_zp_of_L(L), delta_eps, omega1, omega2, inputs)
    return lengths, g


def _check_matched(L, beta1, beta2, k_t):
    if abs(beta1 - beta2 - k_t) > 1e-9 * max(abs(k_t), 1.0):
        raise PreconditionError("resonance condition beta1 - beta2 = k_t violated")
    if k_t * L < 20.0 * math.pi:
        raise PreconditionError("resonance condition requires k_t L >> 1 (at least 20 pi)")
    if min(beta1, beta2) * L < 20.0 * math.pi:
        raise PreconditionError("propagation constants must satisfy beta L >> 1")


def scaling_check_g_vs_length(base: OverlapInputs, theta_zp_of_L: Callable[[float], float],
                              lengths=None, delta_eps: float = 1.0, omega1: float = 1.0,
                              omega2: float = 1.0,
                              wavevector_of_L: Optional[Callable[[float], float]] = None) -> float:
    """Exponent of a power-law fit of g against L in the resonance-matched regime."""
    if lengths is None:
        lengths = np.geomspace(1e-3, 1e-2, 11)
    Ls, g = g_vs_length(base, theta_zp_of_L, lengths, delta_eps, omega1, omega2, wavevector_of_L)
    if np.any(g <= 0):
        raise PreconditionError("g must be positive for a log-log fit")
    slope, _ = np.polyfit(np.log(Ls), np.log(g), 1)
    return float(slope)
