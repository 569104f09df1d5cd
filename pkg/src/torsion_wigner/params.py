"""Physical constants of the torsional optomechanical system and derived quantities."""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from scipy import constants

from .errors import InvalidParameterError, UnreachableTargetError

HBAR = 1.054571817e-34  # J s, rounded to the digits the reference values were computed with
K_B = constants.k

# Tabulated torsional wavevector, kept only to report its mismatch with Omega/c_t.
TABULATED_K_T = 100.0 * math.pi

TIMESCALE_FACTOR = 5.0


@dataclass(frozen=True)
class PhysicalParams:
    """Geometry, material, optical and mechanical constants in SI units.

    The permittivities are relative permittivities (squares of refractive indices).
    ``g_coupling`` is the single-photon coupling rate in Hz, ``pulse_photon_number``
    the photon count of the drive pulse and ``inertia_multiplier`` the factor that
    accounts for the support structure in the effective moment of inertia.
    """

    beam_width_a: float
    beam_length_L: float
    mass_density_rho: float
    torsion_freq_Omega: float
    torsion_velocity_ct: float
    mech_quality_Qm: float
    cavity_kappa: float
    wavelength_lambda: float
    optical_quality_Qo: float
    eps_xx: float
    eps_yy: float
    eps_zz: float
    beta1: float
    beta2: float
    pulse_bandwidth_inv_tau: float
    g_coupling: float = 22e3
    pulse_photon_number: float = 6.45e7
    inertia_multiplier: float = 10.0

    def __post_init__(self):
        positive = (
            "beam_width_a", "beam_length_L", "mass_density_rho", "torsion_freq_Omega",
            "torsion_velocity_ct", "mech_quality_Qm", "cavity_kappa", "wavelength_lambda",
            "optical_quality_Qo", "eps_xx", "eps_yy", "eps_zz", "beta1", "beta2",
            "pulse_bandwidth_inv_tau", "inertia_multiplier",
        )
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("g_coupling", "pulse_photon_number"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise InvalidParameterError(f"{name} must be non-negative, got {value!r}")
        if self.eps_xx < self.eps_yy:
            raise InvalidParameterError("eps_xx must be >= eps_yy (non-negative anisotropy)")

    @property
    def delta_eps(self) -> float:
        return self.eps_xx - self.eps_yy

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidParameterError(f"unknown parameter key: {unknown[0]}")
        missing = [f.name for f in dataclasses.fields(cls)
                   if f.default is dataclasses.MISSING and f.name not in data]
        if missing:
            raise InvalidParameterError(f"missing parameter key: {missing[0]}")
        values = {}
        for k, v in data.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidParameterError(f"parameter {k} must be a number, got {v!r}")
            values[k] = float(v)
        return cls(**values)


@dataclass(frozen=True)
class DerivedParams:
    k_t: float
    I_eff: float
    theta_zp: float
    delta_eps: float
    g_coupling: float
    chi: float
    mode_square_integral: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_params(path) -> PhysicalParams:
    """Read a JSON parameter file (SI units)."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidParameterError("parameter file must hold a JSON object")
    return PhysicalParams.from_dict(data)


def save_params(p: PhysicalParams, path) -> None:
    Path(path).write_text(json.dumps(p.to_dict(), indent=2) + "\n", encoding="utf-8")


def reference_params_path() -> Path:
    return Path(str(resources.files("torsion_wigner") / "data" / "reference_params.json"))


def reference_params() -> PhysicalParams:
    """The bundled reference parameter set (quartz beam, 1550 nm cavity)."""
    return load_params(reference_params_path())


def derive_wavevector(p: PhysicalParams) -> float:
    if not p.torsion_velocity_ct > 0:
        raise InvalidParameterError("torsion velocity must be positive")
    if not p.torsion_freq_Omega > 0:
        raise InvalidParameterError("torsion frequency must be positive")
    return p.torsion_freq_Omega / p.torsion_velocity_ct


def effective_moment_of_inertia(p: PhysicalParams, mode_sq_integral: float,
                                multiplier: float | None = None) -> float:
    """Effective moment of inertia (kg m^2) of a square beam from its mode-square integral."""
    L = p.beam_length_L
    if not (0 < mode_sq_integral <= L * (1 + 1e-12)):
        raise InvalidParameterError(f"mode-square integral must lie in (0, L], got {mode_sq_integral}")
    mult = p.inertia_multiplier if multiplier is None else multiplier
    return mult / 6.0 * p.mass_density_rho * p.beam_width_a**4 * mode_sq_integral


def zero_point_angle(I_eff: float, Omega: float) -> float:
    if not (I_eff > 0 and Omega > 0):
        raise InvalidParameterError("I_eff and Omega must be positive")
    return math.sqrt(HBAR / (2.0 * I_eff * Omega))


def zero_point_angle_at_length(p: PhysicalParams, L: float, k_t: float) -> float:
    """theta_zp of a beam of length L whose mode is cos(k_t z), all else as in ``p``."""
    from .mode_solver import cosine_mode, mode_square_integral

    q = dataclasses.replace(p, beam_length_L=L)
    sq = mode_square_integral(cosine_mode(L, k_t, c_t=p.torsion_velocity_ct))
    return zero_point_angle(effective_moment_of_inertia(q, sq), p.torsion_freq_Omega)


def coupling_coefficient_chi(g: float, kappa: float, N_in: float) -> float:
    """Pulsed coupling strength from g in Hz, kappa in rad/s and the pulse photon count."""
    if not kappa > 0:
        raise InvalidParameterError("kappa must be positive")
    if g < 0 or N_in < 0:
        raise InvalidParameterError("g and N_in must be non-negative")
    return 8.0 * g * math.sqrt(N_in) / kappa


def photon_threshold(g: float, kappa: float, chi_target: float) -> float:
    """Smallest pulse photon number that reaches ``chi_target``."""
    if not kappa > 0 or not chi_target > 0 or g < 0:
        raise InvalidParameterError("need kappa > 0, chi_target > 0 and g >= 0")
    if g == 0:
        raise UnreachableTargetError("no photon number reaches a finite chi when g = 0")
    return (chi_target * kappa / (8.0 * g)) ** 2


def thermal_occupation(Omega: float, temperature: float) -> float:
    """Bose occupation of a mode at angular frequency Omega."""
    if not Omega > 0:
        raise InvalidParameterError("Omega must be positive")
    if temperature < 0:
        raise InvalidParameterError("temperature must be non-negative")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * Omega / (K_B * temperature))


def check_timescales(p: PhysicalParams, factor: float = TIMESCALE_FACTOR) -> bool:
    """Check Omega << 1/tau << kappa with each ratio above ``factor``; warn if not."""
    ok = (p.pulse_bandwidth_inv_tau > factor * p.torsion_freq_Omega
          and p.cavity_kappa > factor * p.pulse_bandwidth_inv_tau)
    if not ok:
        warnings.warn("timescale ordering Omega << 1/tau << kappa is violated", RuntimeWarning,
                      stacklevel=2)
    return ok


def derive_params(p: PhysicalParams) -> DerivedParams:
    """Compute k_t, I_eff (from the actual cosine mode), theta_zp and chi."""
    from .mode_solver import cosine_mode, mode_square_integral

    k_t = derive_wavevector(p)
    mode = cosine_mode(p.beam_length_L, k_t, c_t=p.torsion_velocity_ct)
    sq = mode_square_integral(mode)
    I_eff = effective_moment_of_inertia(p, sq)
    theta_zp = zero_point_angle(I_eff, p.torsion_freq_Omega)
    chi = coupling_coefficient_chi(p.g_coupling, p.cavity_kappa, p.pulse_photon_number)
    return DerivedParams(k_t=k_t, I_eff=I_eff, theta_zp=theta_zp, delta_eps=p.delta_eps,
                         g_coupling=p.g_coupling, chi=chi, mode_square_integral=sq)


def wavevector_discrepancy(p: PhysicalParams) -> dict:
    """Compare Omega/c_t with the tabulated torsional wavevector."""
    k_t = derive_wavevector(p)
    return {"k_t_computed": k_t, "k_t_tabulated": TABULATED_K_T,
            "ratio": k_t / TABULATED_K_T}
