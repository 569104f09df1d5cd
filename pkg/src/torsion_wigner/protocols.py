"""End-to-end procedures: measurement-based squeezing, optical cat preparation
by generalized photon subtraction, and transfer of the optical state onto the
torsional mode, plus the closed-form reference states for that transfer.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .errors import ImpossibleOutcomeError, InvalidParameterError, InvalidStateError, NumericalError
from .measurement import (
    ConditionalResult,
    _finish,
    _gl,
    condition_gaussian_homodyne,
    condition_product_state,
    povm_photon_number,
    state_box,
)
from .phase_space import (
    GaussianState,
    GridWigner,
    default_axes,
    grid_from_function,
    make_squeezed,
    make_squeezed_thermal,
    make_vacuum,
    symmetric_axis,
)
from .symplectic import apply_gaussian, beam_splitter, om_interaction, phase_rotation

GPS_SPAN = 18.0
GPS_POINTS = 241
PREP_POINTS = 401
PREP_NODES = 64
PREP_OUTCOME_NODES = 16
PREP_MAX_NODES = 1024
PREP_TOL = 1e-9
REFERENCE_TEMPERATURE = 0.1  # K


# ---------------------------------------------------------------- single-pulse squeezing


@dataclass(frozen=True)
class SqueezeReport:
    """Mechanical state after one pulse and a p_L = 0 homodyne record.

    Variances are in the unit-vacuum convention. ``var_theta_leading`` is the
    strong-measurement limit 1/chi^2 and ``n_eff_asymptotic`` the large-n_bar
    estimate sqrt(n_bar / (2 chi^2)).
    """

    var_theta_out: float
    var_L_out: float
    n_eff: float
    chi: float
    n_bar: float
    var_theta_leading: float
    n_eff_asymptotic: float

    def __post_init__(self):
        if self.var_theta_out * self.var_L_out < 1.0 - 1e-9:
            raise InvalidStateError("squeezed state violates the uncertainty bound")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_squeeze_inputs(n_bar: float, chi: float):
    if not (n_bar >= 0 and math.isfinite(n_bar)):
        raise InvalidParameterError("thermal occupation must be finite and non-negative")
    if not math.isfinite(chi):
        raise InvalidParameterError("chi must be finite")
    if chi == 0:
        raise InvalidParameterError("chi = 0 gives no measurement and no squeezing")


def single_pulse_squeeze(n_bar: float, chi: float) -> SqueezeReport:
    """Closed-form conditional variances for a thermal torsional mode.

    With V = 2 n_bar + 1, measuring p_L' = p_L - chi theta leaves
    var(theta) = V / (1 + chi^2 V) and var(L) = V + chi^2.
    """
    _check_squeeze_inputs(n_bar, chi)
    V = 2.0 * n_bar + 1.0
    c2 = chi * chi
    var_theta = V / (1.0 + c2 * V)
    var_L = V + c2
    return SqueezeReport(
        var_theta_out=var_theta,
        var_L_out=var_L,
        n_eff=max(0.5 * math.sqrt(var_theta * var_L) - 0.5, 0.0),
        chi=float(chi),
        n_bar=float(n_bar),
        var_theta_leading=1.0 / c2,
        n_eff_asymptotic=math.sqrt(n_bar / (2.0 * c2)),
    )


def squeeze_by_conditioning(n_bar: float, chi: float, outcome: float = 0.0):
    """Same pulse through the explicit Gaussian pipeline.

    Vacuum light and a thermal mechanical mode pass through the interaction map,
    then p_L is measured exactly. Returns (mechanical state, outcome density).
    """
    _check_squeeze_inputs(n_bar, chi)
    V = 2.0 * n_bar + 1.0
    joint = make_vacuum(1).tensor(make_squeezed_thermal(V, V))
    after = apply_gaussian(om_interaction(chi), joint)
    return condition_gaussian_homodyne(after, measured=0, phi=math.pi / 2, outcome=outcome)


def report_from_state(state: GaussianState, n_bar: float, chi: float) -> SqueezeReport:
    vt, vl = float(state.cov[0, 0]), float(state.cov[1, 1])
    return SqueezeReport(vt, vl, max(0.5 * math.sqrt(np.linalg.det(state.cov)) - 0.5, 0.0),
                         float(chi), float(n_bar), 1.0 / chi**2, math.sqrt(n_bar / (2.0 * chi**2)))


# ---------------------------------------------------------------- optical cat


@dataclass(frozen=True)
class CatPrepConfig:
    """Settings for cat preparation and transfer.

    ``T_tap = None`` selects ``optimal_tap(r1)``. ``V_theta`` and ``V_L`` are the
    cooled mechanical variances before the quarter-period rotation.
    """

    r1: float = 1.15
    r2: float = -1.15
    T_tap: Optional[float] = None
    m: int = 1
    eta: float = 1.0
    chi: float = 1.0
    V_theta: float = 0.2
    V_L: float = 2000.0
    homodyne_outcome_p: float = 0.0

    def __post_init__(self):
        for name in ("r1", "r2", "eta", "chi", "V_theta", "V_L", "homodyne_outcome_p"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.T_tap is not None and not (0.0 <= self.T_tap <= 1.0):
            raise InvalidParameterError(f"T_tap must lie in [0, 1], got {self.T_tap}")
        if self.m < 0 or int(self.m) != self.m:
            raise InvalidParameterError("m must be a non-negative integer")
        if not (0.0 < self.eta <= 1.0):
            raise InvalidParameterError("eta must lie in (0, 1]")
        if not (self.V_theta > 0 and self.V_L > 0) or self.V_theta * self.V_L < 1.0 - 1e-12:
            raise InvalidParameterError("mechanical variances violate the uncertainty bound")

    @property
    def transmittance(self) -> float:
        return optimal_tap(self.r1) if self.T_tap is None else float(self.T_tap)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["T_tap"] = self.transmittance
        return d


def optimal_tap(r1: float) -> float:
    """(e^{2 r1} - 1) / (e^{2 r1} - e^{-2 r1}), written as expm1(2 r1) / (2 sinh(2 r1))."""
    if not (r1 > 0 and math.isfinite(r1)):
        raise InvalidParameterError("r1 must be positive and finite")
    if r1 > 300:
        return 1.0
    return math.expm1(2 * r1) / (2.0 * math.sinh(2 * r1))


def gps_optical_cat(cfg: CatPrepConfig, x_axis=None, p_axis=None, **quadrature) -> ConditionalResult:
    """Squeezed(r1) x squeezed(r2) on a beam splitter, m photons detected on the second port."""
    if x_axis is None or p_axis is None:
        x_axis, p_axis = default_axes(GPS_SPAN, GPS_POINTS)
    return condition_product_state(
        make_squeezed(cfg.r1), make_squeezed(cfg.r2), beam_splitter(cfg.transmittance),
        povm_photon_number(cfg.m, cfg.eta), x_axis, p_axis, measured=1, **quadrature)


# ---------------------------------------------------------------- transfer to mechanics


def rotated_mechanics(V_theta: float, V_L: float) -> GaussianState:
    """Cooled state diag(V_theta, V_L) after a quarter period: diag(V_L, V_theta)."""
    return apply_gaussian(phase_rotation(math.pi / 2), make_squeezed_thermal(V_theta, V_L))


def _optical_evaluator(state):
    if isinstance(state, GaussianState):
        if state.n_modes != 1:
            raise InvalidStateError("optical input must be single-mode")
        return state.evaluate
    if isinstance(state, GridWigner):
        if state.function is not None:
            return state.function
        return state.cubic_evaluator()
    raise InvalidStateError(f"unsupported state type {type(state).__name__}")


def _prep_axes(opt_box, mech_box, chi, outcome, points):
    ox0, ox1, op0, op1 = opt_box
    mt0, mt1, ml0, ml1 = mech_box
    t0, t1 = mt0, mt1
    if chi != 0:
        a, b = (op0 - outcome) / chi, (op1 - outcome) / chi
        t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
    l_lo = ml0 - max(chi * ox0, chi * ox1)
    l_hi = ml1 - min(chi * ox0, chi * ox1)
    span_t = max(abs(t0), abs(t1))
    span_l = max(abs(l_lo), abs(l_hi))
    return symmetric_axis(span_t, points), symmetric_axis(span_l, points)


class _Transfer:
    """W(theta, L) = int dx W_opt(x, p + chi theta) W_mech(theta, L + chi x) for one outcome p."""

    def __init__(self, optical_in, mechanical: GaussianState, chi: float, outcome: float,
                 sigma: float):
        self.f_opt = _optical_evaluator(optical_in)
        self.f_mech = mechanical.evaluate
        self.chi = chi
        self.outcome = outcome
        self.sigma = sigma
        self.opt_box = state_box(optical_in)
        self.mech_box = mechanical.extent()

    def _x_limits(self, L):
        ox0, ox1 = self.opt_box[0], self.opt_box[1]
        lo = np.full(L.shape, ox0)
        hi = np.full(L.shape, ox1)
        if self.chi != 0:
            _, _, ml0, ml1 = self.mech_box
            a, b = (ml0 - L) / self.chi, (ml1 - L) / self.chi
            lo = np.maximum(lo, np.minimum(a, b))
            hi = np.minimum(hi, np.maximum(a, b))
        return lo, np.maximum(hi, lo)

    def _p_nodes(self, n):
        if self.sigma == 0:
            return np.array([self.outcome]), np.array([1.0])
        q, w = _gl(n, self.outcome - 8 * self.sigma, self.outcome + 8 * self.sigma)
        dens = np.exp(-0.5 * ((q - self.outcome) / self.sigma) ** 2) / (math.sqrt(2 * math.pi) * self.sigma)
        return q, w * dens

    def integrate(self, theta, L, n, n_p, absolute=False):
        lo, hi = self._x_limits(L)
        t, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (hi - lo)
        X = lo[:, None] + half[:, None] * (t + 1.0)[None, :]
        W = half[:, None] * w[None, :]
        mech = self.f_mech(theta[:, None], L[:, None] + self.chi * X)
        qs, qw = self._p_nodes(n_p)
        total = np.zeros(theta.size)
        for q, wq in zip(qs, qw):
            opt = self.f_opt(X, q + self.chi * theta[:, None])
            vals = opt * mech * W
            total += wq * np.sum(np.abs(vals) if absolute else vals, axis=1)
        return total


def _converge_transfer(tr: _Transfer, theta, L, nodes, max_nodes, tol):
    idx = np.unique(np.linspace(0, theta.size - 1, min(theta.size, 400)).round().astype(int))
    th, ll = theta[idx], L[idx]
    n, n_p = nodes, (1 if tr.sigma == 0 else PREP_OUTCOME_NODES)
    base = tr.integrate(th, ll, n, n_p)
    if np.max(np.abs(base)) <= 1e-12 * np.max(tr.integrate(th, ll, n, n_p, absolute=True)):
        raise ImpossibleOutcomeError("homodyne outcome has vanishing probability for this input")
    while True:
        scale = max(np.max(np.abs(base)), 1e-300)
        err_x = np.max(np.abs(tr.integrate(th, ll, 2 * n, n_p) - base)) / scale
        err_p = 0.0 if tr.sigma == 0 else np.max(np.abs(tr.integrate(th, ll, n, 2 * n_p) - base)) / scale
        if err_x <= tol and err_p <= tol:
            return n, n_p
        if err_x > tol:
            n *= 2
        if err_p > tol:
            n_p *= 2
        if max(n, n_p) > max_nodes:
            raise NumericalError(f"transfer quadrature did not converge with {max_nodes} nodes")
        base = tr.integrate(th, ll, n, n_p)


def mechanical_state_prep(optical_in, cfg: CatPrepConfig, mechanical: Optional[GaussianState] = None,
                          theta_axis=None, L_axis=None, homodyne_sigma: float = 0.0,
                          nodes: int = PREP_NODES, max_nodes: int = PREP_MAX_NODES,
                          tol: float = PREP_TOL, points: int = PREP_POINTS) -> ConditionalResult:
    """Swap an optical state onto the torsional mode with a second pulse and p_L homodyne.

    ``mechanical`` defaults to ``rotated_mechanics(cfg.V_theta, cfg.V_L)``; a state
    passed explicitly is used as given. ``homodyne_sigma = 0`` conditions on the
    exact outcome; a positive width averages outcomes with a Gaussian window.
    The success weight is the outcome probability density.
    """
    if mechanical is None:
        mechanical = rotated_mechanics(cfg.V_theta, cfg.V_L)
    if mechanical.n_modes != 1:
        raise InvalidStateError("mechanical input must be single-mode")
    if not (homodyne_sigma >= 0 and math.isfinite(homodyne_sigma)):
        raise InvalidParameterError("homodyne width must be non-negative")
    chi, p_out = float(cfg.chi), float(cfg.homodyne_outcome_p)
    tr = _Transfer(optical_in, mechanical, chi, p_out, float(homodyne_sigma))
    if theta_axis is None or L_axis is None:
        theta_axis, L_axis = _prep_axes(tr.opt_box, tr.mech_box, chi, p_out, points)
    theta_axis = np.asarray(theta_axis, dtype=float)
    L_axis = np.asarray(L_axis, dtype=float)
    TH, LL = np.meshgrid(theta_axis, L_axis, indexing="ij")
    th, ll = TH.ravel(), LL.ravel()
    n, n_p = _converge_transfer(tr, th, ll, nodes, max_nodes, tol)
    values = np.empty(th.size)
    step = max(1, 2_000_000 // (n * n_p))
    for s in range(0, th.size, step):
        values[s:s + step] = tr.integrate(th[s:s + step], ll[s:s + step], n, n_p)
    return _finish(values.reshape(TH.shape), theta_axis, L_axis, 1.0,
                   f"mechanical transfer chi={chi} p={p_out}", (n, n_p))


# ---------------------------------------------------------------- closed-form references


def _check_variances(V_theta, V_L):
    if not (V_theta > 0 and V_L > 0 and math.isfinite(V_theta) and math.isfinite(V_L)):
        raise InvalidParameterError("variances must be positive and finite")


def sfock_function(V_theta: float, V_L: float):
    """Unnormalized transferred single-photon state."""
    _check_variances(V_theta, V_L)
    s = 1.0 + V_theta

    def w(theta, L):
        theta = np.asarray(theta, dtype=float)
        L = np.asarray(L, dtype=float)
        env = np.exp(-0.5 * (1.0 + 1.0 / V_L) * theta**2 - 0.5 * L**2 / s)
        return env * (s * theta**2 + L**2 / s - 1.0)

    return w


def scat_function(V_theta: float, V_L: float, alpha: float, cat_axis: str = "p"):
    """Unnormalized transferred even cat.

    ``cat_axis = "p"`` is the cat whose components lie along the optical p axis,
    which maps onto fringes along L; ``"x"`` is the cat along optical x.
    """
    _check_variances(V_theta, V_L)
    if alpha < 0:
        raise InvalidParameterError("alpha must be non-negative")
    if cat_axis not in ("p", "x"):
        raise InvalidParameterError("cat_axis must be 'p' or 'x'")
    s = 1.0 + V_theta
    damp = math.exp(-2.0 * alpha**2 / s)

    def w(theta, L):
        theta = np.asarray(theta, dtype=float)
        L = np.asarray(L, dtype=float)
        env = np.exp(-0.5 * (1.0 + 1.0 / V_L) * theta**2 - 0.5 * L**2 / s)
        if cat_axis == "p":
            return env * (np.cos(2 * alpha * L / s) + damp * np.cosh(2 * alpha * theta))
        return env * (np.cos(2 * alpha * theta) + damp * np.cosh(2 * alpha * L / s))

    return w


def _reference_grid(func, theta_axis, L_axis, label):
    if theta_axis is None or L_axis is None:
        theta_axis, L_axis = default_axes()
    return grid_from_function(func, theta_axis, L_axis, provenance=label, normalize=True)


def closed_form_sfock(V_theta: float, V_L: float, theta_axis=None, L_axis=None) -> GridWigner:
    return _reference_grid(sfock_function(V_theta, V_L), theta_axis, L_axis,
                           f"transferred fock V_theta={V_theta} V_L={V_L}")


def closed_form_scat(V_theta: float, V_L: float, alpha: float, theta_axis=None, L_axis=None,
                     cat_axis: str = "p") -> GridWigner:
    return _reference_grid(scat_function(V_theta, V_L, alpha, cat_axis), theta_axis, L_axis,
                           f"transferred cat alpha={alpha} V_theta={V_theta} V_L={V_L}")


# ---------------------------------------------------------------- two pulses


@dataclass(frozen=True)
class TwoPulseResult:
    final: ConditionalResult
    cooling: SqueezeReport
    cooling_state: GaussianState
    rotated_state: GaussianState
    optical: ConditionalResult
    weights: dict

    @property
    def success_weight(self) -> float:
        return self.final.success_weight


def two_pulse_protocol(cfg: CatPrepConfig, n_bar: Optional[float] = None, params=None,
                       temperature: float = REFERENCE_TEMPERATURE, chi_cooling: Optional[float] = None,
                       override_variances: bool = False, theta_axis=None, L_axis=None,
                       optical_axes=None, points: int = PREP_POINTS) -> TwoPulseResult:
    """Cool and squeeze, rotate a quarter period, then transfer a GPS optical cat.

    ``n_bar`` defaults to the Bose occupation at ``temperature`` for the torsional
    frequency in ``params`` (reference set if omitted). With ``override_variances``
    the second pulse uses (cfg.V_theta, cfg.V_L) instead of the cooled state.
    """
    if n_bar is None:
        from .params import reference_params, thermal_occupation

        p = params if params is not None else reference_params()
        n_bar = thermal_occupation(p.torsion_freq_Omega, temperature)
    chi1 = cfg.chi if chi_cooling is None else chi_cooling
    cooled, density1 = squeeze_by_conditioning(n_bar, chi1)
    report = report_from_state(cooled, n_bar, chi1)
    if override_variances:
        rotated = rotated_mechanics(cfg.V_theta, cfg.V_L)
    else:
        rotated = apply_gaussian(phase_rotation(math.pi / 2), cooled)
    ox, op = (None, None) if optical_axes is None else optical_axes
    optical = gps_optical_cat(cfg, ox, op)
    final = mechanical_state_prep(optical.state, cfg, mechanical=rotated,
                                  theta_axis=theta_axis, L_axis=L_axis, points=points)
    weights = {"cooling": density1, "optical": optical.success_weight,
               "transfer": final.success_weight,
               "product": density1 * optical.success_weight * final.success_weight}
    final = replace(final, success_weight=weights["product"])
    return TwoPulseResult(final, report, cooled, rotated, optical, weights)
