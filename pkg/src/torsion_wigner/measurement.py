"""Measurement back-action in phase space.

A two-mode product state W_A x W_B is sent through a symplectic map M and mode B
(or A) is measured with a POVM whose Wigner function is W_Pi. The conditional
state of the other mode is

    W'(r_keep) ~ int d^2 r_meas  W_A(r0_A) W_B(r0_B) W_Pi(r_meas),   r0 = M^{-1} r,

evaluated per output grid point with tensor Gauss-Legendre quadrature. The joint
four-dimensional Wigner function is never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import (
    CoverageError,
    ImpossibleOutcomeError,
    InvalidParameterError,
    InvalidStateError,
    NumericalError,
)
from .phase_space import (
    OVERLAP_FACTOR,
    GaussianState,
    GridWigner,
    default_axes,
    laguerre,
    save_grid,
)
from .symplectic import SymplecticMatrix

DEFAULT_HOMODYNE_SIGMA = 0.05
DEFAULT_NODES = 64
MAX_NODES = 1024
CONVERGENCE_TOL = 1e-5
COVERAGE_TOL = 1e-6
_WORK_ELEMENTS = 2_000_000
_CHECK_POINTS = 400


@dataclass(frozen=True)
class PovmWigner:
    """Wigner function of one POVM element.

    ``trace_factor`` converts int W_rho W_Pi into the outcome probability (density):
    4 pi for operators normalized like states, 1 for the homodyne ridge.
    """

    kind: str
    evaluator: Callable
    trace_factor: float
    m: int = 0
    eta: float = 1.0
    phi: float = 0.0
    outcome: float = 0.0
    sigma: float = 0.0
    radius: float = math.inf

    def __call__(self, x, p):
        return self.evaluator(x, p)


def povm_photon_number(m: int, eta: float = 1.0) -> PovmWigner:
    """m-photon detection with efficiency eta:
    W = (-1)^m eta^m / (2 pi (2 - eta)^{m+1}) L_m(u/(2 - eta)) exp(-eta u / (2 (2 - eta))), u = x^2 + p^2.
    """
    if m < 0 or int(m) != m:
        raise InvalidParameterError("photon count must be a non-negative integer")
    if not (0.0 < eta <= 1.0):
        raise InvalidParameterError(f"efficiency must lie in (0, 1], got {eta}")
    m = int(m)
    d = 2.0 - eta
    pref = (-1.0) ** m * eta**m / (2.0 * math.pi * d ** (m + 1))
    rate = eta / (2.0 * d)

    def w(x, p):
        u = np.asarray(x, dtype=float) ** 2 + np.asarray(p, dtype=float) ** 2
        return pref * laguerre(m, u / d) * np.exp(-rate * u)

    return PovmWigner("photon_number", w, OVERLAP_FACTOR, m=m, eta=eta,
                      radius=_radial_support(w))


def _radial_support(w: Callable, rel: float = 1e-15) -> float:
    r = np.linspace(0.0, 200.0, 20001)
    vals = np.abs(w(r, 0.0))
    peak = vals.max()
    above = np.nonzero(vals > rel * peak)[0]
    return float(r[min(above[-1] + 1, r.size - 1)])


def povm_homodyne(phi: float, outcome: float = 0.0, sigma: float = DEFAULT_HOMODYNE_SIGMA) -> PovmWigner:
    """Homodyne detection of q = x cos(phi) + p sin(phi) with result ``outcome``.

    For sigma > 0 the delta ridge is a normalized Gaussian of width sigma; sigma = 0
    keeps the exact delta, which the conditioning integral handles as a line integral.
    """
    if not (sigma >= 0 and math.isfinite(sigma)):
        raise InvalidParameterError("homodyne width must be non-negative")
    c, s = math.cos(phi), math.sin(phi)
    if sigma > 0:
        norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)

        def w(x, p):
            q = c * np.asarray(x, dtype=float) + s * np.asarray(p, dtype=float) - outcome
            return norm * np.exp(-0.5 * (q / sigma) ** 2)
    else:
        def w(x, p):
            raise InvalidParameterError("the exact homodyne delta has no pointwise values")

    return PovmWigner("homodyne", w, 1.0, phi=float(phi), outcome=float(outcome), sigma=float(sigma))


@dataclass(frozen=True)
class ConditionalResult:
    state: GridWigner
    success_weight: float
    nodes: tuple = ()

    def __post_init__(self):
        if not self.state.normalized:
            raise InvalidStateError("conditional state must be normalized")
        if not self.success_weight >= 0:
            raise InvalidStateError("success weight must be non-negative")

    def save(self, path, extra: Optional[dict] = None):
        meta = {"success_weight": self.success_weight}
        if extra:
            meta.update(extra)
        return save_grid(self.state, path, meta)


# ---------------------------------------------------------------- state helpers


def _evaluator(state) -> Callable:
    if isinstance(state, (GaussianState, GridWigner)):
        if isinstance(state, GaussianState) and state.n_modes != 1:
            raise InvalidStateError("product conditioning needs single-mode factors")
        return state.evaluate
    raise InvalidStateError(f"unsupported state type {type(state).__name__}")


def state_box(state):
    """(xmin, xmax, pmin, pmax) containing the state's support."""
    if isinstance(state, GaussianState):
        return state.extent()
    if isinstance(state, GridWigner):
        return state.extent()
    raise InvalidStateError(f"unsupported state type {type(state).__name__}")


def _image_range(row: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Range of row . r over the box lo <= r <= hi."""
    a = row * lo
    b = row * hi
    return float(np.minimum(a, b).sum()), float(np.maximum(a, b).sum())


def _gl(n: int, lo: float, hi: float):
    t, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), w * half


# ---------------------------------------------------------------- conditioning engine


class _Integrand:
    """Evaluates int over the measured mode for a batch of output points."""

    def __init__(self, w_A, w_B, M: SymplecticMatrix, povm: PovmWigner, measured: int):
        if M.n_modes != 2:
            raise InvalidParameterError("conditioning needs a two-mode map")
        if measured not in (0, 1):
            raise InvalidParameterError("measured mode must be 0 or 1")
        self.fa = _evaluator(w_A)
        self.fb = _evaluator(w_B)
        self.povm = povm
        minv = M.inverse()
        keep = [0, 1] if measured == 1 else [2, 3]
        meas = [2, 3] if measured == 1 else [0, 1]
        self.minv_keep = minv[:, keep]
        self.minv_meas = minv[:, meas]
        self.measured = measured
        lo = np.empty(4)
        hi = np.empty(4)
        lo[0], hi[0], lo[1], hi[1] = state_box(w_A)
        lo[2], hi[2], lo[3], hi[3] = state_box(w_B)
        self.lo, self.hi = lo, hi
        self.M = M.matrix
        self.meas_idx = meas
        self.gaussian = None
        if isinstance(w_A, GaussianState) and isinstance(w_B, GaussianState):
            joint = w_A.tensor(w_B)
            prec = np.linalg.inv(joint.cov)
            norm = 1.0 / ((2.0 * math.pi) ** 2 * math.sqrt(np.linalg.det(joint.cov)))
            self.gaussian = (joint.mean, prec, norm)

    def domain(self):
        """Integration rectangle in the measured mode's (u, v) coordinates and the map to (x, p)."""
        povm = self.povm
        rows = self.M[self.meas_idx]
        if povm.kind == "homodyne":
            c, s = math.cos(povm.phi), math.sin(povm.phi)
            # u = q (measured quadrature), v = t (conjugate direction)
            to_xp = np.array([[c, -s], [s, c]])
            t_row = -s * rows[0] + c * rows[1]
            t_lo, t_hi = _image_range(t_row, self.lo, self.hi)
            if povm.sigma > 0:
                q_lo, q_hi = povm.outcome - 8 * povm.sigma, povm.outcome + 8 * povm.sigma
            else:
                q_lo = q_hi = povm.outcome
            return (q_lo, q_hi), (t_lo, t_hi), to_xp
        x_lo, x_hi = _image_range(rows[0], self.lo, self.hi)
        p_lo, p_hi = _image_range(rows[1], self.lo, self.hi)
        R = povm.radius
        x_lo, x_hi = max(x_lo, -R), min(x_hi, R)
        p_lo, p_hi = max(p_lo, -R), min(p_hi, R)
        if x_lo >= x_hi or p_lo >= p_hi:
            raise ImpossibleOutcomeError("POVM support does not meet the state support")
        return (x_lo, x_hi), (p_lo, p_hi), np.eye(2)

    def nodes(self, nu: int, nv: int):
        (u_lo, u_hi), (v_lo, v_hi), to_xp = self.domain()
        if u_lo == u_hi:
            u, wu = np.array([u_lo]), np.array([1.0])
            delta = True
        else:
            u, wu = _gl(nu, u_lo, u_hi)
            delta = False
        v, wv = _gl(nv, v_lo, v_hi)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.column_stack([U.ravel(), V.ravel()]) @ to_xp.T
        weights = np.outer(wu, wv).ravel()
        if delta:
            povm_vals = np.ones(weights.size)
        else:
            povm_vals = self.povm(pts[:, 0], pts[:, 1])
        return pts, weights * povm_vals

    def integrate(self, out_pts: np.ndarray, nu: int, nv: int) -> np.ndarray:
        nodes, wts = self.nodes(nu, nv)
        base_meas = nodes @ self.minv_meas.T  # (Q, 4)
        if self.gaussian is not None:
            return self._integrate_gaussian(out_pts, base_meas, wts)
        res = np.empty(out_pts.shape[0])
        step = max(1, _WORK_ELEMENTS // max(nodes.shape[0], 1))
        for start in range(0, out_pts.shape[0], step):
            chunk = out_pts[start:start + step]
            r0 = (chunk @ self.minv_keep.T)[:, None, :] + base_meas[None, :, :]
            vals = self.fa(r0[..., 0], r0[..., 1]) * self.fb(r0[..., 2], r0[..., 3])
            res[start:start + step] = vals @ wts
        return res

    def _integrate_gaussian(self, out_pts, base_meas, wts):
        # Product of two Gaussians: one quadratic form in the pulled-back 4-vector.
        mean, prec, norm = self.gaussian
        b = base_meas
        bq = b @ prec
        node_quad = 0.5 * np.einsum("ij,ij->i", bq, b)
        node_term = wts * norm
        res = np.empty(out_pts.shape[0])
        step = max(1, _WORK_ELEMENTS // max(b.shape[0], 1))
        for start in range(0, out_pts.shape[0], step):
            a = out_pts[start:start + step] @ self.minv_keep.T - mean
            aq = a @ prec
            own = np.einsum("ij,ij->i", aq, a)
            # full quadratic form in one exponent so no partial factor can overflow
            expo = -0.5 * own[:, None] - aq @ b.T - node_quad[None, :]
            res[start:start + step] = np.exp(expo) @ node_term
        return res


def _check_subset(n_points: int) -> np.ndarray:
    if n_points <= _CHECK_POINTS:
        return np.arange(n_points)
    return np.unique(np.linspace(0, n_points - 1, _CHECK_POINTS).round().astype(int))


def _converged_nodes(integrand: _Integrand, pts: np.ndarray, nodes: int, max_nodes: int, tol: float):
    """Smallest (nu, nv) for which doubling either axis changes the result by <= tol (relative to peak)."""
    sub = pts[_check_subset(pts.shape[0])]
    (u_lo, u_hi), _, _ = integrand.domain()
    delta = u_lo == u_hi
    nu, nv = (1 if delta else nodes), nodes
    base = integrand.integrate(sub, nu, nv)
    while True:
        scale = max(np.max(np.abs(base)), 1e-300)
        grow_v = integrand.integrate(sub, nu, 2 * nv)
        err_v = np.max(np.abs(grow_v - base)) / scale
        err_u = 0.0
        if not delta:
            grow_u = integrand.integrate(sub, 2 * nu, nv)
            err_u = np.max(np.abs(grow_u - base)) / scale
        if err_u <= tol and err_v <= tol:
            return nu, nv
        if err_v > tol:
            nv *= 2
        if err_u > tol:
            nu *= 2
        if max(nu, nv) > max_nodes:
            raise NumericalError(f"quadrature did not converge with {max_nodes} nodes per axis "
                                 f"(change {max(err_u, err_v):.3g})")
        base = integrand.integrate(sub, nu, nv)


def condition_product_state(w_A, w_B, M: SymplecticMatrix, povm: PovmWigner, x_axis=None,
                            p_axis=None, measured: int = 1, nodes: int = DEFAULT_NODES,
                            max_nodes: int = MAX_NODES, tol: float = CONVERGENCE_TOL) -> ConditionalResult:
    """Measure one mode of (w_A x w_B) after M and return the other mode's conditional state.

    ``success_weight`` is the outcome probability (photon counting) or probability
    density per unit quadrature (homodyne).
    """
    if x_axis is None or p_axis is None:
        x_axis, p_axis = default_axes()
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    integrand = _Integrand(w_A, w_B, M, povm, measured)
    X, P = np.meshgrid(x_axis, p_axis, indexing="ij")
    pts = np.column_stack([X.ravel(), P.ravel()])
    nu, nv = _converged_nodes(integrand, pts, nodes, max_nodes, tol)
    values = integrand.integrate(pts, nu, nv).reshape(X.shape)
    return _finish(values, x_axis, p_axis, povm.trace_factor, f"conditioned {povm.kind}", (nu, nv))


def _finish(values, x_axis, p_axis, trace_factor, provenance, nodes=()) -> ConditionalResult:
    if not np.all(np.isfinite(values)):
        raise NumericalError("conditioning produced non-finite values")
    raw = GridWigner(x_axis, p_axis, values, normalized=False, provenance=provenance)
    total = raw.total()
    if not total > 0:
        raise ImpossibleOutcomeError("conditional state has non-positive weight "
                                     "(outcome impossible or grid too coarse for the state)")
    peak = np.max(np.abs(values))
    edge = max(np.abs(values[0]).max(), np.abs(values[-1]).max(), np.abs(values[:, 0]).max(),
               np.abs(values[:, -1]).max())
    if edge > COVERAGE_TOL * peak:
        raise CoverageError(f"conditional state reaches the grid edge ({edge / peak:.3g} of peak)")
    state = replace(raw, values=values / total, normalized=True)
    return ConditionalResult(state, trace_factor * total, nodes)


def outcome_probability(w_A, w_B, M: SymplecticMatrix, povm: PovmWigner, **kw) -> float:
    return condition_product_state(w_A, w_B, M, povm, **kw).success_weight


def condition_gaussian_homodyne(state: GaussianState, measured: int, phi: float,
                                outcome: float = 0.0) -> tuple[GaussianState, float]:
    """Exact homodyne conditioning of a two-mode Gaussian state.

    Returns the other mode's Gaussian state and the outcome probability density.
    """
    if state.n_modes != 2 or measured not in (0, 1):
        raise InvalidParameterError("need a two-mode state and measured mode 0 or 1")
    keep = [0, 1] if measured == 1 else [2, 3]
    meas = [2, 3] if measured == 1 else [0, 1]
    u = np.zeros(4)
    u[meas[0]], u[meas[1]] = math.cos(phi), math.sin(phi)
    var_q = float(u @ state.cov @ u)
    mean_q = float(u @ state.mean)
    c = state.cov[keep] @ u
    mean = state.mean[keep] + c * (outcome - mean_q) / var_q
    cov = state.cov[np.ix_(keep, keep)] - np.outer(c, c) / var_q
    density = math.exp(-0.5 * (outcome - mean_q) ** 2 / var_q) / math.sqrt(2 * math.pi * var_q)
    return GaussianState(mean, cov), density
