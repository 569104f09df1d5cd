"""Wigner-function representations of single- and two-mode states.

Convention: quadratures x = a + a^dag, p = i(a^dag - a), so the vacuum has unit
variance in each quadrature and W_vac = exp(-(x^2 + p^2)/2) / (2 pi). Overlaps of
pure states are Tr[rho sigma] = 4 pi int W_rho W_sigma dx dp in this convention.

Gaussian states are kept exactly as (mean, covariance). Non-Gaussian single-mode
states live on uniform grids (``GridWigner``), optionally carrying the exact
function they were sampled from so that later transforms can avoid interpolation.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator

from .errors import CoverageError, GridMismatchError, InvalidParameterError, InvalidStateError

DEFAULT_SPAN = 10.0
DEFAULT_POINTS = 401
NORM_TOL = 1e-6
OVERLAP_FACTOR = 4.0 * math.pi
EXTENT_SIGMAS = 8.0


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def default_axes(span: float = DEFAULT_SPAN, points: int = DEFAULT_POINTS):
    """Identical symmetric x and p axes on [-span, span]."""
    if span <= 0 or points < 3:
        raise InvalidParameterError("grid span must be positive and points >= 3")
    ax = symmetric_axis(span, points)
    return ax, ax.copy()


def symmetric_axis(span: float, points: int) -> np.ndarray:
    ax = np.linspace(-span, span, points)
    half = points // 2
    ax[points - half:] = -ax[:half][::-1]
    if points % 2:
        ax[half] = 0.0
    return ax


def laguerre(n: int, u):
    """Laguerre polynomial L_n(u) by the three-term recurrence."""
    u = np.asarray(u, dtype=float)
    if n < 0:
        raise InvalidParameterError("Laguerre degree must be non-negative")
    prev = np.ones_like(u)
    if n == 0:
        return prev
    cur = 1.0 - u
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - u) * cur - k * prev) / (k + 1)
    return cur


# ---------------------------------------------------------------- Gaussian states


@dataclass(frozen=True)
class GaussianState:
    """n-mode Gaussian state with quadrature ordering (x1, p1, x2, p2, ...)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size % 2 or cov.shape != (mean.size, mean.size):
            raise InvalidStateError("mean must have even length 2n and cov shape (2n, 2n)")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidStateError("mean and covariance must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise InvalidStateError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise InvalidStateError("covariance must be positive definite")
        n = mean.size // 2
        herm = cov + 1j * symplectic_form(n)
        if np.linalg.eigvalsh(herm).min() < -1e-9 * scale:
            raise InvalidStateError("covariance violates the uncertainty bound cov + i Omega >= 0")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def mode(self, k: int) -> "GaussianState":
        """Reduced state of mode k."""
        idx = slice(2 * k, 2 * k + 2)
        return GaussianState(self.mean[idx], self.cov[idx, idx])

    def tensor(self, other: "GaussianState") -> "GaussianState":
        n1, n2 = self.mean.size, other.mean.size
        cov = np.zeros((n1 + n2, n1 + n2))
        cov[:n1, :n1] = self.cov
        cov[n1:, n1:] = other.cov
        return GaussianState(np.concatenate([self.mean, other.mean]), cov)

    def evaluate(self, x, p):
        """Single-mode Wigner function at (x, p), broadcasting."""
        if self.n_modes != 1:
            raise InvalidStateError("evaluate() needs a single-mode state")
        a, b, c = _inverse_entries(self.cov)
        dx = np.asarray(x, dtype=float) - self.mean[0]
        dp = np.asarray(p, dtype=float) - self.mean[1]
        q = a * dx * dx + 2.0 * b * dx * dp + c * dp * dp
        return np.exp(-0.5 * q) / (2.0 * math.pi * math.sqrt(np.linalg.det(self.cov)))

    def extent(self, sigmas: float = EXTENT_SIGMAS):
        """Box (xmin, xmax, pmin, pmax) holding the state to ``sigmas`` standard deviations."""
        if self.n_modes != 1:
            raise InvalidStateError("extent() needs a single-mode state")
        sx, sp = np.sqrt(np.diag(self.cov))
        return (self.mean[0] - sigmas * sx, self.mean[0] + sigmas * sx,
                self.mean[1] - sigmas * sp, self.mean[1] + sigmas * sp)

    def purity(self) -> float:
        return float(1.0 / math.sqrt(np.linalg.det(self.cov)))


def _inverse_entries(cov):
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    return cov[1, 1] / det, -cov[0, 1] / det, cov[0, 0] / det


def make_vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def make_squeezed(r: float) -> GaussianState:
    """Squeezed vacuum with var(x) = e^{2r}, var(p) = e^{-2r}."""
    if not math.isfinite(r):
        raise InvalidParameterError("squeezing parameter must be finite")
    return GaussianState(np.zeros(2), np.diag([math.exp(2 * r), math.exp(-2 * r)]))


def make_squeezed_thermal(V_theta: float, V_L: float) -> GaussianState:
    """Diagonal Gaussian with the given quadrature variances (product >= 1)."""
    if not (V_theta > 0 and V_L > 0):
        raise InvalidStateError("variances must be positive")
    if V_theta * V_L < 1.0 - 1e-12:
        raise InvalidStateError(f"uncertainty violated: V_theta * V_L = {V_theta * V_L} < 1")
    return GaussianState(np.zeros(2), np.diag([float(V_theta), float(V_L)]))


def make_coherent(x0: float, p0: float) -> GaussianState:
    """Coherent state with quadrature means (x0, p0)."""
    return GaussianState(np.array([x0, p0], dtype=float), np.eye(2))


# ---------------------------------------------------------------- grid states


@dataclass(frozen=True)
class GridWigner:
    """Single-mode Wigner function sampled as values[i, j] = W(x_axis[i], p_axis[j])."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    normalized: bool = True
    function: Optional[Callable] = field(default=None, compare=False, repr=False)
    provenance: str = ""

    def __post_init__(self):
        x = np.asarray(self.x_axis, dtype=float)
        p = np.asarray(self.p_axis, dtype=float)
        v = np.asarray(self.values, dtype=float)
        for ax, name in ((x, "x"), (p, "p")):
            if ax.ndim != 1 or ax.size < 3:
                raise InvalidParameterError(f"{name} axis must be 1D with at least 3 points")
            d = np.diff(ax)
            if np.any(d <= 0) or np.max(np.abs(d - d.mean())) > 1e-9 * d.mean():
                raise InvalidParameterError(f"{name} axis must be uniform and increasing")
        if v.shape != (x.size, p.size):
            raise InvalidParameterError("values shape must be (len(x_axis), len(p_axis))")
        if not np.all(np.isfinite(v)):
            raise InvalidStateError("Wigner values must be finite")
        if self.normalized and abs(v.sum() * _step(x) * _step(p) - 1.0) > NORM_TOL:
            raise InvalidStateError("grid flagged normalized but does not integrate to 1")
        object.__setattr__(self, "x_axis", x)
        object.__setattr__(self, "p_axis", p)
        object.__setattr__(self, "values", v)

    @property
    def dx(self) -> float:
        return _step(self.x_axis)

    @property
    def dp(self) -> float:
        return _step(self.p_axis)

    @property
    def cell(self) -> float:
        return self.dx * self.dp

    def total(self) -> float:
        return float(self.values.sum() * self.cell)

    def evaluate(self, x, p):
        """W at arbitrary points: the exact function if attached, else bilinear interpolation."""
        if self.function is not None:
            return self.function(x, p)
        return self.interpolate(x, p)

    def interpolate(self, x, p, method: str = "linear"):
        """Interpolate the samples with zero extension: "linear" (bilinear) or "cubic" (bicubic spline)."""
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        shape = np.broadcast(x, p).shape
        x = np.broadcast_to(x, shape).ravel()
        p = np.broadcast_to(p, shape).ravel()
        if method == "cubic":
            return self.cubic_evaluator()(x, p).reshape(shape)
        if method != "linear":
            raise InvalidParameterError(f"unknown interpolation method {method!r}")
        interp = RegularGridInterpolator((self.x_axis, self.p_axis), self.values, method="linear",
                                         bounds_error=False, fill_value=0.0)
        return interp(np.column_stack([x, p])).reshape(shape)

    def cubic_evaluator(self) -> Callable:
        """Bicubic spline through the samples, zero outside the grid; built once per call."""
        spline = RectBivariateSpline(self.x_axis, self.p_axis, self.values, kx=3, ky=3)
        x0, x1, p0, p1 = self.x_axis[0], self.x_axis[-1], self.p_axis[0], self.p_axis[-1]

        def f(x, p):
            x = np.asarray(x, dtype=float)
            p = np.asarray(p, dtype=float)
            inside = (x >= x0) & (x <= x1) & (p >= p0) & (p <= p1)
            return np.where(inside, spline.ev(np.clip(x, x0, x1), np.clip(p, p0, p1)), 0.0)

        return f

    def samples_only(self) -> "GridWigner":
        """Copy without the attached exact function."""
        return replace(self, function=None)

    def normalize(self) -> "GridWigner":
        tot = self.total()
        if not tot > 0:
            raise InvalidStateError("cannot normalize a grid with non-positive total")
        f = self.function
        func = None if f is None else (lambda x, p: f(x, p) / tot)
        return replace(self, values=self.values / tot, normalized=True, function=func)

    def marginal_x(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dp

    def marginal_p(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dx

    def moments(self):
        """(mean_x, mean_p, var_x, var_p, cov_xp) from grid sums."""
        w = self.values * self.cell
        tot = w.sum()
        X, P = np.meshgrid(self.x_axis, self.p_axis, indexing="ij")
        mx, mp = (w * X).sum() / tot, (w * P).sum() / tot
        vx = (w * (X - mx) ** 2).sum() / tot
        vp = (w * (P - mp) ** 2).sum() / tot
        cxp = (w * (X - mx) * (P - mp)).sum() / tot
        return float(mx), float(mp), float(vx), float(vp), float(cxp)

    def extent(self, threshold: float = 1e-12):
        """Bounding box of samples with |W| above ``threshold`` times the peak."""
        a = np.abs(self.values)
        mask = a > threshold * a.max()
        ix = np.nonzero(mask.any(axis=1))[0]
        ip = np.nonzero(mask.any(axis=0))[0]
        x, p = self.x_axis, self.p_axis
        lo_x = x[max(ix[0] - 1, 0)]
        hi_x = x[min(ix[-1] + 1, x.size - 1)]
        lo_p = p[max(ip[0] - 1, 0)]
        hi_p = p[min(ip[-1] + 1, p.size - 1)]
        return float(lo_x), float(hi_x), float(lo_p), float(hi_p)

    def same_grid(self, other: "GridWigner") -> bool:
        return (self.x_axis.shape == other.x_axis.shape and self.p_axis.shape == other.p_axis.shape
                and np.array_equal(self.x_axis, other.x_axis) and np.array_equal(self.p_axis, other.p_axis))


def _step(ax: np.ndarray) -> float:
    return float((ax[-1] - ax[0]) / (ax.size - 1))


def grid_from_function(func: Callable, x_axis, p_axis, provenance: str = "",
                       normalize: bool = False, exact_norm: bool = True) -> GridWigner:
    """Sample ``func`` on the grid and attach it as the exact evaluator.

    With ``normalize`` the samples and the function are divided by the grid sum;
    otherwise the function is assumed normalized analytically and the flag is set
    when the grid sum is within tolerance.
    """
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    X, P = np.meshgrid(x_axis, p_axis, indexing="ij")
    values = np.asarray(func(X, P), dtype=float)
    w = GridWigner(x_axis, p_axis, values, normalized=False, function=func, provenance=provenance)
    if normalize:
        return w.normalize()
    if exact_norm:
        if abs(w.total() - 1.0) > NORM_TOL:
            raise CoverageError(f"grid does not cover the state: integral {w.total():.9g}")
        return replace(w, normalized=True)
    return w


def gaussian_to_grid(s: GaussianState, x_axis=None, p_axis=None) -> GridWigner:
    """Sample a single-mode Gaussian state on a grid (exact density, no renormalization)."""
    if s.n_modes != 1:
        raise InvalidStateError("gaussian_to_grid needs a single-mode state")
    if x_axis is None or p_axis is None:
        x_axis, p_axis = default_axes()
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    sx, sp = np.sqrt(np.diag(s.cov))
    cover = min((s.mean[0] - x_axis[0]) / sx, (x_axis[-1] - s.mean[0]) / sx,
                (s.mean[1] - p_axis[0]) / sp, (p_axis[-1] - s.mean[1]) / sp)
    if cover < 4.0:
        raise CoverageError(f"grid covers only {cover:.2f} standard deviations (need >= 4)")
    w = grid_from_function(s.evaluate, x_axis, p_axis, provenance="gaussian", exact_norm=False)
    return replace(w, normalized=abs(w.total() - 1.0) <= NORM_TOL)


def fock_wigner_function(n: int) -> Callable:
    """W_n(x, p) = (-1)^n / (2 pi) L_n(x^2 + p^2) exp(-(x^2 + p^2)/2)."""
    if n < 0:
        raise InvalidParameterError("photon number must be non-negative")
    sign = -1.0 if n % 2 else 1.0

    def w(x, p):
        u = np.asarray(x, dtype=float) ** 2 + np.asarray(p, dtype=float) ** 2
        return sign / (2 * math.pi) * laguerre(n, u) * np.exp(-0.5 * u)

    return w


def even_cat_function(alpha: float, angle: float = 0.0) -> Callable:
    """Even cat |a> + |-a> whose quadrature-mean vector is alpha (cos angle, sin angle).

    The coherent components sit at r = +-2 alpha (cos angle, sin angle) and the
    fringes run perpendicular to that direction.
    """
    if alpha < 0:
        raise InvalidParameterError("cat amplitude must be non-negative")
    ax, ap = alpha * math.cos(angle), alpha * math.sin(angle)
    a2 = alpha * alpha
    norm = 2 * math.pi * (1.0 + math.exp(-2 * a2))

    def w(x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        r2 = x * x + p * p
        along = 2.0 * (x * ax + p * ap)
        across = 2.0 * (x * ap - p * ax)  # 2 r . (varpi alpha)
        gauss = -0.5 * r2 - 2 * a2
        peaks = 0.5 * (np.exp(gauss + along) + np.exp(gauss - along))
        return (peaks + np.exp(-0.5 * r2) * np.cos(across)) / norm

    return w


def cat_axes(alpha: float, span: float = DEFAULT_SPAN, points: int = DEFAULT_POINTS):
    return default_axes(max(span, 2 * alpha + 8), points)


def make_fock_wigner(n: int, x_axis=None, p_axis=None) -> GridWigner:
    if x_axis is None or p_axis is None:
        x_axis, p_axis = default_axes()
    return grid_from_function(fock_wigner_function(n), x_axis, p_axis, provenance=f"fock n={n}")


def make_even_cat(alpha: float, x_axis=None, p_axis=None, angle: float = 0.0) -> GridWigner:
    """Even cat state on a grid; the default grid widens to +-(2 alpha + 8)."""
    if x_axis is None or p_axis is None:
        x_axis, p_axis = cat_axes(alpha)
    return grid_from_function(even_cat_function(alpha, angle), x_axis, p_axis,
                              provenance=f"even cat alpha={alpha} angle={angle}")


def as_grid(state, x_axis, p_axis) -> GridWigner:
    """Render a Gaussian or grid state on the given axes."""
    if isinstance(state, GaussianState):
        return gaussian_to_grid(state, x_axis, p_axis)
    if isinstance(state, GridWigner):
        if np.array_equal(state.x_axis, x_axis) and np.array_equal(state.p_axis, p_axis):
            return state
        X, P = np.meshgrid(x_axis, p_axis, indexing="ij")
        return GridWigner(x_axis, p_axis, state.evaluate(X, P), normalized=False,
                          function=state.function, provenance=state.provenance)
    raise InvalidStateError(f"unsupported state type {type(state).__name__}")


# ---------------------------------------------------------------- metrics


def negativity_volume(w: GridWigner) -> float:
    """int |W| dx dp - 1 (twice the negative volume of a normalized W)."""
    if not w.normalized:
        raise InvalidStateError("negativity volume needs a normalized grid")
    total = w.values.sum()
    neg = -w.values[w.values < 0].sum()
    return float(2.0 * neg / total) + 0.0


def fidelity_overlap(a: GridWigner, b: GridWigner) -> float:
    """Pure-state overlap Tr[rho_a rho_b] = 4 pi int W_a W_b, clamped to [0, 1 + 1e-6]."""
    if not (a.normalized and b.normalized):
        raise InvalidStateError("overlap needs normalized grids")
    if not a.same_grid(b):
        raise GridMismatchError("grids differ")
    val = OVERLAP_FACTOR * float((a.values * b.values).sum()) * a.cell
    return min(max(val, 0.0), 1.0 + 1e-6)


def purity(w: GridWigner) -> float:
    return OVERLAP_FACTOR * float((w.values**2).sum()) * w.cell


def linf_distance(a: GridWigner, b: GridWigner) -> float:
    if not a.same_grid(b):
        raise GridMismatchError("grids differ")
    return float(np.max(np.abs(a.values - b.values)))


# ---------------------------------------------------------------- serialization

_FLOAT_TAG = re.compile(r'"@f17:([^"]*)"')


def _tag_floats(obj):
    if isinstance(obj, dict):
        return {str(k): _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _tag_floats(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not math.isfinite(f):
            return None
        text = format(f, ".17g")
        return "@f17:" + (text if any(c in text for c in ".e") else text + ".0")
    return obj


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits, non-finite as null."""
    text = json.dumps(_tag_floats(obj), indent=2, sort_keys=True)
    return _FLOAT_TAG.sub(r"\1", text) + "\n"


def save_grid(w: GridWigner, path, extra: Optional[dict] = None) -> tuple[Path, Path]:
    """Write ``path`` (CSV: x, p, W) and a JSON sidecar with the same stem."""
    path = Path(path)
    X, P = np.meshgrid(w.x_axis, w.p_axis, indexing="ij")
    arr = np.column_stack([X.ravel(), P.ravel(), w.values.ravel()])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,p,W\n")
        np.savetxt(fh, arr, delimiter=",", fmt="%.17g")
    meta = {
        "x_min": float(w.x_axis[0]), "x_max": float(w.x_axis[-1]), "x_points": int(w.x_axis.size),
        "p_min": float(w.p_axis[0]), "p_max": float(w.p_axis[-1]), "p_points": int(w.p_axis.size),
        "normalized": bool(w.normalized), "provenance": w.provenance,
    }
    if extra:
        meta.update(extra)
    side = path.with_suffix(".json")
    side.write_text(dumps_json(meta), encoding="utf-8")
    return path, side


def load_grid(path) -> tuple[GridWigner, dict]:
    """Read a grid written by ``save_grid``; returns the grid and its sidecar metadata."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    nx, npts = meta["x_points"], meta["p_points"]
    if data.shape != (nx * npts, 3):
        raise InvalidStateError("CSV size does not match its sidecar")
    x = data[::npts, 0]
    p = data[:npts, 1]
    values = data[:, 2].reshape(nx, npts)
    w = GridWigner(x, p, values, normalized=bool(meta["normalized"]),
                   provenance=meta.get("provenance", ""))
    return w, meta
