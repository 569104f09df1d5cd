"""Brute-force truncated Fock-space oracle.

Everything here is built from ladder-operator matrix elements, independently of
the phase-space code: states are amplitude vectors or density matrices, the beam
splitter is the exact unitary restricted to the truncated space, photon counting is
the binomial POVM, and Wigner functions are reconstructed by Fourier transforming
the characteristic function Tr[rho D(beta)].
"""

from __future__ import annotations

import functools
import math
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import (
    ImpossibleOutcomeError,
    InvalidParameterError,
    InvalidStateError,
    ResolutionError,
    TruncationError,
)
from .phase_space import GridWigner

DEFAULT_TRUNCATION = 40
DEFAULT_MAX_DEFICIT = 1e-10
DEFAULT_MAX_LEAKAGE = 1e-8
_TAIL_EXTRA = 4000
_CHUNK = 16384


class FockDensityMatrix:
    """Truncated density matrix of one or two modes (two-mode index = n1 (N+1) + n2).

    Pure states keep their amplitude vector so that two-mode operations stay cheap;
    ``rho`` is formed on demand.
    """

    def __init__(self, rho: Optional[np.ndarray] = None, n_modes: int = 1, truncation: int = 0,
                 vector: Optional[np.ndarray] = None, validate: bool = True):
        if n_modes not in (1, 2):
            raise InvalidParameterError("oracle supports one or two modes")
        dim = (truncation + 1) ** n_modes
        if (rho is None) == (vector is None):
            raise InvalidParameterError("give exactly one of rho or vector")
        self.n_modes = n_modes
        self.truncation = truncation
        if vector is not None:
            vector = np.asarray(vector, dtype=complex).reshape(-1)
            if vector.size != dim:
                raise InvalidStateError("vector size does not match the truncation")
            self._vector = vector
            self._rho = None
        else:
            rho = np.asarray(rho, dtype=complex)
            if rho.shape != (dim, dim):
                raise InvalidStateError("rho shape does not match the truncation")
            self._vector = None
            self._rho = rho
        if validate:
            self.validate()

    @property
    def dim(self) -> int:
        return (self.truncation + 1) ** self.n_modes

    @property
    def is_pure_vector(self) -> bool:
        return self._vector is not None

    @property
    def vector(self) -> Optional[np.ndarray]:
        return self._vector

    @property
    def rho(self) -> np.ndarray:
        if self._rho is None:
            v = self._vector
            self._rho = np.outer(v, v.conj())
        return self._rho

    def trace(self) -> float:
        if self._vector is not None:
            return float(np.vdot(self._vector, self._vector).real)
        return float(np.trace(self._rho).real)

    def validate(self):
        if abs(self.trace() - 1.0) > 1e-10:
            raise InvalidStateError(f"trace {self.trace():.15g} differs from 1")
        if self._vector is not None:
            return
        rho = self._rho
        scale = max(1.0, float(np.max(np.abs(rho))))
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12 * scale:
            raise InvalidStateError("density matrix is not Hermitian")
        if self.dim <= 2500 and np.linalg.eigvalsh(rho).min() < -1e-10:
            raise InvalidStateError("density matrix has negative eigenvalues")

    def diagonal(self) -> np.ndarray:
        if self._vector is not None:
            return np.abs(self._vector) ** 2
        return np.real(np.diag(self._rho)).copy()

    def reduced(self, keep: int) -> "FockDensityMatrix":
        """Partial trace of a two-mode state onto mode ``keep`` (0 or 1)."""
        if self.n_modes != 2:
            raise InvalidParameterError("partial trace needs a two-mode state")
        n = self.truncation + 1
        if self._vector is not None:
            psi = self._vector.reshape(n, n)
            red = psi @ psi.conj().T if keep == 0 else psi.T @ psi.conj()
        else:
            r = self._rho.reshape(n, n, n, n)
            red = np.einsum("ikjk->ij", r) if keep == 0 else np.einsum("kikj->ij", r)
        return FockDensityMatrix(red, 1, self.truncation)

    def quadrature_means(self) -> np.ndarray:
        """(<x>, <p>) per mode with x = a + a^dag, p = i(a^dag - a)."""
        out = []
        modes = [self] if self.n_modes == 1 else [self.reduced(0), self.reduced(1)]
        a = annihilation(self.truncation)
        for m in modes:
            ea = np.trace(m.rho @ a)
            out.extend([2 * ea.real, 2 * ea.imag])
        return np.array(out)


def annihilation(truncation: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, truncation + 1, dtype=float)), 1)


# ---------------------------------------------------------------- states


def _log_amplitudes(kind: str, value, n: np.ndarray):
    """(log|c_n|, phase_n) of the untruncated state, for n in the array."""
    neg_inf = np.full(n.shape, -np.inf)
    zeros = np.zeros(n.shape)
    if kind == "vacuum":
        return np.where(n == 0, 0.0, -np.inf), zeros
    if kind == "fock":
        k = int(value)
        if k < 0:
            raise InvalidParameterError("photon number must be non-negative")
        return np.where(n == k, 0.0, -np.inf), zeros
    if kind == "coherent":
        alpha = complex(value)
        a = abs(alpha)
        if a == 0:
            return np.where(n == 0, 0.0, -np.inf), zeros
        logc = -0.5 * a * a + n * math.log(a) - 0.5 * gammaln(n + 1)
        return logc, n * np.angle(alpha)
    if kind == "squeezed":
        r = float(value)
        if r == 0:
            return np.where(n == 0, 0.0, -np.inf), zeros
        t = math.tanh(r)
        k = n // 2
        even = n % 2 == 0
        logc = (-0.5 * math.log(math.cosh(r)) + k * math.log(abs(t))
                + 0.5 * gammaln(2 * k + 1) - k * math.log(2.0) - gammaln(k + 1))
        phase = np.where((t < 0) & (k % 2 == 1), math.pi, 0.0)
        return np.where(even, logc, neg_inf), phase
    if kind == "even_cat":
        a = float(value)
        if a < 0:
            raise InvalidParameterError("cat amplitude must be non-negative")
        if a == 0:
            return np.where(n == 0, 0.0, -np.inf), zeros
        log_norm = 0.5 * (math.log(2.0) + math.log1p(math.exp(-2 * a * a)))
        logc = math.log(2.0) - 0.5 * a * a + n * math.log(a) - 0.5 * gammaln(n + 1) - log_norm
        return np.where(n % 2 == 0, logc, neg_inf), zeros
    raise InvalidParameterError(f"unknown state kind {kind!r}")


def fock_amplitudes(kind: str, truncation: int, value=None):
    """Truncated amplitude vector and the discarded tail probability."""
    n_all = np.arange(truncation + 1 + _TAIL_EXTRA)
    logc, phase = _log_amplitudes(kind, value, n_all)
    probs = np.exp(2 * logc)
    deficit = float(probs[truncation + 1:].sum())
    amp = np.exp(logc[:truncation + 1]) * np.exp(1j * phase[:truncation + 1])
    return amp, deficit


def build_state(kind: str, truncation: int = DEFAULT_TRUNCATION, value=None,
                max_deficit: float = DEFAULT_MAX_DEFICIT) -> FockDensityMatrix:
    """Single-mode oracle state: vacuum, fock(n), coherent(alpha), squeezed(r), thermal(nbar), even_cat(alpha).

    Coherent amplitudes are in annihilation-operator units (quadrature mean 2 alpha).
    Squeezing follows exp[(r/2)(a^dag^2 - a^2)], which gives var(x) = e^{2r}.
    """
    if truncation < 0:
        raise InvalidParameterError("truncation must be non-negative")
    if kind == "thermal":
        nbar = float(value)
        if nbar < 0:
            raise InvalidParameterError("thermal occupation must be non-negative")
        q = nbar / (1.0 + nbar)
        n = np.arange(truncation + 1)
        p = (1.0 - q) * q**n
        deficit = q ** (truncation + 1)
        if deficit > max_deficit:
            raise TruncationError(f"truncation deficit {deficit:.3g} exceeds {max_deficit:.3g}")
        return FockDensityMatrix(np.diag(p / p.sum()).astype(complex), 1, truncation)
    if kind == "fock" and int(value) > truncation:
        raise TruncationError("Fock state lies above the truncation")
    amp, deficit = fock_amplitudes(kind, truncation, value)
    if deficit > max_deficit:
        raise TruncationError(f"truncation deficit {deficit:.3g} exceeds {max_deficit:.3g}")
    amp = amp / np.linalg.norm(amp)
    return FockDensityMatrix(vector=amp, n_modes=1, truncation=truncation)


def truncation_deficit(kind: str, truncation: int, value=None) -> float:
    if kind == "thermal":
        q = float(value) / (1.0 + float(value))
        return q ** (truncation + 1)
    return fock_amplitudes(kind, truncation, value)[1]


def tensor(a: FockDensityMatrix, b: FockDensityMatrix) -> FockDensityMatrix:
    if a.n_modes != 1 or b.n_modes != 1 or a.truncation != b.truncation:
        raise InvalidParameterError("tensor needs two single-mode states with equal truncation")
    if a.is_pure_vector and b.is_pure_vector:
        return FockDensityMatrix(vector=np.kron(a.vector, b.vector), n_modes=2, truncation=a.truncation)
    return FockDensityMatrix(np.kron(a.rho, b.rho), 2, a.truncation)


# ---------------------------------------------------------------- beam splitter


@functools.lru_cache(maxsize=8)
def _bs_blocks(truncation: int, T_tap: float):
    """Exact unitary blocks of exp[theta (a^dag b - a b^dag)] per total photon number K."""
    theta = math.acos(math.sqrt(T_tap))
    blocks = []
    for K in range(2 * truncation + 1):
        k = np.arange(K)
        A = np.zeros((K + 1, K + 1))
        A[k + 1, k] = np.sqrt((k + 1.0) * (K - k))  # a^dag b |k, K-k>
        U = expm(theta * (A - A.T))
        lo, hi = max(0, K - truncation), min(K, truncation)
        sel = np.arange(lo, hi + 1)
        blocks.append((sel, U[np.ix_(sel, sel)]))
    return blocks


def beam_splitter_unitary(truncation: int, T_tap: float) -> np.ndarray:
    """Truncated beam-splitter unitary on the (N+1)^2 two-mode space (index n1 (N+1) + n2)."""
    if not (0.0 <= T_tap <= 1.0):
        raise InvalidParameterError("transmittance must lie in [0, 1]")
    n = truncation + 1
    U = np.zeros((n * n, n * n))
    for K, (sel, blk) in enumerate(_bs_blocks(truncation, float(T_tap))):
        idx = sel * n + (K - sel)
        U[np.ix_(idx, idx)] = blk
    return U


def apply_beam_splitter(state: FockDensityMatrix, T_tap: float,
                        max_leakage: float = DEFAULT_MAX_LEAKAGE) -> FockDensityMatrix:
    """Conjugate by the beam-splitter unitary; its quadrature action equals the symplectic M_L."""
    if state.n_modes != 2:
        raise InvalidParameterError("beam splitter needs a two-mode state")
    if not (0.0 <= T_tap <= 1.0):
        raise InvalidParameterError("transmittance must lie in [0, 1]")
    N = state.truncation
    n = N + 1
    if state.is_pure_vector:
        psi = state.vector
        out = np.zeros_like(psi)
        for K, (sel, blk) in enumerate(_bs_blocks(N, float(T_tap))):
            idx = sel * n + (K - sel)
            out[idx] = blk @ psi[idx]
        kept = float(np.vdot(out, out).real)
        _check_leakage(1.0 - kept, max_leakage)
        return FockDensityMatrix(vector=out / math.sqrt(kept), n_modes=2, truncation=N)
    U = beam_splitter_unitary(N, T_tap)
    rho = U @ state.rho @ U.T
    kept = float(np.trace(rho).real)
    _check_leakage(1.0 - kept, max_leakage)
    rho = 0.5 * (rho + rho.conj().T) / kept
    return FockDensityMatrix(rho, 2, N)


def _check_leakage(leak: float, max_leakage: float):
    if leak > max_leakage:
        raise TruncationError(f"beam-splitter leakage {leak:.3g} exceeds {max_leakage:.3g}")


# ---------------------------------------------------------------- photon counting


def povm_weights(m: int, eta: float, truncation: int) -> np.ndarray:
    """Diagonal of Pi_m(eta) = sum_k C(k, m) eta^m (1 - eta)^(k - m) |k><k|."""
    if m < 0:
        raise InvalidParameterError("photon count must be non-negative")
    if not (0.0 < eta <= 1.0):
        raise InvalidParameterError("efficiency must lie in (0, 1]")
    k = np.arange(truncation + 1)
    w = np.zeros(truncation + 1)
    ok = k >= m
    kk = k[ok]
    logc = gammaln(kk + 1) - gammaln(m + 1) - gammaln(kk - m + 1)
    if eta == 1.0:
        w[ok] = np.where(kk == m, 1.0, 0.0)
    else:
        w[ok] = np.exp(logc + m * math.log(eta) + (kk - m) * math.log1p(-eta))
    return w


def povm_operator(m: int, eta: float, truncation: int) -> np.ndarray:
    return np.diag(povm_weights(m, eta, truncation)).astype(complex)


def apply_povm_and_condition(state: FockDensityMatrix, m: int, eta: float, measured: int = 1):
    """Condition a two-mode state on detecting m photons in mode ``measured``.

    Returns the conditional single-mode state of the other mode and the probability.
    """
    if state.n_modes != 2:
        raise InvalidParameterError("conditioning needs a two-mode state")
    N = state.truncation
    n = N + 1
    w = povm_weights(m, eta, N)
    if state.is_pure_vector:
        psi = state.vector.reshape(n, n)
        if measured == 0:
            psi = psi.T
        rho_a = (psi * w[None, :]) @ psi.conj().T
    else:
        r = state.rho.reshape(n, n, n, n)
        if measured == 0:
            rho_a = np.einsum("k,kikj->ij", w, r)
        else:
            rho_a = np.einsum("k,ikjk->ij", w, r)
    prob = float(np.trace(rho_a).real)
    if prob < 1e-14:
        raise ImpossibleOutcomeError(f"outcome probability {prob:.3g} is below 1e-14")
    rho_a = 0.5 * (rho_a + rho_a.conj().T) / prob
    return FockDensityMatrix(rho_a, 1, N), prob


# ---------------------------------------------------------------- Wigner reconstruction


def characteristic_function(op: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Tr[op D(beta)] with D(beta) = exp(beta a^dag - beta* a), for an array of beta.

    Lower-triangle elements D_{n+d,n} = sqrt(n!/(n+d)!) beta^d e^{-|beta|^2/2} L_n^{(d)}(|beta|^2)
    are generated by the three-term Laguerre recurrence in n (one lane per offset d);
    the upper triangle follows from D_{n,n+d} = (-1)^d conj(D_{n+d,n}).
    """
    op = np.asarray(op, dtype=complex)
    size = op.shape[0]
    beta = np.asarray(beta, dtype=complex).reshape(-1)
    out = np.empty(beta.size, dtype=complex)
    d = np.arange(size)
    sign = np.where(d % 2 == 0, 1.0, -1.0)
    log_fact = 0.5 * gammaln(d + 1.0)
    for start in range(0, beta.size, _CHUNK):
        b = beta[start:start + _CHUNK]
        x = np.abs(b) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            log_abs = np.log(np.abs(b))
            # h[d] = D_{d,0}; at beta = 0 only d = 0 survives
            logmag = -0.5 * x[None, :] + d[:, None] * log_abs[None, :] - log_fact[:, None]
        logmag[0] = -0.5 * x
        phase = np.angle(b)
        h = np.exp(logmag) * np.exp(1j * d[:, None] * phase[None, :])
        h_prev = np.zeros_like(h)
        chi = np.zeros(b.size, dtype=complex)
        for n in range(size):
            k = size - n  # valid offsets d = 0..k-1
            lower = op[n, n:n + k]  # rho[n, n+d] pairs with D_{n+d, n}
            upper = op[n:n + k, n] * sign[:k]  # rho[n+d, n] pairs with D_{n, n+d}
            chi += lower @ h[:k] + upper[1:] @ np.conj(h[1:k])
            if n + 1 < size:
                dd = d[:k - 1, None].astype(float)
                nxt = ((2 * n + dd + 1 - x[None, :]) * h[:k - 1]
                       - math.sqrt(n) * np.sqrt(n + dd) * h_prev[:k - 1]) / np.sqrt((n + 1) * (n + 1 + dd))
                h_prev = h[:k - 1]
                h = nxt
        out[start:start + _CHUNK] = chi
    return out


def _effective_size(op: np.ndarray) -> int:
    mag = np.abs(op)
    peak = mag.max()
    rows = np.nonzero((mag > 1e-15 * peak).any(axis=1) | (mag > 1e-15 * peak).any(axis=0))[0]
    return int(rows[-1]) + 1 if rows.size else 1


def _beta_grid(n_eff: int, axis_extent: float, step: Optional[float] = None):
    reach = math.sqrt(4.0 * n_eff + 2.0) + 8.0
    period = axis_extent + reach + 2.0
    db = 2.0 * math.pi / period if step is None else step
    k = int(math.ceil(reach / db))
    return db * np.arange(-k, k + 1)


def _fourier_wigner(op: np.ndarray, x_axis: np.ndarray, p_axis: np.ndarray) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    n_eff = _effective_size(op)
    op = op[:n_eff, :n_eff]
    extent = float(max(np.max(np.abs(x_axis)), np.max(np.abs(p_axis))))
    b = _beta_grid(n_eff - 1, extent)
    db = b[1] - b[0]
    B1, B2 = np.meshgrid(b, b, indexing="ij")
    chi = characteristic_function(op, B1 + 1j * B2).reshape(b.size, b.size)
    edge = max(np.abs(chi[0]).max(), np.abs(chi[-1]).max(), np.abs(chi[:, 0]).max(),
               np.abs(chi[:, -1]).max())
    if edge > 1e-10 * max(1.0, np.abs(chi).max()):
        raise ResolutionError(f"characteristic function not decayed at the grid edge ({edge:.3g})")
    ex = np.exp(-1j * np.outer(x_axis, b))  # e^{-i x b2}
    ep = np.exp(1j * np.outer(b, p_axis))  # e^{i p b1}
    w = (ex @ chi.T @ ep).real * db * db / (4.0 * math.pi**2)
    return w


@functools.lru_cache(maxsize=1)
def calibration_factor() -> float:
    """Scale fixing the beta <-> r normalization: the vacuum must peak at 1/(2 pi)."""
    vac = np.zeros((1, 1), dtype=complex)
    vac[0, 0] = 1.0
    w0 = _fourier_wigner(vac, np.array([0.0]), np.array([0.0]))[0, 0]
    return (1.0 / (2.0 * math.pi)) / w0


def wigner_reconstruct(state, x_axis, p_axis, check_norm: bool = True) -> GridWigner:
    """Wigner function of a single-mode state (or any operator matrix) on the given axes."""
    if isinstance(state, FockDensityMatrix):
        if state.n_modes != 1:
            raise InvalidParameterError("Wigner reconstruction needs a single-mode state")
        op = state.rho
        provenance = f"oracle N={state.truncation}"
    else:
        op = np.asarray(state, dtype=complex)
        provenance = "oracle operator"
        check_norm = False
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    values = calibration_factor() * _fourier_wigner(op, x_axis, p_axis)
    w = GridWigner(x_axis, p_axis, values, normalized=False, provenance=provenance)
    if check_norm:
        err = abs(w.total() - 1.0)
        if err > 1e-4:
            raise ResolutionError(f"reconstructed Wigner integrates to 1 +- {err:.3g}; widen the axes")
        if err <= 1e-6:
            w = GridWigner(x_axis, p_axis, values, normalized=True, provenance=provenance)
    return w


# ---------------------------------------------------------------- pipelines


def oracle_gps_cat(r1: float, r2: float, T_tap: float, m: int, eta: float, x_axis, p_axis,
                   truncation: int = DEFAULT_TRUNCATION, max_deficit: float = DEFAULT_MAX_DEFICIT,
                   max_leakage: float = DEFAULT_MAX_LEAKAGE):
    """Photon-subtraction cat in Fock space: squeezed(r1) x squeezed(r2), beam splitter,
    m-photon detection on mode 2. Returns (Wigner grid of mode 1, probability)."""
    a = build_state("squeezed", truncation, r1, max_deficit=max_deficit)
    b = build_state("squeezed", truncation, r2, max_deficit=max_deficit)
    out = apply_beam_splitter(tensor(a, b), T_tap, max_leakage=max_leakage)
    cond, prob = apply_povm_and_condition(out, m, eta, measured=1)
    return wigner_reconstruct(cond, x_axis, p_axis, check_norm=False), prob
