"""Independent reference computations shared by the tests."""

import math

import numpy as np
from scipy.integrate import simpson

_GL64 = np.polynomial.legendre.leggauss(64)


def panel_overlap(L, beta1, beta2, k_t, odd=False):
    """(1/L) int cos(k z) cos(b1 z) cos(b2 z) dz by 64-point panel Gauss-Legendre, four periods per panel.

    Panels are uniform, so each factor splits by angle addition into a panel-centre part
    and a node-offset part; the double sum over panels and nodes then separates into
    eight products of single sums.
    """
    top = abs(k_t) + abs(beta1) + abs(beta2)
    panels = max(4, int(math.ceil(top * L / (8 * math.pi))) + 1)
    half = 0.5 * L / panels
    centres = -L / 2 + half * (2 * np.arange(panels) + 1)
    t, w = _GL64
    offs = half * t
    # each factor: (panel_cos, panel_sin, node_cos, node_sin, sign) meaning
    # f(c + u) = panel_cos*node_cos + sign*panel_sin*node_sin
    factors = []
    for freq, use_sin in ((k_t, odd), (beta1, False), (beta2, False)):
        pc, ps = np.cos(freq * centres), np.sin(freq * centres)
        nc, ns = np.cos(freq * offs), np.sin(freq * offs)
        if use_sin:
            # sin(a + b) = sin a cos b + cos a sin b
            factors.append(((ps, nc), (pc, ns)))
        else:
            # cos(a + b) = cos a cos b - sin a sin b
            factors.append(((pc, nc), (-ps, ns)))
    total = 0.0
    for i in (0, 1):
        for j in (0, 1):
            for m in (0, 1):
                a, b, c = factors[0][i], factors[1][j], factors[2][m]
                total += np.sum(a[0] * b[0] * c[0]) * np.sum(w * a[1] * b[1] * c[1])
    return float(total * half / L)


def simpson_overlap(L, beta1, beta2, k_t, points=100001):
    z = np.linspace(-L / 2, L / 2, points)
    return float(simpson(np.cos(k_t * z) * np.cos(beta1 * z) * np.cos(beta2 * z), x=z) / L)


def simpson_resolves(L, beta1, beta2, k_t, points=100001, per_period=600):
    top = abs(k_t) + abs(beta1) + abs(beta2)
    periods = top * L / (2 * math.pi)
    return periods * per_period <= points


def random_overlap_draws(n, seed=20240611):
    """Draws with beta in [0, 1e7], k_t in [0, 1e4] and log-uniform L in [1e-5, 1e-1]."""
    rng = np.random.default_rng(seed)
    b1 = rng.uniform(0, 1e7, n)
    b2 = rng.uniform(0, 1e7, n)
    k = rng.uniform(0, 1e4, n)
    L = 10 ** rng.uniform(-5, -1, n)
    return list(zip(L, b1, b2, k))


def gaussian_overlap_4pi(mean_a, cov_a, mean_b, cov_b):
    """4 pi int N(mean_a, cov_a) N(mean_b, cov_b) in closed form."""
    s = np.asarray(cov_a) + np.asarray(cov_b)
    d = np.asarray(mean_a) - np.asarray(mean_b)
    return 4 * math.pi * math.exp(-0.5 * d @ np.linalg.solve(s, d)) / (2 * math.pi * math.sqrt(np.linalg.det(s)))
