import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import panel_overlap, random_overlap_draws, simpson_overlap, simpson_resolves
from torsion_wigner.coupling import (
    REFERENCE_G_TABLE,
    OverlapInputs,
    coupling_breakdown,
    g12ma_estimate,
    g_oe_longitudinal,
    g_vs_length,
    longitudinal_overlap_closed,
    longitudinal_overlap_quadrature,
    matched_wavevector,
    optical_angular_frequency,
    reference_overlap_inputs,
    scaling_check_g_vs_length,
    stable_sinc,
)
from torsion_wigner.errors import InvalidParameterError, PreconditionError
from torsion_wigner.params import derive_params, zero_point_angle_at_length

LENGTHS = np.geomspace(1e-3, 1e-2, 11)


def test_unit_integrand():
    assert longitudinal_overlap_closed(1e-4, 0.0, 0.0, 0.0) == 1.0


def test_stable_sinc_near_zero():
    y = np.array([0.0, 1e-9, 1e-5, 9.9e-5, 1e-4, 1e-3])
    ref = np.array([1.0] + [math.sin(v) / v for v in y[1:]])
    assert np.max(np.abs(stable_sinc(y) - ref)) <= 2.3e-16


@pytest.mark.parametrize("periods", [20, 40, 100])
def test_resonant_asymptote(periods):
    L = 1e-3
    k = 2 * math.pi * periods / L
    b2 = 5.2e6
    val = longitudinal_overlap_closed(L, b2 + k, b2, k)
    assert val == pytest.approx(0.25, abs=0.01)


def test_closed_form_against_panel_quadrature():
    for L, b1, b2, k in random_overlap_draws(200, seed=7):
        assert abs(longitudinal_overlap_closed(L, b1, b2, k) - panel_overlap(L, b1, b2, k)) < 1e-9


def test_closed_form_against_simpson_where_resolved():
    checked = 0
    for L, b1, b2, k in random_overlap_draws(400, seed=11):
        if simpson_resolves(L, b1, b2, k):
            assert abs(longitudinal_overlap_closed(L, b1, b2, k) - simpson_overlap(L, b1, b2, k)) < 1e-9
            checked += 1
    assert checked >= 20


def test_library_quadrature_agrees_on_reference(ref_params):
    p = ref_params
    k = derive_params(p).k_t
    closed = longitudinal_overlap_closed(p.beam_length_L, p.beta1, p.beta2, k)
    assert longitudinal_overlap_quadrature(p.beam_length_L, p.beta1, p.beta2, k) == pytest.approx(closed, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(L=st.floats(1e-5, 1e-1), b1=st.floats(0, 1e7), b2=st.floats(0, 1e7), k=st.floats(0, 1e4))
def test_overlap_symmetries(L, b1, b2, k):
    base = longitudinal_overlap_closed(L, b1, b2, k)
    assert longitudinal_overlap_closed(L, b2, b1, k) == pytest.approx(base, abs=1e-15)
    assert longitudinal_overlap_closed(L, b1, b2, -k) == pytest.approx(base, abs=1e-15)
    assert abs(base) <= 1.0 + 1e-12


def test_g_oe_is_zero():
    assert g_oe_longitudinal(1e-4, 5e6, 5e6, 628.0) == 0.0
    assert g_oe_longitudinal(1e-4, 5e6, 5e6, 0.0) == 0.0
    numeric = longitudinal_overlap_quadrature(1e-4, 5e6, 5e6, 628.0, points=10001, odd=True)
    assert abs(numeric) < 1e-12
    assert abs(panel_overlap(1e-4, 5e6, 5e6, 628.0, odd=True)) < 1e-12
    with pytest.raises(InvalidParameterError):
        g_oe_longitudinal(-1.0, 1.0, 1.0, 1.0)


def test_g12_calibration_anchor(ref_params):
    d = derive_params(ref_params)
    inputs = reference_overlap_inputs(ref_params)
    w = optical_angular_frequency(ref_params.wavelength_lambda)
    g = g12ma_estimate(d.theta_zp, d.delta_eps, w, w, inputs)
    assert g == pytest.approx(22e3, rel=1e-9)
    assert g12ma_estimate(d.theta_zp, 0.0, w, w, inputs) == 0.0
    assert g12ma_estimate(2 * d.theta_zp, d.delta_eps, w, w, inputs) == pytest.approx(2 * g, rel=1e-14)
    doubled = OverlapInputs(inputs.L, inputs.beta1, inputs.beta2, inputs.k_t, 2 * inputs.transverse_factor)
    assert g12ma_estimate(d.theta_zp, d.delta_eps, w, w, doubled) == pytest.approx(2 * g, rel=1e-14)
    assert g12ma_estimate(d.theta_zp, 3 * d.delta_eps, w, w, inputs) == pytest.approx(3 * g, rel=1e-14)


def test_breakdown_table():
    b = coupling_breakdown(22e3)
    assert b.g11MA == b.g22MA == b.gOE == 0.0
    assert b.to_dict()["g12MB"] == REFERENCE_G_TABLE["g12MB"]
    assert b.total_g12 == pytest.approx(22e3 + 81.0)


def _theta_zp_of_L(p):
    return lambda L: zero_point_angle_at_length(p, L, matched_wavevector(L, LENGTHS[0]))


def test_scaling_exponent(ref_params):
    base = reference_overlap_inputs(ref_params)
    slope = scaling_check_g_vs_length(base, _theta_zp_of_L(ref_params), LENGTHS)
    assert slope == pytest.approx(-0.5, abs=0.05)


def test_scaling_flat_theta_zp(ref_params):
    base = reference_overlap_inputs(ref_params)
    slope = scaling_check_g_vs_length(base, lambda L: 6e-9, LENGTHS)
    assert slope == pytest.approx(0.0, abs=0.05)


def test_scaling_linear_in_delta_eps(ref_params):
    base = reference_overlap_inputs(ref_params)
    f = _theta_zp_of_L(ref_params)
    _, g1 = g_vs_length(base, f, LENGTHS, 0.01, 1.0, 1.0)
    _, g2 = g_vs_length(base, f, LENGTHS, 0.02, 1.0, 1.0)
    assert np.allclose(g2, 2 * g1, rtol=1e-14)


def test_resonance_precondition(ref_params):
    base = reference_overlap_inputs(ref_params)
    with pytest.raises(PreconditionError):
        g_vs_length(base, lambda L: 1e-9, LENGTHS, 0.01, 1.0, 1.0, wavevector_of_L=lambda L: 1.0 / L)
    with pytest.raises(PreconditionError):
        g_vs_length(base, lambda L: 1e-9, [1e-6, 2e-6], 0.01, 1.0, 1.0)
