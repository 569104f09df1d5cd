import json
import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsion_wigner.errors import InvalidParameterError, UnreachableTargetError
from torsion_wigner.params import (
    HBAR,
    PhysicalParams,
    check_timescales,
    coupling_coefficient_chi,
    derive_params,
    derive_wavevector,
    effective_moment_of_inertia,
    load_params,
    photon_threshold,
    save_params,
    thermal_occupation,
    wavevector_discrepancy,
    zero_point_angle,
)

KAPPA = 2 * math.pi * 225e6


def test_hbar_is_si_exact():
    assert HBAR == 1.054571817e-34


def test_reference_file_round_trip(ref_params, tmp_path):
    path = tmp_path / "p.json"
    save_params(ref_params, path)
    assert load_params(path) == ref_params


def test_reference_values(ref_params):
    assert ref_params.torsion_freq_Omega == pytest.approx(2 * math.pi * 500e3, rel=1e-15)
    assert ref_params.cavity_kappa == pytest.approx(KAPPA, rel=1e-15)
    assert ref_params.delta_eps == pytest.approx(1.5326**2 - 1.5277**2, rel=1e-9)


def test_wavevector_examples(ref_params):
    assert derive_wavevector(ref_params) == pytest.approx(200 * math.pi, rel=1e-15)
    unit = replace(ref_params, torsion_freq_Omega=5000.0)
    assert derive_wavevector(unit) == pytest.approx(1.0)
    assert wavevector_discrepancy(ref_params)["ratio"] == pytest.approx(2.0)


def test_nonpositive_frequency_rejected(ref_params):
    with pytest.raises(InvalidParameterError):
        replace(ref_params, torsion_freq_Omega=0.0)


def test_moment_of_inertia_examples(ref_params):
    L = ref_params.beam_length_L
    full = effective_moment_of_inertia(ref_params, L)
    assert full == pytest.approx(4.4163e-25, rel=5e-3)
    assert effective_moment_of_inertia(ref_params, L / 2) == pytest.approx(full / 2)
    wide = replace(ref_params, beam_width_a=2 * ref_params.beam_width_a)
    assert effective_moment_of_inertia(wide, L) == pytest.approx(16 * full)
    with pytest.raises(InvalidParameterError):
        effective_moment_of_inertia(ref_params, 1.5 * L)
    with pytest.raises(InvalidParameterError):
        effective_moment_of_inertia(ref_params, 0.0)


def test_zero_point_angle_examples(ref_params):
    Om = ref_params.torsion_freq_Omega
    t = zero_point_angle(4.4163e-25, Om)
    assert t == pytest.approx(6.16e-9, rel=5e-3)
    assert zero_point_angle(4 * 4.4163e-25, Om) == pytest.approx(t / 2)
    assert zero_point_angle(4.4163e-25, 4 * Om) == pytest.approx(t / 2)
    with pytest.raises(InvalidParameterError):
        zero_point_angle(-1.0, Om)


def test_chi_examples():
    assert coupling_coefficient_chi(22e3, KAPPA, 6.45e7) == pytest.approx(1.0, rel=1e-2)
    assert coupling_coefficient_chi(22e3, KAPPA, 0.0) == 0.0
    c = coupling_coefficient_chi(22e3, KAPPA, 1e6)
    assert coupling_coefficient_chi(22e3, KAPPA, 4e6) == pytest.approx(2 * c)
    with pytest.raises(InvalidParameterError):
        coupling_coefficient_chi(22e3, 0.0, 1.0)


def test_threshold_examples():
    n1 = photon_threshold(22e3, KAPPA, 1.0)
    assert n1 == pytest.approx(6.45e7, rel=1e-2)
    assert photon_threshold(22e3, KAPPA, 2.0) == pytest.approx(4 * n1)
    with pytest.raises(UnreachableTargetError):
        photon_threshold(0.0, KAPPA, 1.0)


@settings(max_examples=200, deadline=None)
@given(g=st.floats(1.0, 1e6), kappa=st.floats(1e6, 1e10), chi=st.floats(0.01, 100.0))
def test_threshold_inverts_chi(g, kappa, chi):
    back = coupling_coefficient_chi(g, kappa, photon_threshold(g, kappa, chi))
    assert abs(back - chi) <= 1e-12 * chi


@settings(max_examples=100, deadline=None)
@given(g=st.floats(1.0, 1e6), kappa=st.floats(1e6, 1e10), n=st.floats(1.0, 1e12),
       f=st.floats(1.01, 10.0))
def test_chi_monotonic(g, kappa, n, f):
    base = coupling_coefficient_chi(g, kappa, n)
    assert coupling_coefficient_chi(g, kappa, n * f) > base
    assert coupling_coefficient_chi(g * f, kappa, n) > base
    assert coupling_coefficient_chi(g, kappa * f, n) < base


@settings(max_examples=100, deadline=None)
@given(I=st.floats(1e-30, 1e-20), Om=st.floats(1e3, 1e9), c=st.floats(0.01, 100.0))
def test_theta_zp_rescaling_invariance(I, Om, c):
    assert zero_point_angle(c * I, Om / c) == pytest.approx(zero_point_angle(I, Om), rel=1e-12)


def test_derived_chain(ref_params):
    d = derive_params(ref_params)
    assert d.k_t == pytest.approx(200 * math.pi)
    # cos(k z) with k L = 0.0628: integral = L (1 - (kL)^2/12) to leading order
    kL = d.k_t * ref_params.beam_length_L
    assert d.mode_square_integral / ref_params.beam_length_L == pytest.approx(1 - kL**2 / 12, rel=1e-6)
    assert d.theta_zp == pytest.approx(math.sqrt(HBAR / (2 * d.I_eff * ref_params.torsion_freq_Omega)))
    assert d.chi >= 0


def test_thermal_occupation_at_100mK(ref_params):
    n = thermal_occupation(ref_params.torsion_freq_Omega, 0.1)
    assert n == pytest.approx(4.17e3, rel=2e-3)
    high_t = 1.380649e-23 * 0.1 / (HBAR * ref_params.torsion_freq_Omega)
    assert abs(n - high_t) / high_t < 2e-4
    assert thermal_occupation(ref_params.torsion_freq_Omega, 0.0) == 0.0


def test_timescales(ref_params):
    assert check_timescales(ref_params)
    slow = replace(ref_params, pulse_bandwidth_inv_tau=2 * ref_params.torsion_freq_Omega)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert not check_timescales(slow)
    assert caught


def test_from_dict_errors(ref_params):
    d = ref_params.to_dict()
    with pytest.raises(InvalidParameterError, match="unknown"):
        PhysicalParams.from_dict({**d, "bogus": 1.0})
    missing = dict(d)
    missing.pop("beta1")
    with pytest.raises(InvalidParameterError, match="beta1"):
        PhysicalParams.from_dict(missing)
    with pytest.raises(InvalidParameterError):
        PhysicalParams.from_dict({**d, "beta1": "fast"})
    with pytest.raises(InvalidParameterError):
        PhysicalParams.from_dict({**d, "eps_xx": 1.0})


def test_load_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(InvalidParameterError):
        load_params(path)
