import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from torsion_wigner.errors import ImpossibleOutcomeError, InvalidParameterError
from torsion_wigner.measurement import condition_gaussian_homodyne
from torsion_wigner.phase_space import (
    fidelity_overlap,
    gaussian_to_grid,
    grid_from_function,
    even_cat_function,
    make_even_cat,
    make_fock_wigner,
    make_squeezed,
    make_squeezed_thermal,
    make_vacuum,
    negativity_volume,
    symmetric_axis,
)
from torsion_wigner.protocols import (
    CatPrepConfig,
    closed_form_scat,
    closed_form_sfock,
    gps_optical_cat,
    mechanical_state_prep,
    optimal_tap,
    rotated_mechanics,
    scat_function,
    sfock_function,
    single_pulse_squeeze,
    squeeze_by_conditioning,
    two_pulse_protocol,
)
from torsion_wigner.symplectic import apply_gaussian, om_interaction, phase_rotation

OPTICAL_AXES = (symmetric_axis(18, 121), symmetric_axis(18, 121))
SMALL = (symmetric_axis(10, 81), symmetric_axis(11, 81))


def _thermal_conditioning_oracle(n_bar, chi):
    # textbook Schur complement written out for the 2x2 blocks of this map
    V = 2 * n_bar + 1
    var_p = 1 + chi**2 * V
    cov_theta_p = -chi * V
    var_theta = V - cov_theta_p**2 / var_p
    var_L = V + chi**2
    return var_theta, var_L


def test_squeeze_random_draws_agree():
    rng = np.random.default_rng(3)
    for n_bar, chi in zip(10 ** rng.uniform(-2, 5, 100), 10 ** rng.uniform(-1, 1, 100)):
        rep = single_pulse_squeeze(n_bar, chi)
        state, _ = squeeze_by_conditioning(n_bar, chi)
        vt, vl = _thermal_conditioning_oracle(n_bar, chi)
        assert abs(rep.var_theta_out - state.cov[0, 0]) < 1e-9
        assert abs(rep.var_L_out - state.cov[1, 1]) < 1e-9
        assert rep.var_theta_out == pytest.approx(vt, rel=1e-8)
        assert rep.var_L_out == pytest.approx(vl, rel=1e-8)


def test_squeeze_reference_value():
    rep = single_pulse_squeeze(1e4, 1.0)
    assert rep.n_eff == pytest.approx(70.21, abs=0.01)
    assert rep.n_eff == pytest.approx(math.sqrt(1e4 / 2), rel=0.01)
    assert rep.n_eff_asymptotic == pytest.approx(math.sqrt(1e4 / 2), rel=1e-15)
    assert rep.var_theta_leading == 1.0


def test_squeeze_zero_occupation():
    rep = single_pulse_squeeze(0.0, 1.0)
    assert rep.var_theta_out == pytest.approx(0.5)
    assert rep.var_L_out == pytest.approx(2.0)
    assert rep.n_eff == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(n_bar=st.floats(0, 1e6), chi=st.floats(1, 50))
def test_strong_coupling_squeezes_below_vacuum(n_bar, chi):
    rep = single_pulse_squeeze(n_bar, chi)
    assert rep.var_theta_out <= 1.0
    assert rep.var_theta_out * rep.var_L_out >= 1.0 - 1e-9


def test_squeeze_rejects_no_coupling():
    with pytest.raises(InvalidParameterError):
        single_pulse_squeeze(10.0, 0.0)


def test_optimal_tap():
    assert optimal_tap(1.15) == pytest.approx(0.909, abs=0.001)
    assert optimal_tap(50.0) == pytest.approx(1.0, abs=1e-15)
    assert optimal_tap(1e-8) == pytest.approx(0.5, abs=1e-7)
    for bad in (0.0, -1.0):
        with pytest.raises(InvalidParameterError):
            optimal_tap(bad)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        CatPrepConfig(T_tap=1.5)
    with pytest.raises(InvalidParameterError):
        CatPrepConfig(V_theta=0.1, V_L=5)
    with pytest.raises(InvalidParameterError):
        CatPrepConfig(eta=0.0)
    assert CatPrepConfig().transmittance == optimal_tap(1.15)


def test_gps_negativity_by_photon_count():
    neg = {}
    for m in (0, 1):
        res = gps_optical_cat(CatPrepConfig(m=m), *OPTICAL_AXES)
        neg[m] = negativity_volume(res.state)
    assert neg[0] < 1e-6
    assert neg[1] > 0.01


def test_sfock_closed_form_examples(axes):
    near = closed_form_sfock(1e-3, 1e6, *axes)
    assert fidelity_overlap(near, make_fock_wigner(1, *axes)) > 0.999
    assert closed_form_sfock(0.2, 2000, *axes).values.min() < 0


@settings(max_examples=100, deadline=None)
@given(v_theta=st.floats(1e-3, 1e3), v_l=st.floats(1e-3, 1e6))
def test_sfock_negative_at_origin(v_theta, v_l):
    assert sfock_function(v_theta, v_l)(0.0, 0.0) < 0


def test_scat_closed_form_examples(axes):
    g = closed_form_scat(0.2, 2000, 0.0, *axes)
    assert negativity_volume(g) < 1e-12
    bracket = lambda L: scat_function(0.2, 2000, 2.0)(0.0, L) * np.exp(0.5 * L**2 / 1.2)  # noqa: E731
    L = np.linspace(-3, 3, 61)
    assert np.max(np.abs(bracket(L + 0.6 * math.pi) - bracket(L))) < 1e-12
    assert np.max(np.abs(bracket(L + 0.3 * math.pi) - bracket(L))) > 1.0
    ax = symmetric_axis(12, 241)
    near = closed_form_scat(1e-4, 1e8, 2.0, ax, ax)
    assert fidelity_overlap(near, make_even_cat(2.0, ax, ax)) > 0.99


def test_prep_fock_matches_closed_form():
    res = mechanical_state_prep(make_fock_wigner(1), CatPrepConfig(), theta_axis=SMALL[0], L_axis=SMALL[1])
    ref = closed_form_sfock(0.2, 2000, *SMALL)
    assert np.max(np.abs(res.state.values - ref.values)) < 1e-6


@pytest.mark.parametrize("cat_axis,angle", [("p", math.pi / 2), ("x", 0.0)])
def test_prep_cat_matches_closed_form(cat_axis, angle):
    ax = symmetric_axis(12, 241)
    cat = grid_from_function(even_cat_function(2.0, angle), ax, ax)
    res = mechanical_state_prep(cat, CatPrepConfig(), theta_axis=SMALL[0], L_axis=SMALL[1])
    ref = closed_form_scat(0.2, 2000, 2.0, *SMALL, cat_axis=cat_axis)
    assert np.max(np.abs(res.state.values - ref.values)) < 1e-6


def test_prep_without_coupling_returns_mechanics():
    mech = rotated_mechanics(0.5, 4.0)
    ax = symmetric_axis(12, 97), symmetric_axis(4, 81)
    cfg = replace(CatPrepConfig(), chi=0.0, homodyne_outcome_p=0.8)
    res = mechanical_state_prep(make_fock_wigner(1), cfg, mechanical=mech, theta_axis=ax[0], L_axis=ax[1])
    ref = gaussian_to_grid(mech, *ax)
    assert np.max(np.abs(res.state.values - ref.values / ref.total())) < 1e-9
    # the photon's p marginal vanishes at 0, so without coupling that record is impossible
    with pytest.raises(ImpossibleOutcomeError):
        mechanical_state_prep(make_fock_wigner(1), replace(cfg, homodyne_outcome_p=0.0), mechanical=mech,
                              theta_axis=ax[0], L_axis=ax[1])


@pytest.mark.parametrize("chi,p", [(1.0, 0.0), (0.7, 0.8)])
def test_prep_gaussian_input_matches_gaussian_algebra(chi, p):
    opt, mech = make_squeezed(0.4), make_squeezed_thermal(0.6, 3.0)
    cfg = replace(CatPrepConfig(), chi=chi, homodyne_outcome_p=p)
    cond, density = condition_gaussian_homodyne(apply_gaussian(om_interaction(chi), opt.tensor(mech)),
                                                0, math.pi / 2, p)
    th, ll = symmetric_axis(6, 81), symmetric_axis(14, 81)
    res = mechanical_state_prep(opt, cfg, mechanical=mech, theta_axis=th, L_axis=ll)
    ref = gaussian_to_grid(cond, th, ll)
    assert np.max(np.abs(res.state.values - ref.values)) < 1e-6
    assert res.success_weight == pytest.approx(density, rel=1e-6)


def test_prep_outcome_completeness():
    ax = symmetric_axis(14, 71)
    outcomes = np.linspace(-10, 10, 41)
    weights = [mechanical_state_prep(make_fock_wigner(1), replace(CatPrepConfig(), homodyne_outcome_p=float(p)),
                                     mechanical=make_vacuum(), theta_axis=ax, L_axis=ax).success_weight
               for p in outcomes]
    assert simpson(weights, x=outcomes) == pytest.approx(1.0, abs=1e-3)


def test_regularized_homodyne_converges():
    th, ll = SMALL
    ref = closed_form_sfock(0.2, 2000, th, ll)
    err = {}
    vals = {}
    for sigma in (0.05, 0.025, 0.0125):
        res = mechanical_state_prep(make_fock_wigner(1), CatPrepConfig(), theta_axis=th, L_axis=ll,
                                    homodyne_sigma=sigma)
        vals[sigma] = res.state.values
        err[sigma] = np.max(np.abs(res.state.values - ref.values))
    # second-order approach to the exact record
    assert err[0.05] / err[0.025] == pytest.approx(4.0, rel=0.05)
    assert err[0.025] / err[0.0125] == pytest.approx(4.0, rel=0.05)
    assert np.max(np.abs(vals[0.025] - vals[0.0125])) < 1e-4
    extrapolated = (4 * vals[0.0125] - vals[0.025]) / 3
    assert np.max(np.abs(extrapolated - ref.values)) < 1e-6


def test_negativity_falls_with_efficiency():
    negs = []
    for eta in np.linspace(1.0, 0.5, 6):
        cfg = CatPrepConfig(m=1, eta=float(eta))
        opt = gps_optical_cat(cfg, *OPTICAL_AXES)
        negs.append(negativity_volume(mechanical_state_prep(opt.state, cfg, points=101).state))
    assert all(b <= a for a, b in zip(negs, negs[1:]))


@pytest.mark.parametrize("m", [0, 1])
def test_two_pulse(m):
    res = two_pulse_protocol(CatPrepConfig(m=m), optical_axes=OPTICAL_AXES, points=151)
    neg = negativity_volume(res.final.state)
    if m == 0:
        assert neg < 1e-4
    else:
        assert neg > 0.01
    w = res.weights
    assert res.success_weight == pytest.approx(w["cooling"] * w["optical"] * w["transfer"], rel=1e-14)
    assert res.cooling.n_eff > 0


def test_two_pulse_uncoupled_second_pulse():
    cfg = replace(CatPrepConfig(m=1), chi=0.0, homodyne_outcome_p=0.8)
    res = two_pulse_protocol(cfg, chi_cooling=1.0, optical_axes=OPTICAL_AXES,
                             theta_axis=symmetric_axis(600, 101), L_axis=symmetric_axis(7, 101))
    expected = apply_gaussian(phase_rotation(math.pi / 2), res.cooling_state)
    assert np.allclose(res.rotated_state.cov, expected.cov, rtol=1e-14)
    ref = gaussian_to_grid(expected, symmetric_axis(600, 101), symmetric_axis(7, 101))
    assert np.max(np.abs(res.final.state.values - ref.values / ref.total())) < 1e-9
