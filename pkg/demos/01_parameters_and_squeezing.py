"""From device parameters to a squeezed, cooled torsional mode.

Run:  python3 demos/01_parameters_and_squeezing.py
"""

from torsion_wigner.params import derive_params, photon_threshold, reference_params, thermal_occupation
from torsion_wigner.protocols import single_pulse_squeeze, squeeze_by_conditioning

p = reference_params()
d = derive_params(p)
print(f"torsional wavevector   k_t      = {d.k_t:.6g} 1/m")
print(f"effective inertia      I_eff    = {d.I_eff:.5g} kg m^2")
print(f"zero-point angle       theta_zp = {d.theta_zp:.4g} rad")
print(f"photons for chi = 1    N_in     = {photon_threshold(p.g_coupling, p.cavity_kappa, 1.0):.4g}")

# A thermal mode at 100 mK, then one pulse with a p_L = 0 homodyne record.
n_bar = thermal_occupation(p.torsion_freq_Omega, 0.1)
print(f"\nthermal occupation at 100 mK: {n_bar:.6g}")
for chi in (0.5, 1.0, 2.0):
    rep = single_pulse_squeeze(n_bar, chi)
    print(f"chi={chi:<4} var(theta)={rep.var_theta_out:.6f}  var(L)={rep.var_L_out:.6g}  "
          f"n_eff={rep.n_eff:.4g} (asymptote {rep.n_eff_asymptotic:.4g})")

# The formulas are a shortcut through Gaussian conditioning; check one against the other.
state, density = squeeze_by_conditioning(n_bar, 1.0)
rep = single_pulse_squeeze(n_bar, 1.0)
print(f"\nconditioning vs formula: {abs(state.cov[0, 0] - rep.var_theta_out):.2e}, "
      f"{abs(state.cov[1, 1] - rep.var_L_out):.2e}; outcome density {density:.4g}")
