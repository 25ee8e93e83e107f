"""Infidelity of the NNGQC U1 gate versus dephasing, with an exponential fit."""

import numpy as np

from nngqc.experiments import GAMMA_COMPARISON, OMEGA0, dephasing_curve_and_fit, infidelity_at, threshold_ratio

curve, fit = dephasing_curve_and_fit(np.linspace(0, 0.05, 51))
print(f"fit eps = a (exp(-b Gamma/Omega0) - 1):  a = {fit.a:.4f}, b = {fit.b:.4f}, "
      f"rms residual {fit.residual / np.sqrt(curve.ratios.size):.1e}")
for r, e in list(zip(curve.ratios, curve.infidelity))[::10]:
    print(f"  Gamma/Omega0 = {r:.3f}   infidelity = {e:.5f}   fit = {fit(r):.5f}")
print(f"infidelity reaches 1e-2 at Gamma/Omega0 = {threshold_ratio():.4e}")
ratio = GAMMA_COMPARISON / OMEGA0
print(f"at Gamma = {GAMMA_COMPARISON:g} /s and Omega0/2pi = 67.9 kHz (ratio {ratio:.2e}): "
      f"infidelity {infidelity_at(ratio):.2e}")
