"""Average infidelity when the systematic error is drawn from a Gaussian.

The quadrature result is cross-checked against plain Monte Carlo.
"""

from nngqc.experiments import (DETUNING_WINDOW, RABI_WINDOW, GaussianSpec, gaussian_average_mc, khz,
                               table1)

for row in table1():
    cells = "  ".join(f"{k} {v:.2f}%" for k, v in row.infidelity_pct.items())
    print(f"{row.label:24s} {cells}")

spec = GaussianSpec(0.1, window=RABI_WINDOW)
mc, se = gaussian_average_mc("NNGQC", "U1", "rabi", spec, n_samples=200_000, seed=1)
print(f"\nMonte Carlo check (Rabi, sigma 0.1, NNGQC): {mc:.3f} +/- {se:.3f} %")
spec = GaussianSpec(khz(10), window=DETUNING_WINDOW)
mc, se = gaussian_average_mc("NGQC", "U1", "detuning", spec, n_samples=200_000, seed=2)
print(f"Monte Carlo check (detuning, 10 kHz, NGQC): {mc:.3f} +/- {se:.3f} %")
