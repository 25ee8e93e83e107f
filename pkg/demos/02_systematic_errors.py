"""Output-state fidelity of the U1 gate under Rabi-amplitude and detuning errors."""

import numpy as np

from nngqc.experiments import compare_sweep, khz

rabi = np.linspace(-0.2, 0.2, 9)
f = compare_sweep("U1", "rabi", rabi)
print("dOmega/Omega0    NNGQC      NGQC       DQC")
for i, x in enumerate(rabi):
    print(f"{x:+12.2f}  {f['NNGQC'][i]:.6f}  {f['NGQC'][i]:.6f}  {f['DQC'][i]:.6f}")

det_khz = np.linspace(-20, 20, 9)
f = compare_sweep("U1", "detuning", khz(det_khz))
print("\nDelta/2pi (kHz)  NNGQC      NGQC       DQC")
for i, x in enumerate(det_khz):
    print(f"{x:+15.1f}  {f['NNGQC'][i]:.6f}  {f['NGQC'][i]:.6f}  {f['DQC'][i]:.6f}")
