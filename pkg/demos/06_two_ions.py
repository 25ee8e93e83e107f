"""Two ions sharing a phonon mode: the strong sideband freezes |ee0>, and
the far-detuned auxiliary level mediates an exchange between |eg0> and |ge0>."""

import numpy as np

from nngqc.twoqubit import TwoIonParams, compare_full_effective, controlled_gate_matrix, schmidt_rank, zeno_trapping

p = TwoIonParams(omega_eff=1.0, g=50.0, delta=10.0, n_max=3)
res = compare_full_effective(p)
print(f"transfer period {p.transfer_period:.3f} / Omega, max |P_full - P_eff| = {res.max_deviation:.4f}, "
      f"max leakage {res.leakage.max():.4f}")
for k in range(0, len(res.times), 500):
    print(f"  t = {res.times[k]:7.3f}   full P(ge0) = {res.p_full_ge0[k]:.4f}   effective = {res.p_eff_psi3[k]:.4f}")

print(f"|ee0> survival over one period: min {zeno_trapping(p).minimum:.4f}")

print("\ndeviation versus the detuning:")
for delta in (5.0, 10.0, 20.0, 40.0):
    print(f"  Delta/Omega = {delta:4.0f}:  {compare_full_effective(TwoIonParams(delta=delta)).max_deviation:.4f}")

u = controlled_gate_matrix(np.pi / 2, -np.pi / 2, 0.0)
psi = u @ np.array([0, 1, 0, 0])
print("\ncontrolled gate acting on |eg>:", np.round(psi, 3), " Schmidt rank", schmidt_rank(psi))
