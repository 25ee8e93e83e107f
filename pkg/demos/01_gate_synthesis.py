"""Build the same single-qubit gate three ways and inspect the pulses.

The noncyclic geometric construction (NNGQC) needs two constant-amplitude
segments; the cyclic geometric loop (NGQC) needs three and the direct Rabi
composition (DQC) three as well, with a longer total pulse area.
"""

import numpy as np

from nngqc.core import U1, gate_equivalence, ket
from nngqc.experiments import OMEGA0
from nngqc.schemes import (NNGQCParams, auxiliary_path, bloch_trajectory, dynamical_phase,
                           gate_sequence, geometric_phase, nngqc_angles, nngqc_sequence)

for scheme in ("NNGQC", "NGQC", "DQC"):
    seq = gate_sequence(scheme, "U1", OMEGA0)
    print(f"{scheme:6s} {len(seq.segments)} segments, {seq.duration * 1e6:7.3f} us, "
          f"equivalence to U1 = {gate_equivalence(seq.nominal_unitary(), U1):.15f}")
    for seg in seq.segments:
        print(f"         {seg.duration * 1e6:7.4f} us   area {seg.area / np.pi:.4f} pi   "
              f"phase {seg.phase / np.pi:+.4f} pi")

# the geometric phase is set by phi1 alone; the dynamical phase vanishes
p = NNGQCParams.u1(OMEGA0)
path = auxiliary_path(p)
print("\nNNGQC U1: gamma =", geometric_phase(path), "(pi/4 =", np.pi / 4, ")")
print("dynamical phase along the path:", dynamical_phase(nngqc_sequence(p), path))
print("gate angles:", nngqc_angles(p))

# a few points of the Bloch-sphere path of |g>
traj = bloch_trajectory(nngqc_sequence(p), ket("g"), n_samples=9)
for t, b in zip(traj.times, traj.bloch):
    print(f"  t = {t * 1e6:6.3f} us   S = ({b[0]:+.3f}, {b[1]:+.3f}, {b[2]:+.3f})")
