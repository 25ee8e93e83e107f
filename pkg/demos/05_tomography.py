"""Process tomography of the U1 gate for each scheme, with dephasing,
imperfect ground-state preparation and finite shots."""

import numpy as np

from nngqc.core import ket, projector
from nngqc.experiments import scheme_comparison
from nngqc.tomography import ShotConfig, qst, stokes_errors

print("exact probabilities:")
for r in scheme_comparison():
    print(f"  {r.scheme:6s} raw {r.raw:.4f}   calibrated {r.calibrated:.4f}")

print("50000 shots per measurement, seed 7:")
for r in scheme_comparison(shots=ShotConfig(50000, 7)):
    print(f"  {r.scheme:6s} raw {r.raw:.4f}   calibrated {r.calibrated:.4f}")

# the spread of repeated state tomography follows binomial statistics
rho = projector((ket("g") + 0.6j * ket("e")) / np.sqrt(1.36))
samples = np.array([qst(rho, ShotConfig(20000, 11), key=(k,)).as_array() for k in range(500)])
print("\nStokes spread over 500 repetitions vs binomial prediction:")
for k, pred in zip((1, 2, 3), stokes_errors(rho, 20000)[1:]):
    print(f"  S{k}: {samples[:, k].std(ddof=1):.5f}  vs  {pred:.5f}")
