"""Monte Carlo quasiprobability mitigation of dephasing.

Each trajectory applies signed Z recoveries at Poisson times; the sign-weighted
average scaled by the cost C reproduces the noiseless expectation value.
"""

import numpy as np

from qemcost import ConstantDephasing, NmrDephasing, NmrModelParams, ideal_expectation, run_mitigated_estimate
from qemcost.operators import X

model = ConstantDephasing(100.0)
est = run_mitigated_estimate(model, X, 0.01, 10**6, seed=7)
print(f"constant rate: C = {est.cost:.5f} (e^2 = {np.e**2:.5f})")
print(f"  <X> = {est.mean:.4f} +- {est.std_error:.4f}, noiseless 1, z = {est.z_score(1.0):.2f}")

nmr = NmrDephasing(NmrModelParams.reference())
for T in (2e-3, 5e-3):
    ideal = ideal_expectation(nmr, X, T)
    est = run_mitigated_estimate(nmr, X, T, 10**6, seed=11, workers=2)
    print(f"NMR, T = {T * 1e3:.0f} ms: C = {est.cost:.4f}, <X> = {est.mean:.4f} +- {est.std_error:.4f}, "
          f"noiseless {ideal:.4f}, z = {est.z_score(ideal):.2f}")
