"""Qubit dispersively coupled to a leaky resonator in a coherent state.

The exact rates follow from the coherence of the joint Fock-space simulation;
the published closed form is printed next to them for comparison.
"""

import numpy as np

from qemcost import (
    DispersiveDephasing, DispersiveModelParams, TimeGrid, cost_identity_check,
    dispersive_full_oracle, dispersive_rates, dispersive_rates_exact, extract_dephasing_rates,
)

for a2, ratio in [(1.0, 3.0), (0.25, 12.0)]:
    p = DispersiveModelParams.from_ratios(a2, ratio)
    grid = TimeGrid(0, 5.0, 8000)
    _, c = dispersive_full_oracle(p, grid)
    ode = extract_dephasing_rates(c, grid.times)
    ge, se = dispersive_rates_exact(p, grid.times)
    gp, sp = dispersive_rates(p, grid.times)
    keep = grid.times >= 0.2
    print(f"|alpha|^2 = {a2}, chi/kappa = {ratio}, Fock cutoff {p.n_max}")
    print("  exact form vs ODE:    ", np.abs(2 * ode.gammas[0] - ge)[keep].max() / np.abs(ge[keep]).max())
    print("  published form vs ODE:", np.abs(2 * ode.gammas[0] - gp)[keep].max() / np.abs(ge[keep]).max())
    for form in ("exact", "printed"):
        tr = DispersiveDephasing(p, form).rate_trace(np.linspace(0, 5, 3001))
        rep = cost_identity_check(tr, 5.0)
        print(f"  {form:7s} C(5/kappa) = {rep.cost_direct:.6f}  F = {rep.F:.6f}  D = {rep.D:.6f}")
