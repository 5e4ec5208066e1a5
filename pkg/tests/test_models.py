import numpy as np
import pytest
from scipy.optimize import brentq

from qemcost.canonical import extract_dephasing_rates
from qemcost.dynamics import TimeGrid
from qemcost.errors import DivergenceError, PreconditionError, TruncationError
from qemcost.measures import cumulative_measures
from qemcost.models import (
    ConstantDephasing, DispersiveDephasing, DispersiveModelParams, NmrDephasing, NmrModelParams,
    dispersive_coherence, dispersive_full_oracle, dispersive_rate_envelope, dispersive_rates,
    dispersive_rates_exact, fock_cutoff, nmr_check_invertible, nmr_f, nmr_f_derivative, nmr_full_oracle,
    nmr_lambda_pm, nmr_rates,
)
from qemcost.operators import X

REF = NmrModelParams.reference()
NMR_ROOTS = [0.0025144415289805547, 0.00466303859199948, 0.007209179150321679,
             0.009317759031327895, 0.011913455214535719, 0.013962243757184337]


def quad_residual(p, lam):
    c = (2j * p.J * p.gamma * (1 - 2 * p.s) + p.J**2) / 4
    return abs(lam**2 + p.gamma * lam + c) / (abs(lam) ** 2 + 1)


def f_from_roots(p, t):
    lp, lm = nmr_lambda_pm(p)
    a = 1j * p.J * (2 * p.s - 1) / 2
    return (a * (np.exp(lp * t) - np.exp(lm * t)) - (lm * np.exp(lp * t) - lp * np.exp(lm * t))) / (lp - lm)


def test_params_validation():
    with pytest.raises(PreconditionError):
        NmrModelParams(0.0, 1.0, 0.3)
    with pytest.raises(PreconditionError):
        NmrModelParams(1.0, -1.0, 0.3)
    with pytest.raises(PreconditionError):
        NmrModelParams(1.0, 1.0, 0.6)
    assert NmrModelParams(1.0, 1.0, 0.5).divergence_prone
    assert abs(REF.gamma - 1 / 6.5e-3) < 1e-12 and abs(REF.J - 2 * np.pi * 215) < 1e-12
    with pytest.raises(PreconditionError):
        DispersiveModelParams(1.0, 1.0, 1.0, n_max=5)
    assert DispersiveModelParams(1.0, 1.0, 1.0).n_max == fock_cutoff(1.0) == 19


def test_lambda_roots():
    lp, lm = nmr_lambda_pm(NmrModelParams(10.0, 0.0, 0.3))
    assert abs(lp - 5j) < 1e-14 and abs(lm + 5j) < 1e-14
    p = NmrModelParams(10.0, 4.0, 0.5)
    lp, lm = nmr_lambda_pm(p)
    root = np.sqrt(complex(16 - 100))
    assert abs(lp - (-4 + root) / 2) < 1e-14 and abs(lm - (-4 - root) / 2) < 1e-14
    lp, lm = nmr_lambda_pm(REF)
    assert lp.real > lm.real
    assert quad_residual(REF, lp) < 1e-12 and quad_residual(REF, lm) < 1e-12


def test_f_basic_values():
    assert abs(nmr_f(REF, 0.0) - 1) < 1e-14
    t = np.linspace(0, 0.02, 201)
    p0 = NmrModelParams(1350.0, 0.0, 0.2)
    want = np.cos(1350 * t / 2) + 1j * (2 * 0.2 - 1) * np.sin(1350 * t / 2)
    assert np.abs(nmr_f(p0, t) - want).max() < 1e-12
    assert np.abs(nmr_f(REF, t) - f_from_roots(REF, t)).max() < 1e-12
    assert abs(nmr_f(REF, 50 / REF.gamma)) < 1e-3


def test_f_confluent_limit():
    # s = 1/2 and J = gamma give a double root at -gamma/2
    p = NmrModelParams(2.0, 2.0, 0.5)
    t = np.linspace(0, 5, 51)
    assert np.abs(nmr_f(p, t) - np.exp(-t) * (1 + t)).max() < 1e-14
    assert np.abs(nmr_f_derivative(p, t) - (-t * np.exp(-t))).max() < 1e-14
    near = NmrModelParams(2.0 + 1e-7, 2.0, 0.5)
    assert np.abs(nmr_f(near, t) - nmr_f(p, t)).max() < 1e-6


def test_f_derivative_analytic():
    t = np.linspace(1e-4, 0.02, 50)
    h = 1e-8
    fd = (nmr_f(REF, t + h) - nmr_f(REF, t - h)) / (2 * h)
    assert np.abs(nmr_f_derivative(REF, t) - fd).max() / np.abs(fd).max() < 1e-6


def test_rates_at_zero_and_tan_limit():
    g, S = nmr_rates(REF, 0.0)
    assert abs(g) < 1e-10 and abs(S - REF.J * (2 * REF.s - 1) / 2) < 1e-10
    p = NmrModelParams(100.0, 0.0, 0.5)
    t = np.linspace(0, 0.03, 40)
    g, S = nmr_rates(p, t)
    assert np.abs(g - 50 * np.tan(50 * t)).max() < 1e-9 * np.abs(g).max()
    with pytest.raises(DivergenceError) as info:
        nmr_rates(p, np.pi / 100)
    assert abs(info.value.time - np.pi / 100) < 1e-15


def test_divergence_between_samples_detected():
    p = NmrModelParams(100.0, 0.0, 0.5)
    coarse = np.linspace(0, 0.05, 17)
    with pytest.raises(DivergenceError) as info:
        NmrDephasing(p).rate_trace(coarse)
    assert abs(info.value.time - np.pi / 100) < 1e-12
    nmr_check_invertible(REF, np.linspace(0, 0.02, 401))


def test_rate_sign_changes_match_bisection():
    t = np.linspace(1e-7, 15e-3, 3001)
    g = nmr_rates(REF, t)[0]
    idx = np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:]))
    assert len(idx) >= 2
    roots = [brentq(lambda x: nmr_rates(REF, x)[0], t[i], t[i + 1], xtol=1e-15) for i in idx]
    assert np.abs(np.array(roots) - NMR_ROOTS).max() < 1e-12


def test_nmr_oracle_limits():
    p0 = NmrModelParams(REF.J, 0.0, 0.3)
    grid = TimeGrid(0, 5e-3, 2000)
    red, c = nmr_full_oracle(p0, grid)
    want = np.abs(np.cos(p0.J * grid.times / 2) + 1j * (2 * 0.3 - 1) * np.sin(p0.J * grid.times / 2))
    assert np.abs(np.abs(c) - want).max() < 1e-9
    assert np.abs(red.states[0] - np.full((2, 2), 0.5)).max() < 1e-15


def test_nmr_oracle_matches_f():
    grid = TimeGrid(0, 10e-3, 8000)
    _, c = nmr_full_oracle(REF, grid)
    assert np.abs(c - np.conj(nmr_f(REF, grid.times))).max() < 1e-6


def test_nmr_cost_flat_on_negative_rows():
    tr = NmrDephasing(REF).rate_trace(np.linspace(0, 15e-3, 3001))
    _, _, cost = cumulative_measures(tr)
    g = tr.gammas[0]
    for k in range(len(g) - 1):
        if g[k] < 0 and g[k + 1] < 0:
            assert cost[k + 1] == cost[k]


def test_dispersive_rates_examples():
    p = DispersiveModelParams.from_ratios(1.0, 3.0)
    g, S = dispersive_rates(p, 0.0)
    assert abs(g - 12 / 37) < 1e-15
    z = DispersiveModelParams(3.0, 1.0, 0.0)
    g, S = dispersive_rates(z, np.linspace(0, 5, 11))
    assert np.abs(g).max() == 0 and np.abs(S).max() == 0


@pytest.mark.parametrize("a2,ratio", [(1.0, 3.0), (0.25, 12.0)])
def test_dispersive_zero_spacing_and_envelope(a2, ratio):
    p = DispersiveModelParams.from_ratios(a2, ratio)
    fn = lambda t: dispersive_rates(p, t)[0]
    t = np.linspace(2.0, 12.0, 20001)
    g = fn(t)
    idx = np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:]))
    roots = np.array([brentq(fn, t[i], t[i + 1], xtol=1e-15, rtol=1e-15) for i in idx])
    spacing = np.diff(roots)
    assert np.abs(spacing / (np.pi / (2 * p.chi)) - 1).max() < 1e-6
    tt = np.linspace(0, 10, 5001)
    assert np.all(np.abs(fn(tt)) <= dispersive_rate_envelope(p, tt) * (1 + 1e-12))


def test_dispersive_coherence_forms():
    p = DispersiveModelParams.from_ratios(1.0, 3.0)
    assert abs(dispersive_coherence(p, 0.0) - 1) < 1e-15
    assert abs(dispersive_coherence(p, 0.0, "exact") - 1) < 1e-15
    z = DispersiveModelParams(3.0, 1.0, 0.0)
    t = np.linspace(0, 2, 21)
    assert np.abs(dispersive_coherence(z, t) - np.exp((2j * 3.0 - 1.0) * t)).max() < 1e-14
    assert np.abs(dispersive_coherence(z, t, "exact") - 1).max() == 0
    with pytest.raises(PreconditionError):
        dispersive_coherence(p, t, "other")


def test_exact_rates_are_log_derivative_of_exact_coherence():
    p = DispersiveModelParams.from_ratios(1.0, 3.0)
    t = np.linspace(0, 5, 4001)
    tr = extract_dephasing_rates(dispersive_coherence(p, t, "exact"), t)
    g, S = dispersive_rates_exact(p, t)
    assert np.abs(2 * tr.gammas[0] - g).max() < 1e-6
    assert np.abs(tr.lamb_shift - S).max() < 1e-6


def test_dispersive_oracle_no_decay_limit():
    # the parameter type requires kappa > 0; a negligible kappa stands in for the closed system
    p = DispersiveModelParams(2.0, 1e-12, 1.0)
    grid = TimeGrid(0, 2.0, 4000)
    _, c = dispersive_full_oracle(p, grid)
    want = np.exp(np.cos(2 * 2.0 * grid.times) - 1)
    assert np.abs(np.abs(c) - want).max() < 1e-8


def test_dispersive_oracle_matches_exact_form():
    p = DispersiveModelParams.from_ratios(0.25, 12.0)
    grid = TimeGrid(0, 1.0, 4000)
    _, c = dispersive_full_oracle(p, grid)
    assert np.abs(c - dispersive_coherence(p, grid.times, "exact")).max() < 1e-8
    z = DispersiveModelParams(3.0, 1.0, 0.0)
    _, c = dispersive_full_oracle(z, TimeGrid(0, 1.0, 1000))
    assert np.abs(c - 1).max() < 1e-14


def test_truncation_guard_names_time():
    p = DispersiveModelParams.from_ratios(1.0, 3.0)
    with pytest.raises(TruncationError) as info:
        dispersive_full_oracle(p, TimeGrid(0, 0.1, 1000), guard=1e-40)
    assert info.value.time == 0.0


def test_dephasing_models():
    m = ConstantDephasing(2.0, 0.5)
    tr = m.rate_trace(np.linspace(0, 1, 11))
    assert np.all(tr.gammas[0] == 2.0) and np.all(tr.lamb_shift == 0.5)
    gen = m.generator()
    assert np.abs(gen.hamiltonian(0.3) - 0.25 * np.diag([1, -1])).max() == 0
    nm = NmrDephasing(REF)
    t = np.linspace(0, 1e-2, 7)
    assert np.abs(nm.channel_rate(t) - nmr_rates(REF, t)[0] / 2).max() == 0
    assert nm.rate_bound(15e-3) >= np.abs(nm.channel_rate(np.linspace(0, 15e-3, 1001))).max()
    dm = DispersiveDephasing(DispersiveModelParams.from_ratios(1.0, 3.0), "exact")
    assert abs(dm.lamb_shift(0.0) - 6.0) < 1e-14
    with pytest.raises(PreconditionError):
        DispersiveDephasing(dm.params, "bogus").channel_rate(0.0)
    assert abs(nm.rho0.expectation(X) - 1) < 1e-15
