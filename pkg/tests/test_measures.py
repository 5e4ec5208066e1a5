import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qemcost.canonical import RateTrace, build_process_matrix, canonical_rates, canonical_series
from qemcost.dynamics import TimeLocalGenerator
from qemcost.errors import PreconditionError
from qemcost.measures import (
    MeasureReport, cost_identity_check, cumulative_measures, decay_rate_measure, markovian_bound,
    qem_cost_general, qem_cost_unital, rhp_witness,
)
from qemcost.models import NmrDephasing, NmrModelParams, nmr_generator
from qemcost.operators import X, Y, Z, pauli_basis

# adaptive quadrature between brentq roots of the analytic channel rate, [0, 15 ms]
NMR_F = 0.6744735492331687
NMR_D = 1.8254537767979124


def sin_trace(n=2001):
    t = np.linspace(0, 2 * np.pi, n)
    return RateTrace(t, [np.sin(t)])


def test_constant_rate():
    t = np.linspace(0, 1, 51)
    tr = RateTrace(t, [np.full(51, 1.0)])
    assert decay_rate_measure(tr, 0, 1) == 0
    assert abs(markovian_bound(tr, 0, 1) - 1) < 1e-14
    assert abs(qem_cost_unital(tr, 1.0) - np.e**2) < 1e-13
    rep = cost_identity_check(tr, 1.0)
    assert rep.F == 0 and abs(rep.cost_direct - np.exp(2 * rep.D)) < 1e-13


def test_sin_rate():
    tr = sin_trace()
    assert abs(decay_rate_measure(tr, 0, 2 * np.pi) - 2) < 1e-11
    assert abs(markovian_bound(tr, 0, 2 * np.pi) - 4) < 1e-11
    rep = cost_identity_check(tr, 2 * np.pi)
    assert abs(rep.cost_direct / np.e**4 - 1) < 1e-10
    assert rep.relative_identity_error < 1e-12


def test_cost_flat_on_negative_interval():
    tr = sin_trace()
    t = tr.times
    _, _, cost = cumulative_measures(tr)
    neg = (t >= np.pi) & (t <= 2 * np.pi)
    assert np.abs(cost[neg] / cost[neg][0] - 1).max() < 1e-12
    assert np.all(np.diff(cost) >= 0)
    assert qem_cost_unital(tr, 4.0) == qem_cost_unital(tr, 5.0)


def test_window_errors():
    tr = sin_trace()
    with pytest.raises(PreconditionError):
        decay_rate_measure(tr, 1.0, 0.5)
    with pytest.raises(PreconditionError):
        markovian_bound(tr, 0, 7.0)


def test_nmr_measures_against_quadrature_oracle():
    tr = NmrDephasing(NmrModelParams.reference()).rate_trace(np.linspace(0, 15e-3, 3001))
    F = decay_rate_measure(tr, 0, 15e-3)
    D = markovian_bound(tr, 0, 15e-3)
    assert abs(F / NMR_F - 1) < 1e-8 and abs(D / NMR_D - 1) < 1e-8
    assert 0 < F < D
    rep = cost_identity_check(tr, 15e-3)
    assert rep.relative_identity_error < 1e-8


def test_cumulative_matches_windowed():
    tr = NmrDephasing(NmrModelParams.reference()).rate_trace(np.linspace(0, 15e-3, 1501))
    F, D, cost = cumulative_measures(tr)
    for k in (7, 500, 1500):
        T = tr.times[k]
        assert abs(F[k] - decay_rate_measure(tr, 0, T)) < 1e-12
        assert abs(D[k] - markovian_bound(tr, 0, T)) < 1e-12
        assert abs(cost[k] / qem_cost_unital(tr, T) - 1) < 1e-12
    assert np.abs(cost / np.exp(2 * (D - F)) - 1).max() < 1e-12


def test_measure_report_invariants():
    with pytest.raises(ValueError):
        MeasureReport(0, 1, 2.0, 1.0, np.e**-2, np.e**-2)
    with pytest.raises(ValueError):
        MeasureReport(0, 1, 0.0, 1.0, np.e**2, np.e**2 * (1 + 1e-6))


rate_fn = st.tuples(
    st.floats(-3, 3), st.floats(0.1, 8), st.floats(0, 6.3), st.floats(-1, 1),
)


@settings(max_examples=40, deadline=None)
@given(st.lists(rate_fn, min_size=1, max_size=3), st.floats(0.05, 0.95))
def test_additivity_and_ordering(params, frac):
    t = np.linspace(0, 2.0, 801)
    g = [a * np.sin(w * t + p) + b for a, w, p, b in params]
    tr = RateTrace(t, g)
    t1 = float(t[int(frac * 800)])
    for fn in (decay_rate_measure, markovian_bound):
        whole = fn(tr, 0, 2.0)
        parts = fn(tr, 0, t1) + fn(tr, t1, 2.0)
        assert abs(whole - parts) <= 1e-9 * max(1.0, whole)
    F, D = decay_rate_measure(tr, 0, 2.0), markovian_bound(tr, 0, 2.0)
    assert F >= 0 and D >= F
    c = qem_cost_unital(tr, 2.0)
    assert c >= 1
    assert abs(c - np.exp(2 * (D - F))) <= 1e-8 * c


def test_general_cost_examples():
    b = pauli_basis(1)
    times = np.linspace(0, 1, 11)
    zero = TimeLocalGenerator.build(2, None, [(Z, 0.0)])
    assert qem_cost_general(canonical_series(zero, times, b)) == 1.0
    const = TimeLocalGenerator.build(2, None, [(Z, 0.8)])
    assert abs(qem_cost_general(canonical_series(const, times, b)) - np.exp(1.6)) < 1e-13


def test_general_cost_matches_unital_on_nmr():
    model = NmrDephasing(NmrModelParams.reference())
    times = np.linspace(0, 15e-3, 1501)
    decs = canonical_series(model.generator(), times, pauli_basis(1))
    c_gen = qem_cost_general(decs)
    c_uni = qem_cost_unital(model.rate_trace(times), 15e-3)
    assert abs(c_gen / c_uni - 1) < 1e-9


def test_general_cost_multi_pauli():
    gen = TimeLocalGenerator.build(2, None, [(X, np.sin), (Y, lambda t: 0.3 * np.cos(t)), (Z, lambda t: 0.5 + 0 * t)])
    times = np.linspace(0, 4, 801)
    c_gen = qem_cost_general(canonical_series(gen, times, pauli_basis(1)))
    tr = RateTrace(times, [np.sin(times), 0.3 * np.cos(times), np.full_like(times, 0.5)])
    assert abs(c_gen / qem_cost_unital(tr, 4.0) - 1) < 1e-9


def deph(g):
    return TimeLocalGenerator.build(2, 0.5 * 3.0 * Z, [(Z, g)])


def test_rhp_witness_signs():
    assert rhp_witness(deph(2.0), 0.0) <= 1e-12
    assert rhp_witness(deph(-2.0), 0.0) > 0
    assert rhp_witness(deph(0.0), 0.0) <= 1e-12


def test_rhp_witness_literal_formula_converges():
    gen = TimeLocalGenerator.build(2, None, [(Z, -1.5)])
    limit = rhp_witness(gen, 0.0)
    assert abs(rhp_witness(gen, 0.0, eps=1e-7) - limit) < 1e-5
    assert abs(rhp_witness(TimeLocalGenerator.build(2, None, [(Z, 1.5)]), 0.0, eps=1e-7)) < 1e-6


def test_rhp_witness_proportional_to_negative_rate():
    gen = TimeLocalGenerator.build(2, None, [(Z, np.sin)])
    ts = np.linspace(np.pi + 0.05, 2 * np.pi - 0.05, 25)
    ratio = np.array([rhp_witness(gen, t) / -np.sin(t) for t in ts])
    assert np.abs(ratio / ratio.mean() - 1).max() < 0.01
    assert abs(ratio.mean() - 2) < 1e-9


def test_rhp_witness_two_qubit_cp_model():
    gen = nmr_generator(NmrModelParams.reference())
    assert rhp_witness(gen, 0.0) <= 1e-6 * 153.9
