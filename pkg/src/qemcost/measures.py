"""Non-Markovianity measures and error-mitigation costs from canonical rates.

For a window ``[t, t']`` and Pauli-channel rates ``gamma_k``:

* decay-rate measure ``F = sum_k int (|gamma_k| - gamma_k)/2``
* Markovian bound ``D = sum_k int |gamma_k|``
* sampling cost ``C = exp(sum_k int (|gamma_k| + gamma_k)) = exp(2 (D - F))``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quadrature import interpolant, signed_pieces
from .canonical import CanonicalDecomposition, RateTrace, track_canonical_rates
from .dynamics import TimeLocalGenerator, master_rhs
from .errors import PreconditionError
from .operators import maximally_entangled, trace_norm


@dataclass(frozen=True)
class MeasureReport:
    t_from: float
    t_to: float
    F: float
    D: float
    cost_direct: float
    cost_via_identity: float

    def __post_init__(self):
        tol = 1e-12 * max(1.0, self.D)
        if self.F < -tol or self.F > self.D + tol:
            raise ValueError(f"measure ordering violated: F={self.F}, D={self.D}")
        if self.cost_direct < 1 - 1e-12 or self.cost_via_identity < 1 - 1e-12:
            raise ValueError("costs must be >= 1")
        if abs(self.cost_direct - self.cost_via_identity) > 1e-8 * self.cost_direct:
            raise ValueError(
                f"cost identity violated: {self.cost_direct!r} vs {self.cost_via_identity!r}")

    @property
    def relative_identity_error(self) -> float:
        return abs(self.cost_direct - self.cost_via_identity) / self.cost_direct


def _parts(rates: RateTrace, t: float, t_prime: float) -> tuple[float, float]:
    rates.check_window(t, t_prime)
    t, t_prime = max(t, rates.t0), min(t_prime, rates.t1)
    pos = neg = 0.0
    for spline in rates.splines:
        _, ints = signed_pieces(rates.times, spline, t, t_prime)
        pos += float(np.sum(np.clip(ints, 0, None)))
        neg -= float(np.sum(np.clip(ints, None, 0)))
    return pos, neg


def decay_rate_measure(rates: RateTrace, t: float, t_prime: float) -> float:
    """Integrated negative part of the rates over ``[t, t_prime]``."""
    return _parts(rates, t, t_prime)[1]


def markovian_bound(rates: RateTrace, t: float, t_prime: float) -> float:
    """Integrated absolute rates over ``[t, t_prime]``."""
    pos, neg = _parts(rates, t, t_prime)
    return pos + neg


def _cost_exponent(rates: RateTrace, t: float, t_prime: float) -> float:
    # Simpson on g + |g| piecewise; negative pieces contribute exact zeros and
    # fsum keeps the total independent of how many of them are appended
    terms = []
    for spline in rates.splines:
        edges, _ = signed_pieces(rates.times, spline, t, t_prime)
        a, b = edges[:-1], edges[1:]
        fa, fm, fb = spline(a), spline((a + b) / 2), spline(b)
        terms.extend((b - a) / 6 * ((fa + np.abs(fa)) + 4 * (fm + np.abs(fm)) + (fb + np.abs(fb))))
    return math.fsum(terms)


def qem_cost_unital(rates: RateTrace, T: float, t0: float | None = None) -> float:
    """Sampling cost ``exp(sum_k int (|gamma_k| + gamma_k))`` for unitary jumps."""
    t0 = rates.t0 if t0 is None else t0
    rates.check_window(t0, T)
    return float(np.exp(_cost_exponent(rates, t0, min(T, rates.t1))))


def cost_identity_check(rates: RateTrace, T: float, t0: float | None = None) -> MeasureReport:
    t0 = rates.t0 if t0 is None else t0
    pos, neg = _parts(rates, t0, T)
    F, D = neg, pos + neg
    return MeasureReport(t0, T, F, D, qem_cost_unital(rates, T, t0), float(np.exp(2 * (D - F))))


def cumulative_measures(rates: RateTrace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``F``, ``D`` and the cost from ``t0`` to every grid time of the trace."""
    n = len(rates.times)
    pos = np.zeros(n - 1)
    neg = np.zeros(n - 1)
    expo = np.zeros(n - 1)
    for spline in rates.splines:
        edges, ints = signed_pieces(rates.times, spline, rates.t0, rates.t1)
        a, b = edges[:-1], edges[1:]
        fa, fm, fb = spline(a), spline((a + b) / 2), spline(b)
        piece_cost = (b - a) / 6 * ((fa + np.abs(fa)) + 4 * (fm + np.abs(fm)) + (fb + np.abs(fb)))
        owner = np.clip(np.searchsorted(rates.times, a, side="right") - 1, 0, n - 2)
        np.add.at(pos, owner, np.clip(ints, 0, None))
        np.add.at(neg, owner, -np.clip(ints, None, 0))
        np.add.at(expo, owner, piece_cost)
    F = np.concatenate([[0.0], np.cumsum(neg)])
    D = np.concatenate([[0.0], np.cumsum(pos + neg)])
    cost = np.exp(np.concatenate([[0.0], np.cumsum(expo)]))
    return F, D, cost


def qem_cost_general(decomps, T: float | None = None, min_overlap: float = 0.99) -> float:
    """Sampling cost ``exp(int (-q_0 + sum_{l>=1} |q_l|))`` from canonical decompositions.

    ``decomps`` is a time-ordered sequence of :class:`CanonicalDecomposition`;
    ``q_0`` is the rate whose canonical operator overlaps the identity.
    """
    decomps: list[CanonicalDecomposition] = list(decomps)
    times, q0, rest = track_canonical_rates(decomps, min_overlap)
    T = times[-1] if T is None else T
    if not times[0] <= T <= times[-1] * (1 + 1e-12):
        raise PreconditionError(f"T = {T} outside the sampled range")
    T = min(T, times[-1])
    spline0 = interpolant(times, q0)
    _, ints0 = signed_pieces(times, spline0, times[0], T)
    exponent = -float(np.sum(ints0))
    for row in rest:
        _, ints = signed_pieces(times, interpolant(times, row), times[0], T)
        exponent += float(np.sum(np.abs(ints)))
    return float(np.exp(exponent))


def _choi_derivative(gen: TimeLocalGenerator, t: float) -> np.ndarray:
    d = gen.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            out += np.kron(e, master_rhs(gen, t, e)) / d
    return out


def rhp_witness(gen: TimeLocalGenerator, t: float, eps: float | None = None) -> float:
    """Rate of growth of the Choi-state trace norm under the propagator at ``t``.

    ``g = (|| (id x E_{t+eps,t})(Phi) ||_1 - 1) / eps`` with ``E`` the first-order
    propagator and ``Phi`` maximally entangled. With ``eps=None`` the limit
    ``eps -> 0`` is taken exactly: ``g = 2 * sum |negative eigenvalues of Q A Q|``
    where ``A`` is the generator applied to ``Phi`` and ``Q = 1 - Phi``. The limit
    drops the ``O(eps)`` contribution of the Hamiltonian, so it vanishes for
    every CP-divisible step.
    """
    a = _choi_derivative(gen, t)
    phi = maximally_entangled(gen.dim)
    if eps is not None:
        return (trace_norm(phi + eps * a) - 1.0) / eps
    q = np.eye(len(phi)) - phi
    block = q @ a @ q
    ev = np.linalg.eigvalsh((block + block.conj().T) / 2)
    return float(-2 * np.sum(ev[ev < 0]))
