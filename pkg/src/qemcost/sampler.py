"""Quasiprobability error mitigation of dephasing noise by Monte Carlo sampling.

The continuous recovery ``exp(-int g (Z . Z - id))`` is unravelled as a Poisson
process of ``Z`` recoveries with rate ``|g(t)|``; each recovery carries the sign
``-sgn g(t)``. Because ``Z`` commutes with the generator, every recovery is
applied at readout. A trajectory with ``N`` recoveries and sign ``s`` reports
``C s o`` where ``o`` is a single-shot outcome of the observable measured on
``Z^N rho_noisy(T) Z^N``; its mean is the noiseless expectation value.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import TimeGrid, default_steps, evolve
from .errors import PreconditionError, RateBoundError
from .measures import qem_cost_unital
from .models import DephasingModel
from .operators import I2, Z, hermitian_eigendecompose, is_hermitian

DEFAULT_BLOCK = 1 << 16
COST_GRID = 4001


@dataclass(frozen=True)
class RecoveryOperation:
    """Signed decomposition ``sum_i mu_i op_i . op_i^dag`` of a recovery step."""

    t: float
    terms: tuple[tuple[float, np.ndarray], ...]

    @property
    def cost_factor(self) -> float:
        return float(sum(abs(mu) for mu, _ in self.terms))

    @property
    def probabilities(self) -> np.ndarray:
        mu = np.array([abs(m) for m, _ in self.terms])
        return mu / mu.sum()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(mu * op @ rho @ op.conj().T for mu, op in self.terms)


def dephasing_recovery(gamma_t: float, delta_t: float, t: float = 0.0) -> RecoveryOperation:
    """First-order inverse of one step ``rho -> (1 - g dt) rho + g dt Z rho Z``.

    ``gamma_t`` is the Pauli-channel rate ``g``. The weights are
    ``mu_I = 1 + g dt`` and ``mu_Z = -g dt``, so ``c = 1 + dt (g + |g|)``: for
    ``g < 0`` both weights are nonnegative and the step is free.
    """
    if delta_t < 0:
        raise PreconditionError(f"delta_t must be nonnegative, got {delta_t}")
    x = gamma_t * delta_t
    if abs(x) > 0.1:
        raise PreconditionError(f"|gamma| dt = {abs(x):.3g} exceeds 0.1; step too large")
    return RecoveryOperation(float(t), ((1.0 + x, I2), (-x, Z)))


def _thinning(rate, T, rate_bound, rng, size):
    """Candidate Poisson points for ``size`` independent trajectories, thinned by ``rate``.

    Returns ``(owner, times, rates)`` for the accepted points, ordered by owner then time.
    """
    counts = rng.poisson(rate_bound * T, size=size)
    total = int(counts.sum())
    owner = np.repeat(np.arange(size), counts)
    times = rng.uniform(0.0, T, size=total)
    u = rng.uniform(0.0, 1.0, size=total)
    if total == 0:
        return owner, times, times
    values = np.broadcast_to(np.asarray(rate(times), dtype=float), times.shape)
    over = np.flatnonzero(np.abs(values) > rate_bound * (1 + 1e-12))
    if over.size:
        k = over[0]
        raise RateBoundError(f"rate {abs(values[k]):.6g} at t = {times[k]:.6g} exceeds bound {rate_bound:.6g}")
    keep = u * rate_bound < np.abs(values)
    owner, times, values = owner[keep], times[keep], values[keep]
    order = np.lexsort((times, owner))
    return owner[order], times[order], values[order]


def sample_jump_times(rate, T: float, rate_bound: float, rng: np.random.Generator) -> np.ndarray:
    """One inhomogeneous Poisson sample on ``[0, T]`` by thinning against ``rate_bound``.

    ``rate`` must be vectorized and nonnegative; a value above the bound raises
    :class:`RateBoundError`.
    """
    if T < 0 or rate_bound < 0:
        raise PreconditionError("T and rate_bound must be nonnegative")
    if rate_bound == 0 or T == 0:
        return np.empty(0)

    def checked(t):
        r = np.asarray(rate(t), dtype=float)
        if np.any(r < 0):
            raise PreconditionError("jump rate must be nonnegative")
        return r

    _, times, _ = _thinning(checked, T, rate_bound, rng, 1)
    return times


@dataclass(frozen=True)
class MitigatedEstimate:
    mean: float
    std_error: float
    cost: float
    n_trajectories: int
    seed: int
    raw_sign_counts: tuple[int, int]

    def z_score(self, ideal: float) -> float:
        diff = abs(self.mean - ideal)
        if self.std_error == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.std_error


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _readout_tables(model: DephasingModel, observable: np.ndarray, T: float):
    """Eigenvalues of the observable and outcome CDFs after an even / odd number of Z recoveries."""
    rho = noisy_state(model, T)
    vals, vecs = hermitian_eigendecompose(observable)
    cdfs = []
    for state in (rho, Z @ rho @ Z):
        p = np.real(np.einsum("ia,ij,ja->a", vecs.conj(), state, vecs))
        p[p < 1e-14] = 0.0
        cdfs.append(np.cumsum(p / p.sum()))
    return vals, np.array(cdfs)


def _run_block(args):
    model, T, bound, vals, cdfs, seed, block, size = args
    rng = _block_rng(seed, block)
    if bound > 0:
        owner, _, g = _thinning(model.channel_rate, T, bound, rng, size)
    else:
        owner, g = np.empty(0, dtype=int), np.empty(0)
    n_jumps = np.bincount(owner, minlength=size)
    n_flip = np.bincount(owner[g > 0], minlength=size)
    sign = np.where(n_flip % 2 == 0, 1.0, -1.0)
    cdf = cdfs[n_jumps % 2]
    u = rng.uniform(0.0, 1.0, size=size)
    pick = np.minimum((u[:, None] >= cdf).sum(axis=1), len(vals) - 1)
    x = sign * vals[pick]
    mean = float(np.mean(x))
    m2 = float(np.sum((x - mean) ** 2))
    n_plus = int(np.count_nonzero(sign > 0))
    return size, mean, m2, n_plus, size - n_plus


def _combine(parts):
    n, mean, m2, plus, minus = 0, 0.0, 0.0, 0, 0
    for nb, mb, m2b, pb, qb in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n, plus, minus = tot, plus + pb, minus + qb
    return n, mean, m2, plus, minus


def run_mitigated_estimate(model: DephasingModel, observable, T: float, n: int, seed: int,
                           block_size: int = DEFAULT_BLOCK, workers: int = 1) -> MitigatedEstimate:
    """Sign-weighted Monte Carlo estimate of the noiseless ``<observable>`` at time ``T``.

    Trajectories are drawn in fixed-size blocks, each with its own counter-based
    stream keyed by ``(seed, block index)``, and reduced in block order, so the
    result is bit-identical for any ``workers``.
    """
    if not isinstance(model, DephasingModel):
        raise PreconditionError("run_mitigated_estimate needs a single-qubit dephasing model")
    if int(n) != n or n < 100:
        raise PreconditionError(f"need at least 100 trajectories, got {n}")
    if not T > 0:
        raise PreconditionError(f"T must be positive, got {T}")
    obs = np.asarray(observable, dtype=complex)
    if obs.shape != (2, 2) or not is_hermitian(obs):
        raise PreconditionError("observable must be a Hermitian 2x2 matrix")
    n, seed = int(n), int(seed)

    cost = qem_cost_unital(model.rate_trace(np.linspace(0.0, T, COST_GRID)), T)
    bound = model.rate_bound(T)
    vals, cdfs = _readout_tables(model, obs, T)
    sizes = [block_size] * (n // block_size) + ([n % block_size] if n % block_size else [])
    jobs = [(model, T, bound, vals, cdfs, seed, b, s) for b, s in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    total, mean, m2, plus, minus = _combine(parts)
    std = math.sqrt(max(m2, 0.0) / (total - 1))
    return MitigatedEstimate(cost * mean, cost * std / math.sqrt(total), cost, total, seed, (plus, minus))


@lru_cache(maxsize=32)
def _final_state(model: DephasingModel, T: float, noisy: bool) -> np.ndarray:
    # models are frozen, so the RK4 result can be reused across calls
    gen = model.generator() if noisy else model.generator().without_noise()
    steps = default_steps(gen, 0.0, T)
    rho = evolve(gen, model.rho0, TimeGrid(0.0, T, steps)).states[-1].copy()
    rho.setflags(write=False)
    return rho


def noisy_state(model: DephasingModel, T: float) -> np.ndarray:
    """State at ``T`` under the full (noisy) dephasing dynamics."""
    return _final_state(model, float(T), True)


def ideal_expectation(model: DephasingModel, observable, T: float) -> float:
    """``Tr[rho_I(T) observable]`` with every decay rate forced to zero."""
    rho = _final_state(model, float(T), False)
    return float(np.real(np.trace(rho @ np.asarray(observable))))
