"""Process-matrix form of a time-local generator and its canonical rates.

The dissipator is rewritten as ``sum_ij M_ij G_i rho G_j`` over a Pauli basis
``{G_i}``; diagonalizing the Hermitian matrix ``M`` gives canonical rates
``q_l`` and operators ``B_l = sum_i u_il G_i``.

Rate convention used throughout the package: a :class:`RateTrace` stores rates
for jumps normalized to ``L^dag L = I`` (Pauli channels). A qubit dephasing
equation ``drho/dt = gamma (Z rho Z - rho)`` therefore has rate ``gamma`` and its
coherence decays as ``exp(-2 gamma t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._quadrature import interpolant, signed_pieces
from .dynamics import TimeLocalGenerator
from .errors import DivergenceError, PreconditionError
from .operators import BasisSet, hermitian_eigendecompose, hermiticity_residual


@dataclass(frozen=True)
class ProcessMatrix:
    t: float
    m: np.ndarray
    basis: BasisSet

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``sum_ij M_ij G_i rho G_j``."""
        g = self.basis.ops
        return np.einsum("ij,iab,bc,jcd->ad", self.m, g, rho, g, optimize=True)


@dataclass(frozen=True)
class CanonicalDecomposition:
    t: float
    q: np.ndarray
    b_ops: np.ndarray  # (d**2, d, d)
    u: np.ndarray

    @property
    def identity_overlap(self) -> np.ndarray:
        """``|u_0l|^2``: weight of the identity in each canonical operator."""
        return np.abs(self.u[0]) ** 2

    @property
    def identity_slot(self) -> int:
        return int(np.argmax(self.identity_overlap))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``sum_l q_l B_l rho B_l^dag``."""
        b = self.b_ops
        return np.einsum("l,lab,bc,ldc->ad", self.q, b, rho, b.conj(), optimize=True)


def build_process_matrix(gen: TimeLocalGenerator, t: float, basis: BasisSet) -> ProcessMatrix:
    """Process matrix of the dissipative part of ``gen`` at time ``t``.

    With jump expansions ``L_k = sum_i l_ki G_i`` (``l_ki = Tr[G_i L_k]/d``) and
    ``L_k^dag L_k = sum_i a_ki G_i``:

        M_ij = sum_k gamma_k l_ki conj(l_kj)              (jump term)
        M_i0 += -1/2 sum_k gamma_k a_ki,  M_0j += -1/2 sum_k gamma_k a_kj

    so ``M_00 = -sum_k gamma_k Tr[L_k^dag L_k]/d``. ``M`` depends only on the
    dissipator, so rescaling a jump and its rate together leaves it unchanged.
    The Hamiltonian is not included.
    """
    if gen.dim != basis.dim:
        raise PreconditionError(f"generator dim {gen.dim} does not match basis dim {basis.dim}")
    n = len(basis)
    m = np.zeros((n, n), dtype=complex)
    for jump, rate in zip(gen.jumps_at(t), gen.rates_at(t)):
        if rate == 0:
            continue
        coeff = basis.coefficients(jump)
        m += rate * np.outer(coeff, coeff.conj())
        a = basis.coefficients(jump.conj().T @ jump).real
        m[:, 0] -= 0.5 * rate * a
        m[0, :] -= 0.5 * rate * a
    return ProcessMatrix(float(t), m, basis)


def canonical_rates(pm: ProcessMatrix) -> CanonicalDecomposition:
    if hermiticity_residual(pm.m) > 1e-10 * max(1.0, float(np.max(np.abs(pm.m)))):
        raise PreconditionError("process matrix is not Hermitian")
    q, u = hermitian_eigendecompose(pm.m)
    b_ops = np.einsum("il,iab->lab", u, pm.basis.ops)
    return CanonicalDecomposition(pm.t, q, b_ops, u)


def track_canonical_rates(decomps, min_overlap: float = 0.99) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Follow canonical rates through time with continuous labels.

    Sorted eigenvalues swap places whenever two rates cross; here each
    eigenvector is matched to its predecessor by maximal overlap, so a rate
    that changes sign stays in one slot. The identity slot is the eigenvector
    with the largest identity component, which must reach ``min_overlap``.

    Returns ``(times, q_identity, q_others)`` with ``q_others`` of shape
    ``(d**2 - 1, n_times)``.
    """
    decomps = list(decomps)
    times = np.array([d.t for d in decomps])
    q0 = np.empty(len(decomps))
    rest = np.empty((len(decomps[0].q) - 1, len(decomps)))
    prev = None
    for n, dec in enumerate(decomps):
        overlap = dec.identity_overlap
        i0 = int(np.argmax(overlap))
        if overlap[i0] < min_overlap:
            raise PreconditionError(
                f"identity slot ambiguous at t = {dec.t:.6g}: best overlap {overlap[i0]:.4f} < {min_overlap}")
        q0[n] = dec.q[i0]
        keep = [l for l in range(len(dec.q)) if l != i0]
        vecs = dec.u[:, keep]
        vals = dec.q[keep]
        if prev is not None:
            _, cols = linear_sum_assignment(-np.abs(prev.conj().T @ vecs) ** 2)
            vecs, vals = vecs[:, cols], vals[cols]
        rest[:, n] = vals
        prev = vecs
    return times, q0, rest


@dataclass(frozen=True)
class RateTrace:
    """Sampled canonical rates (Pauli-channel convention) and optional Lamb shift.

    ``gammas`` has shape ``(n_channels, n_times)``; ``lamb_shift`` holds the
    angular frequency ``S(t)`` of an accompanying ``(S/2) Z`` Hamiltonian.
    """

    times: np.ndarray
    gammas: np.ndarray
    lamb_shift: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        gammas = np.atleast_2d(np.asarray(self.gammas, dtype=float))
        if times.ndim != 1 or len(times) < 2:
            raise PreconditionError("a rate trace needs at least two time points")
        if np.any(np.diff(times) <= 0):
            raise PreconditionError("times must be strictly increasing")
        if gammas.shape[1] != len(times):
            raise PreconditionError(f"rates have {gammas.shape[1]} samples for {len(times)} times")
        for arr in (times, gammas):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "gammas", gammas)
        if self.lamb_shift is not None:
            shift = np.asarray(self.lamb_shift, dtype=float)
            if shift.shape != times.shape:
                raise PreconditionError("lamb_shift length does not match times")
            shift.setflags(write=False)
            object.__setattr__(self, "lamb_shift", shift)

    @classmethod
    def from_functions(cls, times, *rate_fns, lamb_shift=None) -> RateTrace:
        times = np.asarray(times, dtype=float)
        gammas = np.array([np.broadcast_to(np.asarray(fn(times), dtype=float), times.shape) for fn in rate_fns])
        shift = None if lamb_shift is None else np.broadcast_to(lamb_shift(times), times.shape)
        return cls(times, gammas, shift)

    @property
    def n_channels(self) -> int:
        return self.gammas.shape[0]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    @cached_property
    def splines(self):
        return [interpolant(self.times, g) for g in self.gammas]

    def check_window(self, t: float, t_prime: float) -> None:
        span = self.t1 - self.t0
        slack = 1e-12 * span
        if not (self.t0 - slack <= t <= t_prime <= self.t1 + slack):
            raise PreconditionError(
                f"window [{t}, {t_prime}] outside trace range [{self.t0}, {self.t1}] or reversed")


def _central_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite differences: central inside, one-sided at both ends."""
    f = values
    n = len(f)
    if n < 5:
        raise PreconditionError("need at least five samples for fourth-order differences")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def extract_dephasing_rates(coherence, times, eps_div: float = 1e-9) -> RateTrace:
    """Recover the dephasing rate and Lamb shift from a normalized coherence ``c(t)``.

    For a qubit obeying ``drho/dt = -i[(S/2) Z, rho] + gamma (Z rho Z - rho)`` the
    coherence ``<0|rho|1>`` satisfies ``c' = -(2 gamma + i S) c``, hence
    ``gamma = -Re(c'/c) / 2`` and ``S = -Im(c'/c)``. Times must be uniform.
    """
    c = np.asarray(coherence, dtype=complex)
    times = np.asarray(times, dtype=float)
    if c.shape != times.shape:
        raise PreconditionError("coherence and times must have equal length")
    h = (times[-1] - times[0]) / (len(times) - 1)
    if np.max(np.abs(np.diff(times) - h)) > 1e-9 * h:
        raise PreconditionError("extraction needs a uniform time grid")
    mag = np.abs(c)
    bad = np.flatnonzero(mag <= eps_div)
    if bad.size:
        raise DivergenceError(times[bad[0]], mag[bad[0]], eps_div)
    ratio = _central_derivative(c, h) / c
    return RateTrace(times, [-ratio.real / 2], -ratio.imag)


def is_cp_divisible(rates: RateTrace, eps: float | None = None) -> tuple[bool, list[tuple[float, float]]]:
    """CP-divisibility verdict and the intervals on which some rate is negative.

    The verdict only looks at the samples (``gamma_k >= -eps`` everywhere, with
    ``eps = 1e-10 max|gamma|`` by default). The intervals come from the roots of
    the cubic interpolant of each channel, merged across channels.
    """
    scale = float(np.max(np.abs(rates.gammas))) if rates.gammas.size else 0.0
    eps = 1e-10 * scale if eps is None else eps
    verdict = bool(np.all(rates.gammas >= -eps))
    spans = []
    for spline in rates.splines:
        edges, _ = signed_pieces(rates.times, spline, rates.t0, rates.t1)
        mids = spline((edges[:-1] + edges[1:]) / 2)
        for a, b, v in zip(edges[:-1], edges[1:], mids):
            if v < -eps:
                if spans and abs(spans[-1][1] - a) <= 1e-12 * (rates.t1 - rates.t0):
                    spans[-1] = (spans[-1][0], b)
                else:
                    spans.append((a, b))
    spans.sort()
    merged: list[tuple[float, float]] = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
        else:
            merged.append((float(a), float(b)))
    return verdict, merged


def canonical_series(gen: TimeLocalGenerator, times, basis: BasisSet) -> list[CanonicalDecomposition]:
    """Canonical decompositions of ``gen`` at each of ``times``."""
    return [canonical_rates(build_process_matrix(gen, t, basis)) for t in np.asarray(times, dtype=float)]
