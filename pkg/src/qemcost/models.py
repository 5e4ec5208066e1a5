"""Worked physical models with non-Markovian single-qubit dephasing.

Two models reduce to a qubit equation of the form

    drho/dt = -i[(S(t)/2) Z, rho] + (gamma(t)/2) (Z rho Z - rho)

where ``gamma(t)`` is the coherence decay rate (``<0|rho|1>`` decays as
``exp(-int gamma)``). The Pauli-channel rate used by :mod:`qemcost.measures`
is ``gamma(t)/2``.

* ``nmr_*``: a long-lived qubit coupled by ``(J/4) Z x Z`` to a second qubit
  that relaxes towards ``s|0><0| + (1-s)|1><1|``.
* ``dispersive_*``: a qubit dispersively coupled (``chi Z a^dag a``) to a lossy
  resonator prepared in a coherent state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .canonical import RateTrace
from .dynamics import Constant, StateTrajectory, TimeGrid, TimeLocalGenerator, evolve
from .errors import DivergenceError, PreconditionError, TruncationError
from .operators import (
    I2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    Z,
    DensityMatrix,
    coherent_ket,
    destroy,
    gibbs_state,
    plus_state,
)

EPS_DIV = 1e-9


# ---------------------------------------------------------------------------
# two-qubit model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NmrModelParams:
    """Coupling ``J`` (rad/s), bath rate ``gamma`` (1/s), temperature parameter ``s``."""

    J: float
    gamma: float
    s: float

    def __post_init__(self):
        if not self.J > 0:
            raise PreconditionError(f"J must be positive, got {self.J}")
        if not self.gamma >= 0:
            raise PreconditionError(f"gamma must be non-negative, got {self.gamma}")
        if not 0 <= self.s <= 0.5:
            raise PreconditionError(f"s must lie in [0, 1/2], got {self.s}")

    @classmethod
    def from_t2(cls, J: float, t2: float, s: float) -> NmrModelParams:
        """Bath rate given as a decoherence time, ``gamma = 1/t2``."""
        if not t2 > 0:
            raise PreconditionError(f"t2 must be positive, got {t2}")
        return cls(J, 1.0 / t2, s)

    @classmethod
    def reference(cls) -> NmrModelParams:
        """``J = 2 pi x 215 rad/s``, ``1/gamma = 6.5 ms``, ``s = 0.3``."""
        return cls.from_t2(2 * math.pi * 215, 6.5e-3, 0.3)

    @property
    def divergence_prone(self) -> bool:
        return self.s == 0.5

    @property
    def _quadratic_const(self) -> complex:
        return (2j * self.J * self.gamma * (1 - 2 * self.s) + self.J**2) / 4


def nmr_lambda_pm(p: NmrModelParams) -> tuple[complex, complex]:
    """Roots of ``lambda^2 + gamma lambda + [2iJ gamma (1-2s) + J^2]/4 = 0``.

    ``lambda_+`` is the root with the larger real part (larger imaginary part on a tie).
    """
    root = np.sqrt(complex(p.gamma**2 - 4 * p._quadratic_const))
    a, b = (-p.gamma + root) / 2, (-p.gamma - root) / 2
    if (a.real, a.imag) < (b.real, b.imag):
        a, b = b, a
    return complex(a), complex(b)


def _sinhc(x):
    """``sinh(x)/x`` with a series near zero (degenerate roots)."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-3
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1 + x2 / 6 + x2 * x2 / 120, np.sinh(safe) / safe)


def _nmr_parts(p: NmrModelParams, t):
    # lambda_pm = m +- h; f depends on h only through even functions
    t = np.asarray(t, dtype=float)
    m = -p.gamma / 2
    h2 = complex(p.gamma**2 / 4 - p._quadratic_const)
    h = np.sqrt(h2)
    a = 1j * p.J * (2 * p.s - 1) / 2
    growth = np.exp(m * t)
    sinh_over_h = t * _sinhc(h * t)
    cosh = np.cosh(h * t)
    return t, m, h2, a, growth, sinh_over_h, cosh


def nmr_f(p: NmrModelParams, t):
    """Coherence factor ``f(t)`` (complex conjugate of the normalized ``<0|rho_1|1>``)."""
    t, m, _, a, growth, sinh_over_h, cosh = _nmr_parts(p, t)
    out = growth * ((a - m) * sinh_over_h + cosh)
    return out if out.ndim else complex(out)


def nmr_f_derivative(p: NmrModelParams, t):
    t, m, h2, a, growth, sinh_over_h, cosh = _nmr_parts(p, t)
    f = growth * ((a - m) * sinh_over_h + cosh)
    out = m * f + growth * ((a - m) * cosh + h2 * sinh_over_h)
    return out if out.ndim else complex(out)


def nmr_rates(p: NmrModelParams, t):
    """Decay rate ``gamma(t)`` and Lamb shift ``S(t)`` from ``gamma - iS = -f'/f``.

    Raises :class:`DivergenceError` where ``|f| <= 1e-9``.
    """
    t = np.asarray(t, dtype=float)
    f = np.atleast_1d(nmr_f(p, t))
    bad = np.flatnonzero(np.abs(f) <= EPS_DIV)
    if bad.size:
        raise DivergenceError(np.atleast_1d(t)[bad[0]], abs(f[bad[0]]), EPS_DIV)
    r = -np.atleast_1d(nmr_f_derivative(p, t)) / f
    gamma, shift = r.real, -r.imag
    if t.ndim == 0:
        return float(gamma[0]), float(shift[0])
    return gamma, shift


def nmr_closest_approach(p: NmrModelParams, times) -> list[tuple[float, float]]:
    """Local minima of ``|f|`` between samples, as ``(time, min |f|)`` pairs.

    Each sampled local minimum below 0.5 is refined with a bounded search on
    ``|f|^2`` and then by projecting onto the tangent line of ``f``, which
    resolves zeros of ``f`` far below the grid spacing.
    """
    from scipy.optimize import minimize_scalar

    times = np.asarray(times, dtype=float)
    mag = np.abs(np.atleast_1d(nmr_f(p, times)))
    out = []
    for k in range(len(times)):
        lo, hi = max(k - 1, 0), min(k + 1, len(times) - 1)
        if mag[k] > 0.5 or mag[k] > mag[lo] or mag[k] > mag[hi] or lo == hi:
            continue
        res = minimize_scalar(lambda t: abs(nmr_f(p, t)) ** 2, bounds=(times[lo], times[hi]),
                              method="bounded", options={"xatol": 1e-15})
        tm = float(res.x)
        f, df = nmr_f(p, tm), nmr_f_derivative(p, tm)
        if abs(df) > 0:
            shift = -(f * df.conjugate()).real / abs(df) ** 2
            t_star = min(max(tm + shift, times[lo]), times[hi])
            dist = abs((f * df.conjugate()).imag) / abs(df) if t_star == tm + shift else abs(nmr_f(p, t_star))
        else:
            t_star, dist = tm, abs(f)
        out.append((t_star, min(dist, float(mag[k]))))
    return out


def nmr_check_invertible(p: NmrModelParams, times, eps: float = EPS_DIV) -> None:
    """Raise :class:`DivergenceError` if ``|f|`` dips to ``eps`` anywhere on the sampled window."""
    for t_star, dist in nmr_closest_approach(p, times):
        if dist <= eps:
            raise DivergenceError(t_star, dist, eps)


def nmr_generator(p: NmrModelParams) -> TimeLocalGenerator:
    """Two-qubit generator; bath rates ``gamma*s`` on ``I x sigma+`` and ``gamma*(1-s)`` on ``I x sigma-``."""
    h = (p.J / 4) * np.kron(Z, Z)
    return TimeLocalGenerator.build(
        4,
        h,
        [
            (np.kron(I2, SIGMA_PLUS), p.gamma * p.s, "I*sigma+"),
            (np.kron(I2, SIGMA_MINUS), p.gamma * (1 - p.s), "I*sigma-"),
        ],
    )


def nmr_initial_state(p: NmrModelParams) -> DensityMatrix:
    return plus_state().tensor(gibbs_state(p.s))


def nmr_full_oracle(p: NmrModelParams, grid: TimeGrid) -> tuple[StateTrajectory, np.ndarray]:
    """Integrate the two-qubit model and return qubit 1's trajectory and normalized coherence."""
    traj = evolve(nmr_generator(p), nmr_initial_state(p), grid)
    reduced = traj.reduced(0)
    coh = reduced.states[:, 0, 1]
    return reduced, coh / coh[0]


# ---------------------------------------------------------------------------
# dispersive qubit-resonator model
# ---------------------------------------------------------------------------


def fock_cutoff(alpha: complex) -> int:
    r = abs(alpha)
    return math.ceil(r * r + 8 * r + 10)


@dataclass(frozen=True)
class DispersiveModelParams:
    """Dispersive shift ``chi`` (rad/s), resonator decay ``kappa`` (1/s), coherent amplitude ``alpha``."""

    chi: float
    kappa: float
    alpha: complex
    n_max: int | None = None

    def __post_init__(self):
        if not self.chi > 0:
            raise PreconditionError(f"chi must be positive, got {self.chi}")
        if not self.kappa > 0:
            raise PreconditionError(f"kappa must be positive, got {self.kappa}")
        need = fock_cutoff(self.alpha)
        n_max = need if self.n_max is None else int(self.n_max)
        if n_max < need:
            raise PreconditionError(f"n_max = {n_max} below the cutoff rule {need}")
        object.__setattr__(self, "n_max", n_max)
        object.__setattr__(self, "alpha", complex(self.alpha))

    @classmethod
    def from_ratios(cls, abs_alpha_sq: float, chi_over_kappa: float, kappa: float = 1.0,
                    n_max: int | None = None) -> DispersiveModelParams:
        return cls(chi_over_kappa * kappa, kappa, math.sqrt(abs_alpha_sq), n_max)

    @property
    def n_photons(self) -> float:
        return abs(self.alpha) ** 2


def dispersive_rates(p: DispersiveModelParams, t):
    """Closed-form ``(gamma(t), S(t))`` in the published form.

    Zeros of ``gamma`` are spaced by ``pi/(2 chi)``.
    """
    t = np.asarray(t, dtype=float)
    a2, k, c = p.n_photons, p.kappa, p.chi
    r = k / (2 * c)
    env = a2 * np.exp(-k * t)
    cos, sin = np.cos(2 * c * t), np.sin(2 * c * t)
    shift = env * (k * (1 - cos) - 2 * c * sin) + env / (1 + r**2) * (2 * k * cos + (2 * c - k**2 / (2 * c)) * sin)
    gamma = k * env / (1 + r**2) * ((k / c) * cos + (1 - r**2) * sin)
    if t.ndim == 0:
        return float(gamma), float(shift)
    return gamma, shift


def dispersive_rate_envelope(p: DispersiveModelParams, t):
    """Pointwise bound on ``|gamma(t)|`` of :func:`dispersive_rates`."""
    r = p.kappa / (2 * p.chi)
    amp = math.sqrt((p.kappa / p.chi) ** 2 + (1 - r**2) ** 2) / (1 + r**2)
    return p.n_photons * p.kappa * np.exp(-p.kappa * np.asarray(t, dtype=float)) * amp


def dispersive_rates_exact(p: DispersiveModelParams, t):
    """``(gamma, S)`` from the exact coherence of the qubit-resonator master equation.

    ``-d/dt log c = 2 i chi |alpha|^2 exp(-(kappa + 2 i chi) t)``, i.e.
    ``gamma = 2 chi |alpha|^2 e^{-kappa t} sin(2 chi t)`` and
    ``S = 2 chi |alpha|^2 e^{-kappa t} cos(2 chi t)``.
    """
    t = np.asarray(t, dtype=float)
    env = 2 * p.chi * p.n_photons * np.exp(-p.kappa * t)
    gamma, shift = env * np.sin(2 * p.chi * t), env * np.cos(2 * p.chi * t)
    if t.ndim == 0:
        return float(gamma), float(shift)
    return gamma, shift


def dispersive_coherence(p: DispersiveModelParams, t, form: str = "printed"):
    """Normalized reduced-qubit coherence ``c'_01(t) / c'_01(0)``.

    ``form="printed"`` evaluates the published closed form literally (including
    the extra ``exp((2i chi - kappa) t)`` factor); ``form="exact"`` is the solution
    of the master equation with this package's conventions.
    """
    t = np.asarray(t, dtype=float)
    a2, k, c = p.n_photons, p.kappa, p.chi
    if form == "printed":
        overlap = np.exp(a2 * np.exp(-k * t) * (np.exp(2j * c * t) - 1))
        c01 = np.exp(-a2 * (1 - np.exp((2j * c - k) * t)) / (1 - 1j * k / (2 * c))) / overlap
        out = c01 * np.exp((2j * c - k) * t)
    elif form == "exact":
        u, w = np.exp(-k * t), np.exp(-2j * c * t)
        out = np.exp(a2 * (u * (w - 1) + k * (1 - u * w) / (k + 2j * c) - (1 - u)))
    else:
        raise PreconditionError(f"unknown form {form!r}")
    return out if out.ndim else complex(out)


def dispersive_generator(p: DispersiveModelParams) -> TimeLocalGenerator:
    n = p.n_max + 1
    a = destroy(n)
    h = p.chi * np.kron(Z, a.conj().T @ a)
    return TimeLocalGenerator.build(2 * n, h, [(np.kron(I2, a), p.kappa, "I*a")])


def dispersive_initial_state(p: DispersiveModelParams) -> DensityMatrix:
    psi = coherent_ket(p.alpha, p.n_max + 1)
    return plus_state().tensor(DensityMatrix(np.outer(psi, psi.conj()), (p.n_max + 1,)))


def dispersive_full_oracle(p: DispersiveModelParams, grid: TimeGrid,
                           guard: float = 1e-8) -> tuple[StateTrajectory, np.ndarray]:
    """Fock-truncated simulation; raises :class:`TruncationError` if the top two levels fill."""
    traj = evolve(dispersive_generator(p), dispersive_initial_state(p), grid)
    resonator = traj.reduced(1)
    top = np.real(resonator.states[:, -1, -1] + resonator.states[:, -2, -2])
    over = np.flatnonzero(top > guard)
    if over.size:
        raise TruncationError(grid.times[over[0]], top[over[0]], guard)
    qubit = traj.reduced(0)
    coh = qubit.states[:, 0, 1]
    return qubit, coh / coh[0]


# ---------------------------------------------------------------------------
# reduced dephasing models consumed by the sampler and the CLI
# ---------------------------------------------------------------------------


class _LambHamiltonian:
    def __init__(self, model):
        self.model = model

    def __call__(self, t):
        return 0.5 * float(self.model.lamb_shift(t)) * Z


class _ChannelRate:
    def __init__(self, model):
        self.model = model

    def __call__(self, t):
        return float(self.model.channel_rate(t))


class DephasingModel:
    """Qubit with ``drho/dt = -i[(S/2) Z, rho] + g(t) (Z rho Z - rho)``.

    Subclasses provide the Pauli-channel rate ``g(t)`` (:meth:`channel_rate`) and
    :meth:`lamb_shift`, both vectorized over ``t``.
    """

    name = "dephasing"

    @property
    def rho0(self) -> DensityMatrix:
        return plus_state()

    def channel_rate(self, t):
        raise NotImplementedError

    def lamb_shift(self, t):
        raise NotImplementedError

    def generator(self) -> TimeLocalGenerator:
        return TimeLocalGenerator.build(2, _LambHamiltonian(self), [(Z, _ChannelRate(self), "Z")])

    def rate_trace(self, times) -> RateTrace:
        times = np.asarray(times, dtype=float)
        g = np.broadcast_to(self.channel_rate(times), times.shape)
        s = np.broadcast_to(self.lamb_shift(times), times.shape)
        return RateTrace(times, [g], s)

    def rate_bound(self, T: float, n: int = 4001) -> float:
        """Safe upper bound on ``|g(t)|`` over ``[0, T]`` for Poisson thinning."""
        g = np.abs(np.broadcast_to(self.channel_rate(np.linspace(0, T, n)), (n,)))
        peak = float(np.max(g))
        return 1.05 * peak + 1e-12 if peak > 0 else 0.0

    def describe(self) -> dict:
        return {"model": self.name}


@dataclass(frozen=True)
class ConstantDephasing(DephasingModel):
    """Constant Pauli-Z channel rate ``gamma`` and Lamb shift ``S``."""

    gamma: float
    S: float = 0.0
    name = "custom-dephasing"

    def channel_rate(self, t):
        return np.full(np.shape(t), float(self.gamma)) if np.ndim(t) else float(self.gamma)

    def lamb_shift(self, t):
        return np.full(np.shape(t), float(self.S)) if np.ndim(t) else float(self.S)

    def generator(self) -> TimeLocalGenerator:
        return TimeLocalGenerator.build(2, Constant(0.5 * self.S * Z), [(Z, self.gamma, "Z")])

    def describe(self) -> dict:
        return {"model": self.name, "gamma": self.gamma, "S": self.S}


@dataclass(frozen=True)
class NmrDephasing(DephasingModel):
    """Reduced dynamics of the first qubit of the two-qubit model."""

    params: NmrModelParams
    name = "nmr"

    @lru_cache(maxsize=16)
    def _scalar(self, t: float):
        return nmr_rates(self.params, t)

    def _rates(self, t):
        return self._scalar(float(t)) if np.ndim(t) == 0 else nmr_rates(self.params, t)

    def channel_rate(self, t):
        return 0.5 * self._rates(t)[0]

    def lamb_shift(self, t):
        return self._rates(t)[1]

    def rate_trace(self, times) -> RateTrace:
        nmr_check_invertible(self.params, times)
        return super().rate_trace(times)

    def describe(self) -> dict:
        p = self.params
        return {"model": self.name, "J": p.J, "gamma": p.gamma, "s": p.s}


@dataclass(frozen=True)
class DispersiveDephasing(DephasingModel):
    """Reduced qubit dynamics of the dispersive model.

    ``form="printed"`` uses :func:`dispersive_rates`, ``form="exact"`` uses
    :func:`dispersive_rates_exact`.
    """

    params: DispersiveModelParams
    form: str = "printed"
    name = "dispersive"

    def _rates(self, t):
        if self.form == "printed":
            return dispersive_rates(self.params, t)
        if self.form == "exact":
            return dispersive_rates_exact(self.params, t)
        raise PreconditionError(f"unknown form {self.form!r}")

    def channel_rate(self, t):
        return 0.5 * self._rates(t)[0]

    def lamb_shift(self, t):
        return self._rates(t)[1]

    def describe(self) -> dict:
        p = self.params
        return {"model": self.name, "chi": p.chi, "kappa": p.kappa, "abs_alpha_sq": p.n_photons,
                "form": self.form}
