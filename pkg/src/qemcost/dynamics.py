"""Time-local master equations and their fixed-step Runge-Kutta integration.

The generator has the canonical time-local form

    drho/dt = -i[H(t), rho] + sum_k gamma_k(t) (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})

where the rates ``gamma_k(t)`` may be negative on some intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrationError, PreconditionError
from .operators import DensityMatrix, hermiticity_residual

MatrixFn = Callable[[float], np.ndarray]
RateFn = Callable[[float], float]


class Constant:
    """Picklable constant function of time."""

    def __init__(self, value):
        if isinstance(value, np.ndarray):
            value = value.copy()
            value.setflags(write=False)
        self.value = value

    def __call__(self, t):
        return self.value

    def __repr__(self):
        return f"Constant({self.value!r})"


class _Scaled:
    def __init__(self, fn, factor):
        self.fn, self.factor = fn, factor

    def __call__(self, t):
        return self.factor * self.fn(t)


def as_function(value) -> Callable:
    return value if callable(value) else Constant(value)


@dataclass(frozen=True)
class Channel:
    jump: MatrixFn
    rate: RateFn
    label: str = ""


@dataclass(frozen=True)
class TimeLocalGenerator:
    """Hamiltonian plus decoherence channels of a time-local master equation.

    Jumps are stored exactly as supplied. ``canonical_normalized`` records
    whether they have been rescaled to ``Tr[L^dag L] = 1``; see :meth:`normalized`.
    """

    dim: int
    hamiltonian: MatrixFn
    channels: tuple[Channel, ...] = ()
    canonical_normalized: bool = False

    @classmethod
    def build(cls, dim: int, hamiltonian=None, channels: Sequence = ()) -> TimeLocalGenerator:
        """Convenience constructor accepting arrays, scalars or callables.

        ``channels`` is a sequence of ``(jump, rate)`` or ``(jump, rate, label)``.
        """
        if hamiltonian is None:
            hamiltonian = np.zeros((dim, dim), dtype=complex)
        chans = []
        for ch in channels:
            jump, rate, *rest = ch
            chans.append(Channel(as_function(jump), as_function(rate), rest[0] if rest else ""))
        return cls(int(dim), as_function(hamiltonian), tuple(chans))

    def rates_at(self, t: float) -> np.ndarray:
        return np.array([float(ch.rate(t)) for ch in self.channels])

    def jumps_at(self, t: float) -> list[np.ndarray]:
        return [np.asarray(ch.jump(t), dtype=complex) for ch in self.channels]

    def check(self, t: float, tol: float = 1e-10) -> None:
        """Validate Hermiticity of ``H(t)`` and tracelessness of the jumps at ``t``."""
        h = np.asarray(self.hamiltonian(t))
        if h.shape != (self.dim, self.dim):
            raise PreconditionError(f"H(t) has shape {h.shape}, expected {(self.dim, self.dim)}")
        if hermiticity_residual(h) > tol * max(1.0, float(np.max(np.abs(h)))):
            raise PreconditionError("H(t) is not Hermitian")
        for k, jump in enumerate(self.jumps_at(t)):
            if jump.shape != (self.dim, self.dim):
                raise PreconditionError(f"jump {k} has shape {jump.shape}")
            if abs(np.trace(jump)) > tol * max(1.0, float(np.max(np.abs(jump)))):
                raise PreconditionError(f"jump {k} is not traceless")

    def normalized(self, t_probe: float = 0.0) -> TimeLocalGenerator:
        """Rescale every jump to ``Tr[L^dag L] = 1`` with the rate absorbing the factor.

        The norm is taken at ``t_probe``; jumps whose norm changes in time are not
        supported by this helper.
        """
        chans = []
        for ch in self.channels:
            jump = np.asarray(ch.jump(t_probe), dtype=complex)
            norm2 = float(np.real(np.trace(jump.conj().T @ jump)))
            if norm2 <= 0:
                raise PreconditionError("cannot normalize a zero jump operator")
            chans.append(Channel(_Scaled(ch.jump, 1 / math.sqrt(norm2)), _Scaled(ch.rate, norm2), ch.label))
        return replace(self, channels=tuple(chans), canonical_normalized=True)

    def without_noise(self) -> TimeLocalGenerator:
        """The ideal generator: same ``H(t)``, every channel removed."""
        return replace(self, channels=())

    def max_rate(self, t0: float, t1: float, n_probe: int = 17) -> float:
        """Largest generator scale (``||H||`` plus weighted jump norms) on a coarse probe grid."""
        best = 0.0
        for t in np.linspace(t0, t1, n_probe):
            h = np.asarray(self.hamiltonian(t))
            scale = float(np.linalg.norm(h, 2)) if h.any() else 0.0
            for jump, rate in zip(self.jumps_at(t), self.rates_at(t)):
                scale += abs(rate) * float(np.linalg.norm(jump, 2)) ** 2
            best = max(best, scale)
        return best


def master_rhs(gen: TimeLocalGenerator, t: float, rho: np.ndarray) -> np.ndarray:
    """Right-hand side of the time-local master equation at time ``t``."""
    rho = np.asarray(rho)
    if rho.shape != (gen.dim, gen.dim):
        raise PreconditionError(f"state has shape {rho.shape}, generator dim is {gen.dim}")
    h = gen.hamiltonian(t)
    out = -1j * (h @ rho - rho @ h)
    for ch in gen.channels:
        g = ch.rate(t)
        if g == 0:
            continue
        jump = ch.jump(t)
        jd = jump.conj().T
        jdj = jd @ jump
        out = out + g * (jump @ rho @ jd - 0.5 * (jdj @ rho + rho @ jdj))
    return out


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n_steps: int

    def __post_init__(self):
        if not (self.t1 > self.t0 >= 0):
            raise PreconditionError(f"need t1 > t0 >= 0, got t0={self.t0}, t1={self.t1}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise PreconditionError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def step(self) -> float:
        return (self.t1 - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_steps + 1)


def default_steps(gen: TimeLocalGenerator, t0: float, t1: float) -> int:
    """4000 steps per unit of (generator scale x duration), never fewer than 1000."""
    return max(1000, math.ceil(4000 * gen.max_rate(t0, t1) * (t1 - t0)))


@dataclass(frozen=True)
class StateTrajectory:
    grid: TimeGrid
    states: np.ndarray  # (n_steps + 1, d, d)
    dims: tuple[int, ...]
    min_eig_tol: float = field(default=1e-6, repr=False)

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.shape[0] != self.grid.n_steps + 1:
            raise PreconditionError("trajectory length does not match the grid")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.states[i], self.dims, herm_tol=1e-9, trace_tol=1e-8,
                             min_eig_tol=self.min_eig_tol)

    def traces(self) -> np.ndarray:
        return np.einsum("tii->t", self.states)

    def hermiticity_residuals(self) -> np.ndarray:
        return np.max(np.abs(self.states - self.states.conj().transpose(0, 2, 1)), axis=(1, 2))

    def min_eigenvalues(self) -> np.ndarray:
        herm = (self.states + self.states.conj().transpose(0, 2, 1)) / 2
        return np.linalg.eigvalsh(herm)[:, 0]

    def expectation(self, observable) -> np.ndarray:
        return np.real(np.einsum("tij,ji->t", self.states, np.asarray(observable)))

    def reduced(self, keep: int) -> StateTrajectory:
        dims = self.dims
        before = math.prod(dims[:keep])
        after = math.prod(dims[keep + 1 :])
        dk = dims[keep]
        t = self.states.reshape(-1, before, dk, after, before, dk, after)
        red = np.einsum("naibajb->nij", t)
        return StateTrajectory(self.grid, red, (dk,), self.min_eig_tol)

    @property
    def final(self) -> DensityMatrix:
        return self[-1]


def evolve(gen: TimeLocalGenerator, rho0: DensityMatrix, grid: TimeGrid, *,
           check_positivity: bool = True) -> StateTrajectory:
    """Integrate the master equation with classical RK4 on a uniform grid.

    Raises :class:`IntegrationError` as soon as ``|Tr rho - 1|`` exceeds 1e-6.
    With ``check_positivity`` the final trajectory must keep its minimum
    eigenvalue above -1e-6; pass ``False`` for deliberately non-positive
    generators.
    """
    if rho0.dim != gen.dim:
        raise PreconditionError(f"initial state dim {rho0.dim} != generator dim {gen.dim}")
    gen.check(grid.t0)
    h = grid.step
    times = grid.times
    states = np.empty((grid.n_steps + 1, gen.dim, gen.dim), dtype=complex)
    rho = np.array(rho0.mat)
    states[0] = rho
    for n in range(grid.n_steps):
        t = times[n]
        k1 = master_rhs(gen, t, rho)
        k2 = master_rhs(gen, t + h / 2, rho + (h / 2) * k1)
        k3 = master_rhs(gen, t + h / 2, rho + (h / 2) * k2)
        k4 = master_rhs(gen, t + h, rho + h * k3)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = abs(np.trace(rho) - 1.0)
        if not drift <= 1e-6:
            raise IntegrationError(n + 1, times[n + 1], float(drift))
        states[n + 1] = rho
    traj = StateTrajectory(grid, states, rho0.dims)
    if check_positivity:
        worst = float(np.min(traj.min_eigenvalues()))
        if worst < -traj.min_eig_tol:
            idx = int(np.argmin(traj.min_eigenvalues()))
            raise PreconditionError(
                f"state lost positivity at t = {times[idx]:.9g} s (min eigenvalue {worst:.3e})")
    return traj


__all__ = [
    "Channel",
    "Constant",
    "StateTrajectory",
    "TimeGrid",
    "TimeLocalGenerator",
    "default_steps",
    "evolve",
    "master_rhs",
]
