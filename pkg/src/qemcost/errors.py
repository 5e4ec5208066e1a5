"""Exception types raised by the numerical routines."""

from __future__ import annotations


class PreconditionError(ValueError):
    """An input violates a documented precondition (shape, Hermiticity, range)."""


class DivergenceError(ArithmeticError):
    """A time-local rate diverges because the coherence factor vanishes.

    The time-local generator only exists while the dynamical map is invertible.
    When the coherence factor passes through zero (for the two-qubit model this
    happens at infinite bath temperature, ``s = 1/2``) the rate ``-f'/f`` blows up.
    """

    def __init__(self, time: float, magnitude: float, threshold: float = 1e-9):
        self.time = float(time)
        self.magnitude = float(magnitude)
        self.threshold = threshold
        super().__init__(
            f"time-local rate diverges at t = {self.time:.9g} s "
            f"(|coherence| = {self.magnitude:.3e} <= {threshold:.1e}); "
            "the dynamical map is not invertible there"
        )


class IntegrationError(RuntimeError):
    """The fixed-step integrator lost trace beyond tolerance."""

    def __init__(self, step: int, time: float, drift: float):
        self.step = step
        self.time = time
        self.drift = drift
        super().__init__(
            f"integration failed at step {step} (t = {time:.9g} s): "
            f"trace drift {drift:.3e} exceeds 1e-6"
        )


class TruncationError(RuntimeError):
    """Population leaked into the top Fock levels of a truncated oscillator."""

    def __init__(self, time: float, population: float, limit: float):
        self.time = time
        self.population = population
        self.limit = limit
        super().__init__(
            f"Fock truncation overflow at t = {time:.9g} s: top-level population "
            f"{population:.3e} > {limit:.1e}; increase n_max"
        )


class RateBoundError(ValueError):
    """A sampled rate exceeded the bound used for Poisson thinning."""
