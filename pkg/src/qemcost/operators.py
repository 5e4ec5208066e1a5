"""Dense operator primitives: Pauli bases, Hermitian diagonalization, partial traces.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``. Computational
basis convention: ``Z|0> = +|0>`` and ``sigma_plus = (X + iY)/2 = |0><1|``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import PreconditionError

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = (X + 1j * Y) / 2
SIGMA_MINUS = (X - 1j * Y) / 2

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

for _m in (I2, X, Y, Z, SIGMA_PLUS, SIGMA_MINUS):
    _m.setflags(write=False)


def kron(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, ops)


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermiticity_residual(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and hermiticity_residual(m) <= tol


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))) <= tol


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise PreconditionError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class BasisSet:
    """Hermitian, involutive, trace-orthogonal operator basis ``{G_i}`` with ``G_0 = I``."""

    n_qubits: int
    ops: np.ndarray  # shape (d**2, d, d)
    labels: tuple[str, ...]

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def coefficients(self, op: np.ndarray) -> np.ndarray:
        """Expansion coefficients ``c_i = Tr[G_i op] / d`` so that ``op = sum_i c_i G_i``."""
        return np.einsum("kij,ji->k", self.ops, op) / self.dim


def pauli_basis(n_qubits: int) -> BasisSet:
    """All ``4**n`` Pauli products, ordered lexicographically with ``I < X < Y < Z``."""
    if int(n_qubits) != n_qubits or n_qubits < 1:
        raise PreconditionError(f"n_qubits must be a positive integer, got {n_qubits!r}")
    n_qubits = int(n_qubits)
    labels = tuple("".join(p) for p in itertools.product("IXYZ", repeat=n_qubits))
    ops = np.array([kron(*(PAULIS[c] for c in lab)) for lab in labels])
    ops.setflags(write=False)
    return BasisSet(n_qubits, ops, labels)


def hermitian_eigendecompose(m, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a Hermitian matrix as ``m = U diag(q) U^dagger``.

    Eigenvalues are returned in ascending order. Each eigenvector is rephased so
    that its largest-magnitude entry is real and positive, which makes the
    columns of ``U`` reproducible for non-degenerate spectra.
    """
    m = _as_square(m)
    residual = hermiticity_residual(m)
    if residual > tol * max(1.0, float(np.max(np.abs(m)))):
        raise PreconditionError(f"matrix is not Hermitian (residual {residual:.3e})")
    q, u = np.linalg.eigh((m + m.conj().T) / 2)
    # near-ties resolved towards the lowest row index
    pivot = np.argmax(np.round(np.abs(u), 12), axis=0)
    phase = u[pivot, np.arange(u.shape[1])]
    u = u * (np.abs(phase) / phase)[None, :]
    return q, u


def trace_norm(m) -> float:
    """Sum of singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(m, dtype=complex), compute_uv=False)))


@dataclass(frozen=True)
class DensityMatrix:
    """A validated state: Hermitian, unit trace, positive semidefinite within tolerance."""

    mat: np.ndarray
    dims: tuple[int, ...]
    herm_tol: float = field(default=1e-10, repr=False, compare=False)
    trace_tol: float = field(default=1e-10, repr=False, compare=False)
    min_eig_tol: float = field(default=1e-8, repr=False, compare=False)

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        dims = tuple(int(d) for d in (self.dims if np.ndim(self.dims) else [self.dims]))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise PreconditionError(f"density matrix must be square, got {mat.shape}")
        if math.prod(dims) != mat.shape[0]:
            raise PreconditionError(f"subsystem dims {dims} do not multiply to {mat.shape[0]}")
        if hermiticity_residual(mat) > self.herm_tol:
            raise PreconditionError(f"state not Hermitian (residual {hermiticity_residual(mat):.3e})")
        tr = np.trace(mat)
        if abs(tr - 1) > self.trace_tol:
            raise PreconditionError(f"state trace {tr.real:.12g} differs from 1")
        min_eig = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2)[0])
        if min_eig < -self.min_eig_tol:
            raise PreconditionError(f"state has negative eigenvalue {min_eig:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def expectation(self, observable) -> float:
        return float(np.real(np.trace(self.mat @ np.asarray(observable))))

    def coherence(self) -> complex:
        """The ``<0|rho|1>`` element (single-qubit states)."""
        return complex(self.mat[0, 1])

    @classmethod
    def from_ket(cls, psi, dims=None) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims if dims is not None else (psi.size,))

    def tensor(self, other: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(np.kron(self.mat, other.mat), self.dims + other.dims)


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state of subsystem ``keep``, tracing out every other factor."""
    dims = rho.dims
    if len(dims) < 2:
        raise PreconditionError("partial trace needs at least two subsystems")
    if not 0 <= keep < len(dims):
        raise PreconditionError(f"subsystem index {keep} out of range for dims {dims}")
    before = math.prod(dims[:keep])
    after = math.prod(dims[keep + 1 :])
    dk = dims[keep]
    t = rho.mat.reshape(before, dk, after, before, dk, after)
    reduced = np.einsum("aibajb->ij", t)
    return DensityMatrix(reduced, (dk,), herm_tol=rho.herm_tol, trace_tol=rho.trace_tol,
                         min_eig_tol=rho.min_eig_tol)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def plus_state() -> DensityMatrix:
    """``|+><+|`` with ``|+> = (|0> + |1>)/sqrt(2)``, built from exact halves."""
    return DensityMatrix(np.full((2, 2), 0.5, dtype=complex), (2,))


def gibbs_state(s: float) -> DensityMatrix:
    """``s|0><0| + (1 - s)|1><1|``."""
    return DensityMatrix(np.diag([s, 1.0 - s]).astype(complex), (2,))


def destroy(n_levels: int) -> np.ndarray:
    """Annihilation operator on the Fock space ``{|0>, ..., |n_levels - 1>}``."""
    return np.diag(np.sqrt(np.arange(1, n_levels)), k=1).astype(complex)


def coherent_ket(alpha: complex, n_levels: int) -> np.ndarray:
    """Coherent state truncated to ``n_levels`` Fock states and renormalized."""
    n = np.arange(n_levels)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * log_fact) * np.power(complex(alpha), n)
    return amp / np.linalg.norm(amp)


def maximally_entangled(d: int) -> np.ndarray:
    """Projector onto ``sum_i |ii>/sqrt(d)``."""
    phi = np.eye(d, dtype=complex).ravel() / math.sqrt(d)
    return np.outer(phi, phi.conj())
