"""Hamiltonians, the commutator superoperator and exact unitary propagation.

Units: hbar = 1, so ``exp(-i H t)`` is the propagator for time ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .policy import get_policy
from .state import DensityOperator, HilbertSpace, SuperOperator, spectral

__all__ = [
    "Hamiltonian",
    "TimeGrid",
    "liouvillian",
    "unitary",
    "propagate_unitary",
    "propagator_superop",
    "expm_generator",
]


@dataclass(frozen=True)
class Hamiltonian:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError(f"Hamiltonian shape {m.shape} does not match dimension {d}")
        dev = np.max(np.abs(m - m.conj().T))
        if dev > get_policy().hermiticity:
            raise ValueError(f"Hamiltonian is not Hermitian (deviation {dev:.3e})")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def zero(cls, space: HilbertSpace) -> "Hamiltonian":
        return cls(space, np.zeros((space.total_dim,) * 2))

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        return Hamiltonian(self.space, self.matrix + other.matrix)

    def scaled(self, c: float) -> "Hamiltonian":
        return Hamiltonian(self.space, c * self.matrix)


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    dt: float = 1e-2
    steps: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")

    @classmethod
    def span(cls, T: float, dt: float, t0: float = 0.0) -> "TimeGrid":
        n = int(round(T / dt))
        if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
            raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
        return cls(t0, dt, n)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    @property
    def T(self) -> float:
        return self.dt * self.steps


def liouvillian(h: Hamiltonian) -> SuperOperator:
    """Superoperator of rho -> [H, rho] in the column-stacking convention.

    The commutator sends Hermitian operators to anti-Hermitian ones, so the
    Hermiticity flag is False; -iL is the Hermiticity-preserving generator.
    """
    m = h.matrix
    eye = np.eye(m.shape[0])
    return SuperOperator(h.space, np.kron(eye, m) - np.kron(m.T, eye), False)


def unitary(h: Hamiltonian, t: float) -> np.ndarray:
    dec = spectral(h.matrix)
    v = dec.eigenvectors
    return (v * np.exp(-1j * t * dec.eigenvalues)) @ v.conj().T


def propagate_unitary(rho: DensityOperator, h: Hamiltonian, t: float) -> DensityOperator:
    u = unitary(h, t)
    return DensityOperator(rho.space, u @ rho.matrix @ u.conj().T, validate=rho.validate)


def _is_normal(a: np.ndarray) -> bool:
    scale = max(np.max(np.abs(a)), 1.0) ** 2
    return np.max(np.abs(a @ a.conj().T - a.conj().T @ a)) <= 1e-12 * scale


def expm_generator(g: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t g); Schur diagonalization for normal g, Pade scaling-and-squaring otherwise."""
    g = np.asarray(g, dtype=complex)
    if t == 0:
        return np.eye(g.shape[0], dtype=complex)
    if _is_normal(g):
        tri, z = scipy.linalg.schur(g, output="complex")
        return (z * np.exp(-1j * t * np.diag(tri))) @ z.conj().T
    return scipy.linalg.expm(-1j * t * g)


def propagator_superop(g: SuperOperator, t: float) -> SuperOperator:
    return SuperOperator(g.space, expm_generator(g.matrix, t))
