"""Hilbert-space bookkeeping, states, partial traces and Liouville-space vectors.

Vectorization convention
------------------------
Operators are vectorized by *column stacking*: for a ``d x d`` matrix ``A``,
``vec(A)[i + d*j] = A[i, j]`` (numpy ``order="F"``).  With this convention

    vec(A X B) = (B.T kron A) vec(X)

and every superoperator constructor in the package relies on that identity.
The Hilbert-Schmidt inner product ``tr(A^dagger B)`` equals ``vec(A)^H vec(B)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .policy import DimensionError, get_policy

__all__ = [
    "HilbertSpace",
    "PureState",
    "DensityOperator",
    "SuperOperator",
    "SpectralDecomposition",
    "tensor",
    "partial_trace",
    "permute_factors",
    "vectorize",
    "devectorize",
    "spectral",
    "trace_distance",
    "random_hermitian",
    "random_pure",
    "random_density",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of labelled finite-dimensional factors."""

    factors: tuple[tuple[str, int], ...]

    def __init__(self, factors: Iterable[tuple[str, int]]):
        facs = tuple((str(lab), int(d)) for lab, d in factors)
        if not facs:
            raise ValueError("a Hilbert space needs at least one factor")
        labels = [lab for lab, _ in facs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels in {labels}")
        for lab, d in facs:
            if d < 1:
                raise ValueError(f"factor {lab!r} has non-positive dimension {d}")
        object.__setattr__(self, "factors", facs)
        cap = get_policy().max_dim
        if self.total_dim > cap:
            raise DimensionError(
                f"total dimension {self.total_dim} exceeds cap {cap} "
                f"(factors: {', '.join(f'{lab}={d}' for lab, d in facs)})"
            )

    @classmethod
    def qubits(cls, *labels: str) -> "HilbertSpace":
        return cls([(lab, 2) for lab in labels])

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def dim_of(self, labels: Iterable[str]) -> int:
        return int(np.prod([self.dims[self.index(lab)] for lab in labels]))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown factor label {label!r}; have {self.labels}") from None

    def sub(self, labels: Iterable[str]) -> "HilbertSpace":
        """Subspace of the given factors, kept in this space's order."""
        wanted = set(labels)
        for lab in wanted:
            self.index(lab)
        return HilbertSpace([f for f in self.factors if f[0] in wanted])

    def __mul__(self, other: "HilbertSpace") -> "HilbertSpace":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ValueError(f"factor label collision: {sorted(clash)}")
        return HilbertSpace(self.factors + other.factors)

    def __str__(self) -> str:
        return " x ".join(f"{lab}({d})" for lab, d in self.factors)


@dataclass(frozen=True)
class PureState:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amp.shape[0] != self.space.total_dim:
            raise ValueError(
                f"amplitude vector has length {amp.shape[0]}, space needs {self.space.total_dim}"
            )
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > get_policy().normalization:
            raise ValueError(f"state is not normalized (norm {norm!r})")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @classmethod
    def normalized(cls, space: HilbertSpace, amplitudes) -> "PureState":
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(space, amp / np.linalg.norm(amp))

    @classmethod
    def basis(cls, space: HilbertSpace, index: int) -> "PureState":
        amp = np.zeros(space.total_dim, dtype=complex)
        amp[index] = 1.0
        return cls(space, amp)

    def density(self) -> "DensityOperator":
        return DensityOperator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))

    def kron(self, other: "PureState") -> "PureState":
        return PureState(self.space * other.space, np.kron(self.amplitudes, other.amplitudes))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityOperator:
    """Positive unit-trace operator.

    ``validate=False`` skips the positivity/trace checks; solvers use it for
    approximate states whose defects are reported as diagnostics instead.
    """

    space: HilbertSpace
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match space dimension {d}")
        object.__setattr__(self, "matrix", _frozen(m))
        if self.validate:
            pol = get_policy()
            herm = np.max(np.abs(m - m.conj().T))
            if herm > pol.hermiticity:
                raise ValueError(f"matrix is not Hermitian (deviation {herm:.3e})")
            tr = np.trace(m).real
            if abs(tr - 1.0) > pol.trace:
                raise ValueError(f"trace is {tr!r}, expected 1")
            lo = np.linalg.eigvalsh(m)[0]
            if lo < pol.positivity:
                raise ValueError(f"matrix is not positive (min eigenvalue {lo:.3e})")

    @classmethod
    def maximally_mixed(cls, space: HilbertSpace) -> "DensityOperator":
        d = space.total_dim
        return cls(space, np.eye(d) / d)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def trace_deviation(self) -> float:
        return float(abs(np.trace(self.matrix) - 1.0))

    def positivity_margin(self) -> float:
        return float(self.eigenvalues()[0])


@dataclass(frozen=True)
class SuperOperator:
    """Matrix acting on column-stacked vectorized operators of ``space``."""

    space: HilbertSpace
    matrix: np.ndarray
    hermiticity_preserving: bool | None = None

    def __post_init__(self):
        d2 = self.space.total_dim ** 2
        cap = get_policy().max_superop_dim
        if d2 > cap:
            raise DimensionError(f"superoperator dimension {d2} exceeds cap {cap}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (d2, d2):
            raise ValueError(f"superoperator shape {m.shape}, expected {(d2, d2)}")
        if self.hermiticity_preserving:
            # Phi(X^dag) = Phi(X)^dag for all X  <=>  M S = S conj(M), S: vec(X) -> vec(X^T)
            d = self.space.total_dim
            swap = np.arange(d2).reshape(d, d).T.ravel()
            dev = np.max(np.abs(m[:, swap] - m.conj()[swap, :]))
            if dev > get_policy().reconstruction:
                raise ValueError(f"superoperator is flagged Hermiticity-preserving but "
                                 f"deviates by {dev:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def identity(cls, space: HilbertSpace) -> "SuperOperator":
        return cls(space, np.eye(space.total_dim ** 2), True)

    def apply(self, op) -> np.ndarray:
        """Apply to an operator (matrix or DensityOperator); returns a matrix."""
        m = op.matrix if isinstance(op, DensityOperator) else np.asarray(op)
        return devectorize(self.matrix @ vectorize(m))

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        if other.space != self.space:
            raise ValueError("superoperators act on different spaces")
        return SuperOperator(self.space, self.matrix @ other.matrix)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, matching eigenvalues

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def permute_factors(op: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator (2-d) or vector (1-d).

    ``order[k]`` is the old position of the factor that ends up at position k.
    """
    n = len(dims)
    new_dims = [dims[k] for k in order]
    d = int(np.prod(dims))
    if op.ndim == 1:
        return op.reshape(dims).transpose(order).reshape(d)
    t = op.reshape(list(dims) * 2)
    t = t.transpose(list(order) + [n + k for k in order])
    return t.reshape(int(np.prod(new_dims)), -1)


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    space = a.space * b.space
    return DensityOperator(space, np.kron(a.matrix, b.matrix), validate=a.validate and b.validate)


def _trace_keep(matrix: np.ndarray, space: HilbertSpace, keep: Sequence[str]) -> np.ndarray:
    keep_idx = sorted(space.index(lab) for lab in keep)
    rest = [k for k in range(len(space.dims)) if k not in keep_idx]
    dims = space.dims
    dk = int(np.prod([dims[k] for k in keep_idx]))
    dr = int(np.prod([dims[k] for k in rest])) if rest else 1
    m = permute_factors(matrix, dims, keep_idx + rest)
    return np.trace(m.reshape(dk, dr, dk, dr), axis1=1, axis2=3)


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Trace out every factor not in ``keep``; kept factors stay in original order."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one factor")
    sub = rho.space.sub(keep)
    return DensityOperator(sub, _trace_keep(rho.matrix, rho.space, keep), validate=rho.validate)


def vectorize(op) -> np.ndarray:
    m = op.matrix if isinstance(op, DensityOperator) else np.asarray(op)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m.reshape(-1, order="F")


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(np.sqrt(v.shape[0])))
    if v.ndim != 1 or d * d != v.shape[0]:
        raise ValueError(f"vector length {v.shape} is not a perfect square")
    return v.reshape(d, d, order="F")


def spectral(h) -> SpectralDecomposition:
    m = h.matrix if hasattr(h, "matrix") else np.asarray(h, dtype=complex)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > get_policy().reconstruction:
        raise ValueError(f"operator is not Hermitian (deviation {dev:.3e})")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return SpectralDecomposition(w[::-1].copy(), v[:, ::-1].copy())


def trace_distance(a, b) -> float:
    ma = a.matrix if hasattr(a, "matrix") else np.asarray(a)
    mb = b.matrix if hasattr(b, "matrix") else np.asarray(b)
    diff = ma - mb
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T) / np.sqrt(dim)


def random_pure(space: HilbertSpace, rng: np.random.Generator) -> PureState:
    d = space.total_dim
    return PureState.normalized(space, rng.normal(size=d) + 1j * rng.normal(size=d))


def random_density(space: HilbertSpace, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Induced-measure random state (Ginibre of the given rank)."""
    d = space.total_dim
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityOperator(space, m / np.trace(m).real)
