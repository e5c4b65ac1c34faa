"""Zwanzig projections (idempotent relevance maps) and entropy functionals.

Entropies use k = 1 and the natural logarithm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .policy import get_policy
from .state import (
    DensityOperator,
    HilbertSpace,
    SuperOperator,
    _trace_keep,
    permute_factors,
    vectorize,
)

__all__ = [
    "SubspacePartition",
    "ZwanzigProjection",
    "EntropyBreakdown",
    "NonlinearProjectionError",
    "check_basis",
    "dephase",
    "coarse_grain_equipartition",
    "block_dephase",
    "product_of_marginals",
    "as_superoperator",
    "von_neumann_entropy",
    "shannon_entropy",
    "relevance_entropy",
    "additive_local_entropy",
]


class NonlinearProjectionError(TypeError):
    """A linear-only operation was handed a nonlinear projection."""


def check_basis(space: HilbertSpace, basis) -> np.ndarray:
    """Validate an orthonormal basis given as a matrix whose columns are the vectors."""
    d = space.total_dim
    b = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if b.shape != (d, d):
        raise ValueError(f"basis must be a {d}x{d} matrix of column vectors, got {b.shape}")
    dev = np.max(np.abs(b.conj().T @ b - np.eye(d)))
    if dev > get_policy().idempotence:
        raise ValueError(f"basis is not orthonormal (deviation {dev:.3e})")
    return b


@dataclass(frozen=True)
class SubspacePartition:
    """Complete set of mutually orthogonal projectors, one per relevant value."""

    space: HilbertSpace
    blocks: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self):
        pol = get_policy()
        d = self.space.total_dim
        blocks = []
        for label, p in self.blocks:
            p = np.array(p, dtype=complex)
            if p.shape != (d, d):
                raise ValueError(f"projector {label!r} has shape {p.shape}, expected {(d, d)}")
            if np.max(np.abs(p - p.conj().T)) > pol.hermiticity:
                raise ValueError(f"projector {label!r} is not Hermitian")
            if np.max(np.abs(p @ p - p)) > pol.idempotence:
                raise ValueError(f"projector {label!r} is not idempotent")
            p.setflags(write=False)
            blocks.append((str(label), p))
        if not blocks:
            raise ValueError("partition has no blocks")
        labels = [lab for lab, _ in blocks]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate block labels {labels}")
        for i, (la, pa) in enumerate(blocks):
            for lb, pb in blocks[i + 1:]:
                if np.max(np.abs(pa @ pb)) > pol.idempotence:
                    raise ValueError(f"blocks {la!r} and {lb!r} are not orthogonal")
        total = sum(p for _, p in blocks)
        if np.max(np.abs(total - np.eye(d))) > pol.idempotence:
            raise ValueError("partition is incomplete: projectors do not sum to the identity")
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def from_indices(cls, space: HilbertSpace, groups: Sequence[Sequence[int]],
                     labels: Sequence[str] | None = None, basis=None) -> "SubspacePartition":
        """Blocks spanned by groups of basis vectors (computational basis by default)."""
        b = check_basis(space, basis)
        labels = labels or [str(k) for k in range(len(groups))]
        blocks = []
        for lab, idx in zip(labels, groups):
            cols = b[:, list(idx)]
            blocks.append((lab, cols @ cols.conj().T))
        return cls(space, tuple(blocks))

    @classmethod
    def from_factor(cls, space: HilbertSpace, label: str, basis=None) -> "SubspacePartition":
        """Blocks |k><k| on one factor tensored with the identity on the rest."""
        k = space.index(label)
        dims = space.dims
        dk = dims[k]
        b = np.eye(dk, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
        left = int(np.prod(dims[:k]))
        right = int(np.prod(dims[k + 1:]))
        blocks = []
        for j in range(dk):
            pj = np.outer(b[:, j], b[:, j].conj())
            blocks.append((f"{label}={j}", np.kron(np.kron(np.eye(left), pj), np.eye(right))))
        return cls(space, tuple(blocks))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.blocks)

    @property
    def projectors(self) -> tuple[np.ndarray, ...]:
        return tuple(p for _, p in self.blocks)

    def block_dims(self) -> np.ndarray:
        return np.array([np.trace(p).real for p in self.projectors])


@dataclass(frozen=True)
class EntropyBreakdown:
    total: float
    relevant_info_term: float
    averaged_physical_term: float
    weights: np.ndarray
    S_alpha: np.ndarray


_KINDS = ("identity", "dephase", "coarse_grain_equipartition", "block_dephase", "product_of_marginals")


@dataclass(frozen=True, eq=False)
class ZwanzigProjection:
    """Idempotent relevance map on density operators of ``space``.

    ``params`` holds the basis (dephase), the partition (coarse-grain and
    block dephasing) or the pair of factor groups (product of marginals).
    Only linear projections expose a superoperator.
    """

    kind: str
    space: HilbertSpace
    params: object = None
    name: str = field(default="")

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown projection kind {self.kind!r}; expected one of {_KINDS}")

    # constructors
    @classmethod
    def identity(cls, space: HilbertSpace) -> "ZwanzigProjection":
        return cls("identity", space, None, "identity")

    @classmethod
    def dephasing(cls, space: HilbertSpace, basis=None) -> "ZwanzigProjection":
        return cls("dephase", space, check_basis(space, basis), "dephase")

    @classmethod
    def equipartition(cls, part: SubspacePartition) -> "ZwanzigProjection":
        return cls("coarse_grain_equipartition", part.space, part, "coarse_grain_equipartition")

    @classmethod
    def block_dephasing(cls, part: SubspacePartition) -> "ZwanzigProjection":
        return cls("block_dephase", part.space, part, "block_dephase")

    @classmethod
    def marginals(cls, space: HilbertSpace, split) -> "ZwanzigProjection":
        return cls("product_of_marginals", space, _check_split(space, split), "product_of_marginals")

    @property
    def linear(self) -> bool:
        return self.kind != "product_of_marginals"

    def apply_matrix(self, m: np.ndarray) -> np.ndarray:
        """Apply to an arbitrary operator (linear kinds) or a density matrix."""
        m = np.asarray(m, dtype=complex)
        if self.kind == "identity":
            return m.copy()
        if self.kind == "dephase":
            b = self.params
            diag = np.einsum("ik,ij,jk->k", b.conj(), m, b)
            return (b * diag) @ b.conj().T
        if self.kind == "block_dephase":
            return sum(p @ m @ p for p in self.params.projectors)
        if self.kind == "coarse_grain_equipartition":
            part = self.params
            return sum(np.trace(p @ m) * p / n for p, n in zip(part.projectors, part.block_dims()))
        side1, side2 = self.params
        return _product_of_marginals_matrix(m, self.space, side1, side2)

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        if rho.space != self.space:
            raise ValueError(f"projection on {self.space} applied to state on {rho.space}")
        return DensityOperator(self.space, self.apply_matrix(rho.matrix), validate=rho.validate)

    @cached_property
    def superop(self) -> SuperOperator | None:
        if not self.linear:
            return None
        d = self.space.total_dim
        if self.kind == "identity":
            m = np.eye(d * d, dtype=complex)
        elif self.kind == "dephase":
            m = np.zeros((d * d, d * d), dtype=complex)
            for k in range(d):
                v = vectorize(np.outer(self.params[:, k], self.params[:, k].conj()))
                m += np.outer(v, v.conj())
        elif self.kind == "block_dephase":
            m = sum(np.kron(p.T, p) for p in self.params.projectors)
        else:
            part = self.params
            m = sum(np.outer(vectorize(p), vectorize(p).conj()) / n
                    for p, n in zip(part.projectors, part.block_dims()))
        return SuperOperator(self.space, m, True)


def _check_split(space: HilbertSpace, split) -> tuple[tuple[str, ...], tuple[str, ...]]:
    side1, side2 = (tuple(s) for s in split)
    if not side1 or not side2:
        raise ValueError("bipartition has an empty side")
    for lab in side1 + side2:
        space.index(lab)
    if set(side1) & set(side2):
        raise ValueError(f"bipartition sides overlap: {sorted(set(side1) & set(side2))}")
    if set(side1) | set(side2) != set(space.labels):
        missing = set(space.labels) - set(side1) - set(side2)
        raise ValueError(f"bipartition does not cover factors {sorted(missing)}")
    return side1, side2


def _product_of_marginals_matrix(m, space, side1, side2) -> np.ndarray:
    a = _trace_keep(m, space, side1)
    b = _trace_keep(m, space, side2)
    # dividing by tr(m) keeps the map trace-preserving (tr(a kron b) = tr(m)**2),
    # so round-off in the trace cannot compound under repeated application
    b = b / np.trace(m)
    # kron lays out the factors as [side1 in space order] + [side2 in space order]
    order1 = sorted(space.index(lab) for lab in side1)
    order2 = sorted(space.index(lab) for lab in side2)
    layout = order1 + order2
    dims = [space.dims[k] for k in layout]
    inverse = [layout.index(k) for k in range(len(layout))]
    return permute_factors(np.kron(a, b), dims, inverse)


def dephase(rho: DensityOperator, basis=None) -> DensityOperator:
    return ZwanzigProjection.dephasing(rho.space, basis)(rho)


def coarse_grain_equipartition(rho: DensityOperator, part: SubspacePartition) -> DensityOperator:
    return ZwanzigProjection.equipartition(part)(rho)


def block_dephase(rho: DensityOperator, part: SubspacePartition) -> DensityOperator:
    return ZwanzigProjection.block_dephasing(part)(rho)


def product_of_marginals(rho: DensityOperator, split) -> DensityOperator:
    return ZwanzigProjection.marginals(rho.space, split)(rho)


def as_superoperator(p: ZwanzigProjection) -> SuperOperator:
    if not p.linear:
        raise NonlinearProjectionError(
            f"{p.kind} is nonlinear and has no superoperator; the memory-kernel "
            "and Markov equations need a linear projection"
        )
    return p.superop


def shannon_entropy(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > get_policy().entropy_clamp]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho) -> float:
    m = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return shannon_entropy(lam)


def relevance_entropy(rho: DensityOperator, part: SubspacePartition) -> EntropyBreakdown:
    """Split the coarse-grained entropy into missing relevant information and averaged block entropy."""
    if part.space != rho.space:
        raise ValueError("partition and state live on different spaces")
    w = np.array([np.trace(p @ rho.matrix).real for p in part.projectors])
    s_alpha = np.log(part.block_dims())
    info = shannon_entropy(w)
    phys = float(np.sum(w * s_alpha))
    total = von_neumann_entropy(coarse_grain_equipartition(rho, part))
    return EntropyBreakdown(total, info, phys, w, s_alpha)


def additive_local_entropy(rho: DensityOperator, factorization: Iterable[Iterable[str]]) -> float:
    groups = [tuple(g) for g in factorization]
    seen: set[str] = set()
    for g in groups:
        for lab in g:
            rho.space.index(lab)
            if lab in seen:
                raise ValueError(f"factor {lab!r} appears in more than one group")
            seen.add(lab)
    if seen != set(rho.space.labels):
        raise ValueError(f"groups do not cover factors {sorted(set(rho.space.labels) - seen)}")
    return float(sum(von_neumann_entropy(_trace_keep(rho.matrix, rho.space, g)) for g in groups))
