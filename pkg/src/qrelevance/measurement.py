"""Premeasurement, Schmidt decompositions, Born-rule collapse and branch bookkeeping.

Seeds: every sampling call builds its own ``numpy.random.Generator`` from an
integer seed, which is stored on the resulting records.  Independent streams
for parallel sampling come from :func:`spawn_seeds`, which splits a root seed
with ``numpy.random.SeedSequence.spawn``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import Hamiltonian, unitary
from .policy import get_policy
from .relevance import _check_split, check_basis, shannon_entropy
from .state import DensityOperator, HilbertSpace, PureState, permute_factors

__all__ = [
    "SchmidtDecomposition",
    "BranchRecord",
    "BranchTree",
    "premeasure",
    "premeasurement_unitary",
    "schmidt",
    "collapse_sample",
    "collapse_counts",
    "spawn_seeds",
    "branch_ensemble",
    "nested_schmidt",
    "tree_from_ensemble",
    "interference_overlap",
    "interference_series",
    "state_digest",
]


def state_digest(state: PureState) -> str:
    h = hashlib.sha256(repr(state.space.factors).encode())
    h.update(np.ascontiguousarray(state.amplitudes).tobytes())
    return h.hexdigest()[:16]


def _layout(space: HilbertSpace, side1, side2):
    o1 = sorted(space.index(lab) for lab in side1)
    o2 = sorted(space.index(lab) for lab in side2)
    return o1, o2


def _to_space_order(vec_or_op: np.ndarray, space: HilbertSpace, side1, side2) -> np.ndarray:
    """Map from the [side1, side2] layout back to the space's factor order."""
    o1, o2 = _layout(space, side1, side2)
    layout = o1 + o2
    dims = [space.dims[k] for k in layout]
    return permute_factors(vec_or_op, dims, [layout.index(k) for k in range(len(layout))])


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    space: HilbertSpace
    bipartition: tuple[tuple[str, ...], tuple[str, ...]]
    coefficients: np.ndarray
    side1_states: tuple[PureState, ...]
    side2_states: tuple[PureState, ...]
    degeneracy_flag: bool

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    @property
    def probabilities(self) -> np.ndarray:
        return self.coefficients ** 2

    def entropy(self) -> float:
        return shannon_entropy(self.probabilities)

    def branch_amplitudes(self, l: int) -> np.ndarray:
        """phi_l (x) psi_l as an amplitude vector in the space's factor order."""
        prod = np.kron(self.side1_states[l].amplitudes, self.side2_states[l].amplitudes)
        return _to_space_order(prod, self.space, *self.bipartition)

    def reconstruct(self) -> np.ndarray:
        return sum(c * self.branch_amplitudes(l) for l, c in enumerate(self.coefficients))


def schmidt(state: PureState, bipartition) -> SchmidtDecomposition:
    """Singular-value factorization of the amplitude matrix c_ik across the cut.

    Conventions: coefficients descending; values below the policy cutoff are
    dropped; the first non-negligible amplitude of every side-1 vector is made
    real positive; vectors sharing a (numerically) degenerate coefficient are
    ordered lexicographically by their side-1 amplitudes.
    """
    pol = get_policy()
    space = state.space
    side1, side2 = _check_split(space, bipartition)
    o1, o2 = _layout(space, side1, side2)
    dims = space.dims
    d1 = int(np.prod([dims[k] for k in o1]))
    c = permute_factors(state.amplitudes, dims, o1 + o2).reshape(d1, -1)
    u, s, vh = np.linalg.svd(c, full_matrices=False)
    keep = s > pol.schmidt_cutoff
    u, s, vh = u[:, keep], s[keep], vh[keep]
    for l in range(len(s)):
        lead = np.flatnonzero(np.abs(u[:, l]) > 1e-10)[0]
        phase = u[lead, l] / abs(u[lead, l])
        u[:, l] /= phase
        vh[l] *= phase
    degenerate = bool(np.any(np.abs(np.diff(s)) < pol.degeneracy))
    if degenerate:
        groups, start = [], 0
        for l in range(1, len(s) + 1):
            if l == len(s) or s[l - 1] - s[l] >= pol.degeneracy:
                groups.append(list(range(start, l)))
                start = l
        order = []
        for g in groups:
            order += sorted(g, key=lambda l: tuple(np.round(np.column_stack(
                [u[:, l].real, u[:, l].imag]).ravel(), 12)))
        u, s, vh = u[:, order], s[order], vh[order]
    sub1 = space.sub(side1)
    sub2 = space.sub(side2)
    phis = tuple(PureState(sub1, u[:, l]) for l in range(len(s)))
    psis = tuple(PureState(sub2, vh[l]) for l in range(len(s)))
    return SchmidtDecomposition(space, (side1, side2), s.copy(), phis, psis, degenerate)


@dataclass(frozen=True, eq=False)
class BranchRecord:
    """One product component phi_l (x) psi_l of a parent state and its Born weight."""

    outcome: int
    probability: float
    state: PureState
    factors: tuple[PureState, PureState]
    bipartition: tuple[tuple[str, ...], tuple[str, ...]]
    parent_digest: str
    seed: int | None = None
    draw: int | None = None
    node: int | None = None
    parent: int | None = None
    level: int = 1

    def density(self) -> DensityOperator:
        return self.state.density()


def _record(dec: SchmidtDecomposition, l: int, parent_digest: str, **kw) -> BranchRecord:
    return BranchRecord(
        outcome=l,
        probability=float(dec.coefficients[l] ** 2),
        state=PureState.normalized(dec.space, dec.branch_amplitudes(l)),
        factors=(dec.side1_states[l], dec.side2_states[l]),
        bipartition=dec.bipartition,
        parent_digest=parent_digest,
        **kw,
    )


def spawn_seeds(root: int, n: int) -> list[int]:
    """Deterministic child seeds for ``n`` independent sampling streams."""
    return [int(child.generate_state(1, dtype=np.uint64)[0])
            for child in np.random.SeedSequence(root).spawn(n)]


def _born(dec: SchmidtDecomposition) -> np.ndarray:
    p = dec.probabilities
    return p / p.sum()


def collapse_sample(state: PureState, bipartition, seed: int) -> BranchRecord:
    """Draw one Schmidt branch with probability c_l**2 (deterministic given ``seed``)."""
    dec = schmidt(state, bipartition)
    rng = np.random.default_rng(seed)
    l = int(rng.choice(dec.rank, p=_born(dec)))
    return _record(dec, l, state_digest(state), seed=seed, draw=0)


def collapse_counts(state: PureState, bipartition, n: int, seed: int) -> np.ndarray:
    """Outcome counts of ``n`` independent collapses drawn from one seeded stream."""
    dec = schmidt(state, bipartition)
    rng = np.random.default_rng(seed)
    draws = rng.choice(dec.rank, size=n, p=_born(dec))
    return np.bincount(draws, minlength=dec.rank)


def branch_ensemble(state: PureState, bipartition) -> tuple[list[BranchRecord], DensityOperator]:
    dec = schmidt(state, bipartition)
    digest = state_digest(state)
    records = [_record(dec, l, digest, node=l) for l in range(dec.rank)]
    mix = sum(r.probability * np.outer(r.state.amplitudes, r.state.amplitudes.conj())
              for r in records)
    mix = mix / np.trace(mix).real
    return records, DensityOperator(state.space, mix)


@dataclass(frozen=True, eq=False)
class BranchTree:
    """Branches of a two-level (nested) Schmidt split.

    Level-1 nodes split the first region from the rest; level-2 nodes split
    each level-1 relative state of the rest into its two sub-regions.
    ``probability`` on a level-2 node is conditional on its parent.
    """

    parent_digest: str
    regions: tuple[tuple[str, ...], ...]
    nodes: tuple[BranchRecord, ...]
    decompositions: dict = field(default_factory=dict)  # node id (or None for root) -> Schmidt

    def children(self, node: int | None) -> list[BranchRecord]:
        return [n for n in self.nodes if n.parent == node]

    def leaves(self) -> list[BranchRecord]:
        return [n for n in self.nodes if not self.children(n.node)]

    def path_probability(self, node: int) -> float:
        p = 1.0
        rec = self.nodes[node]
        while rec is not None:
            p *= rec.probability
            rec = None if rec.parent is None else self.nodes[rec.parent]
        return p

    def to_dict(self) -> dict:
        out = []
        for n in self.nodes:
            dec = self.decompositions.get(n.node)
            out.append({
                "id": n.node,
                "parent": n.parent,
                "level": n.level,
                "outcome": n.outcome,
                "probability": n.probability,
                "path_probability": self.path_probability(n.node),
                "bipartition": [list(side) for side in n.bipartition],
                "nested_coefficients": None if dec is None else dec.coefficients.tolist(),
                "state": [[float(a.real), float(a.imag)] for a in n.state.amplitudes],
            })
        root = self.decompositions.get(None)
        return {
            "parent_digest": self.parent_digest,
            "regions": [list(r) for r in self.regions],
            "root_coefficients": None if root is None else root.coefficients.tolist(),
            "nodes": out,
        }


def tree_from_ensemble(state: PureState, bipartition) -> BranchTree:
    dec = schmidt(state, bipartition)
    digest = state_digest(state)
    nodes = tuple(_record(dec, l, digest, node=l) for l in range(dec.rank))
    return BranchTree(digest, dec.bipartition, nodes, {None: dec})


def nested_schmidt(state: PureState, regions: Sequence[Sequence[str]]) -> BranchTree:
    """Two-level split over regions (I1, I21, I22) covering the space."""
    if len(regions) != 3:
        raise ValueError("nested_schmidt needs exactly three factor groups")
    r1, r21, r22 = (tuple(r) for r in regions)
    all_labels = r1 + r21 + r22
    if len(set(all_labels)) != len(all_labels):
        raise ValueError("factor groups overlap")
    space = state.space
    top = schmidt(state, (r1, r21 + r22))
    digest = state_digest(state)
    nodes: list[BranchRecord] = []
    decs: dict = {None: top}
    for l in range(top.rank):
        nodes.append(_record(top, l, digest, node=len(nodes), level=1))
    for l in range(top.rank):
        beta, gamma = top.side1_states[l], top.side2_states[l]
        sub = schmidt(gamma, (r21, r22))
        decs[l] = sub
        for m in range(sub.rank):
            inner = sub.branch_amplitudes(m)  # on the I2 factors, space order
            full = _to_space_order(np.kron(beta.amplitudes, inner), space, r1, r21 + r22)
            nodes.append(BranchRecord(
                outcome=m,
                probability=float(sub.coefficients[m] ** 2),
                state=PureState.normalized(space, full),
                factors=(sub.side1_states[m], sub.side2_states[m]),
                bipartition=sub.bipartition,
                parent_digest=state_digest(gamma),
                node=len(nodes),
                parent=l,
                level=2,
            ))
    return BranchTree(digest, (r1, r21, r22), tuple(nodes), decs)


def premeasurement_unitary(space: HilbertSpace, pointer_dim: int, basis=None) -> np.ndarray:
    """sum_i |phi_i><phi_i| (x) X^i with X the cyclic shift on the pointer."""
    b = check_basis(space, basis)
    d = space.total_dim
    if pointer_dim < d:
        raise ValueError(f"pointer dimension {pointer_dim} is smaller than the {d} outcomes")
    shift = np.roll(np.eye(pointer_dim), 1, axis=0)
    u = np.zeros((d * pointer_dim,) * 2, dtype=complex)
    xi = np.eye(pointer_dim)
    for i in range(d):
        u += np.kron(np.outer(b[:, i], b[:, i].conj()), xi)
        xi = shift @ xi
    return u


def premeasure(system: PureState, pointer_dim: int, basis=None,
               pointer_label: str = "pointer") -> PureState:
    """Entangle ``system`` with a pointer in its ready state |0>: sum c_i phi_i Phi^(i)."""
    u = premeasurement_unitary(system.space, pointer_dim, basis)
    ready = np.zeros(pointer_dim, dtype=complex)
    ready[0] = 1.0
    space = system.space * HilbertSpace([(pointer_label, pointer_dim)])
    return PureState.normalized(space, u @ np.kron(system.amplitudes, ready))


def _interference_operator(a: BranchRecord, b: BranchRecord) -> np.ndarray:
    if a.parent_digest != b.parent_digest or a.bipartition != b.bipartition:
        raise ValueError("branches do not come from the same parent decomposition")
    phi_a, phi_b = a.factors[0].amplitudes, b.factors[0].amplitudes
    side1, side2 = a.bipartition
    d2 = a.factors[1].space.total_dim
    op = np.kron(np.outer(phi_a, phi_b.conj()), np.eye(d2))
    return _to_space_order(op, a.state.space, side1, side2)


def interference_series(branch_a: BranchRecord, branch_b: BranchRecord, h: Hamiltonian,
                        times) -> np.ndarray:
    """Interference amplitude of two sibling branches over a time grid.

    With both branches evolved by the joint Hamiltonian, the amplitude is
    <a(t)| (|phi_a><phi_b| (x) 1) |b(t)>: the overlap of the side-2 states
    that accompany the *fixed* side-1 records phi_a and phi_b.  It vanishes at
    t = 0 and stays zero when H has no coupling across the cut.
    """
    op = _interference_operator(branch_a, branch_b)
    a0, b0 = branch_a.state.amplitudes, branch_b.state.amplitudes
    out = []
    for t in np.atleast_1d(times):
        u = unitary(h, float(t))
        out.append(np.vdot(u @ a0, op @ (u @ b0)))
    return np.array(out)


def interference_overlap(branch_a: BranchRecord, branch_b: BranchRecord, h: Hamiltonian,
                         t: float) -> complex:
    return complex(interference_series(branch_a, branch_b, h, [t])[0])
