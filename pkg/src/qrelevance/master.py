"""Dynamics of the relevant part of a state.

Four routes produce a :class:`Trajectory` of relevant states:

* :func:`exact_projected_reference` projects exact unitary evolution (the oracle);
* :func:`premaster_evolve` solves the exact memory-kernel equation
  ``i d/dt rho_rel = P L rho_rel + P L exp(-i(1-P)L t) rho_irr(0)
  - i int_0^t K(tau) rho_rel(t - tau) dtau`` with
  ``K(tau) = P L exp(-i(1-P)L tau) (1-P) L``;
* :func:`markov_evolve` uses the memoryless generator
  ``G = -P L [i(1-P)L + eps]^-1 (1-P) L`` (no ``P L`` streaming term);
* :func:`alternating_evolve` alternates unitary steps with the projection.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import Hamiltonian, TimeGrid, expm_generator, liouvillian, unitary
from .policy import get_policy
from .relevance import NonlinearProjectionError, ZwanzigProjection, von_neumann_entropy
from .state import DensityOperator, SuperOperator, devectorize, spectral, vectorize

__all__ = [
    "Trajectory",
    "MemoryKernel",
    "SolverError",
    "SingularResolventError",
    "exact_projected_reference",
    "build_memory_kernel",
    "premaster_evolve",
    "markov_generator",
    "markov_eps_sensitivity",
    "markov_evolve",
    "alternating_evolve",
]


class SolverError(RuntimeError):
    """Numerical guard failure; ``step`` is the first offending grid index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class SingularResolventError(SolverError):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    states: tuple[DensityOperator, ...]
    trace_dev: np.ndarray
    entropy: np.ndarray
    positivity_margin: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) != self.grid.steps + 1:
            raise ValueError(f"{len(self.states)} states for a grid of {self.grid.steps} steps")

    @classmethod
    def from_matrices(cls, grid: TimeGrid, space, matrices, **meta) -> "Trajectory":
        states, tr, ent, pos = [], [], [], []
        for m in matrices:
            rho = DensityOperator(space, m, validate=False)
            lam = rho.eigenvalues()
            states.append(rho)
            tr.append(abs(np.trace(m) - 1.0))
            ent.append(von_neumann_entropy(rho))
            pos.append(lam[0])
        return cls(grid, tuple(states), np.array(tr), np.array(ent), np.array(pos), dict(meta))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def final(self) -> DensityOperator:
        return self.states[-1]

    def matrices(self) -> np.ndarray:
        return np.stack([s.matrix for s in self.states])

    def max_distance(self, other: "Trajectory") -> float:
        """Largest trace distance between corresponding states."""
        diff = self.matrices() - other.matrices()
        herm = 0.5 * (diff + np.conj(np.swapaxes(diff, 1, 2)))
        return float(0.5 * np.abs(np.linalg.eigvalsh(herm)).sum(axis=1).max())


def _require_linear(p: ZwanzigProjection):
    if not p.linear:
        raise NonlinearProjectionError(
            f"{p.kind} is nonlinear; only alternating dynamics and the exact reference accept it"
        )


def exact_projected_reference(rho0: DensityOperator, h: Hamiltonian, p: ZwanzigProjection,
                              grid: TimeGrid) -> Trajectory:
    dec = spectral(h.matrix)
    v, e = dec.eigenvectors, dec.eigenvalues
    r0 = v.conj().T @ rho0.matrix @ v
    out = []
    for t in grid.times - grid.t0:
        ph = np.exp(-1j * t * e)
        rt = v @ (ph[:, None] * r0 * ph.conj()[None, :]) @ v.conj().T
        out.append(p.apply_matrix(rt))
    return Trajectory.from_matrices(grid, rho0.space, out, solver="exact")


def _range_basis(p: ZwanzigProjection) -> np.ndarray:
    """Orthonormal basis (columns) of the range of a linear projection superoperator."""
    pm = p.superop.matrix
    u, sv, _ = np.linalg.svd(pm)
    rank = int(np.sum(sv > 0.5))
    return u[:, :rank]


@dataclass(frozen=True, eq=False)
class MemoryKernel:
    """Kernel and inhomogeneity tabulated on a uniform tau grid.

    Values are stored in coordinates of an orthonormal basis ``basis`` of the
    relevant subspace (columns, Liouville space); ``full`` lifts them back.
    """

    taus: np.ndarray
    kernels: np.ndarray          # (n_tau, r, r)
    inhomogeneity: np.ndarray    # (n_tau, r): P L exp(-i(1-P)L t) rho_irr(0)
    streaming: np.ndarray        # (r, r): P L restricted to the relevant subspace
    basis: np.ndarray
    space: object

    def full(self, k: int) -> SuperOperator:
        b = self.basis
        return SuperOperator(self.space, b @ self.kernels[k] @ b.conj().T)


def build_memory_kernel(h: Hamiltonian, p: ZwanzigProjection, tau_grid,
                        rho_irr0=None) -> MemoryKernel:
    """Tabulate K(tau) and J(tau) on ``tau_grid`` (array or TimeGrid).

    A uniform grid starting at 0 is tabulated by repeated multiplication with
    one step propagator of (1-P)L; anything else falls back to one matrix
    exponential per point.
    """
    _require_linear(p)
    taus = np.asarray(tau_grid.times - tau_grid.t0 if isinstance(tau_grid, TimeGrid) else tau_grid,
                      dtype=float)
    L = liouvillian(h).matrix
    P = p.superop.matrix
    Q = np.eye(P.shape[0]) - P
    gen = Q @ L
    B = _range_basis(p)
    PL_out = B.conj().T @ P @ L  # (r, d^2), lands in the relevant coordinates
    W = gen @ B                  # (1-P) L acting on relevant basis vectors
    x = np.zeros(P.shape[0], dtype=complex) if rho_irr0 is None else vectorize(np.asarray(rho_irr0))
    n = len(taus)
    Ks = np.empty((n, B.shape[1], B.shape[1]), dtype=complex)
    Js = np.empty((n, B.shape[1]), dtype=complex)
    steps = np.diff(taus)
    uniform = n > 1 and taus[0] == 0 and np.allclose(steps, steps[0], rtol=1e-9, atol=0)
    if uniform:
        E = expm_generator(gen, steps[0])
        Wk, xk = W, x
        for k in range(n):
            Ks[k] = PL_out @ Wk
            Js[k] = PL_out @ xk
            Wk, xk = E @ Wk, E @ xk
    else:
        for k, tau in enumerate(taus):
            E = expm_generator(gen, tau)
            Ks[k] = PL_out @ (E @ W)
            Js[k] = PL_out @ (E @ x)
    return MemoryKernel(taus, Ks, Js, PL_out @ B, B, h.space)


def premaster_evolve(rho0: DensityOperator, h: Hamiltonian, p: ZwanzigProjection,
                     grid: TimeGrid, rho_irr0=None) -> Trajectory:
    """Solve the memory-kernel equation for P rho on ``grid``.

    ``rho_irr0`` is the irrelevant part (1-P) rho(0); ``None`` means zero.
    Stepping is explicit midpoint with the history integral done by the
    trapezoidal rule on the half-step grid.
    """
    _require_linear(p)
    if rho_irr0 is not None:
        rho_irr0 = rho_irr0.matrix if hasattr(rho_irr0, "matrix") else np.asarray(rho_irr0)
    n = grid.steps
    half = TimeGrid(0.0, 0.5 * grid.dt, 2 * n)
    mk = build_memory_kernel(h, p, half, rho_irr0)
    B = mk.basis
    y0 = B.conj().T @ vectorize(p.apply_matrix(rho0.matrix))
    A = -1j * mk.streaming
    ys = kernels.volterra_midpoint(A, mk.kernels, -1j * mk.inhomogeneity, y0, grid.dt, n)
    mats = [devectorize(B @ y) for y in ys]
    traj = Trajectory.from_matrices(grid, rho0.space, mats, solver="premaster",
                                    backend=kernels.BACKEND)
    _guard_trace(traj)
    return traj


def _guard_trace(traj: Trajectory):
    limit = get_policy().trace_drift_guard
    bad = np.flatnonzero(traj.trace_dev > limit)
    if bad.size:
        raise SolverError(
            f"trace drift {traj.trace_dev[bad[0]]:.3e} exceeds {limit:g}; step size too coarse",
            int(bad[0]),
        )


def markov_generator(h: Hamiltonian, p: ZwanzigProjection, eps: float = 1e-3) -> SuperOperator:
    """Generator G of d/dt rho_rel = G rho_rel, via the eps-regularized resolvent."""
    _require_linear(p)
    if not eps > 0:
        raise ValueError(f"regularizer must be positive, got {eps}")
    L = liouvillian(h).matrix
    P = p.superop.matrix
    Q = np.eye(P.shape[0]) - P
    M = 1j * (Q @ L) + eps * np.eye(P.shape[0])
    if np.linalg.cond(M) > 1e14:
        raise SingularResolventError(f"resolvent is numerically singular at eps={eps:g}")
    G = -P @ L @ np.linalg.solve(M, Q @ L @ P)
    return SuperOperator(h.space, G)


def markov_eps_sensitivity(h: Hamiltonian, p: ZwanzigProjection, eps: float = 1e-3) -> float:
    """Largest entry change of the generator between eps and eps/2."""
    g1 = markov_generator(h, p, eps).matrix
    g2 = markov_generator(h, p, 0.5 * eps).matrix
    return float(np.max(np.abs(g1 - g2)))


def markov_evolve(rho0: DensityOperator, h: Hamiltonian, p: ZwanzigProjection,
                  eps: float, grid: TimeGrid) -> Trajectory:
    G = markov_generator(h, p, eps)
    step = expm_generator(1j * G.matrix, grid.dt)  # exp(G dt)
    v = vectorize(p.apply_matrix(rho0.matrix))
    mats = [devectorize(v)]
    for _ in range(grid.steps):
        v = step @ v
        mats.append(devectorize(v))
    traj = Trajectory.from_matrices(grid, rho0.space, mats, solver="markov", eps=eps,
                                    eps_sensitivity=markov_eps_sensitivity(h, p, eps))
    _guard_trace(traj)
    return traj


def alternating_evolve(rho0: DensityOperator, h: Hamiltonian, p: ZwanzigProjection,
                       coarse_dt: float, T: float) -> Trajectory:
    """Repeat [unitary step of coarse_dt, then project]; state 0 is ``rho0`` itself."""
    if not coarse_dt > 0:
        raise ValueError(f"coarse_dt must be positive, got {coarse_dt}")
    grid = TimeGrid.span(T, coarse_dt)
    u = unitary(h, coarse_dt)
    m = rho0.matrix
    mats = [m]
    for _ in range(grid.steps):
        m = p.apply_matrix(u @ m @ u.conj().T)
        mats.append(m)
    return Trajectory.from_matrices(grid, rho0.space, mats, solver="alternating")
