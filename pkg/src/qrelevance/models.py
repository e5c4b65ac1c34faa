"""Small model Hamiltonians used by tests, benchmarks and built-in scenarios."""
from __future__ import annotations

import numpy as np

from .dynamics import Hamiltonian
from .state import HilbertSpace

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def embed(space: HilbertSpace, ops: dict[str, np.ndarray]) -> np.ndarray:
    """Tensor product placing ``ops[label]`` on each named factor, identity elsewhere."""
    for lab in ops:
        space.index(lab)
    out = np.ones((1, 1), dtype=complex)
    for lab, d in space.factors:
        out = np.kron(out, ops.get(lab, np.eye(d)))
    return out


def qubit_bath(coupling: float, seed: int = 7) -> Hamiltonian:
    """System qubit S coupled through sigma_x to a random Hermitian on two bath qubits.

    Level spacings are drawn away from resonance, so the unperturbed
    computational basis has no degenerate transitions.
    """
    rng = np.random.default_rng(seed)
    space = HilbertSpace.qubits("S", "B1", "B2")
    w_s = 1.0
    w1, w2 = rng.uniform(0.35, 0.75), rng.uniform(1.45, 1.85)
    h0 = 0.5 * (w_s * embed(space, {"S": SZ}) + w1 * embed(space, {"B1": SZ})
                + w2 * embed(space, {"B2": SZ}))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = 0.5 * (b + b.conj().T)
    b /= np.linalg.norm(b, 2)
    v = np.kron(SX, b)
    return Hamiltonian(space, h0 + coupling * v)


def resonant_exchange(coupling: float) -> Hamiltonian:
    """S and B1 exchange an excitation on resonance; B2 dephases the pair.

    Every degenerate transition of the unperturbed Hamiltonian is an
    isolated two-state pair, so the long-time state is a uniform mixture
    within each pair.
    """
    space = HilbertSpace.qubits("S", "B1", "B2")
    h0 = 0.5 * (embed(space, {"S": SZ}) + embed(space, {"B1": SZ})
                + 0.6 * embed(space, {"B2": SZ}))
    exch = 0.5 * (embed(space, {"S": SX, "B1": SX}) + embed(space, {"S": SY, "B1": SY}))
    zz = 0.5 * (embed(space, {"S": SZ, "B2": SZ}) + embed(space, {"B1": SZ, "B2": SZ}))
    return Hamiltonian(space, h0 + coupling * (exch + zz))


def pure_dephasing(coupling: float, seed: int = 7) -> Hamiltonian:
    """H = Z_S/2 + coupling * Z_S (x) B + H_B with random bath operators."""
    rng = np.random.default_rng(seed)
    space = HilbertSpace.qubits("S", "B1", "B2")

    def herm():
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = 0.5 * (a + a.conj().T)
        return a / np.linalg.norm(a, 2)

    return Hamiltonian(space, 0.5 * embed(space, {"S": SZ}) + np.kron(I2, herm())
                       + coupling * np.kron(SZ, herm()))


def coupled_pair(coupling: float = 0.3, local: bool = False, seed: int = 11) -> Hamiltonian:
    """Two qubits A, B with random local terms and (unless ``local``) an XX+ZZ coupling."""
    rng = np.random.default_rng(seed)
    space = HilbertSpace.qubits("A", "B")
    ha = rng.uniform(0.5, 1.5) * SZ + rng.uniform(0.1, 0.5) * SX
    hb = rng.uniform(0.5, 1.5) * SZ + rng.uniform(0.1, 0.5) * SY
    h = np.kron(ha, I2) + np.kron(I2, hb)
    if not local:
        h = h + coupling * (np.kron(SX, SX) + np.kron(SZ, SZ))
    return Hamiltonian(space, h)
