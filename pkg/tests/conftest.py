import numpy as np
import pytest

from qrelevance.relevance import SubspacePartition, ZwanzigProjection
from qrelevance.state import HilbertSpace


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def three_qubits():
    return HilbertSpace.qubits("S", "B1", "B2")


def brute_partial_trace(m, dims, keep):
    """Index-by-index partial trace; kept factors in ascending order."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = np.asarray(m).reshape(dims + dims)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    out = np.zeros((dk, dk), dtype=complex)
    for idx in np.ndindex(*dims):
        for jdx in np.ndindex(*dims):
            if any(idx[k] != jdx[k] for k in range(n) if k not in keep):
                continue
            r = np.ravel_multi_index([idx[k] for k in keep], [dims[k] for k in keep]) if keep else 0
            c = np.ravel_multi_index([jdx[k] for k in keep], [dims[k] for k in keep]) if keep else 0
            out[r, c] += t[idx + jdx]
    return out


def random_unitary(d, rng):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def all_projections(space, rng):
    """Every built-in kind, with random bases/partitions where they take one."""
    d = space.total_dim
    part = SubspacePartition.from_indices(space, [[0], list(range(1, d // 2)), list(range(d // 2, d))])
    rot = SubspacePartition.from_indices(space, [[0, 1], list(range(2, d))],
                                         basis=random_unitary(d, rng))
    labels = space.labels
    return [
        ZwanzigProjection.identity(space),
        ZwanzigProjection.dephasing(space),
        ZwanzigProjection.dephasing(space, random_unitary(d, rng)),
        ZwanzigProjection.equipartition(part),
        ZwanzigProjection.equipartition(rot),
        ZwanzigProjection.block_dephasing(part),
        ZwanzigProjection.block_dephasing(rot),
        ZwanzigProjection.marginals(space, ([labels[0]], list(labels[1:]))),
    ]
