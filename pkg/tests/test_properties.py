"""Property tests for the structural invariants, driven by hypothesis."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_projections, random_unitary
from qrelevance.dynamics import Hamiltonian, TimeGrid, liouvillian, propagate_unitary
from qrelevance.master import alternating_evolve
from qrelevance.measurement import branch_ensemble, collapse_sample, nested_schmidt, schmidt
from qrelevance.relevance import (
    SubspacePartition,
    ZwanzigProjection,
    block_dephase,
    coarse_grain_equipartition,
    relevance_entropy,
    von_neumann_entropy,
)
from qrelevance.state import (
    HilbertSpace,
    devectorize,
    partial_trace,
    random_density,
    random_hermitian,
    random_pure,
    spectral,
    tensor,
    vectorize,
)

SETTINGS = settings(max_examples=40, deadline=None)
seeds = st.integers(0, 2**32 - 1)


@st.composite
def spaces(draw, max_total=12, min_factors=1, max_factors=3):
    n = draw(st.integers(min_factors, max_factors))
    dims = []
    for _ in range(n):
        room = max_total // int(np.prod(dims or [1]))
        dims.append(draw(st.integers(2, max(2, min(4, room)))))
    return HilbertSpace([(f"f{i}", d) for i, d in enumerate(dims)])


@st.composite
def partitions(draw, space):
    d = space.total_dim
    order = draw(st.permutations(range(d)))
    k = draw(st.integers(1, min(3, d)))
    cuts = sorted(draw(st.lists(st.integers(1, d - 1), min_size=k - 1, max_size=k - 1, unique=True)))
    groups = [list(g) for g in np.split(np.array(order), cuts)]
    return groups


def herm_dev(m):
    return np.max(np.abs(m - m.conj().T))


@SETTINGS
@given(spaces(), seeds)
def test_space_total_dim(space, seed):
    assert space.total_dim == int(np.prod(space.dims))
    assert len(set(space.labels)) == len(space.labels)


@SETTINGS
@given(spaces(min_factors=2), seeds)
def test_partial_trace_trace_and_positivity(space, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(space, rng)
    for lab in space.labels:
        m = partial_trace(rho, [lab]).matrix
        assert abs(np.trace(m) - 1) <= 1e-12
        assert np.linalg.eigvalsh(m).min() >= -1e-10


@SETTINGS
@given(spaces(max_total=6, max_factors=1), spaces(max_total=6, max_factors=1), seeds)
def test_tensor_then_trace_recovers(sa, sb, seed):
    rng = np.random.default_rng(seed)
    sb = HilbertSpace([("g0", sb.dims[0])])
    a, b = random_density(sa, rng), random_density(sb, rng)
    ab = tensor(a, b)
    assert np.max(np.abs(partial_trace(ab, sa.labels).matrix - a.matrix)) <= 1e-12
    assert np.max(np.abs(partial_trace(ab, sb.labels).matrix - b.matrix)) <= 1e-12


@SETTINGS
@given(st.integers(1, 6), seeds)
def test_vectorize_isometry(d, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    assert abs(np.linalg.norm(vectorize(m)) - np.linalg.norm(m, "fro")) <= 1e-12
    assert np.array_equal(devectorize(vectorize(m)), m)


@SETTINGS
@given(st.integers(1, 8), seeds)
def test_spectral_reconstruction(d, seed):
    h = random_hermitian(d, np.random.default_rng(seed), scale=3.0)
    dec = spectral(h)
    assert np.max(np.abs(dec.reconstruct() - h)) <= 1e-10
    assert np.all(np.diff(dec.eigenvalues) <= 0)


@SETTINGS
@given(spaces(max_total=8), seeds, st.floats(0.0, 10.0))
def test_unitary_invariants(space, seed, t):
    rng = np.random.default_rng(seed)
    rho = random_density(space, rng)
    h = Hamiltonian(space, random_hermitian(space.total_dim, rng, scale=2.0))
    out = propagate_unitary(rho, h, t)
    assert abs(np.trace(out.matrix) - 1) <= 1e-12
    assert abs(out.purity() - rho.purity()) <= 1e-10
    assert abs(von_neumann_entropy(out) - von_neumann_entropy(rho)) <= 1e-9


@SETTINGS
@given(spaces(max_total=8), seeds)
def test_liouvillian_annihilates_commuting_states(space, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(space.total_dim, rng)
    _, v = np.linalg.eigh(h)
    w = rng.dirichlet(np.ones(space.total_dim))
    rho = (v * w) @ v.conj().T
    assert np.max(np.abs(liouvillian(Hamiltonian(space, h)).apply(rho))) <= 1e-12


@SETTINGS
@given(st.floats(1e-6, 10.0), st.integers(1, 10_000))
def test_time_grid(dt, steps):
    g = TimeGrid(0.0, dt, steps)
    assert len(g.times) == steps + 1


@SETTINGS
@given(spaces(min_factors=2, max_total=8), seeds)
def test_projection_invariants(space, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(space, rng)
    s0 = von_neumann_entropy(rho)
    for p in all_projections(space, rng):
        once = p.apply_matrix(rho.matrix)
        twice = p.apply_matrix(once)
        assert np.max(np.abs(twice - once)) <= 1e-10
        assert abs(np.trace(once) - 1) <= 1e-12
        assert herm_dev(once) <= 1e-12
        assert np.linalg.eigvalsh(once).min() >= -1e-10
        assert von_neumann_entropy(once) >= s0 - 1e-10


@SETTINGS
@given(spaces(max_total=8).flatmap(lambda s: st.tuples(st.just(s), partitions(s))), seeds)
def test_partition_and_entropy_identity(sp_groups, seed):
    space, groups = sp_groups
    rng = np.random.default_rng(seed)
    part = SubspacePartition.from_indices(space, groups, basis=random_unitary(space.total_dim, rng))
    projs = part.projectors
    assert np.max(np.abs(sum(projs) - np.eye(space.total_dim))) <= 1e-10
    for i, a in enumerate(projs):
        assert np.max(np.abs(a @ a - a)) <= 1e-10 and herm_dev(a) <= 1e-12
        for b in projs[i + 1:]:
            assert np.max(np.abs(a @ b)) <= 1e-10
    rho = random_density(space, rng)
    br = relevance_entropy(rho, part)
    assert abs(br.total - br.relevant_info_term - br.averaged_physical_term) <= 1e-10
    assert abs(br.weights.sum() - 1) <= 1e-12 and br.weights.min() >= -1e-12
    cg = coarse_grain_equipartition(rho, part).matrix
    assert np.max(np.abs(coarse_grain_equipartition(block_dephase(rho, part), part).matrix - cg)) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds, st.floats(0.05, 0.5))
def test_alternating_entropy_monotone(seed, coarse_dt):
    rng = np.random.default_rng(seed)
    space = HilbertSpace.qubits("S", "B")
    h = Hamiltonian(space, random_hermitian(4, rng))
    for p in all_projections(space, rng)[1:]:
        traj = alternating_evolve(random_density(space, rng), h, p, coarse_dt, 20 * coarse_dt)
        assert np.min(np.diff(traj.entropy)) >= -1e-10


@SETTINGS
@given(spaces(min_factors=2, max_total=12), seeds)
def test_schmidt_invariants(space, seed):
    rng = np.random.default_rng(seed)
    psi = random_pure(space, rng)
    bip = ([space.labels[0]], list(space.labels[1:]))
    dec = schmidt(psi, bip)
    assert abs(np.sum(dec.coefficients ** 2) - 1) <= 1e-12
    for side in (dec.side1_states, dec.side2_states):
        m = np.column_stack([s.amplitudes for s in side])
        assert np.max(np.abs(m.conj().T @ m - np.eye(dec.rank))) <= 1e-10
    assert np.max(np.abs(dec.reconstruct() - psi.amplitudes)) <= 1e-10
    records, _ = branch_ensemble(psi, bip)
    probs = [r.probability for r in records]
    assert min(probs) >= 0 and max(probs) <= 1 and abs(sum(probs) - 1) <= 1e-10
    rec = collapse_sample(psi, bip, seed)
    assert 0 <= rec.probability <= 1


@SETTINGS
@given(spaces(min_factors=3, max_total=12), seeds)
def test_branch_tree_leaf_sum(space, seed):
    psi = random_pure(space, np.random.default_rng(seed))
    tree = nested_schmidt(psi, [[lab] for lab in space.labels])
    assert abs(sum(tree.path_probability(n.node) for n in tree.leaves()) - 1) <= 1e-8
