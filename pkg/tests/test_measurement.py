import numpy as np
import pytest

from conftest import random_unitary
from qrelevance import models
from qrelevance.dynamics import Hamiltonian
from qrelevance.measurement import (
    branch_ensemble,
    collapse_counts,
    collapse_sample,
    interference_overlap,
    interference_series,
    nested_schmidt,
    premeasure,
    premeasurement_unitary,
    schmidt,
    spawn_seeds,
    tree_from_ensemble,
)
from qrelevance.relevance import additive_local_entropy, dephase, von_neumann_entropy
from qrelevance.state import HilbertSpace, PureState, partial_trace, random_pure

PAIR = HilbertSpace.qubits("a", "b")
TRIPLE = HilbertSpace.qubits("a", "b", "c")


def bell():
    return PureState.normalized(PAIR, [1, 0, 0, 1])


def ghz():
    return PureState.normalized(TRIPLE, [1, 0, 0, 0, 0, 0, 0, 1])


def with_coefficients(coeffs, rng):
    """Random state with prescribed Schmidt coefficients on a d x d space."""
    d = len(coeffs)
    sp = HilbertSpace([("x", d), ("y", d)])
    u, v = random_unitary(d, rng), random_unitary(d, rng)
    amp = (u * np.asarray(coeffs, dtype=float)) @ v.T
    return PureState.normalized(sp, amp.ravel())


class TestPremeasure:
    def test_basis_state_stays_product(self):
        sys = PureState.basis(HilbertSpace([("s", 3)]), 2)
        out = premeasure(sys, 3)
        dec = schmidt(out, (["s"], ["pointer"]))
        assert dec.rank == 1 and abs(dec.coefficients[0] - 1) < 1e-12

    def test_plus_state_gives_bell_pair(self):
        sys = PureState.normalized(HilbertSpace([("s", 2)]), [1, 1])
        dec = schmidt(premeasure(sys, 2), (["s"], ["pointer"]))
        assert np.allclose(dec.coefficients, [2 ** -0.5] * 2, atol=1e-12)

    def test_reduced_state_is_dephased(self, rng):
        sp = HilbertSpace([("s", 3)])
        for basis in (None, random_unitary(3, rng)):
            sys = random_pure(sp, rng)
            out = premeasure(sys, 4, basis)
            marg = partial_trace(out.density(), ["s"]).matrix
            assert np.max(np.abs(marg - dephase(sys.density(), basis).matrix)) <= 1e-12

    def test_pointer_states_orthonormal(self, rng):
        u = premeasurement_unitary(HilbertSpace([("s", 3)]), 3)
        assert np.max(np.abs(u.conj().T @ u - np.eye(9))) < 1e-14

    def test_pointer_too_small(self):
        with pytest.raises(ValueError, match="pointer"):
            premeasure(PureState.basis(HilbertSpace([("s", 3)]), 0), 2)

    def test_bad_basis(self):
        with pytest.raises(ValueError):
            premeasure(PureState.basis(HilbertSpace([("s", 2)]), 0), 2, np.array([[1, 1], [0, 1]]))


class TestSchmidt:
    def test_product_state(self, rng):
        a = random_pure(HilbertSpace([("a", 2)]), rng)
        b = random_pure(HilbertSpace([("b", 3)]), rng)
        dec = schmidt(a.kron(b), (["a"], ["b"]))
        assert dec.rank == 1 and abs(dec.coefficients[0] - 1) < 1e-12
        assert not dec.degeneracy_flag

    def test_bell(self):
        dec = schmidt(bell(), (["a"], ["b"]))
        assert np.max(np.abs(dec.coefficients - 2 ** -0.5)) <= 1e-12
        assert dec.degeneracy_flag
        assert abs(dec.entropy() - np.log(2)) <= 1e-12

    def test_random_3x4_against_marginal(self, rng):
        sp = HilbertSpace([("a", 3), ("b", 4)])
        for _ in range(20):
            psi = random_pure(sp, rng)
            dec = schmidt(psi, (["a"], ["b"]))
            lam = np.sort(np.linalg.eigvalsh(partial_trace(psi.density(), ["a"]).matrix))[::-1]
            assert np.max(np.abs(dec.coefficients - np.sqrt(np.clip(lam, 0, None)))) <= 1e-10
            assert np.max(np.abs(dec.reconstruct() - psi.amplitudes)) <= 1e-10
            assert abs(np.sum(dec.coefficients ** 2) - 1) <= 1e-12

    def test_factor_states_orthonormal_and_phase_fixed(self, rng):
        sp = HilbertSpace([("a", 2), ("b", 3), ("c", 2)])
        psi = random_pure(sp, rng)
        dec = schmidt(psi, (["b"], ["a", "c"]))
        u = np.column_stack([p.amplitudes for p in dec.side1_states])
        v = np.column_stack([p.amplitudes for p in dec.side2_states])
        assert np.max(np.abs(u.conj().T @ u - np.eye(dec.rank))) <= 1e-10
        assert np.max(np.abs(v.conj().T @ v - np.eye(dec.rank))) <= 1e-10
        for phi in dec.side1_states:
            lead = phi.amplitudes[np.flatnonzero(np.abs(phi.amplitudes) > 1e-10)[0]]
            assert abs(lead.imag) < 1e-14 and lead.real > 0
        assert np.max(np.abs(dec.reconstruct() - psi.amplitudes)) <= 1e-10

    def test_descending(self, rng):
        dec = schmidt(random_pure(HilbertSpace([("a", 4), ("b", 4)]), rng), (["a"], ["b"]))
        assert np.all(np.diff(dec.coefficients) <= 0)

    def test_truncates_numerical_zeros(self, rng):
        psi = with_coefficients([1.0, 1e-14, 0.0], rng)
        assert schmidt(psi, (["x"], ["y"])).rank == 1

    def test_degenerate_flagged(self, rng):
        psi = with_coefficients([0.6, 0.6, np.sqrt(1 - 0.72)], rng)
        assert schmidt(psi, (["x"], ["y"])).degeneracy_flag

    def test_deterministic(self, rng):
        psi = with_coefficients([0.5, 0.5, 0.5, 0.5], rng)
        a, b = schmidt(psi, (["x"], ["y"])), schmidt(psi, (["x"], ["y"]))
        for pa, pb in zip(a.side1_states, b.side1_states):
            assert np.array_equal(pa.amplitudes, pb.amplitudes)

    def test_non_degenerate_basis_stable(self, rng):
        psi = with_coefficients([0.8, 0.5, np.sqrt(1 - 0.89)], rng)
        dec = schmidt(psi, (["x"], ["y"]))
        assert not dec.degeneracy_flag
        for _ in range(10):
            noise = 1e-8 * (rng.normal(size=9) + 1j * rng.normal(size=9))
            pert = schmidt(PureState.normalized(psi.space, psi.amplitudes + noise), (["x"], ["y"]))
            for pa, pb in zip(dec.side1_states, pert.side1_states):
                assert np.max(np.abs(pa.amplitudes - pb.amplitudes)) < 1e-6


class TestCollapse:
    def test_product_state(self, rng):
        psi = random_pure(HilbertSpace([("a", 2)]), rng).kron(random_pure(HilbertSpace([("b", 2)]), rng))
        rec = collapse_sample(psi, (["a"], ["b"]), seed=3)
        assert rec.outcome == 0 and abs(rec.probability - 1) < 1e-12
        assert rec.seed == 3

    def test_deterministic_given_seed(self, rng):
        psi = random_pure(HilbertSpace([("a", 3), ("b", 3)]), rng)
        outs = {collapse_sample(psi, (["a"], ["b"]), seed=11).outcome for _ in range(5)}
        assert len(outs) == 1
        assert np.array_equal(collapse_counts(psi, (["a"], ["b"]), 500, 4),
                              collapse_counts(psi, (["a"], ["b"]), 500, 4))

    def test_branch_is_product_state(self, rng):
        psi = random_pure(HilbertSpace([("a", 2), ("b", 3)]), rng)
        rec = collapse_sample(psi, (["a"], ["b"]), seed=0)
        assert schmidt(rec.state, (["a"], ["b"])).rank == 1

    def test_bell_frequencies(self):
        counts = collapse_counts(bell(), (["a"], ["b"]), 100_000, 42)
        assert np.all(np.abs(counts / 1e5 - 0.5) <= 0.01)

    def test_ninety_ten_band(self, rng):
        psi = with_coefficients([np.sqrt(0.9), np.sqrt(0.1)], rng)
        f0 = collapse_counts(psi, (["x"], ["y"]), 100_000, 42)[0] / 1e5
        assert 0.887 <= f0 <= 0.913

    def test_spawned_seeds(self):
        a, b = spawn_seeds(7, 3), spawn_seeds(7, 3)
        assert a == b and len(set(a)) == 3
        assert spawn_seeds(8, 3) != a


class TestEnsemble:
    def test_product(self, rng):
        psi = random_pure(HilbertSpace([("a", 2)]), rng).kron(random_pure(HilbertSpace([("b", 2)]), rng))
        records, mix = branch_ensemble(psi, (["a"], ["b"]))
        assert len(records) == 1
        assert np.max(np.abs(mix.matrix - psi.density().matrix)) < 1e-12

    def test_bell(self):
        records, mix = branch_ensemble(bell(), (["a"], ["b"]))
        assert len(records) == 2
        expect = np.diag([0.5, 0, 0, 0.5])
        assert np.max(np.abs(mix.matrix - expect)) < 1e-12

    def test_mixture_is_schmidt_basis_dephasing(self, rng):
        sp = HilbertSpace([("a", 2), ("b", 3)])
        for _ in range(10):
            psi = random_pure(sp, rng)
            dec = schmidt(psi, (["a"], ["b"]))
            records, mix = branch_ensemble(psi, (["a"], ["b"]))
            assert abs(sum(r.probability for r in records) - 1) <= 1e-10
            # dephase |psi><psi| in the product basis built from the Schmidt vectors
            u = np.column_stack([p.amplitudes for p in dec.side1_states])
            v = np.column_stack([p.amplitudes for p in dec.side2_states])
            u_full = np.linalg.qr(np.column_stack([u, rng.normal(size=(2, 2 - u.shape[1]))]))[0] \
                if u.shape[1] < 2 else u
            v_full = np.linalg.qr(np.column_stack([v, rng.normal(size=(3, 3 - v.shape[1]))
                                                   + 0j]))[0]
            v_full[:, :v.shape[1]] = v
            basis = np.kron(u_full, v_full)
            oracle = dephase(psi.density(), basis).matrix
            assert np.max(np.abs(mix.matrix - oracle)) <= 1e-10
            assert abs(von_neumann_entropy(mix) - dec.entropy()) <= 1e-10


class TestNested:
    def test_product_single_path(self, rng):
        parts = [random_pure(HilbertSpace([(lab, 2)]), rng) for lab in "abc"]
        psi = parts[0].kron(parts[1]).kron(parts[2])
        tree = nested_schmidt(psi, (["a"], ["b"], ["c"]))
        leaves = tree.leaves()
        assert len(leaves) == 1
        assert abs(tree.path_probability(leaves[0].node) - 1) < 1e-12

    def test_ghz(self):
        tree = nested_schmidt(ghz(), (["a"], ["b"], ["c"]))
        assert len(tree.children(None)) == 2
        for top in tree.children(None):
            kids = tree.children(top.node)
            assert len(kids) == 1
            assert abs(tree.path_probability(kids[0].node) - 0.5) < 1e-12

    def test_random_three_qubit(self, rng):
        for _ in range(10):
            psi = random_pure(TRIPLE, rng)
            tree = nested_schmidt(psi, (["a"], ["b"], ["c"]))
            total = sum(tree.path_probability(n.node) for n in tree.leaves())
            assert abs(total - 1) <= 1e-10
            for top in tree.children(None):
                dec = tree.decompositions[top.node]
                for side in (dec.side1_states, dec.side2_states):
                    m = np.column_stack([p.amplitudes for p in side])
                    assert np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))) <= 1e-10
            # reconstruction: sum_l c_l sum_m d_m beta_l (x) delta_m (x) eps_m
            top = tree.decompositions[None]
            recon = np.zeros(8, dtype=complex)
            for leaf in tree.leaves():
                c = top.coefficients[leaf.parent]
                d = np.sqrt(leaf.probability)
                recon += c * d * leaf.state.amplitudes
            assert np.max(np.abs(recon - psi.amplitudes)) <= 1e-10

    def test_overlapping_groups(self):
        with pytest.raises(ValueError):
            nested_schmidt(ghz(), (["a"], ["a"], ["b", "c"]))

    def test_to_dict_round_numbers(self):
        d = nested_schmidt(ghz(), (["a"], ["b"], ["c"])).to_dict()
        assert d["regions"] == [["a"], ["b"], ["c"]]
        assert len(d["nodes"]) == 4
        assert {n["level"] for n in d["nodes"]} == {1, 2}


class TestReductionEntropy:
    def test_branches_have_zero_local_entropy(self, rng):
        sp = HilbertSpace([("a", 2), ("b", 3)])
        for _ in range(20):
            psi = random_pure(sp, rng)
            parent = additive_local_entropy(psi.density(), [["a"], ["b"]])
            for rec in branch_ensemble(psi, (["a"], ["b"]))[0]:
                assert abs(additive_local_entropy(rec.density(), [["a"], ["b"]])) <= 1e-10
            assert parent > 1e-6


class TestInterference:
    def test_zero_at_start(self, rng):
        h = models.coupled_pair(0.3)
        psi = random_pure(h.space, rng)
        tree = tree_from_ensemble(psi, (["A"], ["B"]))
        a, b = tree.nodes[0], tree.nodes[1]
        assert abs(interference_overlap(a, b, h, 0.0)) <= 1e-12

    def test_non_interacting_stays_zero(self, rng):
        h = models.coupled_pair(0.3, local=True)
        psi = random_pure(h.space, rng)
        tree = tree_from_ensemble(psi, (["A"], ["B"]))
        amp = interference_series(tree.nodes[0], tree.nodes[1], h, np.linspace(0, 30, 301))
        assert np.max(np.abs(amp)) <= 1e-10

    def test_coupled_revives(self, rng):
        h = models.coupled_pair(0.3)
        psi = random_pure(h.space, rng)
        tree = tree_from_ensemble(psi, (["A"], ["B"]))
        amp = np.abs(interference_series(tree.nodes[0], tree.nodes[1], h, np.linspace(0, 20, 401)))
        assert amp.max() > 0.01
        peak = int(np.argmax(amp))
        assert amp[peak:].min() < 0.5 * amp.max() or peak < len(amp) - 1

    def test_plain_overlap_is_conserved(self, rng):
        """Why the amplitude is not <a(t)|b(t)>: unitary evolution keeps that at zero."""
        h = models.coupled_pair(0.3)
        psi = random_pure(h.space, rng)
        tree = tree_from_ensemble(psi, (["A"], ["B"]))
        from qrelevance.dynamics import unitary
        u = unitary(h, 3.7)
        a, b = tree.nodes[0].state.amplitudes, tree.nodes[1].state.amplitudes
        assert abs(np.vdot(u @ a, u @ b)) < 1e-12

    def test_mismatched_parents(self, rng):
        h = models.coupled_pair(0.3)
        t1 = tree_from_ensemble(random_pure(h.space, rng), (["A"], ["B"]))
        t2 = tree_from_ensemble(random_pure(h.space, rng), (["A"], ["B"]))
        with pytest.raises(ValueError, match="parent"):
            interference_overlap(t1.nodes[0], t2.nodes[1], h, 1.0)
