import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superposition_lab import theorems
from superposition_lab.dynamics import trial_rng
from superposition_lab.protocol import (
    DOWN,
    LAYOUT,
    NO,
    SAW_DOWN,
    SAW_UP,
    UP,
    YES,
    ExperimentConfig,
    build_machine_transform,
    reset_state,
)
from superposition_lab.statespace import StateVector, basis_state, superpose
from superposition_lab.theorems import (
    BeliefPartition,
    branch_discriminating_violation,
    check_lemma1,
    check_linearity_relation,
    decompose,
    definitive_violation,
    mixture_indistinguishability,
    partially_definitive_violation,
    random_instance,
    violation_search,
)
from superposition_lab.unitary import (
    PartialIsometrySpec,
    UnitaryOperator,
    complete_to_unitary,
    haar_random,
    unitarity_error,
)

R2 = 1 / math.sqrt(2)


def machine_setup():
    t = build_machine_transform(ExperimentConfig())
    s, e = reset_state()
    branches = [basis_state(LAYOUT, UP, SAW_UP, 0), basis_state(LAYOUT, DOWN, SAW_DOWN, 0)]
    partition = BeliefPartition.from_states([basis_state(LAYOUT, s, e, NO)], [basis_state(LAYOUT, s, e, YES)])
    return t, branches, partition


class TestPartition:
    def test_overlapping_no_and_yes_rejected(self):
        e0, e1 = basis_state(3, 0), basis_state(3, 1)
        with pytest.raises(ValueError):
            BeliefPartition.from_states([e0], [superpose([R2, R2], [e0, e1])])

    def test_groups_must_cover_yes(self):
        with pytest.raises(ValueError):
            BeliefPartition.from_indices(4, [0], [1, 2], yes_groups=((0,),))

    def test_frame_columns(self):
        frame = haar_random(4, 0).matrix
        p = BeliefPartition.from_indices(4, [2], [0, 3], frame=frame)
        np.testing.assert_array_equal(p.no_basis[:, 0], frame[:, 2])


class TestDecompose:
    def test_machine_transform(self):
        t, branches, partition = machine_setup()
        d = decompose(t, branches, [R2, R2], partition)
        np.testing.assert_allclose(np.sum(np.abs(d.gamma) ** 2, axis=1), [0.5, 0.5], atol=1e-12)
        assert np.sum(np.abs(d.eta) ** 2) == pytest.approx(1, abs=1e-12)
        assert np.sum(np.abs(d.zeta) ** 2) == pytest.approx(0, abs=1e-12)
        np.testing.assert_allclose(d.row_norms(), [1, 1], atol=1e-12)
        assert check_linearity_relation(d).passed

    def test_identity_in_no_subspace(self):
        branches = [basis_state(4, 0), basis_state(4, 1)]
        partition = BeliefPartition.from_indices(4, [0, 1], [2, 3])
        d = decompose(UnitaryOperator.identity(4), branches, [0.6, 0.8], partition)
        assert np.all(d.gamma == 0) and np.all(d.eta == 0)
        np.testing.assert_allclose(d.branch_residual, 0)

    def test_random_dim8_relation(self):
        inst = random_instance(8, np.random.default_rng(8), alpha=None)
        d = decompose(inst.u, inst.branches, inst.alpha, inst.partition)
        rep = check_linearity_relation(d)
        assert rep.cross_branch_leakage < 1e-12
        for i, g in enumerate(d.yes_groups):
            np.testing.assert_allclose(d.eta[list(g)], inst.alpha[i] * d.gamma[i, list(g)], atol=1e-10)

    def test_residual_reported(self):
        d = decompose(UnitaryOperator.identity(3), [basis_state(3, 2)], [1], BeliefPartition.from_indices(3, [0], [1]))
        assert d.branch_residual[0] == pytest.approx(1)
        assert d.superposition_residual == pytest.approx(1)

    def test_errors(self):
        p = BeliefPartition.from_indices(3, [0], [1])
        with pytest.raises(ValueError):
            decompose(UnitaryOperator.identity(4), [basis_state(3, 0)], [1], p)
        with pytest.raises(ValueError):
            decompose(UnitaryOperator.identity(3), [basis_state(3, 0), basis_state(3, 0)], [R2, R2], p)


class TestLinearityRelation:
    def test_single_branch_equality(self):
        inst = random_instance(6, np.random.default_rng(1), alpha=[1.0])
        rep = check_linearity_relation(decompose(inst.u, inst.branches, inst.alpha, inst.partition))
        assert rep.passed
        assert abs(rep.yes_mass_margin[0]) < 1e-12

    def test_alpha_06_08(self):
        inst = random_instance(8, np.random.default_rng(2), alpha=[0.6, 0.8])
        d = decompose(inst.u, inst.branches, inst.alpha, inst.partition)
        g0 = list(d.yes_groups[0])
        eta_mass = np.sum(np.abs(d.eta[g0]) ** 2)
        gamma_mass = np.sum(np.abs(d.gamma[0, g0]) ** 2)
        # Oracle: direct projection of U(0.6|0> + 0.8|1>) onto branch-0 Yes vectors.
        psi = inst.u.matrix @ (0.6 * inst.branches[0].amplitudes + 0.8 * inst.branches[1].amplitudes)
        yes0 = inst.partition.group_basis(0)
        assert eta_mass == pytest.approx(np.sum(np.abs(yes0.conj().T @ psi) ** 2), abs=1e-12)
        assert eta_mass == pytest.approx(0.36 * gamma_mass, abs=1e-12)

    def test_leaky_candidate_skips_branch_checks(self):
        # Haar U with a basis-aligned grouped partition generally leaks across branches.
        u = haar_random(4, 3)
        p = BeliefPartition.from_indices(4, [0], [1, 2, 3], yes_groups=((0,), (1, 2)))
        d = decompose(u, [basis_state(4, 0), basis_state(4, 1)], [R2, R2], p)
        rep = check_linearity_relation(d)
        assert rep.cross_branch_leakage > 1e-3
        assert rep.general_error < 1e-12
        assert rep.passed

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 16), st.integers(0, 10**9), st.booleans())
    def test_relation_property(self, dim, seed, aligned):
        inst = random_instance(dim, np.random.default_rng(seed), aligned=aligned)
        d = decompose(inst.u, inst.branches, inst.alpha, inst.partition)
        rep = check_linearity_relation(d)
        assert rep.passed
        assert rep.branch_error < 1e-10
        assert np.all(rep.yes_mass_margin >= -1e-12)


def perturbed_confined(dim, eps, rng):
    """Branch images pushed slightly out of span(No); returns (u, branches, alpha, partition, leak)."""
    n, no_idx, yes_idx, _ = theorems.draw_partition("partially_definitive", dim, rng)
    partition = BeliefPartition.from_indices(dim, no_idx, yes_idx, frame=haar_random(dim, rng).matrix)
    no = partition.no_basis
    coords = rng.standard_normal((no.shape[1], n)) + 1j * rng.standard_normal((no.shape[1], n))
    images = no @ np.linalg.qr(coords)[0]
    images = images + eps * (rng.standard_normal(images.shape) + 1j * rng.standard_normal(images.shape))
    w, _, vh = np.linalg.svd(images, full_matrices=False)
    images = w @ vh
    branches = [basis_state(dim, i) for i in range(n)]
    pairs = tuple((b, StateVector(images[:, i])) for i, b in enumerate(branches))
    u = complete_to_unitary(PartialIsometrySpec(pairs), seed=1)
    outside = images - no @ (no.conj().T @ images)
    leak = float(np.max(np.linalg.norm(outside, axis=0)))
    return u, branches, theorems.random_alpha(n, rng), partition, leak


class TestViolationScores:
    def test_confined_branches_give_no_yes(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            inst = theorems.confined_instance(6, rng)
            assert theorems.superposition_yes_mass(inst) < 1e-20
            assert definitive_violation(inst.u, inst.branches, inst.alpha, inst.partition) <= 1e-9

    def test_machine_transform_is_infeasible_for_definitive(self):
        t, branches, partition = machine_setup()
        raw, residual = theorems.violation_components(
            "definitive", t.matrix @ np.column_stack([b.amplitudes for b in branches]), np.array([R2, R2]), partition
        )
        assert residual == pytest.approx(1.0, abs=1e-12)  # each branch has yes-mass 1/2
        assert definitive_violation(t, branches, [R2, R2], partition) < -100

    def test_identity_in_no_subspace_scores_zero(self):
        branches = [basis_state(4, 0), basis_state(4, 1)]
        p = BeliefPartition.from_indices(4, [0, 1], [2, 3])
        u = UnitaryOperator.identity(4)
        assert definitive_violation(u, branches, [0.6, 0.8], p) == 0
        assert partially_definitive_violation(u, branches, [0.6, 0.8], p) == 0

    def test_branch_discriminating_score(self):
        inst = random_instance(6, np.random.default_rng(9), alpha=[0.6, 0.8])
        score = branch_discriminating_violation(inst.u, inst.branches, inst.alpha, inst.partition)
        assert score <= 1e-12
        d = decompose(inst.u, inst.branches, inst.alpha, inst.partition)
        # Oracle: per-branch gap from the decomposition.
        gaps = [
            np.sum(np.abs(d.eta[list(g)]) ** 2) - np.sum(np.abs(d.gamma[i, list(g)]) ** 2)
            for i, g in enumerate(d.yes_groups)
        ]
        assert score == pytest.approx(max(gaps), abs=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            theorems.violation_components("bogus", np.eye(2)[:, :1], np.array([1.0]), BeliefPartition.from_indices(2, [0], [1]))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(3, 12), st.integers(0, 10**9), st.floats(1e-8, 1e-2))
    def test_robust_leakage_bound(self, dim, seed, eps):
        u, branches, alpha, partition, leak = perturbed_confined(dim, eps, np.random.default_rng(seed))
        psi = u.matrix @ sum(a * b.amplitudes for a, b in zip(alpha, branches))
        yes_mass = np.sum(np.abs(partition.yes_basis.conj().T @ psi) ** 2)
        assert yes_mass <= (np.sum(np.abs(alpha)) * leak) ** 2 + 1e-15


class TestSearch:
    def test_branch_discriminating_dim8(self):
        report = violation_search("branch_discriminating", 8, 100, seed=1)
        assert report.best_feasible_score is not None
        assert report.best_feasible_score <= 1e-9
        assert report.passed

    def test_partially_definitive_dim8(self):
        report = violation_search("partially_definitive", 8, 100, seed=2)
        assert report.best_feasible_score <= 1e-9
        assert not report.definition_satisfied

    def test_degenerate_definitive(self):
        report = violation_search("definitive", 4, 10, seed=1, alpha=[1, 0, 0])
        assert report.best_feasible_score == 0.0
        assert not report.definition_satisfied
        assert "infeasible" in report.summary()

    def test_deterministic_and_thread_safe(self):
        a = violation_search("definitive", 4, 6, seed=3, steps=5)
        b = violation_search("definitive", 4, 6, seed=3, steps=5, workers=3)
        assert [r.penalized_score for r in a.results] == [r.penalized_score for r in b.results]
        assert [r.feasible_score for r in a.results] == [r.feasible_score for r in b.results]

    def test_ascent_improves_penalized_score(self):
        short = violation_search("partially_definitive", 4, 5, seed=0, steps=0)
        long = violation_search("partially_definitive", 4, 5, seed=0, steps=30)
        for s, l in zip(short.results, long.results):
            assert l.penalized_score >= s.penalized_score

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            violation_search("bogus", 4, 1)
        with pytest.raises(ValueError):
            violation_search("definitive", 1, 1)

    def test_draw_partition_shapes(self):
        rng = np.random.default_rng(0)
        for dim in (2, 3, 4, 8):
            for _ in range(20):
                n, no, yes, groups = theorems.draw_partition("branch_discriminating", dim, rng)
                assert len(no) == 0 or len(no) >= n
                assert len(groups) == n and all(groups)
                assert len(set(no) | set(yes)) == len(no) + len(yes) <= dim
                n, no, yes, _ = theorems.draw_partition("definitive", dim, rng)
                assert len(no) >= n and len(yes) >= 1


class TestLemma1:
    def test_orthogonal_pair_stays_orthogonal(self):
        pairs = [(basis_state(5, 0), basis_state(5, 3))]
        us = [haar_random(5, s) for s in range(100)]
        rep = check_lemma1(pairs, us)
        assert rep.passed and rep.distinguishable()[0]

    def test_half_overlap_is_a_floor(self):
        a = basis_state(4, 0)
        b = superpose([0.5, math.sqrt(0.75)], [basis_state(4, 0), basis_state(4, 1)])
        rep = check_lemma1([(a, b)], [haar_random(4, s) for s in range(20)])
        assert rep.min_achievable_overlap[0] == pytest.approx(0.5, abs=1e-10)
        assert rep.max_deviation < 1e-10
        assert not rep.distinguishable()[0]

    def test_identical_states(self):
        a = StateVector(haar_random(3, 1).matrix[:, 0])
        rep = check_lemma1([(a, a)], [haar_random(3, 2)])
        assert rep.overlaps[0] == pytest.approx(1)


class TestMixture:
    def test_machine_transform_statistics(self):
        t, branches, _ = machine_setup()
        rep = mixture_indistinguishability([R2, R2], [t], "paper", 4, branches=branches)
        assert rep.passed
        np.testing.assert_allclose(rep.phase_averaged, [0, 0.5, 0.5], atol=1e-12)

    def test_empty_protocol(self):
        alpha = np.array([0.6, 0.8j])
        rep = mixture_indistinguishability(alpha, [], "sys", 2)
        np.testing.assert_allclose(rep.phase_averaged, [0.36, 0.64], atol=1e-12)
        np.testing.assert_allclose(rep.mixture, [0.36, 0.64], atol=1e-12)

    def test_random_protocol(self):
        rng = np.random.default_rng(12)
        alpha = theorems.random_alpha(8, rng)
        rep = mixture_indistinguishability(alpha, [haar_random(8, rng) for _ in range(3)], "sys", 3)
        assert rep.max_discrepancy < 1e-10

    def test_pure_superposition_is_distinguishable(self):
        # Sanity: the identity fails for a state with known phases, so the check has teeth.
        t, branches, _ = machine_setup()
        rep = mixture_indistinguishability([R2, R2], [t], "paper", 4, branches=branches)
        psi = t.matrix @ (R2 * branches[0].amplitudes + R2 * branches[1].amplitudes)
        pure_yes = np.sum(np.abs(psi.reshape(LAYOUT.dims)[:, :, YES]) ** 2)
        assert pure_yes == pytest.approx(1, abs=1e-12)
        assert rep.phase_averaged[YES] == pytest.approx(0.5, abs=1e-12)


def test_confined_instances_are_unitary():
    rng = trial_rng(0, 0)
    for dim in (2, 5, 9):
        assert unitarity_error(theorems.confined_instance(dim, rng).u.matrix) < 1e-10
