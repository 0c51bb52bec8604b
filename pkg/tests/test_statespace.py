import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superposition_lab.statespace import (
    DensityMatrix,
    RegisterLayout,
    StateVector,
    basis_state,
    inner_product,
    is_orthogonal,
    phase_average,
    pure_density,
    superpose,
    tensor_product,
)
from superposition_lab.unitary import apply, haar_random

R2 = 1 / math.sqrt(2)
SPIN = RegisterLayout.flat(2, "spin")
MIND = RegisterLayout.flat(2, "experimenter")


def random_state(dim, rng):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(v / np.linalg.norm(v))


def normalized_alphas(max_n):
    def build(raw):
        v = np.array([complex(a, b) for a, b in raw])
        norm = np.linalg.norm(v)
        return v / norm

    pairs = st.tuples(st.floats(-1, 1), st.floats(-1, 1))
    return (
        st.lists(pairs, min_size=1, max_size=max_n)
        .filter(lambda raw: np.linalg.norm([complex(a, b) for a, b in raw]) > 1e-3)
        .map(build)
    )


class TestLayout:
    def test_big_endian_index_mapping(self):
        layout = RegisterLayout.of(("spin", 2), ("experimenter", 3), ("paper", 3))
        assert layout.index(1, 2, 0) == 1 * 9 + 2 * 3 + 0
        assert layout.values(15) == (1, 2, 0)
        psi = basis_state(layout, 1, 2, 0)
        assert psi.amplitudes[15] == 1
        assert psi.tensor()[1, 2, 0] == 1

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            RegisterLayout.of(("a", 2), ("a", 3))

    def test_layout_must_match_dim(self):
        with pytest.raises(ValueError):
            StateVector(np.ones(3) / math.sqrt(3), RegisterLayout.of(("a", 2)))

    def test_unnormalized_flag(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 1.0]))
        assert StateVector(np.array([1.0, 1.0]), normalized=False).norm() == pytest.approx(math.sqrt(2))

    def test_amplitudes_are_read_only(self):
        psi = basis_state(2, 0)
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 0


class TestTensorProduct:
    def test_basis_product(self):
        psi = tensor_product(basis_state(SPIN, 0), basis_state(MIND, 0))
        assert psi.layout.dims == (2, 2)
        assert psi.layout.names == ("spin", "experimenter")
        np.testing.assert_array_equal(psi.amplitudes, [1, 0, 0, 0])

    def test_superposition_times_ready(self):
        plus = superpose([R2, R2], [basis_state(SPIN, 0), basis_state(SPIN, 1)])
        psi = tensor_product(plus, basis_state(MIND, 0))
        np.testing.assert_allclose(psi.amplitudes, [R2, 0, R2, 0], atol=1e-15)

    def test_default_names_get_suffixed(self):
        psi = tensor_product(basis_state(2, 0), basis_state(3, 1))
        assert psi.layout.names == ("sys", "sys_1")

    @given(st.integers(0, 10_000))
    def test_norm_multiplicative(self, seed):
        rng = np.random.default_rng(seed)
        a = StateVector(rng.standard_normal(3) + 1j * rng.standard_normal(3), normalized=False)
        b = StateVector(rng.standard_normal(4) + 1j * rng.standard_normal(4), normalized=False)
        # Oracle: sum over all index pairs of |a_i b_j|^2.
        direct = math.sqrt(sum(abs(x * y) ** 2 for x in a.amplitudes for y in b.amplitudes))
        assert abs(tensor_product(a, b).norm() - a.norm() * b.norm()) < 1e-12
        assert abs(tensor_product(a, b).norm() - direct) < 1e-12


class TestInnerProduct:
    def test_examples(self):
        up, down = basis_state(2, 0), basis_state(2, 1)
        assert inner_product(up, down) == 0
        psi = random_state(5, np.random.default_rng(1))
        assert inner_product(psi, psi) == pytest.approx(1, abs=1e-12)
        plus = superpose([R2, R2], [up, down])
        minus = superpose([R2, -R2], [up, down])
        assert abs(inner_product(plus, minus)) < 1e-15

    def test_conjugate_linear_in_first_argument(self):
        rng = np.random.default_rng(2)
        a, b = random_state(4, rng), random_state(4, rng)
        c = 0.3 - 0.7j
        assert inner_product(c * a, b) == pytest.approx(np.conj(c) * inner_product(a, b))
        assert inner_product(a, c * b) == pytest.approx(c * inner_product(a, b))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(basis_state(2, 0), basis_state(3, 0))

    def test_is_orthogonal(self):
        up, down = basis_state(2, 0), basis_state(2, 1)
        assert is_orthogonal(up, down, 1e-10)
        psi = superpose([R2, R2], [up, down])
        assert not is_orthogonal(psi, psi, 1e-10)
        assert is_orthogonal(superpose([R2, R2], [up, down]), superpose([-R2, R2], [up, down]), 1e-10)
        with pytest.raises(ValueError):
            is_orthogonal(up, basis_state(3, 0))

    @settings(max_examples=50)
    @given(st.integers(0, 10_000), st.integers(1, 12))
    def test_unitary_preserves_inner_products(self, seed, dim):
        rng = np.random.default_rng(seed)
        u = haar_random(dim, rng)
        a, b = random_state(dim, rng), random_state(dim, rng)
        assert abs(inner_product(apply(u, a), apply(u, b)) - inner_product(a, b)) < 1e-10


class TestDensity:
    def test_pure_density_examples(self):
        np.testing.assert_array_equal(pure_density(basis_state(2, 0)).entries, [[1, 0], [0, 0]])
        plus = superpose([R2, R2], [basis_state(2, 0), basis_state(2, 1)])
        np.testing.assert_allclose(pure_density(plus).entries, np.full((2, 2), 0.5), atol=1e-15)

    @given(st.integers(0, 10_000), st.integers(1, 10))
    def test_pure_density_is_valid(self, seed, dim):
        rho = pure_density(random_state(dim, np.random.default_rng(seed)))
        assert abs(np.trace(rho.entries) - 1) < 1e-12
        assert np.linalg.matrix_rank(rho.entries, tol=1e-8) == 1

    def test_pure_density_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            pure_density(StateVector(np.array([1.0, 1.0]), normalized=False))

    def test_density_invariants_enforced(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2))
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[1.5, 0], [0, -0.5]]))


def enumerated_phase_average(alpha, k):
    """Independent oracle: each entry averages exp(i(phi_j - phi_l)) over the
    k*k joint phase choices of the two branches involved."""
    n = len(alpha)
    rho = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for l in range(n):
            if j == l:
                rho[j, l] = abs(alpha[j]) ** 2
                continue
            acc = 0
            for a, b in itertools.product(range(k), repeat=2):
                acc += np.exp(2j * np.pi * (a - b) / k)
            rho[j, l] = alpha[j] * np.conj(alpha[l]) * acc / k**2
    return rho


class TestPhaseAverage:
    def test_equal_superposition_k2(self):
        rho = phase_average([R2, R2], 2)
        np.testing.assert_allclose(rho.entries, np.diag([0.5, 0.5]), atol=1e-12)

    @pytest.mark.parametrize("k", [2, 3, 7])
    def test_single_branch(self, k):
        np.testing.assert_allclose(phase_average([1, 0], k).entries, np.diag([1, 0]), atol=1e-12)

    def test_three_branches_brute_matches_factored(self):
        alpha = np.full(3, 1 / math.sqrt(3))
        brute = phase_average(alpha, 3, mode="brute").entries
        factored = phase_average(alpha, 3, mode="factored").entries
        np.testing.assert_allclose(brute, factored, atol=1e-12)
        np.testing.assert_allclose(brute, np.eye(3) / 3, atol=1e-12)

    def test_k_below_two_rejected(self):
        with pytest.raises(ValueError):
            phase_average([R2, R2], 1)

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            phase_average([1, 1], 2)

    @given(normalized_alphas(3), st.integers(2, 4))
    def test_diagonal_mixture_all_modes(self, alpha, k):
        expected = np.diag(np.abs(alpha) ** 2)
        oracle = enumerated_phase_average(alpha, k)
        np.testing.assert_allclose(oracle, expected, atol=1e-12)
        for mode in ("brute", "factored"):
            np.testing.assert_allclose(phase_average(alpha, k, mode=mode).entries, expected, atol=1e-12)

    @given(normalized_alphas(6), st.integers(2, 9))
    def test_factored_is_diagonal_for_larger_instances(self, alpha, k):
        rho = phase_average(alpha, k).entries
        np.testing.assert_allclose(rho, np.diag(np.abs(alpha) ** 2), atol=1e-12)
