"""Matrix kernel: products, traces, exponentials, kernels, predicates."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from balance_lab.kernel import (
    frob_distance,
    is_psd,
    kron,
    mat_exp,
    matrix_from_json,
    matrix_to_json,
    matrix_unit,
    nullspace,
    partial_trace,
    deterministic_eigh,
    vec,
    unvec,
)
from balance_lab.lindblad import cycle_generator

from conftest import (
    kron_entry_oracle,
    partial_trace_oracle,
    random_matrix,
    random_psd,
    taylor_exp_oracle,
)


class TestKron:
    def test_identity(self):
        assert_allclose(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_diagonal(self):
        assert_allclose(kron(np.diag([1, 2]), np.diag([3.0])), np.diag([3.0, 6.0]))

    def test_matrix_units_against_index_oracle(self):
        a = matrix_unit(2, 0, 1)
        b = matrix_unit(2, 1, 0)
        assert_allclose(kron(a, b), kron_entry_oracle(a, b))

    def test_random_against_index_oracle(self):
        a = random_matrix(3, 2, seed=11)
        b = random_matrix(2, 4, seed=12)
        assert_allclose(kron(a, b), kron_entry_oracle(a, b), atol=1e-14)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_mixed_product_law(self, seed):
        a, b = random_matrix(2, seed=seed), random_matrix(3, seed=seed + 1)
        c, d = random_matrix(2, seed=seed + 2), random_matrix(3, seed=seed + 3)
        lhs = kron(a, b) @ kron(c, d)
        rhs = kron(a @ c, b @ d)
        assert frob_distance(lhs, rhs) <= 1e-12 * max(1.0, np.linalg.norm(lhs))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_associativity(self, seed):
        a, b, c = (random_matrix(2, seed=seed + i) for i in range(3))
        assert frob_distance(kron(kron(a, b), c), kron(a, kron(b, c))) <= 1e-12 * 100


class TestPartialTrace:
    def test_product_state(self):
        rho_a = random_psd(2, seed=1)
        rho_a /= np.trace(rho_a)
        rho_b = random_psd(3, seed=2)
        rho_b /= np.trace(rho_b)
        assert_allclose(
            partial_trace(kron(rho_a, rho_b), (2, 3), "second"), rho_a, atol=1e-13
        )
        assert_allclose(
            partial_trace(kron(rho_a, rho_b), (2, 3), "first"), rho_b, atol=1e-13
        )

    def test_entangled_vector_marginal(self):
        # Omega = sum sqrt(p_q) e_q (x) e_q reduces to diag(p) on either side
        p = np.array([0.2, 0.3, 0.5])
        om = np.zeros(9, dtype=complex)
        om[[0, 4, 8]] = np.sqrt(p)
        proj = np.outer(om, om.conj())
        assert_allclose(partial_trace(proj, (3, 3), "second"), np.diag(p), atol=1e-14)
        assert_allclose(partial_trace(proj, (3, 3), "first"), np.diag(p), atol=1e-14)

    def test_random_against_index_oracle(self):
        m = random_psd(4, seed=5)  # on C^2 (x) C^2
        for side in ("first", "second"):
            assert_allclose(
                partial_trace(m, (2, 2), side),
                partial_trace_oracle(m, (2, 2), side),
                atol=1e-13,
            )

    def test_trace_preserved(self):
        m = random_matrix(6, seed=9)
        for side, dims in (("first", (2, 3)), ("second", (3, 2))):
            assert abs(np.trace(partial_trace(m, dims, side)) - np.trace(m)) <= 1e-12

    def test_bad_factorization(self):
        with pytest.raises(ValueError, match="bad factorization"):
            partial_trace(np.eye(5), (2, 3), "first")


class TestMatExp:
    def test_zero(self):
        assert_allclose(mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        d = np.array([0.3, -1.0, 2.0])
        assert_allclose(mat_exp(np.diag(d)), np.diag(np.exp(d)), rtol=1e-12)

    def test_against_taylor_oracle(self):
        m = random_matrix(4, seed=3)
        m *= 10.0 / np.linalg.norm(m, 2)
        x, y = mat_exp(m), taylor_exp_oracle(m)
        assert frob_distance(x, y) / np.linalg.norm(y) <= 1e-10

    def test_inverse_property(self):
        m = random_matrix(5, seed=7)
        m *= 5.0 / np.linalg.norm(m, 2)
        assert frob_distance(mat_exp(m) @ mat_exp(-m), np.eye(5)) <= 1e-9


class TestNullspace:
    def test_identity_empty(self):
        assert nullspace(np.eye(4)) == []

    def test_zero_full(self):
        basis = nullspace(np.zeros((3, 3)))
        assert len(basis) == 3
        gram = np.array([[u.conj() @ v for v in basis] for u in basis])
        assert_allclose(gram, np.eye(3), atol=1e-12)

    def test_cycle_generator_kernel_contains_identity(self):
        gen = cycle_generator((3,), [0.3])
        one = vec(np.eye(3, dtype=complex))
        # the defining property, checked directly: L(1) = 0
        assert np.linalg.norm(gen.superoperator @ one) <= 1e-12
        basis = nullspace(gen.superoperator)
        coeffs = np.array([b.conj() @ one for b in basis])
        residual = one - sum(c * b for c, b in zip(coeffs, basis))
        assert np.linalg.norm(residual) <= 1e-9


class TestPredicates:
    def test_is_psd_identity(self):
        assert is_psd(np.eye(3))

    def test_is_psd_small_negative(self):
        assert not is_psd(np.diag([1.0, -1e-3]), 1e-10)

    def test_frob_distance_self(self):
        a = random_matrix(3, seed=4)
        assert frob_distance(a, a) == 0.0

    def test_frob_distance_shape_mismatch(self):
        with pytest.raises(ValueError):
            frob_distance(np.eye(2), np.eye(3))

    def test_deterministic_eigh_phase(self):
        m = random_psd(4, seed=8)
        w1, v1 = deterministic_eigh(m)
        w2, v2 = deterministic_eigh(m.copy())
        assert_allclose(w1, w2)
        assert_allclose(v1, v2)
        assert np.all(np.diff(w1) <= 1e-12)
        for c in range(4):
            k = int(np.argmax(np.abs(v1[:, c])))
            assert abs(v1[k, c].imag) <= 1e-12 and v1[k, c].real > 0


class TestVecJson:
    def test_vec_unvec_roundtrip(self):
        a = random_matrix(3, 2, seed=6)
        assert_allclose(unvec(vec(a), (3, 2)), a)

    def test_vec_is_column_stacking(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert_allclose(vec(a), [1.0, 3.0, 2.0, 4.0])

    def test_json_roundtrip(self):
        a = random_matrix(2, 3, seed=10)
        assert_allclose(matrix_from_json(matrix_to_json(a)), a)

    def test_json_malformed(self):
        with pytest.raises(ValueError, match="malformed matrix"):
            matrix_from_json({"rows": 2})
        with pytest.raises(ValueError, match="entries"):
            matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0]]})
