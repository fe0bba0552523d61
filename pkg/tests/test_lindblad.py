"""Generators, cyclic shifts, duals with jump form, the scenario family."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from balance_lab.channels import apply, validate_ucp
from balance_lab.couplings import validate_coupling
from balance_lab.kernel import frob_distance, matrix_unit, vec
from balance_lab.lindblad import (
    balance_sub_residuals,
    build_generator,
    cycle_generator,
    cycle_shift,
    dual_generator,
    scenario_build,
    scenario_coupling,
    scenario_from_json,
    scenario_predict,
    scenario_state,
    semigroup,
    standard_grid,
    state_invariance_residual,
)
from balance_lab.states import new_faithful_state

from conftest import make_spec, random_matrix


class TestCycleShift:
    def test_single_cycle_permutation(self):
        r = cycle_shift((3,), [1.0 - 1e-12])
        e1, e2, e3 = np.eye(3)
        assert_allclose(r @ e1, e2, atol=1e-6)
        assert_allclose(r @ e2, e3, atol=1e-6)
        assert_allclose(r @ e3, e1, atol=1e-6)

    def test_column_scaling(self):
        r = cycle_shift((3,), [0.25])
        assert_allclose(np.linalg.norm(r, axis=0), [0.5] * 3)

    def test_normalization_identity(self):
        k = np.array([0.3, 0.7])
        r_k = cycle_shift((3, 4), k)
        r_1k = cycle_shift((3, 4), 1 - k)
        assert_allclose(
            r_k.conj().T @ r_k + r_1k @ r_1k.conj().T, np.eye(7), atol=1e-14
        )

    def test_cycle_too_short(self):
        with pytest.raises(ValueError, match="cycle too short"):
            cycle_shift((2,), [0.5])


class TestBuildGenerator:
    def test_pure_commutator_is_unitary_semigroup(self):
        h = np.diag([0.5, -0.2, 0.1]).astype(complex)
        gen = build_generator([], h)
        ch = semigroup(gen, 1.3)
        u = np.diag(np.exp(1.3j * np.array([0.5, -0.2, 0.1])))
        a = random_matrix(3, seed=1)
        assert_allclose(apply(ch, a), u @ a @ u.conj().T, atol=1e-12)

    def test_applies_to_identity_as_zero(self):
        gen = cycle_generator((3, 4), [0.3, 0.6], [0.1] * 7)
        assert np.linalg.norm(gen.superoperator @ vec(np.eye(7))) <= 1e-12

    def test_block_constant_state_invariant(self):
        gen = cycle_generator((3,), [0.3])
        s = new_faithful_state([1 / 3] * 3)
        assert state_invariance_residual(gen, s) <= 1e-13

    def test_non_hermitian_hamiltonian_rejected(self):
        with pytest.raises(ValueError, match="Hermitian"):
            build_generator([], np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSemigroup:
    def test_time_zero(self):
        gen = cycle_generator((3,), [0.4])
        assert_allclose(semigroup(gen, 0.0).superoperator, np.eye(9))

    def test_semigroup_law(self):
        gen = cycle_generator((3, 4), [0.3, 0.6], [0.2] * 7)
        lhs = semigroup(gen, 0.7).superoperator @ semigroup(gen, 1.1).superoperator
        rhs = semigroup(gen, 1.8).superoperator
        assert frob_distance(lhs, rhs) <= 1e-9

    def test_state_preserved_under_evolution(self):
        spec = make_spec()
        s = scenario_state(spec)
        gen = cycle_generator(spec.cycle_lengths, spec.k, spec.g)
        ch = semigroup(gen, 1.0)
        for i in range(7):
            for j in range(7):
                u = matrix_unit(7, i, j)
                lhs = complex(np.trace(s.rho @ apply(ch, u)))
                rhs = complex(np.trace(s.rho @ u))
                assert lhs == pytest.approx(rhs, abs=1e-11)

    def test_negative_time(self):
        with pytest.raises(ValueError, match="non-negative"):
            semigroup(cycle_generator((3,), [0.4]), -0.1)


class TestDualGenerator:
    def test_commutator_self_dual(self):
        h = np.diag([0.5, -0.2, 0.1]).astype(complex)
        gen = build_generator([], h)
        s = new_faithful_state([0.2, 0.3, 0.5])
        d = dual_generator(gen, s)
        assert frob_distance(d.superoperator, gen.superoperator) <= 1e-12

    def test_cycle_closed_form(self):
        # dual of the cycle generator swaps the shift weights for their complements
        l = np.array([0.3, 0.8])
        h = [0.1, 0.2, 0.3, -0.1, -0.2, -0.3, 0.4]
        gen = cycle_generator((3, 4), l, h)
        s = scenario_state(make_spec())
        d = dual_generator(gen, s)
        assert d.jumps is not None
        expected = build_generator(
            (cycle_shift((3, 4), 1 - l), cycle_shift((3, 4), l).conj().T),
            np.diag(h).astype(complex),
        )
        assert frob_distance(d.superoperator, expected.superoperator) <= 1e-12

    def test_involution(self):
        gen = cycle_generator((3, 4), [0.3, 0.6], [0.5] * 3 + [0.1] * 4)
        s = scenario_state(make_spec())
        dd = dual_generator(dual_generator(gen, s), s)
        assert frob_distance(dd.superoperator, gen.superoperator) <= 1e-9

    def test_state_not_invariant(self):
        gen = cycle_generator((3,), [0.4])
        s = new_faithful_state([0.5, 0.3, 0.2])
        with pytest.raises(ValueError, match="dual generator undefined"):
            dual_generator(gen, s)


class TestScenarioSpec:
    def test_validation_errors(self):
        with pytest.raises(ValueError, match="cycle too short"):
            make_spec(cycles=(2, 4))
        with pytest.raises(ValueError, match="block_probs"):
            make_spec(block_probs=(0.5, 0.6))
        with pytest.raises(ValueError, match="partition"):
            make_spec(partition=((0,), (0, 1)))
        with pytest.raises(ValueError, match="block types"):
            make_spec(types=("entangled", "squeezed"))
        with pytest.raises(ValueError, match="one entry per cycle"):
            make_spec(k=(0.5,))
        with pytest.raises(ValueError, match="per basis index"):
            make_spec(g=(0.0,) * 6)

    def test_empty_block_allowed(self):
        spec = make_spec(partition=((0, 1), ()), types=("entangled", "product"))
        w = scenario_coupling(spec)
        assert validate_coupling(w).valid

    def test_json_roundtrip(self):
        spec = make_spec()
        back = scenario_from_json(spec.to_json())
        assert back.to_json() == spec.to_json()


class TestScenarioBuild:
    def test_couplings_valid_for_all_types(self):
        for types in (
            ("entangled", "product"),
            ("mixed", "mixed"),
            ("product", "entangled"),
        ):
            w = scenario_coupling(make_spec(types=types))
            assert validate_coupling(w).valid

    def test_block_mass(self):
        spec = make_spec(types=("entangled", "mixed"))
        w = scenario_coupling(spec)
        # each block contributes its state mass to the trace
        assert complex(np.trace(w.kappa)) == pytest.approx(1.0)

    def test_semigroup_members_ucp(self):
        triple = scenario_build(make_spec())
        for t in (0.1, 1.0):
            assert validate_ucp(semigroup(triple.system_a.dynamics, t)).ucp


class TestScenarioPredict:
    def test_entangled_balanced(self):
        spec = make_spec(
            types=("entangled",),
            partition=((0, 1),),
            k=(0.3, 0.6),
            l=(0.3, 0.6),
            g=(0.2,) * 7,
            h=(0.0,) * 7,
        )
        # g - h is constant on the single block
        assert scenario_predict(spec)

    def test_mixed_weights_differ(self):
        spec = make_spec(types=("mixed", "product"), l=(0.4, 0.6))
        assert not scenario_predict(spec)

    def test_product_blocks_anything_goes(self):
        spec = make_spec(
            types=("product", "product"),
            k=(0.3, 0.6),
            l=(0.9, 0.1),
            g=(0.5,) * 7,
            h=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6),
        )
        assert scenario_predict(spec)

    def test_entangled_hamiltonian_difference(self):
        spec = make_spec(
            types=("entangled", "product"),
            g=(0.1, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0),
            h=(0.0,) * 7,
        )
        assert not scenario_predict(spec)
        # same difference pattern on a product block is harmless
        spec2 = make_spec(
            types=("product", "entangled"),
            g=(0.1, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0),
            h=(0.0,) * 7,
        )
        assert scenario_predict(spec2)


class TestSubResiduals:
    def test_balanced_both_vanish(self):
        jump, comm = balance_sub_residuals(make_spec())
        assert jump <= 1e-12 and comm <= 1e-12

    def test_weight_violation_hits_shift_part(self):
        jump, comm = balance_sub_residuals(
            make_spec(types=("entangled", "entangled"), l=(0.3, 0.5))
        )
        assert jump > 1e-6 and comm <= 1e-12

    def test_hamiltonian_violation_hits_commutator_part(self):
        jump, comm = balance_sub_residuals(
            make_spec(
                types=("entangled", "product"),
                g=(0.1, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0),
            )
        )
        assert jump <= 1e-12 and comm > 1e-6


class TestStandardGrid:
    def test_size_and_variety(self):
        grid = standard_grid()
        assert len(grid) >= 48
        verdicts = {scenario_predict(s) for s in grid}
        assert verdicts == {True, False}
