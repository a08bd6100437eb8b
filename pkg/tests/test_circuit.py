import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circuit_dense, gate_dense, random_density, random_state
from qfeature.circuit import (
    CX,
    RY,
    RZ,
    UNITARY,
    CircuitPlan,
    GateOp,
    apply_gate_density,
    apply_gate_state,
    circuit_unitary,
    prob_all_zero,
    prob_all_zero_density,
    run_circuit,
    run_circuit_density,
    state_to_density,
    zero_state,
)


def basis(n, index):
    s = np.zeros(1 << n, dtype=complex)
    s[index] = 1
    return s


def random_gate(rng, n):
    kind = rng.choice([RY, RZ, CX])
    target = int(rng.integers(n))
    others = [q for q in range(n) if q != target]
    k = int(rng.integers(1 if kind == CX else 0, len(others) + 1)) if others else 0
    if kind == CX and not others:
        kind = RY
    picked = rng.choice(others, size=k, replace=False) if k else []
    controls = tuple((int(q), bool(rng.integers(2))) for q in picked)
    return GateOp(kind, target, float(rng.uniform(-2 * np.pi, 2 * np.pi)), controls)


def as_oracle(g: GateOp):
    return (g.kind, g.target, g.angle, list(g.controls))


class TestGateOp:
    def test_target_in_controls(self):
        with pytest.raises(ValueError, match="target"):
            GateOp(RY, 0, 0.1, ((0, True),))

    def test_duplicate_controls(self):
        with pytest.raises(ValueError, match="distinct"):
            GateOp(RY, 0, 0.1, ((1, True), (1, False)))

    def test_cx_needs_control(self):
        with pytest.raises(ValueError):
            GateOp(CX, 0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            GateOp("h", 0)

    def test_non_unitary_matrix(self):
        with pytest.raises(ValueError, match="unitary"):
            GateOp(UNITARY, 0, matrix=[[1, 1], [0, 1]])

    def test_out_of_range_in_plan(self):
        with pytest.raises(ValueError, match="out of range"):
            CircuitPlan(2, (GateOp(RY, 2, 0.1),))

    def test_out_of_range_control_on_state(self):
        with pytest.raises(ValueError, match="out of range"):
            apply_gate_state(zero_state(2), GateOp(RY, 0, 0.1, ((3, True),)))

    def test_inverse(self):
        g = GateOp(RZ, 1, 0.7, ((0, False),))
        assert g.inverse() == GateOp(RZ, 1, -0.7, ((0, False),))


class TestCircuitPlan:
    def test_stage_partition_enforced(self):
        ops = (GateOp(RY, 0, 0.1), GateOp(RY, 0, 0.2))
        with pytest.raises(ValueError):
            CircuitPlan(1, ops, (("a", 0, 1),))
        with pytest.raises(ValueError):
            CircuitPlan(1, ops, (("a", 1, 2),))

    def test_concat_labels(self):
        plan = CircuitPlan.concat(1, [("a", [GateOp(RY, 0, 1.0)]), ("b", [])])
        assert plan.stages == (("a", 0, 1), ("b", 1, 1))


class TestApplyGateState:
    def test_ry_pi_flips(self):
        out = apply_gate_state(zero_state(1), GateOp(RY, 0, np.pi))
        np.testing.assert_allclose(out, [0, 1], atol=1e-15)

    def test_cx_from_control(self):
        # |q1 q0> = |01> is index 1 (q0 = 1); CX q0 -> q1 gives index 3
        out = apply_gate_state(basis(2, 1), GateOp(CX, 1, controls=((0, True),)))
        np.testing.assert_array_equal(out, basis(2, 3))

    def test_cx_idle_when_control_clear(self):
        out = apply_gate_state(basis(2, 2), GateOp(CX, 1, controls=((0, True),)))
        np.testing.assert_array_equal(out, basis(2, 2))

    def test_doubly_anti_controlled_against_projector_oracle(self):
        rng = np.random.default_rng(10)
        s = random_state(rng, 3)
        g = GateOp(RY, 2, 1.234, ((0, False), (1, False)))
        np.testing.assert_allclose(apply_gate_state(s, g), gate_dense(*as_oracle(g), 3) @ s, atol=1e-12)

    def test_pattern_completeness(self):
        rng = np.random.default_rng(11)
        s = random_state(rng, 3)
        theta = 0.9
        out = s
        for c0 in (True, False):
            for c1 in (True, False):
                out = apply_gate_state(out, GateOp(RY, 2, theta, ((0, c0), (1, c1))))
        np.testing.assert_allclose(out, apply_gate_state(s, GateOp(RY, 2, theta)), atol=1e-12)

    def test_batched_matches_single(self):
        rng = np.random.default_rng(12)
        states = np.stack([random_state(rng, 3) for _ in range(4)])
        g = GateOp(RY, 1, 0.3, ((2, True),))
        batched = apply_gate_state(states, g)
        for s, b in zip(states, batched):
            np.testing.assert_array_equal(apply_gate_state(s, g), b)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_norm_preserved(self, n, seed):
        rng = np.random.default_rng(seed)
        out = apply_gate_state(random_state(rng, n), random_gate(rng, n))
        assert abs(np.linalg.norm(out) - 1) < 1e-10


class TestRunCircuit:
    def test_empty_plan(self):
        s = random_state(np.random.default_rng(13), 2)
        np.testing.assert_array_equal(run_circuit(CircuitPlan(2, ()), s), s)

    def test_inverse_pair(self):
        plan = CircuitPlan(1, (GateOp(RY, 0, 0.8), GateOp(RY, 0, -0.8)))
        np.testing.assert_allclose(run_circuit(plan), [1, 0], atol=1e-12)

    def test_random_ten_gates_against_dense_product(self):
        rng = np.random.default_rng(14)
        ops = [random_gate(rng, 3) for _ in range(10)]
        s = random_state(rng, 3)
        expected = circuit_dense([as_oracle(g) for g in ops], 3) @ s
        np.testing.assert_allclose(run_circuit(CircuitPlan(3, ops), s), expected, atol=1e-10)

    def test_register_mismatch(self):
        with pytest.raises(ValueError):
            run_circuit(CircuitPlan(2, ()), zero_state(3))

    def test_circuit_unitary_matches_dense(self):
        rng = np.random.default_rng(15)
        ops = [random_gate(rng, 3) for _ in range(8)]
        expected = circuit_dense([as_oracle(g) for g in ops], 3)
        np.testing.assert_allclose(circuit_unitary(CircuitPlan(3, ops)), expected, atol=1e-12)


class TestProbAllZero:
    def test_zero_state(self):
        assert prob_all_zero(zero_state(3)) == 1.0

    def test_one_state(self):
        assert prob_all_zero(basis(1, 1)) == 0.0

    def test_half(self):
        s = apply_gate_state(zero_state(1), GateOp(RY, 0, np.pi / 2))
        assert abs(prob_all_zero(s) - np.cos(np.pi / 4) ** 2) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_in_unit_interval(self, n, seed):
        p = prob_all_zero(random_state(np.random.default_rng(seed), n))
        assert 0.0 <= p <= 1.0


class TestDensity:
    def test_state_to_density_zero(self):
        np.testing.assert_array_equal(state_to_density(basis(1, 0)), [[1, 0], [0, 0]])

    def test_state_to_density_plus(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        np.testing.assert_allclose(state_to_density(plus), np.full((2, 2), 0.5), atol=1e-15)

    def test_idempotent(self):
        rho = state_to_density(random_state(np.random.default_rng(16), 3))
        np.testing.assert_allclose(rho @ rho, rho, atol=1e-10)
        assert abs(np.trace(rho) - 1) < 1e-12

    def test_maximally_mixed_invariant(self):
        rng = np.random.default_rng(17)
        rho = np.eye(8, dtype=complex) / 8
        for _ in range(5):
            np.testing.assert_allclose(apply_gate_density(rho, random_gate(rng, 3)), rho, atol=1e-15)

    def test_x_on_zero(self):
        g = GateOp(UNITARY, 0, matrix=[[0, 1], [1, 0]])
        out = apply_gate_density(state_to_density(basis(1, 0)), g)
        np.testing.assert_array_equal(out, [[0, 0], [0, 1]])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_matches_pure_path(self, n, seed):
        rng = np.random.default_rng(seed)
        s, g = random_state(rng, n), random_gate(rng, n)
        out = apply_gate_density(state_to_density(s), g)
        np.testing.assert_allclose(out, state_to_density(apply_gate_state(s, g)), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_trace_and_hermiticity(self, n, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, n)
        out = apply_gate_density(rho, random_gate(rng, n))
        assert abs(np.trace(out) - 1) < 1e-10
        np.testing.assert_allclose(out, out.conj().T, atol=1e-10)

    def test_noiseless_density_circuit_equals_pure(self):
        rng = np.random.default_rng(18)
        ops = [random_gate(rng, 3) for _ in range(12)]
        plan = CircuitPlan(3, ops)
        pure = prob_all_zero(run_circuit(plan))
        mixed = prob_all_zero_density(run_circuit_density(plan, state_to_density(zero_state(3))))
        assert abs(pure - mixed) < 1e-10

    def test_after_stage_hook_order(self):
        plan = CircuitPlan.concat(1, [("a", [GateOp(RY, 0, 0.1)]), ("b", [GateOp(RY, 0, 0.2)])])
        seen = []
        run_circuit_density(plan, state_to_density(zero_state(1)),
                            lambda rho, label: seen.append(label) or rho)
        assert seen == ["a", "b"]
