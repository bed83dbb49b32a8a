import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from xylab.errors import CapacityError, ValidationError
from xylab.problems import build_problem, random_portfolio
from xylab.qaoa import build_ma_circuit, build_sa_circuits, build_ws_circuit
from xylab.simulator import (
    Circuit,
    Gate,
    NonFiniteLossError,
    State,
    adam,
    adam_optimize,
    apply_gate,
    dense_unitary,
    dicke_state,
    evaluate_loss,
    finite_difference_gradient,
    gradient,
    loss_and_gradient,
    random_params,
    sector_leakage,
    shift_gradient,
    simulate,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def random_circuit(n, gates, rng):
    out = []
    for t in range(gates):
        kind = rng.choice(["RZ", "RZZ", "XY"])
        qubits = rng.choice(n, size=1 if kind == "RZ" else 2, replace=False)
        out.append(Gate(str(kind), tuple(int(q) for q in qubits), t))
    return Circuit(n, out, gates)


# states and gates -------------------------------------------------------

def test_dicke_small():
    np.testing.assert_allclose(dicke_state(2, 1).amplitudes, [0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0])
    amps = dicke_state(4, 2).amplitudes
    assert np.count_nonzero(amps) == 6
    np.testing.assert_allclose(amps[amps != 0], 1 / math.sqrt(6))


def test_dicke_is_fixed_by_sector_projector():
    n, w = 5, 2
    state = dicke_state(n, w)
    proj = np.diag([1.0 if bin(i).count("1") == w else 0.0 for i in range(1 << n)])
    np.testing.assert_allclose(proj @ state.amplitudes, state.amplitudes)


def test_dicke_errors():
    with pytest.raises(CapacityError):
        dicke_state(21, 3)
    with pytest.raises(ValidationError):
        dicke_state(4, 5)


def test_xy_convention_against_expm():
    gen = np.kron(X, X) + np.kron(Y, Y)
    for theta in (0.0, math.pi / 4, 0.37, -1.2):
        for basis in range(4):
            start = np.zeros(4, dtype=complex)
            start[basis] = 1
            got = apply_gate(State(2, start), "XY", (0, 1), theta).amplitudes
            np.testing.assert_allclose(got, expm(1j * theta * gen) @ start, atol=1e-12)


def test_xy_quarter_turn_swaps_with_phase_i():
    out = apply_gate(State(2, [0, 1, 0, 0]), "XY", (0, 1), math.pi / 4).amplitudes
    np.testing.assert_allclose(out, [0, 0, 1j, 0], atol=1e-15)


def test_xy_zero_angle_is_identity():
    s = dicke_state(4, 2)
    np.testing.assert_array_equal(apply_gate(s, "XY", (1, 3), 0.0).amplitudes, s.amplitudes)


def test_phase_gates():
    eleven = State(2, [0, 0, 0, 1])
    assert np.isclose(apply_gate(eleven, "RZZ", (0, 1), 0.3).amplitudes[3], np.exp(0.3j))
    assert np.isclose(apply_gate(eleven, "RZ", (0,), 0.3).amplitudes[3], np.exp(-0.3j))
    gen = np.kron(Z, np.eye(2))
    s = dicke_state(2, 1)
    np.testing.assert_allclose(apply_gate(s, "RZ", (0,), 0.7).amplitudes,
                               expm(0.7j * gen) @ s.amplitudes, atol=1e-12)


def test_gate_errors():
    s = dicke_state(3, 1)
    with pytest.raises(IndexError):
        apply_gate(s, "RZ", (3,), 0.1)
    with pytest.raises(ValidationError):
        apply_gate(s, "XY", (1,), 0.1)
    with pytest.raises(ValidationError):
        apply_gate(s, "XY", (1, 1), 0.1)
    with pytest.raises(ValidationError):
        apply_gate(s, "CNOT", (0, 1), 0.1)


def test_circuit_validation():
    with pytest.raises(ValidationError):
        Circuit(3, [Gate("RZ", (0,), 2)], 2)
    with pytest.raises(ValidationError):
        Circuit(3, [], 0, sharing_mode="other")


# invariants ---------------------------------------------------------------

@given(st.integers(0, 10_000))
def test_norm_preserved_long_sequence(seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(6, 1000, rng)
    state = simulate(circ, rng.uniform(-4, 4, circ.param_count), initial=dicke_state(6, 3))
    assert abs(state.norm() - 1) < 1e-10
    assert sector_leakage(state, 3) < 1e-10


@given(st.integers(0, 10_000), st.integers(1, 7))
def test_sector_confinement(seed, n):
    rng = np.random.default_rng(seed)
    w = int(rng.integers(0, n + 1))
    circ = random_circuit(n, 40, rng) if n > 1 else Circuit(1, [Gate("RZ", (0,), 0)], 1)
    state = simulate(circ, rng.uniform(-4, 4, circ.param_count), initial=dicke_state(n, w))
    assert sector_leakage(state, w) < 1e-10


def test_symmetric_zz_phase_leaves_loss_unchanged():
    # exp(i t ZZ+) is a global phase on each fixed-weight sector
    n = 6
    inst = random_portfolio(n, 3, seed=1)
    circ = build_ma_circuit(n, 2)
    params = random_params(circ.param_count, 3)
    extra = [Gate("RZZ", (i, j), circ.param_count, 1.0) for i in range(n) for j in range(i + 1, n)]
    longer = Circuit(n, circ.gates + extra, circ.param_count + 1)
    base = evaluate_loss(circ, params, inst)
    for t in (0.3, 1.7):
        assert abs(evaluate_loss(longer, np.append(params, t), inst) - base) < 1e-10


# loss ------------------------------------------------------------------

def test_zero_depth_is_feasible_mean():
    inst = build_problem("sparsest", 6, graph="Rnd2n", seed=0)
    idx = [i for i in range(64) if bin(i).count("1") == 3]
    want = inst.energies()[idx].mean()
    assert evaluate_loss(Circuit(6, [], 0), [], inst) == pytest.approx(want, abs=1e-12)
    circ = build_ma_circuit(6, 2)
    assert evaluate_loss(circ, np.zeros(circ.param_count), inst) == pytest.approx(want, abs=1e-12)


def test_loss_matches_dense_pipeline():
    rng = np.random.default_rng(8)
    inst = random_portfolio(6, 3, seed=8)
    circ = build_ma_circuit(6, 2)
    params = rng.uniform(0, 2 * np.pi, circ.param_count)
    psi = dense_unitary(circ, params) @ dicke_state(6, 3).amplitudes
    dense = np.vdot(psi, inst.to_dense() @ psi).real
    assert abs(evaluate_loss(circ, params, inst) - dense) < 1e-9


def test_param_length_mismatch():
    circ = build_ws_circuit(4, 1)
    inst = random_portfolio(4, 2, 0)
    with pytest.raises(ValidationError):
        evaluate_loss(circ, np.zeros(3), inst)


# gradients -------------------------------------------------------------

def _relative_error(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12)


@given(st.integers(0, 10_000))
def test_shift_rule_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    inst = random_portfolio(n, n // 2, seed=seed)
    circ = random_circuit(n, 24, rng)
    params = rng.uniform(0, 2 * np.pi, circ.param_count)
    fd = finite_difference_gradient(circ, params, inst)
    assert _relative_error(shift_gradient(circ, params, inst), fd) < 1e-6


@given(st.integers(0, 10_000))
def test_adjoint_matches_shift(seed):
    rng = np.random.default_rng(seed)
    inst = random_portfolio(5, 2, seed=seed)
    circ = random_circuit(5, 30, rng)
    params = rng.uniform(0, 2 * np.pi, circ.param_count)
    loss, grad, state = loss_and_gradient(circ, params, inst)
    np.testing.assert_allclose(grad, shift_gradient(circ, params, inst), atol=1e-10)
    assert loss == pytest.approx(evaluate_loss(circ, params, inst), abs=1e-12)


def test_xy_gate_needs_two_shift_pairs():
    # the single-pair rule is exact for phase gates but not for XY
    inst = random_portfolio(4, 2, seed=2)
    circ = Circuit(4, [Gate("RZ", (0,), 0), Gate("XY", (0, 1), 1), Gate("RZ", (1,), 2)], 3)
    params = np.array([0.4, 0.9, -0.3])
    fd = finite_difference_gradient(circ, params, inst)
    shift = lambda s: (evaluate_loss(circ, params + np.array([0, s, 0]), inst)
                       - evaluate_loss(circ, params - np.array([0, s, 0]), inst))
    assert abs(shift(math.pi / 4) - fd[1]) > 1e-3
    assert shift_gradient(circ, params, inst)[1] == pytest.approx(fd[1], abs=1e-8)


def test_commuting_direction_has_zero_gradient():
    # a Z rotation right before measuring a diagonal cost does nothing
    inst = random_portfolio(4, 2, seed=5)
    circ = Circuit(4, [Gate("XY", (0, 1), 0), Gate("RZ", (2,), 1)], 2)
    grad = gradient(circ, [0.3, 0.8], inst)
    assert abs(grad[1]) < 1e-12


def test_shared_angle_gradient_is_sum_of_tied_entries():
    n, p = 6, 2
    inst = random_portfolio(n, 3, seed=4)
    _, sa = build_sa_circuits(n, p, inst)
    rng = np.random.default_rng(0)
    theta = rng.uniform(0, 2 * np.pi, sa.param_count)
    # untie: same gates, one parameter each, angles already multiplied out
    untied = Circuit(n, [Gate(g.kind, g.qubits, t, 1.0, g.layer) for t, g in enumerate(sa.gates)],
                     len(sa.gates))
    angles = sa.gate_angles(theta)
    per_gate = gradient(untied, angles, inst)
    want = np.zeros(sa.param_count)
    for g, d in zip(sa.gates, per_gate):
        want[g.param_index] += g.coeff * d
    np.testing.assert_allclose(gradient(sa, theta, inst), want, atol=1e-10)
    np.testing.assert_allclose(gradient(sa, theta, inst, "adjoint"), want, atol=1e-10)


def test_gradient_method_validation():
    with pytest.raises(ValidationError):
        gradient(Circuit(2, [], 0), [], random_portfolio(2, 1, 0), method="magic")


# optimisation ------------------------------------------------------------

def test_adam_quadratic():
    target = np.array([1.5, -2.0, 0.25])
    trace = adam(lambda x: (float(np.sum((x - target) ** 2)), 2 * (x - target)),
                 np.zeros(3), steps=200, lr=0.1)
    assert len(trace) == 201
    assert np.max(np.abs(trace[-1].params - target)) < 1e-4


def test_adam_zero_lr_keeps_params():
    inst = random_portfolio(4, 2, seed=1)
    circ = build_ws_circuit(4, 1)
    start = random_params(circ.param_count, 1)
    trace = adam_optimize(circ, start, inst, steps=5, lr=0.0)
    for entry in trace:
        np.testing.assert_array_equal(entry.params, start)
    assert len({e.loss for e in trace}) == 1


def test_adam_deterministic():
    inst = random_portfolio(6, 3, seed=2)
    circ = build_ws_circuit(6, 2)
    a = adam_optimize(circ, None, inst, steps=20, seed=7)
    b = adam_optimize(circ, None, inst, steps=20, seed=7)
    assert [e.loss for e in a] == [e.loss for e in b]
    assert a[-1].loss < a[0].loss


def test_adam_aborts_on_nan():
    with pytest.raises(NonFiniteLossError):
        adam(lambda x: (float("nan"), np.zeros_like(x)), np.zeros(2), steps=3)
