"""Full statevector simulation of RZ / RZZ / XY circuits.

Gate conventions (qubits 0-based, qubit 0 is the most significant bit):

* ``RZ(i, t)   = exp(i t Z_i)``
* ``RZZ(i, j, t) = exp(i t Z_i Z_j)``
* ``XY(i, j, t)  = exp(i t (X_i X_j + Y_i Y_j))``, which rotates the
  ``{01, 10}`` block by ``[[cos 2t, i sin 2t], [i sin 2t, cos 2t]]``.

A gate's angle is ``params[param_index] * coeff``; shared-angle circuits tie
several gates to one parameter through different coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, ValidationError
from .problems import ProblemInstance, weight_indices

STATE_LIMIT = 20
IMAG_TOL = 1e-10
GATE_KINDS = ("RZ", "RZZ", "XY")

# four-term shift rule for generators with spectrum {-2, 0, 0, 2}
_XY_SHIFTS = ((math.pi / 8, 2.0), (math.pi / 4, 1.0 - math.sqrt(2.0)))
_PHASE_SHIFTS = ((math.pi / 4, 1.0),)


class State:
    """Amplitude vector on ``n`` qubits (copied on construction)."""

    __slots__ = ("n", "amplitudes")

    def __init__(self, n: int, amplitudes: np.ndarray):
        amplitudes = np.array(amplitudes, dtype=complex)
        if amplitudes.shape != (1 << n,):
            raise ValidationError(f"need {1 << n} amplitudes, got shape {amplitudes.shape}")
        self.n = n
        self.amplitudes = amplitudes

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def sector_mass(self, k: int) -> float:
        return float(self.probabilities()[weight_indices(self.n, k)].sum())

    def copy(self) -> "State":
        return State(self.n, self.amplitudes)

    def __repr__(self) -> str:
        return f"State(n={self.n}, norm={self.norm():.12f})"


def dicke_state(n: int, w: int, capacity: int = STATE_LIMIT) -> State:
    """Uniform superposition over weight-``w`` basis states."""
    if n < 1 or n > capacity:
        raise CapacityError(f"state vectors limited to 1 <= n <= {capacity}, got {n}")
    if not 0 <= w <= n:
        raise ValidationError(f"weight {w} outside 0..{n}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[weight_indices(n, w)] = 1.0 / math.sqrt(math.comb(n, w))
    return State(n, amps)


def _check_qubits(n: int, qubits: Sequence[int], kind: str) -> tuple[int, ...]:
    want = 1 if kind == "RZ" else 2
    qubits = tuple(int(q) for q in qubits)
    if len(qubits) != want:
        raise ValidationError(f"{kind} acts on {want} qubit(s), got {qubits}")
    if any(not 0 <= q < n for q in qubits):
        raise IndexError(f"qubit index out of range 0..{n - 1}: {qubits}")
    if len(set(qubits)) != len(qubits):
        raise ValidationError(f"repeated qubit in {qubits}")
    return qubits


def z_pattern(n: int, qubits: Sequence[int]) -> np.ndarray:
    """Diagonal of ``prod Z_q`` over all basis states (+1 / -1)."""
    idx = np.arange(1 << n, dtype=np.int64)
    mask = 0
    for q in qubits:
        mask |= 1 << (n - 1 - q)
    return 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)


def xy_pairs(n: int, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices with (x_i, x_j) = (0, 1) and their (1, 0) partners."""
    bi, bj = 1 << (n - 1 - i), 1 << (n - 1 - j)
    idx = np.arange(1 << n, dtype=np.int64)
    lo = idx[((idx & bi) == 0) & ((idx & bj) != 0)]
    return lo, lo ^ bi ^ bj


def _rotate_pairs(amps: np.ndarray, lo: np.ndarray, hi: np.ndarray, theta: float) -> None:
    c, s = math.cos(2 * theta), 1j * math.sin(2 * theta)
    a, b = amps[lo], amps[hi]
    amps[lo] = c * a + s * b
    amps[hi] = s * a + c * b


def apply_gate(state: State, gate_kind: str, qubits: Sequence[int], theta: float) -> State:
    """Return a new state with one gate applied."""
    kind = gate_kind.upper()
    if kind not in GATE_KINDS:
        raise ValidationError(f"unknown gate {gate_kind!r}")
    qubits = _check_qubits(state.n, qubits, kind)
    out = state.copy()
    if kind == "XY":
        lo, hi = xy_pairs(state.n, *qubits)
        _rotate_pairs(out.amplitudes, lo, hi, theta)
    else:
        out.amplitudes *= np.exp(1j * theta * z_pattern(state.n, qubits))
    return out


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    param_index: int
    coeff: float = 1.0
    layer: int = 0


@dataclass
class Circuit:
    """Ordered gate list; gates are applied first to last.

    ``rounds`` optionally records how the mixer gates of a layer were grouped
    into mutually commuting rounds.
    """

    n: int
    gates: list[Gate]
    param_count: int
    layers: int = 0
    sharing_mode: str = "multi_angle"
    rounds: list[list[int]] = field(default_factory=list)
    _program: list | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        for g in self.gates:
            _check_qubits(self.n, g.qubits, g.kind)
            if not 0 <= g.param_index < self.param_count:
                raise ValidationError(f"param index {g.param_index} outside 0..{self.param_count - 1}")
        if self.sharing_mode not in ("multi_angle", "shared_angle"):
            raise ValidationError(f"unknown sharing mode {self.sharing_mode!r}")

    @property
    def param_indices(self) -> np.ndarray:
        return np.array([g.param_index for g in self.gates], dtype=np.int64)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([g.coeff for g in self.gates], dtype=float)

    def gate_angles(self, params: Sequence[float]) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.param_count,):
            raise ValidationError(f"expected {self.param_count} parameters, got {params.shape}")
        if not self.gates:
            return np.zeros(0)
        return params[self.param_indices] * self.coeffs

    def counts(self) -> dict[str, int]:
        out = {k: 0 for k in GATE_KINDS}
        for g in self.gates:
            out[g.kind] += 1
        return out

    def program(self) -> list:
        """Runs of consecutive diagonal gates fused into one block, XY gates alone."""
        if self._program is None:
            prog, run = [], []

            def flush():
                if run:
                    pats = np.array([z_pattern(self.n, self.gates[g].qubits) for g in run])
                    prog.append(("diag", np.array(run), pats))
                    run.clear()

            for pos, g in enumerate(self.gates):
                if g.kind == "XY":
                    flush()
                    prog.append(("xy", pos, xy_pairs(self.n, *g.qubits)))
                else:
                    run.append(pos)
            flush()
            self._program = prog
        return self._program


def _initial(circuit: Circuit, instance: ProblemInstance | None, initial: State | None) -> np.ndarray:
    if initial is not None:
        if initial.n != circuit.n:
            raise ValidationError("initial state size does not match circuit")
        return initial.amplitudes.copy()
    if instance is None:
        raise ValidationError("need an instance or an initial state")
    return dicke_state(circuit.n, instance.k).amplitudes


def run_angles(circuit: Circuit, angles: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Apply the circuit with explicit per-gate angles (in place, returned)."""
    for op in circuit.program():
        if op[0] == "diag":
            amps *= np.exp(1j * (angles[op[1]] @ op[2]))
        else:
            lo, hi = op[2]
            _rotate_pairs(amps, lo, hi, angles[op[1]])
    return amps


def simulate(circuit: Circuit, params: Sequence[float], instance: ProblemInstance | None = None,
             initial: State | None = None) -> State:
    """Final state from the Dicke state of weight ``instance.k`` (or ``initial``)."""
    amps = run_angles(circuit, circuit.gate_angles(params), _initial(circuit, instance, initial))
    return State(circuit.n, amps)


class _DiagonalCache:
    """Keeps the last few energy diagonals around; instances are immutable."""

    def __init__(self, size: int = 8):
        self.size = size
        self.items: list[tuple[ProblemInstance, np.ndarray]] = []

    def __call__(self, instance: ProblemInstance) -> np.ndarray:
        for inst, diag in self.items:
            if inst is instance:
                return diag
        diag = instance.diagonal()
        self.items = ([(instance, diag)] + self.items)[: self.size]
        return diag


energy_diagonal = _DiagonalCache()


def expectation(amps: np.ndarray, diag: np.ndarray) -> float:
    val = np.vdot(amps, diag * amps)
    if abs(val.imag) > IMAG_TOL:
        raise ArithmeticError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def _loss_from_angles(circuit: Circuit, angles: np.ndarray, start: np.ndarray, diag: np.ndarray) -> float:
    return expectation(run_angles(circuit, angles, start.copy()), diag)


def evaluate_loss(circuit: Circuit, params: Sequence[float], instance: ProblemInstance,
                  initial: State | None = None) -> float:
    """``<psi(params)| H_f |psi(params)>`` from the Dicke state."""
    _match(circuit, instance)
    state = simulate(circuit, params, instance, initial)
    return expectation(state.amplitudes, energy_diagonal(instance))


def _match(circuit: Circuit, instance: ProblemInstance) -> None:
    if circuit.n != instance.n:
        raise ValidationError(f"circuit has {circuit.n} qubits, instance {instance.n}")


def _accumulate(circuit: Circuit, gate_grads: np.ndarray) -> np.ndarray:
    grad = np.zeros(circuit.param_count)
    if circuit.gates:
        np.add.at(grad, circuit.param_indices, gate_grads * circuit.coeffs)
    return grad


def shift_gradient(circuit: Circuit, params: Sequence[float], instance: ProblemInstance,
                   initial: State | None = None) -> np.ndarray:
    """Exact parameter-shift gradient.

    Phase gates have generator spectrum {-1, 1}, so one pair of shifts by
    pi/4 suffices.  ``XX + YY`` has spectrum {-2, 0, 0, 2}; the loss then
    carries frequencies 2 and 4 in the angle and needs two shift pairs.
    """
    _match(circuit, instance)
    angles = circuit.gate_angles(params)
    start = _initial(circuit, instance, initial)
    diag = energy_diagonal(instance)
    gate_grads = np.zeros(len(circuit.gates))
    for pos, g in enumerate(circuit.gates):
        rule = _XY_SHIFTS if g.kind == "XY" else _PHASE_SHIFTS
        total = 0.0
        for shift, weight in rule:
            angles[pos] += shift
            plus = _loss_from_angles(circuit, angles, start, diag)
            angles[pos] -= 2 * shift
            minus = _loss_from_angles(circuit, angles, start, diag)
            angles[pos] += shift
            total += weight * (plus - minus)
        gate_grads[pos] = total
    return _accumulate(circuit, gate_grads)


def finite_difference_gradient(circuit: Circuit, params: Sequence[float], instance: ProblemInstance,
                               step: float = 1e-5, initial: State | None = None) -> np.ndarray:
    """Central differences in the circuit parameters."""
    params = np.array(params, dtype=float)
    grad = np.zeros(circuit.param_count)
    for a in range(circuit.param_count):
        params[a] += step
        plus = evaluate_loss(circuit, params, instance, initial)
        params[a] -= 2 * step
        minus = evaluate_loss(circuit, params, instance, initial)
        params[a] += step
        grad[a] = (plus - minus) / (2 * step)
    return grad


def loss_and_gradient(circuit: Circuit, params: Sequence[float], instance: ProblemInstance,
                      initial: State | None = None) -> tuple[float, np.ndarray, State]:
    """Loss, adjoint-mode gradient and final state in one forward/backward sweep.

    With ``psi`` the state after gate g and ``lam`` the cost-weighted state
    pulled back to the same point, ``dL/dt_g = -2 Im <lam| G_g |psi>``.
    Diagonal blocks commute internally, so one product serves the whole block.
    """
    _match(circuit, instance)
    angles = circuit.gate_angles(params)
    diag = energy_diagonal(instance)
    psi = run_angles(circuit, angles, _initial(circuit, instance, initial))
    final = State(circuit.n, psi)
    lam = diag * psi
    loss = expectation(psi, diag)
    gate_grads = np.zeros(len(circuit.gates))
    for op in reversed(circuit.program()):
        if op[0] == "diag":
            overlap = np.conj(lam) * psi
            gate_grads[op[1]] = -2.0 * (op[2] @ overlap).imag
            undo = np.exp(-1j * (angles[op[1]] @ op[2]))
            psi = psi * undo
            lam = lam * undo
        else:
            pos, (lo, hi) = op[1], op[2]
            # (XX + YY) swaps the 01/10 amplitudes with weight 2
            g_psi_lo, g_psi_hi = 2 * psi[hi], 2 * psi[lo]
            gate_grads[pos] = -2.0 * (np.vdot(lam[lo], g_psi_lo) + np.vdot(lam[hi], g_psi_hi)).imag
            psi = psi.copy()
            lam = lam.copy()
            _rotate_pairs(psi, lo, hi, -angles[pos])
            _rotate_pairs(lam, lo, hi, -angles[pos])
    return loss, _accumulate(circuit, gate_grads), final


GRADIENT_METHODS = ("shift", "adjoint", "fd")


def gradient(circuit: Circuit, params: Sequence[float], instance: ProblemInstance,
             method: str = "shift", initial: State | None = None) -> np.ndarray:
    """Gradient of :func:`evaluate_loss` by parameter shift, adjoint sweep or finite differences."""
    if method == "shift":
        return shift_gradient(circuit, params, instance, initial)
    if method == "adjoint":
        return loss_and_gradient(circuit, params, instance, initial)[1]
    if method == "fd":
        return finite_difference_gradient(circuit, params, instance, initial=initial)
    raise ValidationError(f"unknown gradient method {method!r}; choose from {GRADIENT_METHODS}")


# ---------------------------------------------------------------------------
# optimisation

@dataclass(frozen=True)
class TraceEntry:
    step: int
    params: np.ndarray
    loss: float


class NonFiniteLossError(ArithmeticError):
    pass


def adam(value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]], x0: Sequence[float],
         steps: int, lr: float = 0.05, beta1: float = 0.9, beta2: float = 0.999,
         eps: float = 1e-8, callback: Callable[[int, np.ndarray, float], None] | None = None,
         ) -> list[TraceEntry]:
    """Minimise with Adam; the trace holds ``steps + 1`` entries (initial point first)."""
    if steps < 0:
        raise ValidationError("steps must be non-negative")
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace = []
    for t in range(steps + 1):
        loss, grad = value_and_grad(x)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteLossError(f"non-finite loss or gradient at step {t}: loss={loss}")
        trace.append(TraceEntry(t, x.copy(), float(loss)))
        if callback is not None:
            callback(t, x, loss)
        if t == steps:
            break
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** (t + 1))
        v_hat = v / (1 - beta2 ** (t + 1))
        x = x - lr * m_hat / (np.sqrt(v_hat) + eps)
    return trace


def random_params(count: int, seed=None) -> np.ndarray:
    """Uniform angles in [0, 2 pi)."""
    return np.random.default_rng(seed).uniform(0.0, 2 * math.pi, size=count)


def adam_optimize(circuit: Circuit, params0: Sequence[float] | None, instance: ProblemInstance,
                  steps: int, lr: float = 0.05, seed=None,
                  observe: Callable[[int, np.ndarray, float, State], None] | None = None,
                  ) -> list[TraceEntry]:
    """Train circuit parameters on ``instance``; ``seed`` draws ``params0`` when it is None.

    ``observe`` sees every evaluated point together with its final state.
    """
    if params0 is None:
        params0 = random_params(circuit.param_count, seed)

    def value_and_grad(x):
        loss, grad, state = loss_and_gradient(circuit, x, instance)
        if observe is not None:
            observe(len(seen), x, loss, state)
        seen.append(loss)
        return loss, grad

    seen: list[float] = []
    return adam(value_and_grad, params0, steps, lr)


def dense_unitary(circuit: Circuit, params: Sequence[float]) -> np.ndarray:
    """Circuit unitary from dense matrix exponentials (small n only; oracle)."""
    from scipy.linalg import expm

    from .pauli import PauliString, label_from_ops

    n = circuit.n
    if n > 10:
        raise CapacityError("dense unitaries limited to n <= 10")
    unitary = np.eye(1 << n, dtype=complex)
    for g, angle in zip(circuit.gates, circuit.gate_angles(params)):
        if g.kind == "XY":
            i, j = g.qubits
            gen = sum(PauliString.from_label(label_from_ops(n, {i + 1: a, j + 1: a})).to_dense()
                      for a in "XY")
        else:
            gen = PauliString.from_label(label_from_ops(n, {q + 1: "Z" for q in g.qubits})).to_dense()
        unitary = expm(1j * angle * gen) @ unitary
    return unitary


def sector_leakage(state: State, k: int) -> float:
    """Probability mass outside the weight-``k`` sector."""
    idx = np.arange(1 << state.n, dtype=np.int64)
    outside = np.bitwise_count(idx) != k
    return float(state.probabilities()[outside].sum())


__all__ = [
    "State", "Gate", "Circuit", "dicke_state", "apply_gate", "simulate", "evaluate_loss",
    "gradient", "shift_gradient", "finite_difference_gradient", "loss_and_gradient",
    "adam", "adam_optimize", "random_params", "dense_unitary", "sector_leakage", "TraceEntry",
    "z_pattern", "xy_pairs", "NonFiniteLossError",
]
