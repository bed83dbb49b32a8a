"""Multi-angle and shared-angle XY-mixer QAOA with warm starts.

The warm-start protocol trains a restricted circuit (RZ phases and cycle XY
mixers only, whose Lie algebra grows quadratically in n), then copies its
angles into the full circuit with every RZZ angle set to zero, so the full
circuit starts exactly where the restricted one stopped.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DegenerateSpectrumError, ValidationError
from .problems import ProblemInstance, SpectrumBounds, exact_spectrum_bounds
from .simulator import (
    Circuit,
    Gate,
    State,
    adam_optimize,
    evaluate_loss,
    random_params,
)

AR_TOL = 1e-9
TRANSFER_TOL = 1e-9
ARMS = ("ws", "rand", "sa-ws", "sa-rand")
_ARM_STREAM = {arm: code for code, arm in enumerate(ARMS)}


def cycle_rounds(n: int) -> list[list[tuple[int, int]]]:
    """Cycle edges ``(i, i+1 mod n)`` split into rounds of disjoint, commuting pairs."""
    if n < 2:
        raise ValidationError("a cycle needs at least two qubits")
    edges = [(i, (i + 1) % n) for i in range(n)] if n > 2 else [(0, 1)]
    rounds = [edges[0::2], edges[1::2]]
    if n % 2 and n > 2:
        # the closing edge (n-1, 0) shares qubit 0 with the first even edge
        rounds[0] = rounds[0][:-1]
        rounds.append([edges[-1]])
    return [r for r in rounds if r]


def _check_depth(n: int, p: int) -> None:
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")
    if p < 0:
        raise ValidationError(f"depth must be non-negative, got {p}")


def _layered(n: int, p: int, with_zz: bool) -> Circuit:
    gates, rounds = [], []
    for layer in range(p):
        for i in range(n):
            gates.append(Gate("RZ", (i,), len(gates), 1.0, layer))
        if with_zz:
            for i, j in combinations(range(n), 2):
                gates.append(Gate("RZZ", (i, j), len(gates), 1.0, layer))
        for rnd in cycle_rounds(n):
            start = len(gates)
            for i, j in rnd:
                gates.append(Gate("XY", (i, j), len(gates), 1.0, layer))
            rounds.append(list(range(start, len(gates))))
    return Circuit(n, gates, len(gates), p, "multi_angle", rounds)


def build_ma_circuit(n: int, p: int) -> Circuit:
    """Per layer: n RZ, all C(n, 2) RZZ, then the cycle XY mixers; one angle per gate."""
    _check_depth(n, p)
    return _layered(n, p, with_zz=True)


def build_ws_circuit(n: int, p: int) -> Circuit:
    """The multi-angle circuit with its RZZ gates removed (2 n p angles)."""
    _check_depth(n, p)
    return _layered(n, p, with_zz=False)


def build_sa_circuits(n: int, p: int, instance: ProblemInstance) -> tuple[Circuit, Circuit]:
    """Shared-angle restricted and full circuits for ``instance``.

    Restricted layer parameters are ``(alpha, beta)``: alpha drives
    ``exp(i alpha h_i Z_i)`` and beta every mixer.  The full circuit adds
    gamma on ``exp(i gamma J_ij Z_i Z_j)``, applied first in each layer, with
    parameter order ``(alpha, beta, gamma)``.
    """
    _check_depth(n, p)
    if instance.n != n:
        raise ValidationError(f"instance has {instance.n} qubits, expected {n}")
    if not instance.h:
        warnings.warn("the single-qubit part of H_f vanishes; the restricted phase separator is trivial",
                      RuntimeWarning, stacklevel=2)
    ws_gates, full_gates = [], []
    for layer in range(p):
        a_ws, b_ws = 2 * layer, 2 * layer + 1
        a_f, b_f, g_f = 3 * layer, 3 * layer + 1, 3 * layer + 2
        for (i, j), c in instance.J.items():
            full_gates.append(Gate("RZZ", (i, j), g_f, c, layer))
        for i, c in instance.h.items():
            ws_gates.append(Gate("RZ", (i,), a_ws, c, layer))
            full_gates.append(Gate("RZ", (i,), a_f, c, layer))
        for rnd in cycle_rounds(n):
            for i, j in rnd:
                ws_gates.append(Gate("XY", (i, j), b_ws, 1.0, layer))
                full_gates.append(Gate("XY", (i, j), b_f, 1.0, layer))
    ws = Circuit(n, ws_gates, 2 * p, p, "shared_angle")
    full = Circuit(n, full_gates, 3 * p, p, "shared_angle")
    return ws, full


def transfer_params(restricted: Circuit, full: Circuit, theta: Sequence[float]) -> np.ndarray:
    """Copy restricted angles onto matching full-circuit gates; everything else starts at zero.

    Gates match on (layer, kind, qubits, coefficient).
    """
    theta = np.asarray(theta, dtype=float)
    lookup = {(g.layer, g.kind, g.qubits, g.coeff): g.param_index for g in restricted.gates}
    out = np.zeros(full.param_count)
    assigned: dict[int, int] = {}
    for g in full.gates:
        src = lookup.get((g.layer, g.kind, g.qubits, g.coeff))
        if src is None:
            continue
        prev = assigned.setdefault(g.param_index, src)
        if theta[prev] != theta[src]:
            raise ValidationError(f"full parameter {g.param_index} tied to conflicting angles")
        out[g.param_index] = theta[src]
    return out


def tie_sa_to_ma(sa_full: Circuit, ma: Circuit, theta_sa: Sequence[float]) -> np.ndarray:
    """Multi-angle vector reproducing a shared-angle one (gate by gate)."""
    angles = sa_full.gate_angles(theta_sa)
    lookup = {(g.layer, g.kind, g.qubits): a for g, a in zip(sa_full.gates, angles)}
    return np.array([lookup.get((g.layer, g.kind, g.qubits), 0.0) for g in ma.gates])


# ---------------------------------------------------------------------------
# metrics

def metrics(state: State, instance: ProblemInstance, bounds: SpectrumBounds | None = None,
            diag: np.ndarray | None = None) -> tuple[float, float]:
    """Approximation ratio and probability of landing on an optimal bitstring."""
    if bounds is None:
        bounds = exact_spectrum_bounds(instance)
    if bounds.degenerate:
        raise DegenerateSpectrumError(
            f"E_min == E_max == {bounds.e_min} for {instance.label or 'instance'}; AR undefined")
    probs = state.probabilities()
    if diag is None:
        diag = instance.diagonal()
    energy = float(probs @ diag)
    ar = (energy - bounds.e_max) / (bounds.e_min - bounds.e_max)
    if not -AR_TOL <= ar <= 1 + AR_TOL:
        raise ArithmeticError(f"approximation ratio {ar} outside [0, 1]; is the state feasible?")
    succ = float(probs[list(bounds.minimizers)].sum())
    return min(max(ar, 0.0), 1.0), min(max(succ, 0.0), 1.0)


# ---------------------------------------------------------------------------
# experiment records

@dataclass(frozen=True)
class ExperimentConfig:
    p: int
    restarts: int = 10
    steps_per_phase: int = 100
    lr: float = 0.05
    seed: int = 0
    mode: str = "MA"
    warm_start: bool = True
    random_steps: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValidationError("depth p must be at least 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be at least 1")
        if self.steps_per_phase < 0:
            raise ValidationError("steps_per_phase must be non-negative")
        if self.random_steps is not None and self.random_steps < 0:
            raise ValidationError("random_steps must be non-negative")
        if self.mode not in ("MA", "SA"):
            raise ValidationError(f"mode must be MA or SA, got {self.mode!r}")

    @property
    def full_steps_random(self) -> int:
        """Full-circuit steps for a randomly initialised arm (default: one phase)."""
        return self.steps_per_phase if self.random_steps is None else self.random_steps

    @property
    def arm(self) -> str:
        base = "ws" if self.warm_start else "rand"
        return base if self.mode == "MA" else f"sa-{base}"

    @classmethod
    def for_arm(cls, arm: str, **kw) -> "ExperimentConfig":
        if arm not in ARMS:
            raise ValidationError(f"unknown arm {arm!r}; choose from {ARMS}")
        return cls(mode="SA" if arm.startswith("sa-") else "MA", warm_start=arm.endswith("ws"), **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PhasePoint:
    phase: str
    step: int
    loss: float
    ar: float
    succ: float


@dataclass
class RestartRecord:
    seed: int
    points: list[PhasePoint] = field(default_factory=list)
    transfer_gap: float | None = None

    @property
    def final(self) -> PhasePoint:
        return self.points[-1]

    def to_dict(self) -> dict:
        out = {"seed": self.seed, "phase": [asdict(pt) for pt in self.points]}
        if self.transfer_gap is not None:
            out["transfer_gap"] = self.transfer_gap
        return out


@dataclass
class RunRecord:
    config: ExperimentConfig
    instance: ProblemInstance
    restarts: list[RestartRecord]

    @property
    def arm(self) -> str:
        return self.config.arm

    def best_ar(self, count: int | None = None) -> float:
        """Best final AR over the first ``count`` restarts."""
        return max(r.final.ar for r in self.restarts[:count])

    def best_succ(self, count: int | None = None) -> float:
        return max(r.final.succ for r in self.restarts[:count])

    def summary(self) -> dict:
        return {"best_ar": self.best_ar(), "best_succ": self.best_succ(),
                "best_loss": min(r.final.loss for r in self.restarts)}

    def to_dict(self) -> dict:
        return {
            "arm": self.arm,
            "config": self.config.to_dict(),
            "instance": self.instance.to_dict(),
            "restarts": [r.to_dict() for r in self.restarts],
            "summary": self.summary(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        restarts = []
        for r in data["restarts"]:
            rec = RestartRecord(int(r["seed"]), [PhasePoint(**pt) for pt in r["phase"]],
                                r.get("transfer_gap"))
            restarts.append(rec)
        return cls(ExperimentConfig(**data["config"]), ProblemInstance.from_dict(data["instance"]),
                   restarts)


def restart_seed(master: int, restart: int, arm: str) -> int:
    """Independent, reproducible stream per (master seed, restart, arm)."""
    seq = np.random.SeedSequence([int(master), int(restart), _ARM_STREAM[arm]])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


class _Recorder:
    def __init__(self, instance: ProblemInstance, bounds: SpectrumBounds):
        self.instance = instance
        self.bounds = bounds
        self.diag = instance.diagonal()
        self.points: list[PhasePoint] = []
        self.phase = ""

    def __call__(self, step: int, params, loss: float, state: State) -> None:
        ar, succ = metrics(state, self.instance, self.bounds, self.diag)
        self.points.append(PhasePoint(self.phase, step, float(loss), ar, succ))


def _circuits(instance: ProblemInstance, config: ExperimentConfig) -> tuple[Circuit, Circuit]:
    n, p = instance.n, config.p
    if config.mode == "MA":
        return build_ws_circuit(n, p), build_ma_circuit(n, p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return build_sa_circuits(n, p, instance)


def run_restart(instance: ProblemInstance, config: ExperimentConfig, restart: int,
                bounds: SpectrumBounds | None = None) -> RestartRecord:
    """One randomly initialised restart of the configured arm."""
    if bounds is None:
        bounds = exact_spectrum_bounds(instance)
    seed = restart_seed(config.seed, restart, config.arm)
    rng = np.random.default_rng(seed)
    restricted, full = _circuits(instance, config)
    rec = _Recorder(instance, bounds)
    steps = config.steps_per_phase
    if not config.warm_start:
        rec.phase = "train"
        theta0 = random_params(full.param_count, rng)
        adam_optimize(full, theta0, instance, config.full_steps_random, config.lr, observe=rec)
        return RestartRecord(seed, rec.points)
    rec.phase = "pretrain"
    theta_ws0 = random_params(restricted.param_count, rng)
    trace = adam_optimize(restricted, theta_ws0, instance, steps, config.lr, observe=rec)
    theta0 = transfer_params(restricted, full, trace[-1].params)
    rec.phase = "refine"
    refine = adam_optimize(full, theta0, instance, steps, config.lr, observe=rec)
    gap = abs(refine[0].loss - trace[-1].loss)
    if gap > TRANSFER_TOL:
        raise ArithmeticError(f"transfer changed the loss by {gap:.3e}")
    return RestartRecord(seed, rec.points, gap)


def _run_restart_job(args):
    return run_restart(*args)


def default_jobs() -> int:
    env = os.environ.get("XYLAB_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"XYLAB_JOBS must be an integer, got {env!r}") from None
    return 1


def warm_start_run(instance: ProblemInstance, config: ExperimentConfig, jobs: int = 1) -> RunRecord:
    """Run every restart of one arm; restarts are merged in index order."""
    if instance.n % 2 or instance.k != instance.n // 2:
        raise ValidationError("warm-start experiments use even n with k = n/2")
    bounds = exact_spectrum_bounds(instance)
    if bounds.degenerate:
        raise DegenerateSpectrumError(f"E_min == E_max for {instance.label or 'instance'}")
    jobs_args = [(instance, config, r, bounds) for r in range(config.restarts)]
    if jobs > 1 and config.restarts > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            restarts = list(pool.map(_run_restart_job, jobs_args))
    else:
        restarts = [run_restart(*a) for a in jobs_args]
    return RunRecord(config, instance, restarts)


def median_quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return float(med), float(q1), float(q3)


def zero_depth_loss(instance: ProblemInstance) -> float:
    """Loss of the bare Dicke state (mean feasible energy)."""
    return evaluate_loss(Circuit(instance.n, [], 0), [], instance)


def ma_param_count(n: int, p: int) -> int:
    return (n * n + 3 * n) * p // 2


def ws_param_count(n: int, p: int) -> int:
    return 2 * n * p


__all__ = [
    "cycle_rounds", "build_ma_circuit", "build_ws_circuit", "build_sa_circuits", "transfer_params",
    "tie_sa_to_ma", "metrics", "ExperimentConfig", "PhasePoint", "RestartRecord", "RunRecord",
    "run_restart", "warm_start_run", "restart_seed", "median_quartiles", "ARMS", "default_jobs",
    "zero_depth_loss", "ma_param_count", "ws_param_count",
]
