"""Cost Hamiltonians for cardinality-constrained problems.

Every instance is stored as ``const + sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j``
over 0-based qubits.  A bitstring ``x`` maps to the computational basis state
with ``x_i = 1`` meaning ``Z_i = -1``; qubit 0 is the most significant bit of
the state index, matching the dense Kronecker ordering in :mod:`xylab.pauli`.

The binary indicator ``s_i = (1 - Z_i) / 2`` is the building block: linear
and quadratic binary objectives are expanded through it.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import date
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, ParseError, ValidationError
from .pauli import PauliString, label_from_ops

log = logging.getLogger(__name__)

SPECTRUM_LIMIT = 20
DEGENERACY_TOL = 1e-9
DEFAULT_RISK_AVERSION = 1.0


def bit_matrix(n: int, indices: np.ndarray | None = None) -> np.ndarray:
    """0/1 matrix of shape (len(indices), n); column i is x_i."""
    if indices is None:
        indices = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(indices, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.int8)


def weight_indices(n: int, k: int) -> np.ndarray:
    """Sorted basis indices of Hamming weight ``k``."""
    idx = np.arange(1 << n, dtype=np.int64)
    return idx[np.bitwise_count(idx) == k]


@dataclass(frozen=True)
class ProblemInstance:
    """Ising-form cost Hamiltonian with a cardinality constraint.

    ``h`` maps qubit -> Z coefficient and ``J`` maps ``(i, j)`` with ``i < j``
    -> ZZ coefficient.  Zero coefficients are dropped on construction.
    """

    n: int
    k: int
    const_term: float = 0.0
    h: Mapping[int, float] = field(default_factory=dict)
    J: Mapping[tuple[int, int], float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be positive")
        if not 0 < self.k < self.n and not (self.n == 1 and self.k == 1):
            raise ValidationError(f"need 0 < k < n, got k={self.k}, n={self.n}")
        h = {}
        for i, c in self.h.items():
            i = int(i)
            if not 0 <= i < self.n:
                raise ValidationError(f"qubit {i} out of range for n={self.n}")
            if c != 0:
                h[i] = h.get(i, 0.0) + float(c)
        J = {}
        for (i, j), c in self.J.items():
            i, j = sorted((int(i), int(j)))
            if i == j or not (0 <= i and j < self.n):
                raise ValidationError(f"bad coupling index ({i}, {j})")
            if c != 0:
                J[(i, j)] = J.get((i, j), 0.0) + float(c)
        object.__setattr__(self, "h", dict(sorted(h.items())))
        object.__setattr__(self, "J", dict(sorted(J.items())))
        object.__setattr__(self, "const_term", float(self.const_term))

    # evaluation ---------------------------------------------------------
    def energies(self, indices: np.ndarray | None = None) -> np.ndarray:
        """Diagonal of H_f on the given basis indices (all 2^n by default)."""
        spins = 1.0 - 2.0 * bit_matrix(self.n, indices)
        out = np.full(spins.shape[0], self.const_term)
        for i, c in self.h.items():
            out += c * spins[:, i]
        for (i, j), c in self.J.items():
            out += c * spins[:, i] * spins[:, j]
        return out

    def diagonal(self) -> np.ndarray:
        return self.energies()

    def energy(self, bits: Sequence[int]) -> float:
        if len(bits) != self.n:
            raise ValidationError(f"expected {self.n} bits")
        spins = [1 - 2 * int(b) for b in bits]
        val = self.const_term
        val += sum(c * spins[i] for i, c in self.h.items())
        val += sum(c * spins[i] * spins[j] for (i, j), c in self.J.items())
        return float(val)

    # operator views -----------------------------------------------------
    def pauli_terms(self) -> dict[str, float]:
        """Hermitian Pauli expansion as ``{label: coefficient}``."""
        terms = {"I" * self.n: self.const_term} if self.const_term else {}
        for i, c in self.h.items():
            terms[label_from_ops(self.n, {i + 1: "Z"})] = c
        for (i, j), c in self.J.items():
            terms[label_from_ops(self.n, {i + 1: "Z", j + 1: "Z"})] = c
        return terms

    def to_dense(self) -> np.ndarray:
        """Dense matrix built word by word from the Pauli expansion."""
        dim = 1 << self.n
        mat = np.zeros((dim, dim), dtype=complex)
        for lbl, c in self.pauli_terms().items():
            mat += c * PauliString.from_label(lbl).to_dense()
        return mat

    def z_projection(self) -> "ProblemInstance":
        """The part of H_f in the span of single-qubit Z's."""
        return ProblemInstance(self.n, self.k, 0.0, self.h, {}, self.label + ":ws")

    def coupling_part(self) -> "ProblemInstance":
        return ProblemInstance(self.n, self.k, 0.0, {}, self.J, self.label + ":zz")

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "const": self.const_term,
            "h": [{"i": i, "c": c} for i, c in self.h.items()],
            "J": [{"i": i, "j": j, "c": c} for (i, j), c in self.J.items()],
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProblemInstance":
        try:
            return cls(
                n=int(data["n"]),
                k=int(data["k"]),
                const_term=float(data.get("const", 0.0)),
                h={int(t["i"]): float(t["c"]) for t in data.get("h", [])},
                J={(int(t["i"]), int(t["j"])): float(t["c"]) for t in data.get("J", [])},
                label=str(data.get("label", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ParseError(f"malformed instance: {exc}") from exc


def save_instance(instance: ProblemInstance, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=2, sort_keys=True) + "\n")


def load_instance(path: str | os.PathLike) -> ProblemInstance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return ProblemInstance.from_dict(data)


# ---------------------------------------------------------------------------
# embeddings

class _IsingBuilder:
    """Accumulates binary-indicator products as Ising coefficients."""

    def __init__(self, n: int):
        self.n = n
        self.const = 0.0
        self.h = np.zeros(n)
        self.J = np.zeros((n, n))

    def linear(self, i: int, c: float) -> None:
        # c * (1 - Z_i) / 2
        self.const += c / 2
        self.h[i] -= c / 2

    def quadratic(self, i: int, j: int, c: float) -> None:
        if i == j:
            self.linear(i, c)
            return
        # c * (1 - Z_i)(1 - Z_j) / 4
        self.const += c / 4
        self.h[i] -= c / 4
        self.h[j] -= c / 4
        a, b = min(i, j), max(i, j)
        self.J[a, b] += c / 4

    def build(self, k: int, label: str) -> ProblemInstance:
        h = {i: float(c) for i, c in enumerate(self.h) if c != 0}
        J = {(i, j): float(self.J[i, j]) for i in range(self.n) for j in range(i + 1, self.n)
             if self.J[i, j] != 0}
        return ProblemInstance(self.n, k, self.const, h, J, label)


def embed_portfolio(returns: Sequence[float], covariance, q: float = DEFAULT_RISK_AVERSION,
                    k: int | None = None, label: str = "portfolio", tol: float = 1e-12) -> ProblemInstance:
    """Cost ``-p.x + q x.C.x`` over binary x as an Ising Hamiltonian."""
    p = np.asarray(returns, dtype=float).ravel()
    C = np.asarray(covariance, dtype=float)
    n = p.size
    if C.shape != (n, n):
        raise ValidationError(f"covariance must be {n}x{n}, got {C.shape}")
    if not np.allclose(C, C.T, atol=tol, rtol=0):
        raise ValidationError("covariance matrix is not symmetric")
    if q < 0:
        raise ValidationError("risk aversion q must be non-negative")
    if k is None:
        k = max(1, n // 2)
    b = _IsingBuilder(n)
    for i in range(n):
        b.linear(i, -p[i])
    for i in range(n):
        for j in range(n):
            if C[i, j] != 0:
                b.quadratic(i, j, q * C[i, j])
    return b.build(k, label)


def _edges_from(adjacency, n: int | None) -> tuple[int, list[tuple[int, int]]]:
    """Accepts a square 0/1 matrix or an edge list."""
    if isinstance(adjacency, np.ndarray) and adjacency.ndim == 2 and adjacency.shape[0] == adjacency.shape[1]:
        A = adjacency
        size = A.shape[0]
        if not np.array_equal(A, A.T):
            raise ValidationError("adjacency matrix must be symmetric")
        if np.any(np.diag(A)):
            raise ValidationError("self loops are not allowed")
        edges = [(i, j) for i in range(size) for j in range(i + 1, size) if A[i, j]]
        if n is not None and n != size:
            raise ValidationError(f"adjacency is {size}x{size} but n={n}")
        return size, edges
    if n is None:
        raise ValidationError("n is required with an edge list")
    seen = set()
    for u, v in adjacency:
        u, v = int(u), int(v)
        if u == v:
            raise ValidationError(f"self loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"edge ({u}, {v}) outside 0..{n - 1}")
        e = (min(u, v), max(u, v))
        if e in seen:
            raise ValidationError(f"duplicate edge {e}")
        seen.add(e)
    return n, sorted(seen)


def adjacency_matrix(edges: Iterable[tuple[int, int]], n: int) -> np.ndarray:
    A = np.zeros((n, n), dtype=np.int8)
    for u, v in edges:
        A[u, v] = A[v, u] = 1
    return A


def embed_graph_partition(adjacency, n: int | None = None, label: str = "partition") -> ProblemInstance:
    """Balanced min-cut: energy of x equals the number of cut edges.

    ``(1 - x)^T A x`` counts each cut edge once, and a cut edge has
    ``Z_i Z_j = -1``, so ``H = |E|/2 - 1/2 sum_E Z_i Z_j``.
    """
    n, edges = _edges_from(adjacency, n)
    if n % 2:
        raise ValidationError(f"graph partitioning needs an even vertex count, got {n}")
    J = {e: -0.5 for e in edges}
    return ProblemInstance(n, n // 2, len(edges) / 2, {}, J, label)


def embed_sparsest_subgraph(adjacency, n: int | None = None, k: int | None = None,
                            label: str = "sparsest") -> ProblemInstance:
    """Energy of x equals the number of edges inside its support."""
    n, edges = _edges_from(adjacency, n)
    if k is None:
        k = n // 2
    b = _IsingBuilder(n)
    for i, j in edges:
        b.quadratic(i, j, 1.0)
    return b.build(k, label)


# ---------------------------------------------------------------------------
# spectrum over the feasible sector

@dataclass(frozen=True)
class SpectrumBounds:
    e_min: float
    e_max: float
    minimizers: tuple[int, ...]
    n: int

    @property
    def degenerate(self) -> bool:
        return abs(self.e_max - self.e_min) <= DEGENERACY_TOL

    def minimizer_bits(self) -> list[str]:
        return [format(m, f"0{self.n}b") for m in self.minimizers]


def exact_spectrum_bounds(instance: ProblemInstance, limit: int = SPECTRUM_LIMIT,
                          tol: float = DEGENERACY_TOL) -> SpectrumBounds:
    """Extremes of H_f over weight-k states and the states within ``tol`` of the minimum."""
    if instance.n > limit:
        raise CapacityError(f"feasible-sector enumeration limited to n <= {limit}")
    idx = weight_indices(instance.n, instance.k)
    energies = instance.energies(idx)
    e_min, e_max = float(energies.min()), float(energies.max())
    argmin = tuple(int(i) for i in idx[energies <= e_min + tol])
    return SpectrumBounds(e_min, e_max, argmin, instance.n)


# ---------------------------------------------------------------------------
# random graphs

GRAPH_KINDS = ("Reg3", "Rnd2n")


def canonical_graph_kind(kind: str) -> str:
    table = {g.lower(): g for g in GRAPH_KINDS}
    try:
        return table[kind.lower().replace("-", "").replace("_", "")]
    except KeyError:
        raise ValidationError(f"unknown graph kind {kind!r}; choose from {GRAPH_KINDS}") from None


def random_graph(kind: str, n: int, seed: int | None = None, max_tries: int = 10_000) -> list[tuple[int, int]]:
    """Sorted edge list of a seeded random 3-regular or 2n-edge graph."""
    kind = canonical_graph_kind(kind)
    rng = np.random.default_rng(seed)
    if kind == "Reg3":
        if n < 4 or (3 * n) % 2:
            raise ValidationError(f"no 3-regular graph on {n} vertices")
        stubs = np.repeat(np.arange(n), 3)
        for _ in range(max_tries):
            pairs = rng.permutation(stubs).reshape(-1, 2)
            if np.any(pairs[:, 0] == pairs[:, 1]):
                continue
            edges = {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
            if len(edges) == len(pairs):
                return sorted(edges)
        raise CapacityError(f"pairing model failed after {max_tries} tries")
    m = 2 * n
    pool = list(combinations(range(n), 2))
    if m > len(pool):
        raise ValidationError(f"{m} edges do not fit in a simple graph on {n} vertices")
    chosen = rng.choice(len(pool), size=m, replace=False)
    return sorted(pool[i] for i in chosen)


def write_graph(edges: Iterable[tuple[int, int]], path: str | os.PathLike, comment: str = "") -> None:
    lines = [f"# {comment}"] if comment else []
    lines += [f"{u} {v}" for u, v in edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path: str | os.PathLike) -> tuple[int, list[tuple[int, int]]]:
    """Parse an edge-list file; returns (vertex count, edges).

    The vertex count is one more than the largest index seen; a
    ``# n = <count>`` comment overrides it (for isolated trailing vertices).
    """
    edges, n_hint, top = [], None, -1
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line[1:].replace(" ", "")
            if body.startswith("n="):
                try:
                    n_hint = int(body[2:])
                except ValueError:
                    raise ParseError(f"bad vertex count {body[2:]!r}", line=lineno) from None
            continue
        if not line:
            continue
        parts = line.split("#", 1)[0].split()
        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {raw!r}", line=lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer vertex in {raw!r}", line=lineno) from None
        if u < 0 or v < 0:
            raise ParseError("vertices are 0-based non-negative integers", line=lineno)
        edges.append((u, v))
        top = max(top, u, v)
    n = n_hint if n_hint is not None else top + 1
    n, edges = _edges_from(edges, n)
    return n, edges


# ---------------------------------------------------------------------------
# market data

@dataclass
class MarketData:
    """Daily closes grouped into calendar months.

    ``returns[m]`` and ``covariance[m]`` follow ``tickers`` order; only months
    with at least two common trading days are kept.
    """

    tickers: list[str]
    months: list[str]
    daily_prices: dict[str, dict[date, float]]
    returns: dict[str, np.ndarray] = field(default_factory=dict)
    covariance: dict[str, np.ndarray] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def average_returns(self) -> np.ndarray:
        if not self.months:
            return np.zeros(len(self.tickers))
        return np.mean([self.returns[m] for m in self.months], axis=0)

    def top_tickers(self, count: int, month: str | None = None) -> list[str]:
        """Best performers by return (one month, or averaged); ties by name."""
        score = self.returns[month] if month is not None else self.average_returns()
        order = sorted(range(len(self.tickers)), key=lambda a: (-score[a], self.tickers[a]))
        return [self.tickers[a] for a in order[:count]]

    def instance(self, month: str, n: int, k: int | None = None,
                 q: float = DEFAULT_RISK_AVERSION) -> ProblemInstance:
        if month not in self.returns:
            raise ValidationError(f"month {month!r} not available")
        if n > len(self.tickers):
            raise ValidationError(f"only {len(self.tickers)} tickers available")
        chosen = self.top_tickers(n, month)
        pos = [self.tickers.index(t) for t in chosen]
        p = self.returns[month][pos]
        C = self.covariance[month][np.ix_(pos, pos)]
        return embed_portfolio(p, C, q, k, label=f"portfolio:{month}:{','.join(chosen)}")

    def to_dict(self) -> dict:
        return {
            "tickers": self.tickers,
            "months": self.months,
            "returns": {m: self.returns[m].tolist() for m in self.months},
            "covariance": {m: self.covariance[m].tolist() for m in self.months},
            "warnings": self.warnings,
        }


def _month_stats(series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean daily return and covariance from a (days, tickers) price block."""
    daily = (series[1:] - series[:-1]) / series[:-1]
    count = daily.shape[0]
    mean = daily.sum(axis=0) / count
    centred = daily - mean
    cov = centred.T @ centred / count
    return mean, (cov + cov.T) / 2


def ingest_prices(source) -> MarketData:
    """Read ``date,ticker,close`` rows into per-month returns and covariances.

    ``source`` is a path or an open text stream.  Days on which some ticker
    has no close are skipped with a warning; months left with fewer than two
    days are dropped.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return ingest_prices(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        raise ParseError("empty price file", line=1)
    cols = [h.strip().lower() for h in header]
    try:
        di, ti, ci = cols.index("date"), cols.index("ticker"), cols.index("close")
    except ValueError:
        raise ParseError(f"header must contain date,ticker,close; got {header}", line=1) from None
    prices: dict[str, dict[date, float]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(cols):
            raise ParseError(f"expected {len(cols)} fields, got {len(row)}", line=lineno)
        try:
            day = date.fromisoformat(row[di].strip())
        except ValueError:
            raise ParseError(f"bad ISO date {row[di]!r}", line=lineno) from None
        ticker = row[ti].strip()
        if not ticker:
            raise ParseError("empty ticker", line=lineno)
        try:
            close = float(row[ci])
        except ValueError:
            raise ParseError(f"bad close price {row[ci]!r}", line=lineno) from None
        if not math.isfinite(close) or close <= 0:
            raise ParseError(f"close price must be positive, got {close}", line=lineno)
        book = prices.setdefault(ticker, {})
        if day in book:
            raise ParseError(f"duplicate close for {ticker} on {day}", line=lineno)
        book[day] = close

    tickers = sorted(prices)
    data = MarketData(tickers, [], prices)
    all_days = sorted(set().union(*(set(v) for v in prices.values()))) if prices else []
    by_month: dict[str, list[date]] = {}
    for day in all_days:
        by_month.setdefault(f"{day.year:04d}-{day.month:02d}", []).append(day)
    for month, days in by_month.items():
        common = [d for d in days if all(d in prices[t] for t in tickers)]
        for d in days:
            if d not in common:
                missing = [t for t in tickers if d not in prices[t]]
                msg = f"{d}: skipped, no close for {','.join(missing)}"
                data.warnings.append(msg)
                log.warning(msg)
        if len(common) < 2:
            msg = f"{month}: excluded, fewer than two common trading days"
            data.warnings.append(msg)
            log.warning(msg)
            continue
        block = np.array([[prices[t][d] for t in tickers] for d in common])
        mean, cov = _month_stats(block)
        data.months.append(month)
        data.returns[month] = mean
        data.covariance[month] = cov
    return data


def ingest_prices_text(text: str) -> MarketData:
    return ingest_prices(io.StringIO(text))


def random_portfolio(n: int, k: int | None = None, seed: int | None = None,
                     q: float = DEFAULT_RISK_AVERSION) -> ProblemInstance:
    """Synthetic instance with a random PSD covariance, for tests and demos."""
    rng = np.random.default_rng(seed)
    p = rng.normal(0.01, 0.02, size=n)
    factors = rng.normal(0, 0.05, size=(n, n))
    C = factors @ factors.T / n
    return embed_portfolio(p, (C + C.T) / 2, q, k, label=f"portfolio:random:{seed}")


PROBLEMS = ("portfolio", "partition", "sparsest")


def build_problem(problem: str, n: int, *, graph: str = "Reg3", seed: int | None = None,
                  k: int | None = None, edges: Sequence[tuple[int, int]] | None = None) -> ProblemInstance:
    """Seeded instance of one of the supported problem families."""
    problem = problem.lower()
    if problem not in PROBLEMS:
        raise ValidationError(f"unknown problem {problem!r}; choose from {PROBLEMS}")
    if problem == "portfolio":
        return random_portfolio(n, k, seed)
    if edges is None:
        kind = canonical_graph_kind(graph)
        edges = random_graph(kind, n, seed)
        tag = f"{kind}:n={n}:seed={seed}"
    else:
        tag = f"file:n={n}"
    if problem == "partition":
        if k is not None and k != n // 2:
            raise ValidationError("graph partitioning fixes k = n/2")
        return embed_graph_partition(edges, n, label=f"partition:{tag}")
    return embed_sparsest_subgraph(edges, n, k, label=f"sparsest:{tag}")
