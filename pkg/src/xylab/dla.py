"""Iterative construction of dynamical Lie algebras.

The basis is grown round by round: every element added in the previous round
is bracketed with every generator, and the results are orthogonalized
against the current basis under the normalized Hilbert-Schmidt product.
Internally elements are dense coordinate rows over the Pauli words seen so
far, so brackets with a generator reduce to fancy-indexed column moves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import CapacityError, DimensionError, ValidationError
from .pauli import (
    LieElement,
    PauliString,
    commutator,
    xy_generator,
    z_generator,
    z_plus,
    zz_generator,
)

TOPOLOGIES = (
    "XY_path",
    "XY_cycle",
    "XY_clique",
    "XY_path_Z",
    "XY_cycle_Z",
    "XY_clique_Z",
    "XY_cycle_Z_ZZclique",
)
POLY_TOPOLOGIES = ("XY_path", "XY_cycle", "XY_path_Z", "XY_cycle_Z")

_ALIASES = {t.lower().replace("_", "-"): t for t in TOPOLOGIES}


def canonical_topology(name: str) -> str:
    """Accept ``XY_cycle_Z`` as well as the CLI spelling ``xy-cycle-z``."""
    if name in TOPOLOGIES:
        return name
    key = name.lower().replace("_", "-")
    if key in _ALIASES:
        return _ALIASES[key]
    raise ValidationError(f"unknown topology {name!r}; expected one of {', '.join(TOPOLOGIES)}")


def _min_qubits(topology: str) -> int:
    return 2 if topology in ("XY_path", "XY_path_Z", "XY_clique_Z") else 3


@dataclass(frozen=True)
class GeneratorSet:
    topology: str
    n: int
    generators: tuple[LieElement, ...]

    def __len__(self) -> int:
        return len(self.generators)


def xy_edges(topology: str, n: int) -> list[tuple[int, int]]:
    """1-based qubit pairs carrying XY terms."""
    if topology.startswith("XY_path"):
        return [(j, j + 1) for j in range(1, n)]
    if topology.startswith("XY_cycle"):
        return [(j, j + 1) for j in range(1, n)] + [(n, 1)]
    return list(combinations(range(1, n + 1), 2))


def make_generators(topology: str, n: int) -> GeneratorSet:
    topology = canonical_topology(topology)
    if n < _min_qubits(topology):
        raise ValidationError(f"{topology} needs n >= {_min_qubits(topology)}, got {n}")
    gens = [xy_generator(n, j, k) for j, k in xy_edges(topology, n)]
    if topology.endswith("_Z") or topology == "XY_cycle_Z_ZZclique":
        gens += [z_generator(n, j) for j in range(1, n + 1)]
    if topology == "XY_cycle_Z_ZZclique":
        gens += [zz_generator(n, j, k) for j, k in combinations(range(1, n + 1), 2)]
    return GeneratorSet(topology, n, tuple(gens))


def expected_dim(topology: str, n: int) -> int:
    """Closed-form dimension of the DLA for a named topology."""
    topology = canonical_topology(topology)
    if n < _min_qubits(topology):
        raise ValidationError(f"{topology} needs n >= {_min_qubits(topology)}, got {n}")
    central = math.comb(2 * n, n)
    if topology == "XY_path":
        return n * (n - 1) // 2
    if topology == "XY_cycle":
        return n * (n - 1) if n % 2 == 0 else n * n - 1
    if topology == "XY_path_Z":
        return n * n
    if topology == "XY_cycle_Z":
        return 2 * n * n - 1
    if topology == "XY_clique":
        # sum of su(C(n,k)) over k < n/2, plus two su(C(n,n/2)/2) for even n
        return (central - n - 1) // 2 if n % 2 else (central - n - 4) // 2
    if topology == "XY_clique_Z":
        return central - n
    return central - n + 1


@dataclass(frozen=True, eq=False)
class DlaBasis:
    """Orthonormal basis stored as coordinate rows over ``codes``.

    Row ``r`` of ``coords`` is the element ``sum_c coords[r, c] * i * P(codes[c])``.
    """

    n: int
    codes: np.ndarray
    coords: np.ndarray
    converged: bool
    rounds: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    @property
    def elements(self) -> list[LieElement]:
        if "elements" not in self._cache:
            self._cache["elements"] = [
                LieElement.from_arrays(self.n, self.codes, row) for row in self.coords
            ]
        return self._cache["elements"]

    def coordinates_of(self, el: LieElement) -> tuple[np.ndarray, float]:
        """Coefficients of ``el`` in the basis and the norm of what lies outside."""
        if el.n != self.n:
            raise DimensionError(f"qubit counts differ: {el.n} vs {self.n}")
        vec, outside = _embed(el, self.codes)
        alpha = self.coords @ vec
        resid = vec - alpha @ self.coords
        return alpha, float(np.sqrt(resid @ resid + outside))

    def residual(self, el: LieElement) -> float:
        """Norm of the component of ``el`` orthogonal to the span."""
        return self.coordinates_of(el)[1]

    def contains(self, el: LieElement, tol: float = 1e-9) -> bool:
        return self.residual(el) < tol


def _embed(el: LieElement, codes: np.ndarray) -> tuple[np.ndarray, float]:
    ec, ev = el.arrays()
    order = np.argsort(codes)
    sorted_codes = codes[order]
    pos = np.searchsorted(sorted_codes, ec)
    pos = np.minimum(pos, max(len(codes) - 1, 0))
    hit = (sorted_codes[pos] == ec) if len(codes) else np.zeros(len(ec), bool)
    vec = np.zeros(len(codes))
    vec[order[pos[hit]]] = ev[hit]
    outside = float(ev[~hit] @ ev[~hit])
    return vec, outside


class _WordIndex:
    """Growing map from word code to column number (insertion order)."""

    def __init__(self, n: int):
        self.n = n
        self.codes = np.zeros(0, dtype=np.int64)
        self._sorted = np.zeros(0, dtype=np.int64)
        self._order = np.zeros(0, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.codes)

    def lookup(self, codes: np.ndarray) -> np.ndarray:
        """Columns of ``codes``; -1 where unknown."""
        if len(self._sorted) == 0:
            return np.full(len(codes), -1, dtype=np.int64)
        pos = np.minimum(np.searchsorted(self._sorted, codes), len(self._sorted) - 1)
        return np.where(self._sorted[pos] == codes, self._order[pos], -1)

    def add(self, codes: np.ndarray) -> None:
        codes = np.unique(codes)
        codes = codes[self.lookup(codes) < 0]
        if codes.size == 0:
            return
        self.codes = np.concatenate([self.codes, codes])
        self._order = np.argsort(self.codes, kind="stable")
        self._sorted = self.codes[self._order]


def _generator_arrays(gen: LieElement | PauliString, n: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(gen, PauliString):
        if gen.n != n:
            raise DimensionError(f"qubit counts differ: {gen.n} vs {n}")
        if gen.phase % 2 == 0:
            raise ValidationError("generator is Hermitian, not skew-Hermitian; multiply by i")
        sign = 1.0 if gen.phase == 1 else -1.0
        gen = LieElement(n, {gen.x | (gen.z << n): sign})
    if not isinstance(gen, LieElement):
        raise ValidationError(f"generator of type {type(gen).__name__} is not a LieElement")
    if gen.n != n:
        raise DimensionError(f"qubit counts differ: {gen.n} vs {n}")
    return gen.arrays()


class _Bracket:
    """Bracket ``[v, g]`` of coordinate rows with one generator."""

    def __init__(self, n: int, codes: np.ndarray, coeffs: np.ndarray):
        mask = (1 << n) - 1
        self.n = n
        self.gx = codes & mask
        self.gz = codes >> n
        self.gc = coeffs

    def targets(self, words: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Per generator term: (source columns, target codes, factors)."""
        n = self.n
        mask = (1 << n) - 1
        wx, wz = words & mask, words >> n
        out = []
        for gx, gz, gc in zip(self.gx, self.gz, self.gc):
            odd = (np.bitwise_count(wx & gz) + np.bitwise_count(wz & gx)) & 1
            src = np.nonzero(odd)[0]
            x1, z1 = wx[src], wz[src]
            x, z = x1 ^ gx, z1 ^ gz
            e = (np.bitwise_count(x1 & z1) + int(gx & gz).bit_count()
                 + 2 * np.bitwise_count(z1 & gx) - np.bitwise_count(x & z)) % 4
            factor = -2.0 * gc * np.where(e == 1, 1.0, -1.0)
            out.append((src, x | (z << n), factor))
        return out


def _project_out(rows: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[0] == 0 or rows.shape[0] == 0:
        return rows
    return rows - (rows @ basis.T) @ basis


def _orthonormal_additions(cands: np.ndarray, basis: np.ndarray, tol: float,
                           block: int = 64) -> np.ndarray:
    """Directions of ``cands`` not in span(basis), orthonormalized in order.

    Two projection passes against the existing basis, then modified
    Gram-Schmidt (again with a second pass) inside each block of survivors.
    """
    resid = _project_out(cands, basis)
    norms = np.linalg.norm(resid, axis=1)
    resid = resid[norms > tol]
    if resid.shape[0] == 0:
        return resid
    resid = _project_out(resid, basis)
    resid = resid[np.linalg.norm(resid, axis=1) > tol]
    accepted: list[np.ndarray] = []
    width = cands.shape[1]
    for start in range(0, resid.shape[0], block):
        blk = resid[start:start + block]
        if accepted:
            done = np.vstack(accepted)
            blk = _project_out(_project_out(blk, done), done)
        fresh: list[np.ndarray] = []
        for r in blk:
            r = r.copy()
            for _ in range(2):
                for q in fresh:
                    r -= (r @ q) * q
            nr = np.linalg.norm(r)
            if nr > tol:
                fresh.append(r / nr)
        if fresh:
            accepted.append(np.vstack(fresh))
    if not accepted:
        return np.zeros((0, width))
    return np.vstack(accepted)


def build_dla(gens: GeneratorSet | Sequence[LieElement], max_dim: int | None = None,
              tol: float = 1e-9, chunk_budget: int = 4_000_000) -> DlaBasis:
    """Orthonormal basis of the real Lie algebra generated by ``gens``.

    Raises :class:`CapacityError` (with the partial basis attached) as soon as
    more than ``max_dim`` independent elements are found.
    """
    gen_list = list(gens.generators if isinstance(gens, GeneratorSet) else gens)
    if not gen_list:
        raise ValidationError("generator set is empty")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    n = gen_list[0].n
    arrays = [_generator_arrays(g, n) for g in gen_list]
    if max_dim is None:
        max_dim = 4 ** n
    if max_dim < len(gen_list):
        raise ValidationError("max_dim must be at least the number of generators")

    index = _WordIndex(n)
    for codes, _ in arrays:
        index.add(codes)
    brackets = [_Bracket(n, c, v) for c, v in arrays]

    gen_rows = np.zeros((len(arrays), len(index)))
    for r, (codes, coeffs) in enumerate(arrays):
        gen_rows[r, index.lookup(codes)] = coeffs
    basis = _orthonormal_additions(gen_rows, np.zeros((0, len(index))), tol)
    if basis.shape[0] > max_dim:
        raise CapacityError(f"dimension exceeds max_dim = {max_dim}",
                            partial=_freeze(n, index, basis[:max_dim], False, 0))
    new = basis
    rounds = 0
    while new.shape[0]:
        rounds += 1
        plans = [b.targets(index.codes) for b in brackets]
        for plan in plans:
            for _, tgt, _ in plan:
                index.add(tgt)
        width = len(index)
        if width > basis.shape[1]:
            basis = np.pad(basis, ((0, 0), (0, width - basis.shape[1])))
            new = np.pad(new, ((0, 0), (0, width - new.shape[1])))
        plans = [[(src, index.lookup(tgt), f) for src, tgt, f in plan] for plan in plans]

        per_chunk = max(1, chunk_budget // max(1, width * len(plans)))
        added: list[np.ndarray] = []
        for start in range(0, new.shape[0], per_chunk):
            rows = new[start:start + per_chunk]
            cands = np.zeros((rows.shape[0] * len(plans), width))
            for g, plan in enumerate(plans):
                out = cands[g::len(plans)]
                for src, tgt, factor in plan:
                    out[:, tgt] += rows[:, src] * factor
            current = np.vstack([basis] + added) if added else basis
            fresh = _orthonormal_additions(cands, current, tol)
            if fresh.shape[0]:
                added.append(fresh)
                if current.shape[0] + fresh.shape[0] > max_dim:
                    full = np.vstack([basis] + added)[:max_dim]
                    raise CapacityError(f"dimension exceeds max_dim = {max_dim}",
                                        partial=_freeze(n, index, full, False, rounds))
        new = np.vstack(added) if added else np.zeros((0, width))
        basis = np.vstack([basis, new])
    return _freeze(n, index, basis, True, rounds)


def _freeze(n: int, index: _WordIndex, rows: np.ndarray, converged: bool, rounds: int) -> DlaBasis:
    codes = index.codes.copy()
    rows = np.ascontiguousarray(rows[:, :len(codes)])
    codes.setflags(write=False)
    rows.setflags(write=False)
    return DlaBasis(n, codes, rows, converged, rounds)


def _gens_of(gens: GeneratorSet | Sequence[LieElement]) -> list[LieElement]:
    return list(gens.generators if isinstance(gens, GeneratorSet) else gens)


def center(basis: DlaBasis, gens: GeneratorSet | Sequence[LieElement],
           tol: float = 1e-9) -> list[LieElement]:
    """Basis of the elements of span(basis) that commute with every generator."""
    if not basis.converged:
        raise ValidationError("center needs a converged basis")
    n = basis.n
    gram = np.zeros((basis.dim, basis.dim))
    for g in _gens_of(gens):
        if g.n != n:
            raise DimensionError(f"qubit counts differ: {g.n} vs {n}")
        plan = _Bracket(n, *g.arrays()).targets(basis.codes)
        tgt_all = np.concatenate([t for _, t, _ in plan]) if plan else np.zeros(0, np.int64)
        uniq, inv = np.unique(tgt_all, return_inverse=True)
        image = np.zeros((basis.dim, len(uniq)))
        offset = 0
        for src, tgt, factor in plan:
            cols = inv[offset:offset + len(tgt)]
            offset += len(tgt)
            image[:, cols] += basis.coords[:, src] * factor
        gram += image @ image.T
    vals, vecs = np.linalg.eigh(gram)
    scale = max(vals.max(initial=0.0), 1.0)
    null = vecs[:, vals < tol * scale]
    out = []
    if null.shape[1]:
        # orthonormal rows in coefficient space map to orthonormal elements
        for col in null.T:
            out.append(LieElement.from_arrays(n, basis.codes, col @ basis.coords))
    return out


def weight_states(n: int, k: int) -> np.ndarray:
    """Computational-basis indices of Hamming weight ``k`` (ascending)."""
    idx = np.arange(1 << n, dtype=np.int64)
    return idx[np.bitwise_count(idx) == k]


def _block_tensor(n: int, codes: np.ndarray, k: int) -> np.ndarray:
    """Map word coordinates to the flattened weight-k block of ``i * P``."""
    states = weight_states(n, k)
    m = len(states)
    pos = np.full(1 << n, -1, dtype=np.int64)
    pos[states] = np.arange(m)
    mask = (1 << n) - 1
    tensor = np.zeros((len(codes), m * m), dtype=complex)
    for r, code in enumerate(codes.tolist()):
        x, z = code & mask, code >> n
        rows = pos[states ^ x]
        ok = rows >= 0
        signs = 1.0 - 2.0 * (np.bitwise_count(states[ok] & z) & 1)
        tensor[r, rows[ok] * m + np.nonzero(ok)[0]] = 1j * (1j ** int(x & z).bit_count()) * signs
    return tensor


def numerical_rank(mat: np.ndarray, rel_tol: float = 1e-8) -> int:
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def block_images(basis: DlaBasis, k: int, traceless: bool = True) -> np.ndarray:
    """Complex ``dim x C(n,k)^2`` array of the weight-k blocks of each element."""
    n = basis.n
    if not 0 <= k <= n:
        raise ValidationError(f"weight {k} outside 0..{n}")
    m = math.comb(n, k)
    blocks = basis.coords @ _block_tensor(n, basis.codes, k)
    if traceless:
        diag = np.arange(m) * (m + 1)
        trace = blocks[:, diag].sum(axis=1) / m
        blocks[:, diag] -= trace[:, None]
    return blocks


def hamming_block_project(basis: DlaBasis, k: int, traceless: bool = True) -> int:
    """Real dimension of the span of the weight-k blocks of the basis.

    With ``traceless`` (the default) the multiple of the sector identity is
    removed from each block first, which counts the ``su`` part of the block;
    this is what the dimension tables refer to.  ``traceless=False`` counts
    the plain projections.
    """
    blocks = block_images(basis, k, traceless)
    real = np.hstack([blocks.real, blocks.imag])
    return numerical_rank(real)


def centralizer_dims(n: int) -> dict[str, int]:
    """Dimensions of the centralizer of Z+ in u(2^n) and in su(2^n).

    Both are assembled from the Hamming sectors: each sector of size m
    contributes a full u(m) of real dimension m^2, and the su version drops
    the single global trace direction.
    """
    blocks = [math.comb(n, k) ** 2 for k in range(n + 1)]
    return {"u": sum(blocks), "su": sum(blocks) - 1,
            "reduced": sum(b - 1 for b in blocks[1:-1])}


def commutes_with_zplus(basis: DlaBasis, tol: float = 1e-9) -> float:
    """Largest norm of ``[b, Z+]`` over the basis."""
    zp = z_plus(basis.n)
    return max((commutator(b, zp).norm() for b in basis.elements), default=0.0)
