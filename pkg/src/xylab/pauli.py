"""Pauli strings and real spans of i*Pauli terms.

Words use the symplectic encoding: an ``x`` mask and a ``z`` mask, one bit
per qubit.  Qubit 1 (the leftmost tensor factor, position 0 of the label) is
the most significant bit, so masks line up with computational-basis indices
of :func:`to_dense`.  The Hermitian word for ``(x, z)`` is
``i^{|x&z|} X^x Z^z``, which makes ``Y = iXZ``.

A :class:`LieElement` stores ``{code: c}`` meaning ``sum c * i * P(code)``
with ``code = x | (z << n)``.  Every element is skew-Hermitian by
construction because each stored word is Hermitian and each coefficient is
real.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, DimensionError, ValidationError

DENSE_LIMIT = 10
PRUNE_TOL = 1e-12

_PHASES = (1, 1j, -1, -1j)


def popcount(v: int) -> int:
    return int(v).bit_count()


def parse_label(label: str) -> tuple[int, int]:
    """Return the ``(x, z)`` masks of a label such as ``"XIZY"``."""
    n = len(label)
    x = z = 0
    for pos, ch in enumerate(label.upper()):
        bit = 1 << (n - 1 - pos)
        if ch == "X":
            x |= bit
        elif ch == "Y":
            x |= bit
            z |= bit
        elif ch == "Z":
            z |= bit
        elif ch != "I":
            raise ValidationError(f"invalid Pauli letter {ch!r} in {label!r}")
    return x, z


def format_label(n: int, x: int, z: int) -> str:
    out = []
    for pos in range(n):
        bit = 1 << (n - 1 - pos)
        xb, zb = bool(x & bit), bool(z & bit)
        out.append("Y" if xb and zb else "X" if xb else "Z" if zb else "I")
    return "".join(out)


def label_from_ops(n: int, ops: Mapping[int, str]) -> str:
    """Build a label from ``{qubit: letter}`` with 1-based qubits."""
    chars = ["I"] * n
    for q, letter in ops.items():
        if not 1 <= q <= n:
            raise ValidationError(f"qubit {q} out of range 1..{n}")
        chars[q - 1] = letter
    return "".join(chars)


def product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent e with P(x1,z1) P(x2,z2) = i^e P(x1^x2, z1^z2)."""
    x, z = x1 ^ x2, z1 ^ z2
    return (popcount(x1 & z1) + popcount(x2 & z2) + 2 * popcount(z1 & x2) - popcount(x & z)) % 4


def anticommute(x1: int, z1: int, x2: int, z2: int) -> bool:
    return (popcount(x1 & z2) + popcount(z1 & x2)) % 2 == 1


@dataclass(frozen=True)
class PauliString:
    """Signed Pauli word ``i^phase * P(x, z)`` on ``n`` qubits."""

    n: int
    x: int
    z: int
    phase: int = 0

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        x, z = parse_label(label)
        return cls(len(label), x, z, phase % 4)

    @property
    def word(self) -> str:
        return format_label(self.n, self.x, self.z)

    @property
    def sign(self) -> complex:
        return _PHASES[self.phase]

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def commutes_with(self, other: "PauliString") -> bool:
        return not anticommute(self.x, self.z, other.x, other.z)

    def to_dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        return self.sign * _word_dense(self.n, self.x, self.z, limit)

    def __repr__(self) -> str:
        prefix = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return f"PauliString({prefix}{self.word})"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Group product of two signed Pauli strings."""
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")
    e = product_phase(a.x, a.z, b.x, b.z)
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, (a.phase + b.phase + e) % 4)


def _word_dense(n: int, x: int, z: int, limit: int) -> np.ndarray:
    if n > limit:
        raise CapacityError(f"dense matrices limited to n <= {limit}, got n = {n}")
    dim = 1 << n
    cols = np.arange(dim, dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(cols & z) & 1)
    mat = np.zeros((dim, dim), dtype=complex)
    mat[cols ^ x, cols] = (1j ** popcount(x & z)) * signs
    return mat


class LieElement:
    """Real combination ``sum c_w * i * P_w`` of Hermitian Pauli words."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[int, float] | None = None):
        self.n = int(n)
        clean: dict[int, float] = {}
        for code, c in (terms or {}).items():
            c = float(c)
            if not np.isfinite(c):
                raise ValidationError("coefficients must be finite")
            if abs(c) >= PRUNE_TOL:
                clean[int(code)] = c
        self._terms = clean

    # construction helpers

    @classmethod
    def zero(cls, n: int) -> "LieElement":
        return cls(n)

    @classmethod
    def from_labels(cls, terms: Mapping[str, float]) -> "LieElement":
        """``{"XX": 0.5, "YY": 0.5}`` becomes ``0.5 i XX + 0.5 i YY``."""
        if not terms:
            raise ValidationError("use LieElement.zero(n) for the empty element")
        sizes = {len(lbl) for lbl in terms}
        if len(sizes) != 1:
            raise DimensionError("labels have different lengths")
        n = sizes.pop()
        acc: dict[int, float] = {}
        for lbl, c in terms.items():
            x, z = parse_label(lbl)
            code = x | (z << n)
            acc[code] = acc.get(code, 0.0) + c
        return cls(n, acc)

    @classmethod
    def from_arrays(cls, n: int, codes: np.ndarray, coeffs: np.ndarray) -> "LieElement":
        keep = np.abs(coeffs) >= PRUNE_TOL
        obj = cls.__new__(cls)
        obj.n = int(n)
        obj._terms = dict(zip(codes[keep].tolist(), coeffs[keep].tolist()))
        return obj

    # views

    @property
    def terms(self) -> dict[int, float]:
        return dict(self._terms)

    def labels(self) -> dict[str, float]:
        mask = (1 << self.n) - 1
        return {format_label(self.n, c & mask, c >> self.n): v for c, v in self._terms.items()}

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        codes = np.fromiter(self._terms.keys(), dtype=np.int64, count=len(self._terms))
        coeffs = np.fromiter(self._terms.values(), dtype=float, count=len(self._terms))
        return codes, coeffs

    def is_zero(self) -> bool:
        return not self._terms

    def norm(self) -> float:
        return float(np.sqrt(sum(c * c for c in self._terms.values())))

    def __len__(self) -> int:
        return len(self._terms)

    # linear structure

    def _check(self, other: "LieElement") -> None:
        if self.n != other.n:
            raise DimensionError(f"qubit counts differ: {self.n} vs {other.n}")

    def __add__(self, other: "LieElement") -> "LieElement":
        self._check(other)
        acc = dict(self._terms)
        for code, c in other._terms.items():
            acc[code] = acc.get(code, 0.0) + c
        return LieElement(self.n, acc)

    def __sub__(self, other: "LieElement") -> "LieElement":
        return self + (-other)

    def __neg__(self) -> "LieElement":
        return LieElement(self.n, {k: -v for k, v in self._terms.items()})

    def __mul__(self, scale: float) -> "LieElement":
        return LieElement(self.n, {k: v * scale for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LieElement) and self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def allclose(self, other: "LieElement", tol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def left_multiply(self, p: PauliString) -> "LieElement":
        """Return ``p * self``; ``p`` must commute with every term and be Hermitian."""
        if p.n != self.n:
            raise DimensionError(f"qubit counts differ: {p.n} vs {self.n}")
        if p.phase % 2:
            raise ValidationError("left factor must be Hermitian (phase +1 or -1)")
        mask = (1 << self.n) - 1
        acc: dict[int, float] = {}
        for code, c in self._terms.items():
            x, z = code & mask, code >> self.n
            if anticommute(p.x, p.z, x, z):
                raise ValidationError("left factor does not commute with the element")
            e = (product_phase(p.x, p.z, x, z) + p.phase) % 4
            # commuting Hermitian words multiply to a Hermitian word, so e is even
            new = (p.x ^ x) | ((p.z ^ z) << self.n)
            acc[new] = acc.get(new, 0.0) + (c if e == 0 else -c)
        return LieElement(self.n, acc)

    def to_dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        return to_dense(self, limit)

    def __repr__(self) -> str:
        body = " + ".join(f"{c:+.6g}*i{w}" for w, c in sorted(self.labels().items()))
        return f"LieElement(n={self.n}, {body or '0'})"


def _split(codes: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    mask = (1 << n) - 1
    return codes & mask, codes >> n


def commutator(a: LieElement, b: LieElement) -> LieElement:
    """Exact Lie bracket ``ab - ba``.

    For anticommuting words ``[iP, iQ] = -2 PQ`` and ``PQ = i^e R`` with odd e,
    so the coefficient on ``iR`` is ``-2 a b`` for e = 1 and ``+2 a b`` for e = 3.
    """
    a._check(b)
    if a.is_zero() or b.is_zero():
        return LieElement.zero(a.n)
    n = a.n
    ca, va = a.arrays()
    cb, vb = b.arrays()
    xa, za = _split(ca, n)
    xb, zb = _split(cb, n)
    xa, za, va = xa[:, None], za[:, None], va[:, None]
    sym = (np.bitwise_count(xa & zb) + np.bitwise_count(za & xb)) & 1
    ia, ib = np.nonzero(sym)
    if ia.size == 0:
        return LieElement.zero(n)
    x1, z1 = xa[ia, 0], za[ia, 0]
    x2, z2 = xb[ib], zb[ib]
    x, z = x1 ^ x2, z1 ^ z2
    e = (np.bitwise_count(x1 & z1) + np.bitwise_count(x2 & z2)
         + 2 * np.bitwise_count(z1 & x2) - np.bitwise_count(x & z)) % 4
    coeff = -2.0 * va[ia, 0] * vb[ib] * np.where(e == 1, 1.0, -1.0)
    codes = x | (z << n)
    uniq, inv = np.unique(codes, return_inverse=True)
    sums = np.bincount(inv, weights=coeff, minlength=uniq.size)
    return LieElement.from_arrays(n, uniq, sums)


def hs_inner(a: LieElement, b: LieElement) -> float:
    """Normalized Hilbert-Schmidt product ``2^-n Tr(a^dagger b)``."""
    a._check(b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    lt = large._terms
    return float(sum(c * lt.get(code, 0.0) for code, c in small._terms.items()))


def to_dense(a: LieElement, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of ``a``; test oracle for small n."""
    n = a.n
    if n > limit:
        raise CapacityError(f"dense matrices limited to n <= {limit}, got n = {n}")
    dim = 1 << n
    cols = np.arange(dim, dtype=np.int64)
    mat = np.zeros((dim, dim), dtype=complex)
    mask = dim - 1
    for code, c in a._terms.items():
        x, z = code & mask, code >> n
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & z) & 1)
        mat[cols ^ x, cols] += (1j * c * (1j ** popcount(x & z))) * signs
    return mat


def from_dense(mat: np.ndarray, tol: float = PRUNE_TOL) -> LieElement:
    """Decompose a skew-Hermitian matrix into i*Pauli coordinates."""
    dim = mat.shape[0]
    n = dim.bit_length() - 1
    if mat.shape != (dim, dim) or 1 << n != dim:
        raise DimensionError("matrix must be square with power-of-two size")
    if not np.allclose(mat.conj().T, -mat, atol=1e-10):
        raise ValidationError("matrix is not skew-Hermitian")
    cols = np.arange(dim, dtype=np.int64)
    acc: dict[int, float] = {}
    for x in range(dim):
        block = mat[cols ^ x, cols]
        if not np.any(np.abs(block) > tol):
            continue
        for z in range(dim):
            signs = 1.0 - 2.0 * (np.bitwise_count(cols & z) & 1)
            # coefficient on iP is Tr(P^dagger M) / (i 2^n)
            tr = np.sum(block * signs) * ((-1j) ** popcount(x & z))
            c = (tr / (1j * dim)).real
            if abs(c) > tol:
                acc[x | (z << n)] = c
    return LieElement(n, acc)


def xy_generator(n: int, j: int, k: int) -> LieElement:
    """``i XY_{j,k} = (i/2)(X_j X_k + Y_j Y_k)`` with 1-based qubits."""
    if j == k:
        raise ValidationError("XY term needs two distinct qubits")
    return LieElement.from_labels({
        label_from_ops(n, {j: "X", k: "X"}): 0.5,
        label_from_ops(n, {j: "Y", k: "Y"}): 0.5,
    })


def z_generator(n: int, j: int) -> LieElement:
    return LieElement.from_labels({label_from_ops(n, {j: "Z"}): 1.0})


def zz_generator(n: int, j: int, k: int) -> LieElement:
    if j == k:
        raise ValidationError("ZZ term needs two distinct qubits")
    return LieElement.from_labels({label_from_ops(n, {j: "Z", k: "Z"}): 1.0})


def z_plus(n: int) -> LieElement:
    """``Z+ = i sum_j Z_j``."""
    return sum_elements(n, (z_generator(n, j) for j in range(1, n + 1)))


def zz_plus(n: int) -> LieElement:
    """``ZZ+ = i sum_{j<k} Z_j Z_k``."""
    return sum_elements(n, (zz_generator(n, j, k)
                            for j in range(1, n + 1) for k in range(j + 1, n + 1)))


def sum_elements(n: int, items: Iterable[LieElement]) -> LieElement:
    acc: dict[int, float] = {}
    for el in items:
        if el.n != n:
            raise DimensionError(f"qubit counts differ: {el.n} vs {n}")
        for code, c in el._terms.items():
            acc[code] = acc.get(code, 0.0) + c
    return LieElement(n, acc)
