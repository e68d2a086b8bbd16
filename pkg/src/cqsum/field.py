"""Exact arithmetic and linear algebra over prime fields F_q.

Vectors and matrices are stored as read-only ``int64`` numpy arrays with every
entry in ``[0, q)``; no floating point is involved anywhere in this module.

Random matrices come from numpy's Philox4x64 counter-based generator, keyed by
``SeedSequence(seed, spawn_key=stream)``.  Two calls with the same seed and the
same stream tuple produce identical draws regardless of what else has been
drawn, which is what makes per-trial/per-message streams reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, UsageError

RNG_NAME = "philox4x64-seedsequence/v1"


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, int(q**0.5) + 1))


def check_prime(q: int) -> int:
    if not isinstance(q, (int, np.integer)) or not is_prime(int(q)):
        raise UsageError(f"field size must be a prime, got {q!r}")
    return int(q)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, stream)``; see module docstring."""
    if seed < 0 or seed >= 2**64:
        raise UsageError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class FieldScalar:
    value: int
    modulus: int

    def __post_init__(self):
        check_prime(self.modulus)
        if not 0 <= self.value < self.modulus:
            raise UsageError(f"{self.value} is not an element of F_{self.modulus}")

    def _same(self, other: "FieldScalar") -> None:
        if self.modulus != other.modulus:
            raise UsageError(f"modulus mismatch: {self.modulus} vs {other.modulus}")

    def __add__(self, other: "FieldScalar") -> "FieldScalar":
        self._same(other)
        return FieldScalar((self.value + other.value) % self.modulus, self.modulus)

    def __mul__(self, other: "FieldScalar") -> "FieldScalar":
        self._same(other)
        return FieldScalar((self.value * other.value) % self.modulus, self.modulus)

    def __neg__(self) -> "FieldScalar":
        return FieldScalar((-self.value) % self.modulus, self.modulus)

    def inverse(self) -> "FieldScalar":
        if self.value == 0:
            raise DomainError("zero has no multiplicative inverse")
        return FieldScalar(pow(self.value, self.modulus - 2, self.modulus), self.modulus)


def field_arithmetic(a: FieldScalar, b: FieldScalar | None, op: str) -> FieldScalar:
    """Apply ``op`` in {"add", "mul", "neg", "inv"}; unary ops ignore ``b``."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "inv":
        return a.inverse()
    raise UsageError(f"unknown field operation {op!r}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Row-major matrix over F_q.  Zero rows are allowed (an empty generator)."""

    data: np.ndarray
    q: int
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        check_prime(self.q)
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise UsageError(f"FieldMatrix needs a 2-D array, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.q):
            raise UsageError(f"entries must lie in [0, {self.q})")
        arr = _frozen(arr)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "_hash", hash((self.q, arr.shape, arr.tobytes())))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], q: int, cols: int | None = None):
        rows = [list(r) for r in rows]
        if not rows:
            return cls(np.zeros((0, cols or 0), dtype=np.int64), q)
        return cls(np.array(rows, dtype=np.int64) % q, q)

    @classmethod
    def vector(cls, entries: Iterable[int], q: int) -> "FieldMatrix":
        return cls(np.array(list(entries), dtype=np.int64).reshape(1, -1) % q, q)

    @classmethod
    def identity(cls, size: int, q: int) -> "FieldMatrix":
        return cls(np.eye(size, dtype=np.int64), q)

    @classmethod
    def zeros(cls, rows: int, cols: int, q: int) -> "FieldMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), q)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def _check(self, other: "FieldMatrix") -> None:
        if not isinstance(other, FieldMatrix):
            raise UsageError("expected a FieldMatrix")
        if other.q != self.q:
            raise UsageError(f"modulus mismatch: {self.q} vs {other.q}")

    def __add__(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check(other)
        if other.shape != self.shape:
            raise UsageError(f"shape mismatch {self.shape} vs {other.shape}")
        return FieldMatrix((self.data + other.data) % self.q, self.q)

    def __neg__(self) -> "FieldMatrix":
        return FieldMatrix((-self.data) % self.q, self.q)

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        self._check(other)
        if self.cols != other.rows:
            raise UsageError(f"inner dimensions differ: {self.shape} @ {other.shape}")
        return FieldMatrix((self.data @ other.data) % self.q, self.q)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldMatrix)
            and other.q == self.q
            and other.shape == self.shape
            and bool(np.array_equal(other.data, self.data))
        )

    def __hash__(self) -> int:
        return self._hash

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix(self.data.T, self.q)

    def tolist(self) -> list[list[int]]:
        return self.data.tolist()

    def row(self, i: int) -> np.ndarray:
        return self.data[i]

    def rank(self) -> int:
        return rank(self.data, self.q)


def mat_mul(v: FieldMatrix, m: FieldMatrix) -> FieldMatrix:
    """Exact product ``v @ m`` over F_q (``v`` is typically a 1 x k row vector)."""
    return v @ m


def uniform_random_matrix(rows: int, cols: int, q: int, seed: int, stream: Sequence[int] = ()) -> FieldMatrix:
    """IID uniform entries over F_q from the ``(seed, stream)`` Philox generator."""
    check_prime(q)
    if rows < 1 or cols < 1:
        raise UsageError(f"rows and cols must be positive, got {rows}x{cols}")
    rng = make_rng(seed, *stream)
    return FieldMatrix(rng.integers(0, q, size=(rows, cols), dtype=np.int64), q)


# -- enumeration helpers ------------------------------------------------------


def all_vectors(q: int, length: int) -> np.ndarray:
    """Every vector of F_q^length as rows, in lexicographic order."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(q), repeat=length)), dtype=np.int64)


def vector_index(vec: Sequence[int], q: int) -> int:
    """Position of ``vec`` within :func:`all_vectors` (first coordinate most significant)."""
    idx = 0
    for x in vec:
        idx = idx * q + int(x)
    return idx


# -- Gaussian elimination -----------------------------------------------------


def row_reduce(a: np.ndarray, q: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``a`` over F_q and its pivot columns."""
    m = np.array(a, dtype=np.int64) % q
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = (m[r] * pow(int(m[r, c]), q - 2, q)) % q
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % q
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: np.ndarray, q: int) -> int:
    return len(row_reduce(a, q)[1])


def solve_affine(a: np.ndarray, b: Sequence[int], q: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Solution set of ``a @ x = b`` over F_q.

    Returns ``(x0, basis)`` so that the solutions are exactly ``x0 + c @ basis``
    for ``c`` in F_q^{basis rows}, or ``None`` when the system is inconsistent.
    """
    a = np.array(a, dtype=np.int64) % q
    rows, cols = a.shape
    b = np.array(b, dtype=np.int64).reshape(rows, 1) % q
    aug, pivots = row_reduce(np.hstack([a, b]), q)
    if cols in pivots:
        return None
    x0 = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(pivots):
        x0[c] = aug[i, cols]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for j, f in enumerate(free):
        basis[j, f] = 1
        for i, c in enumerate(pivots):
            basis[j, c] = (-aug[i, f]) % q
    return x0, basis
