"""Exact arithmetic over prime fields and over GF(2) bit matrices.

Everything in this package reduces to the primitives here: field-tagged
modular scalars, Gaussian elimination for square systems, and a dedicated
bit-matrix type for the two-element field. Every operation is exact integer
arithmetic; no floating point is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence


class FieldMismatchError(ValueError):
    """Arithmetic attempted between elements of different fields."""


class SingularMatrixError(ValueError):
    """A matrix that must be inverted has no inverse over its field."""


class InsufficientFieldError(ValueError):
    """The field is too small to supply the evaluation points a scheme needs."""


def is_prime(n: int) -> bool:
    """Trial-division primality test. Moduli in this package are desk-scale."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def smallest_valid_prime(n: int, length: int) -> int:
    """Smallest prime p with p >= n + length.

    Such a field holds n evaluation points alpha with alpha + i nonzero for
    every shift i in 1..length, which is what an n-server scheme retrieving
    length symbols per message needs.
    """
    if n < 1 or length < 1:
        raise ValueError("server count and message length must be positive")
    p = n + length
    while not is_prime(p):
        p += 1
    return p


class PrimeField:
    """The field of integers modulo a prime.

    Instances are interned, so ``PrimeField(11) is PrimeField(11)`` holds and
    elements can compare their field by identity. Calling the field coerces
    an integer into it: ``PrimeField(11)(14)`` is the element 3.
    """

    __slots__ = ("modulus",)
    _interned: dict[int, "PrimeField"] = {}

    def __new__(cls, modulus: int) -> "PrimeField":
        field = cls._interned.get(modulus)
        if field is None:
            if not is_prime(modulus):
                raise ValueError(f"field modulus must be prime, got {modulus}")
            field = super().__new__(cls)
            field.modulus = modulus
            cls._interned[modulus] = field
        return field

    def __call__(self, value: int) -> "Fe":
        return Fe(value % self.modulus, self)

    @property
    def zero(self) -> "Fe":
        return Fe(0, self)

    @property
    def one(self) -> "Fe":
        return Fe(1 % self.modulus, self)

    def __iter__(self) -> Iterator["Fe"]:
        return (Fe(v, self) for v in range(self.modulus))

    def random(self, rng) -> "Fe":
        """Uniform element drawn from an injected random.Random-like source."""
        return Fe(rng.randrange(self.modulus), self)

    def __repr__(self) -> str:
        return f"GF({self.modulus})"


class Fe:
    """A single prime-field element. Immutable; value is kept reduced mod p.

    Supports +, -, *, /, unary -, integer powers and mixing with plain ints
    (which are coerced into the same field). Mixing elements of two different
    fields raises FieldMismatchError rather than guessing.
    """

    __slots__ = ("value", "field")

    def __init__(self, value: int, field: PrimeField):
        self.value = value
        self.field = field

    def _coerce(self, other) -> "Fe | None":
        if isinstance(other, Fe):
            if other.field is not self.field:
                raise FieldMismatchError(
                    f"cannot mix {self.field!r} and {other.field!r} elements"
                )
            return other
        if isinstance(other, int):
            return Fe(other % self.field.modulus, self.field)
        return None

    def __add__(self, other) -> "Fe":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Fe((self.value + other.value) % self.field.modulus, self.field)

    __radd__ = __add__

    def __sub__(self, other) -> "Fe":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Fe((self.value - other.value) % self.field.modulus, self.field)

    def __rsub__(self, other) -> "Fe":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Fe((other.value - self.value) % self.field.modulus, self.field)

    def __mul__(self, other) -> "Fe":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Fe((self.value * other.value) % self.field.modulus, self.field)

    __rmul__ = __mul__

    def __neg__(self) -> "Fe":
        return Fe(-self.value % self.field.modulus, self.field)

    def inv(self) -> "Fe":
        """Multiplicative inverse via Fermat: v^(p-2) mod p."""
        if self.value == 0:
            raise ZeroDivisionError(f"0 has no inverse in {self.field!r}")
        p = self.field.modulus
        return Fe(pow(self.value, p - 2, p), self.field)

    def __truediv__(self, other) -> "Fe":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other) -> "Fe":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inv()

    def __pow__(self, exponent: int) -> "Fe":
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inv() ** (-exponent)
        return Fe(pow(self.value, exponent, self.field.modulus), self.field)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Fe)
            and self.field is other.field
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((self.value, self.field.modulus))

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"{self.value}%{self.field.modulus}"


def mat_vec(matrix: Sequence[Sequence[Fe]], vec: Sequence[Fe]) -> list[Fe]:
    """Matrix times column vector over a prime field."""
    out = []
    for row in matrix:
        if len(row) != len(vec):
            raise ValueError("matrix/vector dimension mismatch")
        acc = row[0] * vec[0]
        for a, b in zip(row[1:], vec[1:]):
            acc = acc + a * b
        out.append(acc)
    return out


def _eliminate(rows: list[list[Fe]], limit: int | None = None) -> int:
    """In-place row echelon reduction; returns the rank.

    Pivot choice is the first nonzero entry in the column, which is always
    exact over a field (no numerical stability concerns).  `limit` caps the
    columns eligible for pivoting so augmented columns do not count toward
    the rank.
    """
    if not rows:
        return 0
    n_cols = len(rows[0]) if limit is None else limit
    rank = 0
    for col in range(n_cols):
        pivot = None
        for r in range(rank, len(rows)):
            if rows[r][col]:
                pivot = r
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = rows[rank][col].inv()
        rows[rank] = [e * inv for e in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def matrix_rank(matrix: Sequence[Sequence[Fe]]) -> int:
    return _eliminate([list(row) for row in matrix])


def is_invertible(matrix: Sequence[Sequence[Fe]]) -> bool:
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("matrix is not square")
    return matrix_rank(matrix) == n


def solve_linear(matrix: Sequence[Sequence[Fe]], rhs: Sequence[Fe]) -> list[Fe]:
    """Solve the square system M x = y exactly by Gaussian elimination.

    Raises SingularMatrixError when M is not invertible.
    """
    n = len(matrix)
    if n == 0:
        return []
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("solve_linear needs a square matrix and matching rhs")
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    if _eliminate(aug, limit=n) != n:
        raise SingularMatrixError("coefficient matrix is singular")
    return [aug[i][n] for i in range(n)]


@dataclass(frozen=True)
class BinMatrix:
    """A matrix over GF(2), stored as a row-major tuple of 0/1 bits."""

    rows: int
    cols: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimensions")
        if len(self.bits) != self.rows * self.cols:
            raise ValueError("bit array length must equal rows * cols")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BinMatrix":
        r = len(rows)
        c = len(rows[0]) if r else 0
        if any(len(row) != c for row in rows):
            raise ValueError("ragged rows")
        return cls(r, c, tuple(int(b) & 1 for row in rows for b in row))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, k: int) -> "BinMatrix":
        return cls(k, k, tuple(1 if i == j else 0 for i in range(k) for j in range(k)))

    @classmethod
    def anti_identity(cls, k: int) -> "BinMatrix":
        """Ones on the anti-diagonal: entry (i, k-1-i) is 1."""
        return cls(
            k, k, tuple(1 if i + j == k - 1 else 0 for i in range(k) for j in range(k))
        )

    @classmethod
    def block(cls, grid: Sequence[Sequence["BinMatrix"]]) -> "BinMatrix":
        """Assemble a block matrix from a 2-d grid of compatible blocks."""
        row_heights = [band[0].rows for band in grid]
        col_widths = [blk.cols for blk in grid[0]]
        for band, height in zip(grid, row_heights):
            if len(band) != len(col_widths):
                raise ValueError("ragged block grid")
            for blk, width in zip(band, col_widths):
                if blk.rows != height or blk.cols != width:
                    raise ValueError("incompatible block dimensions")
        out_rows: list[list[int]] = []
        for band, height in zip(grid, row_heights):
            for i in range(height):
                row: list[int] = []
                for blk in band:
                    row.extend(blk.row(i))
                out_rows.append(row)
        return cls.from_rows(out_rows)

    def at(self, i: int, j: int) -> int:
        return self.bits[i * self.cols + j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.bits[i * self.cols : (i + 1) * self.cols]

    def to_rows(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "BinMatrix":
        return BinMatrix(
            self.cols,
            self.rows,
            tuple(self.at(i, j) for j in range(self.cols) for i in range(self.rows)),
        )

    def __add__(self, other: "BinMatrix") -> "BinMatrix":
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("dimension mismatch in GF(2) matrix addition")
        return BinMatrix(
            self.rows, self.cols, tuple(a ^ b for a, b in zip(self.bits, other.bits))
        )

    def __matmul__(self, other: "BinMatrix") -> "BinMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in GF(2) matrix product")
        rows = []
        other_t = other.transpose()
        for i in range(self.rows):
            r = self.row(i)
            rows.append(
                [bit_dot(r, other_t.row(j)) for j in range(other.cols)]
            )
        return BinMatrix.from_rows(rows) if rows else BinMatrix.zeros(0, other.cols)

    def mul_vec(self, vec: Sequence[int]) -> tuple[int, ...]:
        """Matrix times column bit-vector."""
        if len(vec) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(bit_dot(self.row(i), vec) for i in range(self.rows))

    def vec_mul(self, vec: Sequence[int]) -> tuple[int, ...]:
        """Row bit-vector times matrix."""
        if len(vec) != self.rows:
            raise ValueError("dimension mismatch")
        return tuple(
            bit_dot(vec, [self.at(i, j) for i in range(self.rows)])
            for j in range(self.cols)
        )

    def _row_masks(self) -> list[int]:
        return [
            int("".join(map(str, self.row(i))), 2) if self.cols else 0
            for i in range(self.rows)
        ]


def bit_dot(u: Sequence[int], v: Sequence[int]) -> int:
    """Inner product of two bit vectors over GF(2)."""
    if len(u) != len(v):
        raise ValueError("dimension mismatch")
    acc = 0
    for a, b in zip(u, v):
        acc ^= a & b
    return acc


def bin_det(m: BinMatrix) -> int:
    """Determinant over GF(2): 1 iff the matrix has full rank."""
    if m.rows != m.cols:
        raise ValueError("determinant needs a square matrix")
    masks = m._row_masks()
    n = m.rows
    rank = 0
    for col in range(n - 1, -1, -1):
        bit = 1 << col
        pivot = next((r for r in range(rank, n) if masks[r] & bit), None)
        if pivot is None:
            return 0
        masks[rank], masks[pivot] = masks[pivot], masks[rank]
        for r in range(n):
            if r != rank and masks[r] & bit:
                masks[r] ^= masks[rank]
        rank += 1
    return 1


def bin_inv(m: BinMatrix) -> BinMatrix:
    """Inverse over GF(2) by Gauss-Jordan; raises SingularMatrixError."""
    if m.rows != m.cols:
        raise ValueError("inverse needs a square matrix")
    n = m.rows
    masks = m._row_masks()
    aug = [(masks[i] << n) | (1 << (n - 1 - i)) for i in range(n)]
    rank = 0
    for col in range(2 * n - 1, n - 1, -1):
        bit = 1 << col
        pivot = next((r for r in range(rank, n) if aug[r] & bit), None)
        if pivot is None:
            raise SingularMatrixError("bit matrix is singular")
        aug[rank], aug[pivot] = aug[pivot], aug[rank]
        for r in range(n):
            if r != rank and aug[r] & bit:
                aug[r] ^= aug[rank]
        rank += 1
    inv_bits = []
    for r in range(n):
        low = aug[r] & ((1 << n) - 1)
        inv_bits.extend((low >> (n - 1 - j)) & 1 for j in range(n))
    return BinMatrix(n, n, tuple(inv_bits))
