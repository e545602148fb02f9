"""Cross-subspace-alignment retrieval: X-secure storage, T-private queries,
for any server count N > X + T.

Each message is split into L = N - X - T symbols. Storage at server n mixes
the l-th symbol block with noise weighted by powers of (l + alpha_n); the
query for block l is scaled by the product of every (i + alpha_n) except the
l-th. In the scalar answer the cross terms then collapse into the span of
delta_n, delta_n*alpha_n, ..., delta_n*alpha_n^(X+T-1), where delta_n is the
full product. Stacking the N answers gives a square system whose first L
unknowns are the desired symbols and whose last X + T unknowns are aligned
interference.

The per-block scale is computed as the product with the l-th factor removed,
never as a division, so it is well defined even at points where a factor
vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Iterator, Sequence

from .field import (
    Fe,
    InsufficientFieldError,
    PrimeField,
    is_prime,
    matrix_rank,
    smallest_valid_prime,
    solve_linear,
)


def delta(alpha: Fe, length: int) -> Fe:
    """Product (1 + alpha)(2 + alpha) ... (length + alpha)."""
    acc = alpha.field.one
    for i in range(1, length + 1):
        acc = acc * (i + alpha)
    return acc


def delta_except(alpha: Fe, length: int, skip: int) -> Fe:
    """delta(alpha, length) with the (skip + alpha) factor removed.

    This is the division-free reading of delta/(skip + alpha): the factor is
    eliminated from the product, so the value is defined for every alpha,
    including those where skip + alpha = 0.
    """
    if not 1 <= skip <= length:
        raise ValueError("skip index out of range")
    acc = alpha.field.one
    for i in range(1, length + 1):
        if i != skip:
            acc = acc * (i + alpha)
    return acc


def choose_alphas(p: int, length: int, count: int) -> tuple[Fe, ...]:
    """First `count` field values alpha with alpha + i nonzero for i in 1..length.

    Scans upward from 0; values p - length .. p - 1 are the excluded ones, so
    for any p >= count + length this returns 0, 1, ..., count - 1. Raises
    InsufficientFieldError when fewer than `count` usable points exist.
    """
    field = PrimeField(p)
    out: list[Fe] = []
    for v in range(p):
        candidate = field(v)
        if all(candidate + i for i in range(1, length + 1)):
            out.append(candidate)
            if len(out) == count:
                return tuple(out)
    raise InsufficientFieldError(
        f"GF({p}) has only {len(out)} usable evaluation points, need {count}"
    )


@dataclass(frozen=True)
class CsaParams:
    """Parameters of one aligned-retrieval instance.

    N servers, K messages of L = N - X - T symbols each, X-secure storage,
    T-private queries, all over GF(p) with one distinct evaluation point per
    server.
    """

    N: int
    K: int
    X: int
    T: int
    L: int
    p: int
    alphas: tuple[Fe, ...]

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("need K >= 1")
        if self.X < 1 or self.T < 1:
            raise ValueError("need X >= 1 and T >= 1")
        if self.N <= self.X + self.T:
            raise ValueError("need N > X + T; smaller N is the download-all regime")
        if self.L != self.N - self.X - self.T:
            raise ValueError("need L = N - X - T")
        if not is_prime(self.p) or self.p < self.N + self.L:
            raise ValueError(f"need a prime p >= N + L = {self.N + self.L}")
        if len(self.alphas) != self.N:
            raise ValueError("need one evaluation point per server")
        field = PrimeField(self.p)
        for alpha in self.alphas:
            if not isinstance(alpha, Fe) or alpha.field is not field:
                raise ValueError("evaluation points must live in GF(p)")
            if not all(alpha + i for i in range(1, self.L + 1)):
                raise ValueError(f"evaluation point {alpha.value} has a vanishing shift")
        if len({a.value for a in self.alphas}) != self.N:
            raise ValueError("evaluation points must be pairwise distinct")

    @classmethod
    def make(cls, N: int, K: int, X: int, T: int, p: int | None = None) -> "CsaParams":
        """Fill in L, the default modulus and the default evaluation points."""
        L = N - X - T
        if L < 1:
            raise ValueError("need N > X + T; smaller N is the download-all regime")
        if p is None:
            p = smallest_valid_prime(N, L)
        return cls(N, K, X, T, L, p, choose_alphas(p, L, N))

    @classmethod
    def _unvalidated(cls, N, K, X, T, L, p, alphas) -> "CsaParams":
        """Construct without invariant checks. Only for adversarial tests."""
        inst = object.__new__(cls)
        for name, value in (
            ("N", N), ("K", K), ("X", X), ("T", T),
            ("L", L), ("p", p), ("alphas", tuple(alphas)),
        ):
            object.__setattr__(inst, name, value)
        return inst

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.p)


@dataclass(frozen=True)
class MessageSet:
    """K messages of L symbols each; row k is message k."""

    symbols: tuple[tuple[Fe, ...], ...]

    def __post_init__(self):
        if not self.symbols or not self.symbols[0]:
            raise ValueError("need at least one message and one symbol")
        width = len(self.symbols[0])
        if any(len(row) != width for row in self.symbols):
            raise ValueError("all messages must have the same length")

    @property
    def K(self) -> int:
        return len(self.symbols)

    @property
    def L(self) -> int:
        return len(self.symbols[0])

    def message(self, k: int) -> tuple[Fe, ...]:
        """Message k, 1-based."""
        if not 1 <= k <= self.K:
            raise ValueError(f"message index {k} outside 1..{self.K}")
        return self.symbols[k - 1]

    def column(self, l_index: int) -> tuple[Fe, ...]:
        """The K symbols at position l_index (1-based) across all messages."""
        if not 1 <= l_index <= self.L:
            raise ValueError(f"symbol index {l_index} outside 1..{self.L}")
        return tuple(row[l_index - 1] for row in self.symbols)

    @classmethod
    def from_ints(cls, rows: Sequence[Sequence[int]], field: PrimeField) -> "MessageSet":
        return cls(tuple(tuple(field(v) for v in row) for row in rows))

    @classmethod
    def random(cls, k: int, length: int, field: PrimeField, rng: Random) -> "MessageSet":
        return cls(
            tuple(tuple(field.random(rng) for _ in range(length)) for _ in range(k))
        )

    @classmethod
    def zeros(cls, k: int, length: int, field: PrimeField) -> "MessageSet":
        return cls(tuple((field.zero,) * length for _ in range(k)))


@dataclass(frozen=True)
class StorageNoise:
    """Storage-side noise: z[l][x] is a K-vector, for l in 1..L, x in 1..X."""

    z: tuple[tuple[tuple[Fe, ...], ...], ...]

    @classmethod
    def random(cls, params: CsaParams, rng: Random) -> "StorageNoise":
        f = params.field
        return cls(
            tuple(
                tuple(
                    tuple(f.random(rng) for _ in range(params.K))
                    for _ in range(params.X)
                )
                for _ in range(params.L)
            )
        )

    @classmethod
    def zeros(cls, params: CsaParams) -> "StorageNoise":
        zero = params.field.zero
        return cls(
            tuple(
                tuple((zero,) * params.K for _ in range(params.X))
                for _ in range(params.L)
            )
        )


@dataclass(frozen=True)
class QueryNoise:
    """Query-side noise: z[l][t] is a K-vector, for l in 1..L, t in 1..T."""

    z: tuple[tuple[tuple[Fe, ...], ...], ...]

    @classmethod
    def random(cls, params: CsaParams, rng: Random) -> "QueryNoise":
        f = params.field
        return cls(
            tuple(
                tuple(
                    tuple(f.random(rng) for _ in range(params.K))
                    for _ in range(params.T)
                )
                for _ in range(params.L)
            )
        )

    @classmethod
    def zeros(cls, params: CsaParams) -> "QueryNoise":
        zero = params.field.zero
        return cls(
            tuple(
                tuple((zero,) * params.K for _ in range(params.T))
                for _ in range(params.L)
            )
        )


@dataclass(frozen=True)
class StorageShare:
    """What one server stores: rows[l] is the mixed K-vector for block l."""

    server_index: int
    rows: tuple[tuple[Fe, ...], ...]


@dataclass(frozen=True)
class QueryShare:
    """What one server is asked: cols[l] is the scaled K-vector for block l."""

    server_index: int
    cols: tuple[tuple[Fe, ...], ...]


@dataclass(frozen=True)
class DecodeOutput:
    """Solved answer system: L desired symbols plus X + T interference values."""

    desired: tuple[Fe, ...]
    interference: tuple[Fe, ...]


def _check_dims(params: CsaParams, messages: MessageSet) -> None:
    if messages.K != params.K or messages.L != params.L:
        raise ValueError(
            f"messages are {messages.K}x{messages.L}, params need {params.K}x{params.L}"
        )


def encode_storage(
    messages: MessageSet, noise: StorageNoise, params: CsaParams
) -> tuple[StorageShare, ...]:
    """Mix messages with noise into one share per server.

    Share row l at server n is column(l) + sum over x of (l + alpha_n)^x z[l][x].
    Any X of these shares are an invertible linear image of the noise alone,
    which is what makes the storage X-secure.
    """
    _check_dims(params, messages)
    if len(noise.z) != params.L or any(len(zl) != params.X for zl in noise.z):
        raise ValueError("storage noise has wrong shape")
    shares = []
    for n, alpha in enumerate(params.alphas, start=1):
        rows = []
        for l_index in range(1, params.L + 1):
            point = l_index + alpha
            row = list(messages.column(l_index))
            weight = point
            for zx in noise.z[l_index - 1]:
                row = [a + weight * b for a, b in zip(row, zx)]
                weight = weight * point
            rows.append(tuple(row))
        shares.append(StorageShare(n, tuple(rows)))
    return tuple(shares)


def gen_queries(
    theta: int, qnoise: QueryNoise, params: CsaParams
) -> tuple[QueryShare, ...]:
    """Build the N query shares for retrieving message theta (1-based).

    Query column l at server n is the unit vector for theta plus noise
    weighted by powers of (l + alpha_n), all scaled by the product of every
    (i + alpha_n) with i != l. Any T queries are uniform and independent of
    theta, which is what makes them T-private.
    """
    if not 1 <= theta <= params.K:
        raise ValueError(f"theta must be in 1..{params.K}")
    if len(qnoise.z) != params.L or any(len(zl) != params.T for zl in qnoise.z):
        raise ValueError("query noise has wrong shape")
    field = params.field
    unit = [field.one if k == theta else field.zero for k in range(1, params.K + 1)]
    queries = []
    for n, alpha in enumerate(params.alphas, start=1):
        cols = []
        for l_index in range(1, params.L + 1):
            point = l_index + alpha
            col = list(unit)
            weight = point
            for zt in qnoise.z[l_index - 1]:
                col = [a + weight * b for a, b in zip(col, zt)]
                weight = weight * point
            scale = delta_except(alpha, params.L, l_index)
            cols.append(tuple(scale * c for c in col))
        queries.append(QueryShare(n, tuple(cols)))
    return tuple(queries)


def answer(share: StorageShare, query: QueryShare) -> Fe:
    """One server's scalar answer: the dot product of its share and query."""
    if share.server_index != query.server_index:
        raise ValueError("share and query belong to different servers")
    if len(share.rows) != len(query.cols):
        raise ValueError("share and query have different block counts")
    acc = None
    for row, col in zip(share.rows, query.cols):
        if len(row) != len(col):
            raise ValueError("share and query have different message counts")
        for a, b in zip(row, col):
            term = a * b
            acc = term if acc is None else acc + term
    assert acc is not None
    return acc


def desired_columns(params: CsaParams) -> list[list[Fe]]:
    """Columns multiplying the desired symbols in the stacked answer vector.

    Column l has entries delta_except(alpha_n, L, l) over the servers n.
    """
    return [
        [delta_except(alpha, params.L, l_index) for alpha in params.alphas]
        for l_index in range(1, params.L + 1)
    ]


def interference_columns(params: CsaParams) -> list[list[Fe]]:
    """Columns spanning the aligned interference: delta_n * alpha_n^i."""
    deltas = [delta(alpha, params.L) for alpha in params.alphas]
    return [
        [d * alpha**i for d, alpha in zip(deltas, params.alphas)]
        for i in range(params.X + params.T)
    ]


def decoding_matrix(params: CsaParams) -> list[list[Fe]]:
    """The N x N matrix mapping (desired symbols, interference) to answers.

    Row n is [delta_except(alpha_n, L, 1), ..., delta_except(alpha_n, L, L),
    delta_n, delta_n alpha_n, ..., delta_n alpha_n^(X+T-1)]. It is invertible
    for any N pairwise-distinct usable evaluation points.
    """
    cols = desired_columns(params) + interference_columns(params)
    return [[col[n] for col in cols] for n in range(params.N)]


def decode(answers: Sequence[Fe], params: CsaParams) -> DecodeOutput:
    """Invert the answer system; the first L unknowns are the desired symbols.

    A singular decoding matrix cannot occur for validated params; if it does
    occur (corrupted evaluation points), the solver's error propagates.
    """
    if len(answers) != params.N:
        raise ValueError("need one answer per server")
    solution = solve_linear(decoding_matrix(params), list(answers))
    return DecodeOutput(tuple(solution[: params.L]), tuple(solution[params.L :]))


def interference_aligned(
    params: CsaParams,
    messages: MessageSet,
    noise: StorageNoise,
    qnoise: QueryNoise,
    theta: int,
) -> bool:
    """Check the alignment identity on a full round of honest answers.

    Subtracts the desired-symbol contribution from each answer and tests that
    the residual lies in the span of the X + T interference columns. Honest
    answers satisfy this for every choice of evaluation points, because the
    identity is polynomial in alpha; a corrupted answer generically does not.
    """
    shares = encode_storage(messages, noise, params)
    queries = gen_queries(theta, qnoise, params)
    answers = [answer(s, q) for s, q in zip(shares, queries)]
    desired = messages.message(theta)
    residual = list(answers)
    for col, w in zip(desired_columns(params), desired):
        residual = [r - w * c for r, c in zip(residual, col)]
    return residual_in_interference_span(params, residual)


def residual_in_interference_span(params: CsaParams, residual: Sequence[Fe]) -> bool:
    """True iff the residual vector lies in the interference column span."""
    cols = interference_columns(params)
    base_rows = [[col[n] for col in cols] for n in range(params.N)]
    base_rank = matrix_rank(base_rows)
    augmented = [row + [residual[n]] for n, row in enumerate(base_rows)]
    return matrix_rank(augmented) == base_rank


def iter_messages(params: CsaParams) -> Iterator[MessageSet]:
    """All p^(K*L) message sets, for exhaustive small-instance enumeration."""
    field = params.field
    total = params.K * params.L
    for values in _iter_tuples(params.p, total):
        it = iter(values)
        yield MessageSet(
            tuple(tuple(field(next(it)) for _ in range(params.L)) for _ in range(params.K))
        )


def iter_storage_noise(params: CsaParams) -> Iterator[StorageNoise]:
    """All p^(L*X*K) storage-noise realizations."""
    field = params.field
    total = params.L * params.X * params.K
    for values in _iter_tuples(params.p, total):
        it = iter(values)
        yield StorageNoise(
            tuple(
                tuple(
                    tuple(field(next(it)) for _ in range(params.K))
                    for _ in range(params.X)
                )
                for _ in range(params.L)
            )
        )


def iter_query_noise(params: CsaParams) -> Iterator[QueryNoise]:
    """All p^(L*T*K) query-noise realizations."""
    field = params.field
    total = params.L * params.T * params.K
    for values in _iter_tuples(params.p, total):
        it = iter(values)
        yield QueryNoise(
            tuple(
                tuple(
                    tuple(field(next(it)) for _ in range(params.K))
                    for _ in range(params.T)
                )
                for _ in range(params.L)
            )
        )


def _iter_tuples(base: int, length: int) -> Iterator[tuple[int, ...]]:
    from itertools import product

    return product(range(base), repeat=length)
