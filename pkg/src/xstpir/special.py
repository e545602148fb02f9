"""Retrieval schemes outside the aligned regime.

Three constructions live here:

- download-everything for N <= X + T servers: noise is spread by an MDS code
  whose last X coordinates carry no message symbols, the user downloads all
  N*K stored symbols, strips the noise, and keeps message theta;
- the three-server single-bit scheme over GF(2) for N = 3, X = T = 1, built
  around a K x K bit matrix B with B and I + B both invertible;
- the replication-based symmetrically secure scheme for N = X + 1, where the
  user learns message theta and provably nothing about the other messages.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Sequence

from .csa import MessageSet
from .field import (
    BinMatrix,
    Fe,
    InsufficientFieldError,
    PrimeField,
    bin_det,
    bit_dot,
    is_prime,
    smallest_valid_prime,
    solve_linear,
)


@dataclass(frozen=True)
class DownloadAllParams:
    """Parameters for the download-everything scheme, valid when X < N <= X+T.

    Messages have L = N - X symbols. The modulus must exceed N so that the
    noise code has N distinct nonzero evaluation points.
    """

    N: int
    K: int
    X: int
    T: int
    p: int

    def __post_init__(self):
        if self.K < 1 or self.T < 1 or self.X < 0:
            raise ValueError("need K >= 1, T >= 1, X >= 0")
        if self.N <= self.X:
            raise ValueError("need N > X, otherwise nothing can be retrieved")
        if self.N > self.X + self.T:
            raise ValueError("need N <= X + T; larger N is the aligned regime")
        if not is_prime(self.p) or self.p <= self.N:
            raise InsufficientFieldError(
                f"need a prime p > N = {self.N} for N distinct nonzero code points"
            )

    @classmethod
    def make(cls, N: int, K: int, X: int, T: int, p: int | None = None) -> "DownloadAllParams":
        if p is None:
            p = smallest_valid_prime(N, 1)
        return cls(N, K, X, T, p)

    @property
    def L(self) -> int:
        return self.N - self.X

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.p)


def _noise_generator(params: DownloadAllParams) -> list[list[Fe]]:
    """N x X generator spreading X noise symbols across the servers.

    Entry (n, x) is n^(x+1) at the nonzero points 1..N; every X x X submatrix
    is a scaled Vandermonde block and hence invertible, so any X coordinates
    of the codeword are an invertible image of the noise.
    """
    field = params.field
    return [
        [field(n) ** (x + 1) for x in range(params.X)]
        for n in range(1, params.N + 1)
    ]


def download_all_noise(params: DownloadAllParams, rng: Random) -> tuple[tuple[Fe, ...], ...]:
    """K x X noise block: one length-X noise vector per message."""
    f = params.field
    return tuple(
        tuple(f.random(rng) for _ in range(params.X)) for _ in range(params.K)
    )


def download_all_encode(
    messages: MessageSet,
    noise: Sequence[Sequence[Fe]],
    params: DownloadAllParams,
) -> tuple[tuple[Fe, ...], ...]:
    """Store one symbol per message per server.

    Message k is padded with X zeros to length N and added to the noise
    codeword; server n keeps coordinate n of each sum. Any X servers see an
    invertible image of pure noise.
    """
    if messages.K != params.K or messages.L != params.L:
        raise ValueError(
            f"messages are {messages.K}x{messages.L}, params need {params.K}x{params.L}"
        )
    if len(noise) != params.K or any(len(zk) != params.X for zk in noise):
        raise ValueError("noise must be K x X")
    gen = _noise_generator(params)
    zero = params.field.zero
    shares = []
    for n in range(params.N):
        row = []
        for k in range(params.K):
            padded = messages.symbols[k][n] if n < params.L else zero
            acc = padded
            for x in range(params.X):
                acc = acc + gen[n][x] * noise[k][x]
            row.append(acc)
        shares.append(tuple(row))
    return tuple(shares)


def download_all_decode(
    payloads: Sequence[Sequence[Fe]], params: DownloadAllParams
) -> tuple[tuple[Fe, ...], ...]:
    """Recover all K messages from the full N x K download.

    The last X coordinates of each stored column are pure noise through an
    invertible block, so the noise is solved for there and subtracted
    everywhere else.
    """
    if len(payloads) != params.N or any(len(row) != params.K for row in payloads):
        raise ValueError("need the full N x K download")
    gen = _noise_generator(params)
    tail_block = [gen[n] for n in range(params.L, params.N)]
    out = []
    for k in range(params.K):
        stored = [payloads[n][k] for n in range(params.N)]
        tail = stored[params.L :]
        noise_k = solve_linear(tail_block, tail) if params.X else []
        cleaned = []
        for n in range(params.L):
            acc = stored[n]
            for x in range(params.X):
                acc = acc - gen[n][x] * noise_k[x]
            cleaned.append(acc)
        out.append(tuple(cleaned))
    return tuple(out)


def download_all_retrieve(
    params: DownloadAllParams,
    messages: MessageSet,
    noise: Sequence[Sequence[Fe]],
    theta: int,
) -> tuple[tuple[Fe, ...], int]:
    """Full round: encode, download everything, decode, keep message theta.

    Returns (message, downloaded symbol count); the count is always N*K, so
    the rate is (N - X) / (N * K).
    """
    if not 1 <= theta <= params.K:
        raise ValueError(f"theta must be in 1..{params.K}")
    shares = download_all_encode(messages, noise, params)
    decoded = download_all_decode(shares, params)
    return decoded[theta - 1], params.N * params.K


def build_B(k: int) -> BinMatrix:
    """A K x K bit matrix with B and I + B both invertible, for any K >= 2.

    Even K: [[I, J], [J, 0]] on half-size blocks, with J the anti-diagonal
    identity. Odd K: the top-left (K+1)/2 block is J + I + I' (I' being the
    identity padded by a zero last row and column), bordered by truncated
    anti-diagonal blocks. No such matrix exists for K = 1, since B and B + I
    cannot both be nonzero bits.
    """
    if k < 2:
        raise ValueError("no K x K bit matrix with B and I+B invertible for K < 2")
    if k % 2 == 0:
        h = k // 2
        return BinMatrix.block(
            [
                [BinMatrix.identity(h), BinMatrix.anti_identity(h)],
                [BinMatrix.anti_identity(h), BinMatrix.zeros(h, h)],
            ]
        )
    m = (k + 1) // 2
    h = m - 1
    padded_identity = BinMatrix.block(
        [
            [BinMatrix.identity(h), BinMatrix.zeros(h, 1)],
            [BinMatrix.zeros(1, h), BinMatrix.zeros(1, 1)],
        ]
    )
    top_left = BinMatrix.anti_identity(m) + padded_identity + BinMatrix.identity(m)
    top_right = BinMatrix.block(
        [[BinMatrix.anti_identity(h)], [BinMatrix.zeros(1, h)]]
    )
    bottom_left = BinMatrix.block(
        [[BinMatrix.anti_identity(h), BinMatrix.zeros(h, 1)]]
    )
    return BinMatrix.block(
        [[top_left, top_right], [bottom_left, BinMatrix.zeros(h, h)]]
    )


def binary_storage(
    w: Sequence[int], z: Sequence[int], b: BinMatrix
) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """Three stored vectors: (W + Z, W + Z B, Z), all over GF(2)."""
    if len(w) != len(z) or b.rows != b.cols or b.rows != len(w):
        raise ValueError("dimension mismatch")
    zb = b.vec_mul(z)
    s1 = tuple(a ^ c for a, c in zip(w, z))
    s2 = tuple(a ^ c for a, c in zip(w, zb))
    return s1, s2, tuple(z)


def binary_queries(
    theta: int, zp: Sequence[int], b: BinMatrix
) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """Three query vectors: (Z', Q + Z', (I + B) Z' + B Q), Q the theta unit."""
    k = b.rows
    if b.cols != k or len(zp) != k:
        raise ValueError("dimension mismatch")
    if not 1 <= theta <= k:
        raise ValueError(f"theta must be in 1..{k}")
    unit = tuple(1 if i == theta - 1 else 0 for i in range(k))
    q2 = tuple(a ^ c for a, c in zip(unit, zp))
    q3 = tuple(
        a ^ c
        for a, c in zip((BinMatrix.identity(k) + b).mul_vec(zp), b.mul_vec(unit))
    )
    return tuple(zp), q2, q3


def binary_answer(storage: Sequence[int], query: Sequence[int]) -> int | None:
    """Inner product over GF(2); None marks the free all-zero-query case."""
    if not any(query):
        return None
    return bit_dot(storage, query)


@dataclass(frozen=True)
class BinarySchemeState:
    """One full instance of the three-server bit scheme: messages and noise.

    W holds the K message bits, Z the storage noise, Zp the query noise; B
    must have both B and I + B invertible, which build_B guarantees.
    """

    K: int
    W: tuple[int, ...]
    Z: tuple[int, ...]
    Zp: tuple[int, ...]
    B: BinMatrix

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("need K >= 2")
        for name, vec in (("W", self.W), ("Z", self.Z), ("Zp", self.Zp)):
            if len(vec) != self.K or any(v not in (0, 1) for v in vec):
                raise ValueError(f"{name} must be a length-K bit vector")
        if self.B.rows != self.K or self.B.cols != self.K:
            raise ValueError("B must be K x K")
        if bin_det(self.B) != 1 or bin_det(BinMatrix.identity(self.K) + self.B) != 1:
            raise ValueError("B and I + B must both be invertible")

    @classmethod
    def random(cls, k: int, rng: Random, b: BinMatrix | None = None) -> "BinarySchemeState":
        if b is None:
            b = build_B(k)
        draw = lambda: tuple(rng.randrange(2) for _ in range(k))
        return cls(k, draw(), draw(), draw(), b)

    @classmethod
    def _unvalidated(cls, k, w, z, zp, b) -> "BinarySchemeState":
        """Construct without invariant checks. Only for adversarial tests."""
        inst = object.__new__(cls)
        for name, value in (("K", k), ("W", tuple(w)), ("Z", tuple(z)),
                            ("Zp", tuple(zp)), ("B", b)):
            object.__setattr__(inst, name, value)
        return inst


@dataclass(frozen=True)
class BinaryRound:
    """One retrieval of the bit scheme: everything on the wire plus the result."""

    storage: tuple[tuple[int, ...], ...]
    queries: tuple[tuple[int, ...], ...]
    answers: tuple[int | None, ...]
    downloaded: tuple[int, ...]
    decoded: int


def binary_round(state: BinarySchemeState, theta: int) -> BinaryRound:
    """Run the three-server bit scheme once.

    The decoded bit is the XOR of the three answers (an absent answer from a
    zero-query server contributes 0) and always equals W_theta. Each query
    vector is individually uniform, so a server learns nothing about theta,
    and each stored vector is uniform, so a server learns nothing about W.
    """
    storage = binary_storage(state.W, state.Z, state.B)
    queries = binary_queries(theta, state.Zp, state.B)
    answers = tuple(binary_answer(s, q) for s, q in zip(storage, queries))
    downloaded = tuple(0 if a is None else 1 for a in answers)
    decoded = 0
    for a in answers:
        decoded ^= a or 0
    return BinaryRound(storage, queries, answers, downloaded, decoded)


@dataclass(frozen=True)
class SymXspirParams:
    """Parameters of the symmetrically secure scheme: N = X + 1 servers,
    single-symbol messages, T = 1."""

    X: int
    K: int
    p: int

    def __post_init__(self):
        if self.X < 1 or self.K < 1:
            raise ValueError("need X >= 1 and K >= 1")
        if not is_prime(self.p):
            raise ValueError(f"modulus must be prime, got {self.p}")

    @classmethod
    def make(cls, X: int, K: int, p: int | None = None) -> "SymXspirParams":
        return cls(X, K, 2 if p is None else p)

    @property
    def N(self) -> int:
        return self.X + 1

    @property
    def T(self) -> int:
        return 1

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.p)


@dataclass(frozen=True)
class SymXspirState:
    """Messages, the X*K*K noise grid, and the user's private column m_o.

    z[x][k][m] is the noise symbol at noise-server x+1 for message k+1 and
    column m+1; W holds the K single-symbol messages.
    """

    params: SymXspirParams
    W: tuple[Fe, ...]
    z: tuple[tuple[tuple[Fe, ...], ...], ...]
    m_o: int

    def __post_init__(self):
        k, x = self.params.K, self.params.X
        if len(self.W) != k:
            raise ValueError("need K message symbols")
        if len(self.z) != x or any(
            len(zk) != k or any(len(zkm) != k for zkm in zk) for zk in self.z
        ):
            raise ValueError("noise grid must be X x K x K")
        if not 1 <= self.m_o <= k:
            raise ValueError(f"m_o must be in 1..{k}")

    @classmethod
    def random(cls, params: SymXspirParams, rng: Random) -> "SymXspirState":
        f = params.field
        w = tuple(f.random(rng) for _ in range(params.K))
        z = tuple(
            tuple(
                tuple(f.random(rng) for _ in range(params.K))
                for _ in range(params.K)
            )
            for _ in range(params.X)
        )
        return cls(params, w, z, rng.randrange(params.K) + 1)


def _wrap(m: int, k: int) -> int:
    """Fold an index into 1..K."""
    return (m - 1) % k + 1


def sym_xspir_storage(
    w: Sequence[Fe], z: Sequence[Sequence[Sequence[Fe]]], params: SymXspirParams
) -> tuple[tuple[tuple[Fe, ...], ...], ...]:
    """Per-server K x K grids: servers 1..X hold raw noise, server N holds
    every message masked by the column-aligned noise sums."""
    noise_servers = tuple(
        tuple(tuple(zk) for zk in z[x]) for x in range(params.X)
    )
    masked = []
    for k in range(params.K):
        row = []
        for m in range(params.K):
            acc = w[k]
            for x in range(params.X):
                acc = acc + z[x][k][m]
            row.append(acc)
        masked.append(tuple(row))
    return noise_servers + (tuple(masked),)


def sym_xspir_queries(theta: int, m_o: int, params: SymXspirParams) -> tuple[tuple[int, ...], ...]:
    """Per-server column requests, one 1-based column index per message.

    Servers 1..X are asked for the fixed column m_o; server N is asked for
    the shifted diagonal m_o - theta + k. Each request is a deterministic
    image of the uniform m_o alone, hence reveals nothing about theta.
    """
    k = params.K
    if not 1 <= theta <= k:
        raise ValueError(f"theta must be in 1..{k}")
    if not 1 <= m_o <= k:
        raise ValueError(f"m_o must be in 1..{k}")
    flat = tuple(m_o for _ in range(k))
    shifted = tuple(_wrap(m_o - theta + kk, k) for kk in range(1, k + 1))
    return tuple(flat for _ in range(params.X)) + (shifted,)


def sym_xspir_answer(
    grid: Sequence[Sequence[Fe]], request: Sequence[int]
) -> tuple[Fe, ...]:
    """Entry (k, request_k) of the stored grid, for each message slot k."""
    if len(request) != len(grid):
        raise ValueError("need one column index per message")
    return tuple(grid[k][request[k] - 1] for k in range(len(grid)))


@dataclass(frozen=True)
class SymXspirRound:
    """One retrieval: per-server requests, K-symbol answers, the result."""

    queries: tuple[tuple[int, ...], ...]
    answers: tuple[tuple[Fe, ...], ...]
    downloaded: tuple[int, ...]
    decoded: Fe


def sym_xspir_round(state: SymXspirState, theta: int) -> SymXspirRound:
    """Run the symmetrically secure scheme once.

    Slot theta of server N's answer is W_theta masked by the noises at
    column m_o, which are exactly what the noise servers return in the same
    slot; subtracting recovers W_theta. Every download is K symbols, so the
    rate is 1/(K*N). Slots k != theta stay masked by noise entries the user
    never sees in clear form, which is the symmetric-security side.
    """
    params = state.params
    storage = sym_xspir_storage(state.W, state.z, params)
    queries = sym_xspir_queries(theta, state.m_o, params)
    answers = tuple(
        sym_xspir_answer(grid, req) for grid, req in zip(storage, queries)
    )
    decoded = answers[-1][theta - 1]
    for x in range(params.X):
        decoded = decoded - answers[x][theta - 1]
    downloaded = tuple(len(a) for a in answers)
    return SymXspirRound(queries, answers, downloaded, decoded)
