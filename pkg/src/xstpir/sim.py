"""In-process retrieval harness: one thread per server, queue channels, a
line-oriented wire format, and replayable transcripts.

The client encodes storage, hands each server actor its share and nothing
else, sends one QUERY message per server, collects one ANSWER (or
ANSWER_EMPTY for a server whose query vector is all zero and therefore owes
no symbols), and decodes. Download accounting counts answer payload symbols
only; upload is free by convention. Every retrieval is driven by a single
seeded generator, so a fixed (params, messages, theta, seed) reproduces a
byte-identical transcript.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Callable, Sequence

from . import csa, special
from .csa import CsaParams, MessageSet, QueryNoise, StorageNoise
from .field import SingularMatrixError
from .special import (
    BinarySchemeState,
    DownloadAllParams,
    SymXspirParams,
    build_B,
)

KIND_QUERY = "QUERY"
KIND_ANSWER = "ANSWER"
KIND_ANSWER_EMPTY = "ANSWER_EMPTY"
_KINDS = (KIND_QUERY, KIND_ANSWER, KIND_ANSWER_EMPTY)


class ProtocolInvariantError(RuntimeError):
    """The harness observed something an honest execution can never produce."""


@dataclass(frozen=True)
class WireMessage:
    """One line on the wire: kind, server id, symbol count, symbols."""

    kind: str
    server_id: int
    payload: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown message kind {self.kind!r}")
        if self.kind == KIND_ANSWER_EMPTY and self.payload:
            raise ValueError("ANSWER_EMPTY carries no payload")
        if self.server_id < 1:
            raise ValueError("server ids are 1-based")
        if any(v < 0 for v in self.payload):
            raise ValueError("payload symbols are nonnegative integers")

    def encode(self) -> str:
        parts = [self.kind, str(self.server_id), str(len(self.payload))]
        parts.extend(str(v) for v in self.payload)
        return " ".join(parts) + "\n"

    @classmethod
    def parse(cls, line: str) -> "WireMessage":
        parts = line.split()
        if len(parts) < 3:
            raise ValueError(f"malformed wire line: {line!r}")
        kind, server_id, count = parts[0], int(parts[1]), int(parts[2])
        payload = tuple(int(v) for v in parts[3:])
        if len(payload) != count:
            raise ValueError(f"payload count mismatch in line: {line!r}")
        return cls(kind, server_id, payload)


@dataclass(frozen=True)
class Transcript:
    """Everything one retrieval put on the wire, plus the decoded result."""

    scheme: str
    N: int
    K: int
    X: int
    T: int
    p: int
    L: int
    seed: int
    theta: int
    queries: tuple[WireMessage, ...]
    answers: tuple[WireMessage, ...]
    decoded: tuple[int, ...]

    @property
    def downloaded(self) -> tuple[int, ...]:
        return tuple(len(a.payload) for a in self.answers)

    @property
    def total_downloaded(self) -> int:
        return sum(self.downloaded)

    def render(self) -> str:
        lines = [
            f"scheme {self.scheme}",
            f"N {self.N}",
            f"K {self.K}",
            f"X {self.X}",
            f"T {self.T}",
            f"p {self.p}",
            f"L {self.L}",
            f"seed {self.seed}",
            f"theta {self.theta}",
        ]
        lines.extend(m.encode().rstrip("\n") for m in self.queries)
        lines.extend(m.encode().rstrip("\n") for m in self.answers)
        decoded = " ".join(str(v) for v in self.decoded)
        suffix = f" {decoded}" if decoded else ""
        lines.append(f"DECODED {len(self.decoded)}{suffix}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "Transcript":
        header: dict[str, str] = {}
        queries: list[WireMessage] = []
        answers: list[WireMessage] = []
        decoded: tuple[int, ...] | None = None
        for line in text.splitlines():
            if not line.strip():
                continue
            tag = line.split(maxsplit=1)[0]
            if tag in _KINDS:
                msg = WireMessage.parse(line)
                (queries if msg.kind == KIND_QUERY else answers).append(msg)
            elif tag == "DECODED":
                parts = line.split()
                decoded = tuple(int(v) for v in parts[2:])
                if len(decoded) != int(parts[1]):
                    raise ValueError("DECODED count mismatch")
            else:
                key, _, value = line.partition(" ")
                header[key] = value.strip()
        if decoded is None:
            raise ValueError("transcript has no DECODED line")
        return cls(
            scheme=header["scheme"],
            N=int(header["N"]),
            K=int(header["K"]),
            X=int(header["X"]),
            T=int(header["T"]),
            p=int(header["p"]),
            L=int(header["L"]),
            seed=int(header["seed"]),
            theta=int(header["theta"]),
            queries=tuple(queries),
            answers=tuple(answers),
            decoded=decoded,
        )


class Server(threading.Thread):
    """One server actor. It holds its own share and nothing else.

    It receives exactly one QUERY addressed to it, applies the scheme's
    answer map to (share, query payload) and replies with ANSWER, or with
    ANSWER_EMPTY when the answer map returns None (zero-query case). The
    kinds of everything it received are logged for the information-flow
    assertions in tests.
    """

    def __init__(
        self,
        server_id: int,
        share: tuple[int, ...],
        answer_fn: Callable[[tuple[int, ...], tuple[int, ...]], tuple[int, ...] | None],
        inbox: "queue.Queue[WireMessage]",
        outbox: "queue.Queue[WireMessage]",
    ):
        super().__init__(name=f"server-{server_id}", daemon=True)
        self.server_id = server_id
        self.share = share
        self.answer_fn = answer_fn
        self.inbox = inbox
        self.outbox = outbox
        self.received: list[str] = []

    def run(self) -> None:
        msg = self.inbox.get()
        if msg.kind != KIND_QUERY or msg.server_id != self.server_id:
            # Record the violation for the harness check and keep the
            # client from blocking; the harness raises after join.
            self.received.append(f"misaddressed:{msg.kind}")
            self.outbox.put(WireMessage(KIND_ANSWER_EMPTY, self.server_id, ()))
            return
        self.received.append(msg.kind)
        result = self.answer_fn(self.share, msg.payload)
        if result is None:
            self.outbox.put(WireMessage(KIND_ANSWER_EMPTY, self.server_id, ()))
        else:
            self.outbox.put(WireMessage(KIND_ANSWER, self.server_id, tuple(result)))


@dataclass(frozen=True)
class RetrievalRun:
    """A transcript plus the harness-side record of what each server stored.

    Shares never travel between servers; they are kept here so collusion
    views can be assembled for the audits.
    """

    transcript: Transcript
    shares: tuple[tuple[int, ...], ...]
    plaintext: tuple[int, ...]


class _CsaSim:
    scheme = "csa"

    def __init__(self, params: CsaParams):
        self.params = params
        self.field = params.field

    def header(self) -> dict[str, int]:
        p = self.params
        return {"N": p.N, "K": p.K, "X": p.X, "T": p.T, "p": p.p, "L": p.L}

    @property
    def message_length(self) -> int:
        return self.params.L

    def random_messages(self, rng: Random) -> MessageSet:
        return MessageSet.random(self.params.K, self.params.L, self.field, rng)

    def plaintext(self, messages: MessageSet, theta: int) -> tuple[int, ...]:
        return tuple(e.value for e in messages.message(theta))

    def encode(self, messages: MessageSet, rng: Random) -> tuple[tuple[int, ...], ...]:
        noise = StorageNoise.random(self.params, rng)
        shares = csa.encode_storage(messages, noise, self.params)
        return tuple(
            tuple(e.value for row in s.rows for e in row) for s in shares
        )

    def build_queries(self, theta: int, rng: Random) -> tuple[tuple[int, ...], ...]:
        qnoise = QueryNoise.random(self.params, rng)
        return self.queries_from_noise(theta, qnoise)

    def queries_from_noise(self, theta: int, qnoise: QueryNoise) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(e.value for col in q.cols for e in col)
            for q in csa.gen_queries(theta, qnoise, self.params)
        )

    def iter_query_randomness(self):
        return csa.iter_query_noise(self.params)

    def downloads_for(self, query_payloads: Sequence[tuple[int, ...]]) -> int:
        return sum(1 for q in query_payloads if any(q))

    def answer_fn(self) -> Callable:
        params = self.params
        field = self.field

        def fn(share: tuple[int, ...], query: tuple[int, ...]) -> tuple[int, ...] | None:
            if not any(query):
                return None
            rows = _unflatten(share, params.L, params.K, field)
            cols = _unflatten(query, params.L, params.K, field)
            value = csa.answer(
                csa.StorageShare(1, rows), csa.QueryShare(1, cols)
            )
            return (value.value,)

        return fn

    def decode(
        self,
        theta: int,
        query_payloads: Sequence[tuple[int, ...]],
        answer_payloads: Sequence[tuple[int, ...] | None],
    ) -> tuple[int, ...]:
        f = self.field
        raw = [
            f.zero if a is None else f(a[0]) for a in answer_payloads
        ]
        try:
            out = csa.decode(raw, self.params)
        except SingularMatrixError as exc:
            raise ProtocolInvariantError(f"decode failed: {exc}") from exc
        return tuple(e.value for e in out.desired)


class _DownloadAllSim:
    scheme = "download_all"

    def __init__(self, params: DownloadAllParams):
        self.params = params
        self.field = params.field

    def header(self) -> dict[str, int]:
        p = self.params
        return {"N": p.N, "K": p.K, "X": p.X, "T": p.T, "p": p.p, "L": p.L}

    @property
    def message_length(self) -> int:
        return self.params.L

    def random_messages(self, rng: Random) -> MessageSet:
        return MessageSet.random(self.params.K, self.params.L, self.field, rng)

    def plaintext(self, messages: MessageSet, theta: int) -> tuple[int, ...]:
        return tuple(e.value for e in messages.message(theta))

    def encode(self, messages: MessageSet, rng: Random) -> tuple[tuple[int, ...], ...]:
        noise = special.download_all_noise(self.params, rng)
        shares = special.download_all_encode(messages, noise, self.params)
        return tuple(tuple(e.value for e in s) for s in shares)

    def build_queries(self, theta: int, rng: Random) -> tuple[tuple[int, ...], ...]:
        return ((),) * self.params.N

    def iter_query_randomness(self):
        return iter((None,))

    def queries_from_noise(self, theta: int, qnoise) -> tuple[tuple[int, ...], ...]:
        return ((),) * self.params.N

    def downloads_for(self, query_payloads) -> int:
        return self.params.N * self.params.K

    def answer_fn(self) -> Callable:
        def fn(share: tuple[int, ...], query: tuple[int, ...]) -> tuple[int, ...]:
            # The request is empty by design: send the whole store.
            return share

        return fn

    def decode(self, theta, query_payloads, answer_payloads) -> tuple[int, ...]:
        f = self.field
        payloads = [
            tuple(f(v) for v in (a or ())) for a in answer_payloads
        ]
        decoded = special.download_all_decode(payloads, self.params)
        return tuple(e.value for e in decoded[theta - 1])


class _BinarySim:
    scheme = "binary_n3"

    def __init__(self, k: int):
        self.k = k
        self.b = build_B(k)

    def header(self) -> dict[str, int]:
        return {"N": 3, "K": self.k, "X": 1, "T": 1, "p": 2, "L": 1}

    @property
    def message_length(self) -> int:
        return 1

    def random_messages(self, rng: Random) -> tuple[int, ...]:
        return tuple(rng.randrange(2) for _ in range(self.k))

    def plaintext(self, messages, theta: int) -> tuple[int, ...]:
        return (messages[theta - 1],)

    def encode(self, messages, rng: Random) -> tuple[tuple[int, ...], ...]:
        z = tuple(rng.randrange(2) for _ in range(self.k))
        return special.binary_storage(messages, z, self.b)

    def build_queries(self, theta: int, rng: Random) -> tuple[tuple[int, ...], ...]:
        zp = tuple(rng.randrange(2) for _ in range(self.k))
        return special.binary_queries(theta, zp, self.b)

    def iter_query_randomness(self):
        from itertools import product

        return product((0, 1), repeat=self.k)

    def queries_from_noise(self, theta: int, zp) -> tuple[tuple[int, ...], ...]:
        return special.binary_queries(theta, tuple(zp), self.b)

    def downloads_for(self, query_payloads) -> int:
        return sum(1 for q in query_payloads if any(q))

    def answer_fn(self) -> Callable:
        def fn(share: tuple[int, ...], query: tuple[int, ...]) -> tuple[int, ...] | None:
            a = special.binary_answer(share, query)
            return None if a is None else (a,)

        return fn

    def decode(self, theta, query_payloads, answer_payloads) -> tuple[int, ...]:
        bit = 0
        for a in answer_payloads:
            if a:
                bit ^= a[0]
        return (bit,)


class _SymXspirSim:
    scheme = "sym_xspir"

    def __init__(self, params: SymXspirParams):
        self.params = params
        self.field = params.field

    def header(self) -> dict[str, int]:
        p = self.params
        return {"N": p.N, "K": p.K, "X": p.X, "T": 1, "p": p.p, "L": 1}

    @property
    def message_length(self) -> int:
        return 1

    def random_messages(self, rng: Random) -> tuple:
        f = self.field
        return tuple(f.random(rng) for _ in range(self.params.K))

    def plaintext(self, messages, theta: int) -> tuple[int, ...]:
        return (messages[theta - 1].value,)

    def encode(self, messages, rng: Random) -> tuple[tuple[int, ...], ...]:
        f = self.field
        k = self.params.K
        noise = tuple(
            tuple(tuple(f.random(rng) for _ in range(k)) for _ in range(k))
            for _ in range(self.params.X)
        )
        grids = special.sym_xspir_storage(messages, noise, self.params)
        return tuple(
            tuple(e.value for row in grid for e in row) for grid in grids
        )

    def build_queries(self, theta: int, rng: Random) -> tuple[tuple[int, ...], ...]:
        m_o = rng.randrange(self.params.K) + 1
        return special.sym_xspir_queries(theta, m_o, self.params)

    def iter_query_randomness(self):
        return iter(range(1, self.params.K + 1))

    def queries_from_noise(self, theta: int, m_o) -> tuple[tuple[int, ...], ...]:
        return special.sym_xspir_queries(theta, m_o, self.params)

    def downloads_for(self, query_payloads) -> int:
        return self.params.N * self.params.K

    def answer_fn(self) -> Callable:
        k = self.params.K

        def fn(share: tuple[int, ...], query: tuple[int, ...]) -> tuple[int, ...]:
            grid = [share[i * k : (i + 1) * k] for i in range(k)]
            return tuple(grid[kk][query[kk] - 1] for kk in range(k))

        return fn

    def decode(self, theta, query_payloads, answer_payloads) -> tuple[int, ...]:
        f = self.field
        value = f(answer_payloads[-1][theta - 1])
        for x in range(self.params.X):
            value = value - f(answer_payloads[x][theta - 1])
        return (value.value,)


def _unflatten(flat: Sequence[int], length: int, k: int, field):
    if len(flat) != length * k:
        raise ValueError("payload has wrong symbol count")
    return tuple(
        tuple(field(v) for v in flat[i * k : (i + 1) * k]) for i in range(length)
    )


def _make_sim(params):
    if isinstance(params, CsaParams):
        return _CsaSim(params)
    if isinstance(params, DownloadAllParams):
        return _DownloadAllSim(params)
    if isinstance(params, SymXspirParams):
        return _SymXspirSim(params)
    if isinstance(params, int):
        return _BinarySim(params)
    if isinstance(params, BinarySchemeState):
        return _BinarySim(params.K)
    raise TypeError(f"no simulation for {type(params).__name__}")


def run_retrieval(params, messages, theta: int, seed: int, rng: Random | None = None) -> RetrievalRun:
    """Run one full retrieval against live server actors.

    `params` selects the scheme: CsaParams, DownloadAllParams, SymXspirParams,
    or an int K for the three-server bit scheme. `messages` is the scheme's
    plaintext object (MessageSet or bit/field tuple). All randomness comes
    from `rng` (default: Random(seed)); noise is drawn before query
    randomness, so a fixed seed reproduces the transcript byte for byte.
    """
    sim = _make_sim(params)
    if rng is None:
        rng = Random(seed)
    shares = sim.encode(messages, rng)
    query_payloads = sim.build_queries(theta, rng)
    n = len(shares)

    outbox: "queue.Queue[WireMessage]" = queue.Queue()
    servers = []
    for i in range(n):
        inbox: "queue.Queue[WireMessage]" = queue.Queue()
        server = Server(i + 1, shares[i], sim.answer_fn(), inbox, outbox)
        servers.append(server)
        server.start()
    queries = tuple(
        WireMessage(KIND_QUERY, i + 1, tuple(query_payloads[i])) for i in range(n)
    )
    for server, msg in zip(servers, queries):
        server.inbox.put(msg)
    replies = [outbox.get() for _ in range(n)]
    for server in servers:
        server.join()
        if server.received != [KIND_QUERY]:
            raise ProtocolInvariantError(
                f"server {server.server_id} saw {server.received}"
            )
    replies.sort(key=lambda m: m.server_id)
    if [m.server_id for m in replies] != list(range(1, n + 1)):
        raise ProtocolInvariantError("missing or duplicated answers")

    answer_payloads = [
        None if m.kind == KIND_ANSWER_EMPTY else m.payload for m in replies
    ]
    decoded = sim.decode(theta, [q.payload for q in queries], answer_payloads)
    plaintext = sim.plaintext(messages, theta)
    if decoded != plaintext:
        raise ProtocolInvariantError(
            f"decoded {decoded} but plaintext is {plaintext}"
        )
    header = sim.header()
    transcript = Transcript(
        scheme=sim.scheme,
        N=header["N"],
        K=header["K"],
        X=header["X"],
        T=header["T"],
        p=header["p"],
        L=header["L"],
        seed=seed,
        theta=theta,
        queries=queries,
        answers=tuple(replies),
        decoded=decoded,
    )
    return RetrievalRun(transcript, tuple(shares), plaintext)


def params_from_header(transcript: Transcript):
    """Rebuild the scheme parameters a transcript was produced with."""
    if transcript.scheme == "csa":
        return CsaParams.make(
            transcript.N, transcript.K, transcript.X, transcript.T, p=transcript.p
        )
    if transcript.scheme == "download_all":
        return DownloadAllParams(
            transcript.N, transcript.K, transcript.X, transcript.T, transcript.p
        )
    if transcript.scheme == "binary_n3":
        return transcript.K
    if transcript.scheme == "sym_xspir":
        return SymXspirParams(transcript.X, transcript.K, transcript.p)
    raise ValueError(f"unknown scheme {transcript.scheme!r}")


def replay(text: str) -> tuple[Transcript, tuple[int, ...]]:
    """Re-decode a rendered transcript mechanically.

    Returns the parsed transcript and the value re-decoded from the recorded
    header, queries and answers alone; a faithful transcript re-decodes to
    its own DECODED line.
    """
    transcript = Transcript.parse(text)
    sim = _make_sim(params_from_header(transcript))
    answer_payloads = [
        None if m.kind == KIND_ANSWER_EMPTY else m.payload
        for m in transcript.answers
    ]
    decoded = sim.decode(
        transcript.theta,
        [q.payload for q in transcript.queries],
        answer_payloads,
    )
    return transcript, decoded


def empirical_rate(
    params,
    exhaustive: bool = False,
    trials: int = 1000,
    seed: int = 0,
    theta: int = 1,
) -> Fraction:
    """Message length divided by mean downloaded symbols, as an exact Fraction.

    Exhaustive mode enumerates the query randomness, which fully determines
    the download count (a server downloads nothing exactly when its query
    payload is all zero); sampled mode runs `trials` full retrievals with
    seeds seed, seed+1, ...
    """
    sim = _make_sim(params)
    if exhaustive:
        total = 0
        count = 0
        for qr in sim.iter_query_randomness():
            payloads = sim.queries_from_noise(theta, qr)
            total += sim.downloads_for(payloads)
            count += 1
        return Fraction(sim.message_length * count, total)
    total = 0
    rng_master = Random(seed)
    for i in range(trials):
        messages = sim.random_messages(rng_master)
        run = run_retrieval(params, messages, theta, seed + i)
        total += run.transcript.total_downloaded
    return Fraction(sim.message_length * trials, total)


def collude(
    runs: Sequence[RetrievalRun], servers: Sequence[int]
) -> dict[int, tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]]:
    """Assemble the view of a colluding server subset across retrievals.

    For each listed server id, the view is the tuple over runs of (stored
    share payload, received query payload), exactly what that server held
    and saw; nothing else leaks into it.
    """
    if not servers:
        raise ValueError("collusion set must be nonempty")
    view: dict[int, tuple] = {}
    for sid in servers:
        entries = []
        for run in runs:
            if not 1 <= sid <= len(run.shares):
                raise ValueError(f"server {sid} not present in run")
            entries.append((run.shares[sid - 1], run.transcript.queries[sid - 1].payload))
        view[sid] = tuple(entries)
    return view
