"""X-secure T-private information retrieval over prime fields.

Components:

- field: exact prime-field and GF(2) bit-matrix arithmetic;
- csa: the cross-subspace-alignment scheme for N > X + T servers;
- special: download-everything (N <= X + T), the three-server bit scheme,
  and the symmetrically secure N = X + 1 scheme;
- capacity: exact rate and capacity formulas as Fractions;
- audit: exhaustive distribution audits (security, privacy, symmetric
  security, correctness) with exact total-variation distances;
- sim: threaded server actors, wire format, replayable transcripts;
- cli: the xstpir command.
"""

from .capacity import (
    c_n3,
    c_pir,
    c_tpir,
    finite_k_rate,
    mds_pir_asym,
    mds_pir_rate,
    xstpir_asymptotic,
    xstpir_upper_bound,
)
from .csa import (
    CsaParams,
    DecodeOutput,
    MessageSet,
    QueryNoise,
    QueryShare,
    StorageNoise,
    StorageShare,
    answer,
    choose_alphas,
    decode,
    decoding_matrix,
    delta,
    delta_except,
    encode_storage,
    gen_queries,
    interference_aligned,
)
from .field import (
    BinMatrix,
    Fe,
    FieldMismatchError,
    InsufficientFieldError,
    PrimeField,
    SingularMatrixError,
    bin_det,
    bin_inv,
    smallest_valid_prime,
    solve_linear,
)
from .sim import (
    ProtocolInvariantError,
    RetrievalRun,
    Transcript,
    WireMessage,
    collude,
    empirical_rate,
    replay,
    run_retrieval,
)
from .special import (
    BinaryRound,
    BinarySchemeState,
    DownloadAllParams,
    SymXspirParams,
    SymXspirRound,
    SymXspirState,
    binary_round,
    build_B,
    download_all_decode,
    download_all_encode,
    download_all_retrieve,
    sym_xspir_round,
)

__all__ = [
    "BinMatrix", "BinaryRound", "BinarySchemeState", "CsaParams",
    "DecodeOutput", "DownloadAllParams", "Fe", "FieldMismatchError",
    "InsufficientFieldError", "MessageSet", "PrimeField",
    "ProtocolInvariantError", "QueryNoise", "QueryShare", "RetrievalRun",
    "SingularMatrixError", "StorageNoise", "StorageShare", "SymXspirParams",
    "SymXspirRound", "SymXspirState", "Transcript", "WireMessage",
    "answer", "bin_det", "bin_inv", "binary_round", "build_B", "c_n3",
    "c_pir", "c_tpir", "choose_alphas", "collude", "decode",
    "decoding_matrix", "delta", "delta_except", "download_all_decode",
    "download_all_encode", "download_all_retrieve", "empirical_rate",
    "encode_storage", "finite_k_rate", "gen_queries", "interference_aligned",
    "mds_pir_asym", "mds_pir_rate", "replay", "run_retrieval",
    "smallest_valid_prime", "solve_linear", "sym_xspir_round",
    "xstpir_asymptotic", "xstpir_upper_bound",
]

__version__ = "0.1.0"
