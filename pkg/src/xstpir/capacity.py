"""Exact rate and capacity formulas for private information retrieval.

Rates are returned as fractions.Fraction values, always in lowest terms and
always in [0, 1]. Comparisons against the irrational benchmark (1 - 1/sqrt(N))^2
are done by squaring, so they too are exact; floats appear only in the helper
that renders that benchmark for display.
"""

from __future__ import annotations

from fractions import Fraction


def c_pir(n: int, k: int) -> Fraction:
    """Capacity of plain replicated PIR: (1 + 1/N + ... + 1/N^(K-1))^-1."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    return 1 / sum(Fraction(1, n**i) for i in range(k))


def c_tpir(n: int, k: int, t: int) -> Fraction:
    """Capacity of T-private PIR.

    (1 + T/N + ... + (T/N)^(K-1))^-1 when T < N; degenerates to 1/K when
    T >= N, where downloading everything is optimal.
    """
    if n < 1 or k < 1 or t < 1:
        raise ValueError("need n >= 1, k >= 1, t >= 1")
    if t >= n:
        return Fraction(1, k)
    return 1 / sum(Fraction(t, n) ** i for i in range(k))


def xstpir_upper_bound(n: int, k: int, x: int, t: int) -> Fraction:
    """Upper bound on X-secure T-private capacity: ((N-X)/N) * C_TPIR(N-X, K, T)."""
    if not 0 <= x < n:
        raise ValueError("need 0 <= x < n")
    return Fraction(n - x, n) * c_tpir(n - x, k, t)


def xstpir_asymptotic(n: int, x: int, t: int) -> Fraction:
    """Large-K capacity: 1 - (X+T)/N when N > X+T, else 0."""
    if not 0 <= x < n:
        raise ValueError("need 0 <= x < n")
    if t < 1:
        raise ValueError("need t >= 1")
    if n <= x + t:
        return Fraction(0)
    return Fraction(n - x - t, n)


def c_n3(k: int) -> Fraction:
    """Exact capacity at N=3, X=T=1: (2/3) * (1 + 1/2 + ... + 1/2^(K-1))^-1."""
    if k < 1:
        raise ValueError("need k >= 1")
    return Fraction(2, 3) / sum(Fraction(1, 2**i) for i in range(k))


def finite_k_rate(n: int, x: int, t: int, k: int, q: int, length: int) -> Fraction:
    """Rate achieved at finite K by the aligned scheme with L-symbol messages.

    (1 - 1/q^(K*L))^-1 * (1 - (X+T)/N): the second factor is the asymptotic
    rate, the first accounts for the q^-KL chance that a server's query
    vector is all zero and costs no download.
    """
    if n <= x + t:
        raise ValueError("need n > x + t")
    if k < 1 or length < 1 or q < 2:
        raise ValueError("need k >= 1, length >= 1, q >= 2")
    return Fraction(n - x - t, n) / (1 - Fraction(1, q ** (k * length)))


def mds_pir_rate(n: int, k: int, m: int) -> Fraction:
    """Rate of PIR over (N, M) MDS-coded storage with K messages.

    ((M-1)/M) * (1 + M/N + ... + (M/N)^(K-1))^-1, valid for 2 <= M < N;
    at M >= N the geometric series has ratio >= 1 and the construction
    degenerates, so that is rejected.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    if m >= n:
        raise ValueError("need m < n: the M/N geometric series diverges otherwise")
    if m < 2:
        raise ValueError("need m >= 2")
    return Fraction(m - 1, m) / sum(Fraction(m, n) ** i for i in range(k))


def mds_pir_asym(n: int, m: int) -> Fraction:
    """Large-K limit of mds_pir_rate: ((M-1)/M) * (1 - M/N)."""
    if m >= n:
        raise ValueError("need m < n")
    if m < 2:
        raise ValueError("need m >= 2")
    return Fraction(m - 1, m) * (1 - Fraction(m, n))


def best_mds_pir_asym(n: int) -> tuple[int, Fraction]:
    """Best integer code dimension M in [2, N-1] and its asymptotic rate."""
    if n < 3:
        raise ValueError("need n >= 3 so that some 2 <= m < n exists")
    best_m, best = 2, mds_pir_asym(n, 2)
    for m in range(3, n):
        r = mds_pir_asym(n, m)
        if r > best:
            best_m, best = m, r
    return best_m, best


def rate_le_sqrt_bound(rate: Fraction, n: int) -> bool:
    """Exact test of rate <= (1 - 1/sqrt(N))^2.

    Rearranged to 2/sqrt(N) <= 1 + 1/N - rate and squared, which keeps the
    comparison in rational arithmetic.
    """
    slack = 1 + Fraction(1, n) - rate
    if slack < 0:
        return False
    return slack * slack >= Fraction(4, n)


def sqrt_bound_lt_asymptotic(n: int) -> bool:
    """Exact test of (1 - 1/sqrt(N))^2 < 1 - 2/N; reduces to 9 < 4N."""
    if n < 1:
        raise ValueError("need n >= 1")
    return 4 * n > 9


def sqrt_bound_float(n: int) -> float:
    """(1 - 1/sqrt(N))^2 as a float, for display only."""
    return (1 - n**-0.5) ** 2
