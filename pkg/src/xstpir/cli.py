"""Command-line front end.

Subcommands: retrieve (run one retrieval, write the transcript), audit (run
a distribution audit, write the report), rate (empirical download rate),
capacity (exact bounds and achieved rates), bench (CSV rate curves over N).

Exit codes: 0 on success, 1 when an audit fails, 2 on usage errors. Every
numeric option can also come from a key=value config file ('#' starts a
comment); explicit flags win over the file. The default seed comes from the
XSTPIR_SEED environment variable when set.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from random import Random

from . import audit as audit_mod
from . import capacity, sim
from .csa import CsaParams
from .field import InsufficientFieldError, smallest_valid_prime
from .special import DownloadAllParams, SymXspirParams

SCHEMES = ("csa", "download_all", "binary_n3", "sym_xspir")
PROPERTIES = ("security", "privacy", "sym-security", "correctness")


class UsageError(ValueError):
    """Bad command line or config: reported on stderr with exit code 2."""


@dataclass
class ExperimentConfig:
    """A validated experiment: scheme, dimensions, modulus, seed."""

    scheme: str
    N: int
    K: int
    X: int
    T: int
    seed: int
    prime: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise UsageError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        for name, value in (("N", self.N), ("K", self.K), ("X", self.X), ("T", self.T)):
            if value < 1:
                raise UsageError(f"{name} must be a positive integer, got {value}")

    def build_params(self):
        """Map the regime to its scheme, rejecting out-of-regime dimensions."""
        try:
            if self.scheme == "csa":
                if self.N <= self.X + self.T:
                    raise UsageError(
                        "csa needs N > X + T; for X < N <= X + T use download_all"
                    )
                return CsaParams.make(self.N, self.K, self.X, self.T, p=self.prime)
            if self.scheme == "download_all":
                if not self.X < self.N <= self.X + self.T:
                    raise UsageError(
                        "download_all needs X < N <= X + T; for N > X + T use csa"
                    )
                return DownloadAllParams.make(self.N, self.K, self.X, self.T, p=self.prime)
            if self.scheme == "binary_n3":
                if (self.N, self.X, self.T) != (3, 1, 1):
                    raise UsageError("binary_n3 is fixed at N=3, X=1, T=1")
                if self.K < 2:
                    raise UsageError(
                        "binary_n3 needs K >= 2: no K x K bit matrix B has both "
                        "B and I+B invertible at K=1"
                    )
                if self.prime not in (None, 2):
                    raise UsageError("binary_n3 runs over GF(2); drop --prime")
                return self.K
            if self.N != self.X + 1:
                raise UsageError("sym_xspir needs N = X + 1")
            if self.T != 1:
                raise UsageError("sym_xspir is single-query-private: T must be 1")
            return SymXspirParams.make(self.X, self.K, p=self.prime)
        except (InsufficientFieldError, ValueError) as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(str(exc)) from exc


def read_config_file(path: str) -> dict[str, str]:
    """key=value lines; blank lines and '#' comments are ignored."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


_INT_KEYS = ("N", "K", "X", "T", "seed", "theta", "prime", "trials", "samples",
             "cap", "subset_size", "n_min", "n_max")
_BOOL_KEYS = ("exhaustive", "sampled")
_STR_KEYS = ("scheme", "property", "out")


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config file, then parse value types."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key, raw in file_values.items():
        attr = key.replace("-", "_")
        if attr not in vars(args):
            raise UsageError(f"config key {key!r} is not an option of this command")
        if attr in _BOOL_KEYS:
            # store_true flags default to False, so False means "not given".
            if getattr(args, attr):
                continue
            if raw.lower() not in ("true", "false", "0", "1"):
                raise UsageError(f"config key {key!r} wants true/false, got {raw!r}")
            setattr(args, attr, raw.lower() in ("true", "1"))
            continue
        if getattr(args, attr) is not None:
            continue  # explicit flag wins
        if attr in _INT_KEYS:
            try:
                setattr(args, attr, int(raw))
            except ValueError:
                raise UsageError(f"config key {key!r} wants an integer, got {raw!r}")
        elif attr in _STR_KEYS:
            setattr(args, attr, raw)
        else:
            raise UsageError(f"config key {key!r} is not recognized")
    return args


def _default_seed() -> int:
    raw = os.environ.get("XSTPIR_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"XSTPIR_SEED must be an integer, got {raw!r}")


def _experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    missing = [name for name in ("scheme", "N", "K", "X", "T")
               if getattr(args, name) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")
    seed = args.seed if args.seed is not None else _default_seed()
    return ExperimentConfig(
        scheme=args.scheme, N=args.N, K=args.K, X=args.X, T=args.T,
        seed=seed, prime=args.prime,
    )


def _fmt(value: Fraction) -> str:
    return f"{value} ({float(value):.6f})"


def cmd_retrieve(args: argparse.Namespace) -> int:
    cfg = _experiment_from_args(args)
    params = cfg.build_params()
    theta = args.theta if args.theta is not None else 1
    if not 1 <= theta <= cfg.K:
        raise UsageError(f"theta must be in 1..{cfg.K}")
    rng = Random(cfg.seed)
    scheme_sim = sim._make_sim(params)
    messages = scheme_sim.random_messages(rng)
    run = sim.run_retrieval(params, messages, theta, cfg.seed, rng=rng)
    t = run.transcript
    out = args.out if args.out is not None else "transcript.txt"
    Path(out).write_text(t.render())
    print(f"scheme {t.scheme} N={t.N} K={t.K} X={t.X} T={t.T} p={t.p} L={t.L} "
          f"theta={t.theta} seed={t.seed}")
    print(f"plaintext {' '.join(map(str, run.plaintext))}")
    print(f"decoded   {' '.join(map(str, t.decoded))}")
    print(f"match {'true' if t.decoded == run.plaintext else 'false'}")
    print(f"downloads per server: {' '.join(map(str, t.downloaded))} "
          f"(total {t.total_downloaded})")
    rate = Fraction(t.L, t.total_downloaded) if t.total_downloaded else Fraction(0)
    print(f"rate this retrieval: {_fmt(rate)}")
    print(f"transcript written to {out}")
    return 0


def _audit_instance(cfg: ExperimentConfig, params):
    if cfg.scheme == "csa":
        return audit_mod.CsaInstance(params)
    if cfg.scheme == "download_all":
        return audit_mod.DownloadAllInstance(params)
    if cfg.scheme == "binary_n3":
        return audit_mod.BinaryInstance(params)
    return audit_mod.SymXspirInstance(params)


def cmd_audit(args: argparse.Namespace) -> int:
    cfg = _experiment_from_args(args)
    params = cfg.build_params()
    inst = _audit_instance(cfg, params)
    prop = args.property
    if prop is None:
        raise UsageError(f"--property is required; pick one of {PROPERTIES}")
    cap = args.cap if args.cap is not None else audit_mod.DEFAULT_CAP
    samples = args.samples if args.samples is not None else audit_mod.DEFAULT_SAMPLES
    subset_size = args.subset_size
    work = audit_mod.estimate_work(inst, {
        "security": audit_mod.X_SECURITY,
        "privacy": audit_mod.T_PRIVACY,
        "sym-security": audit_mod.SYM_SECURITY,
        "correctness": audit_mod.CORRECTNESS,
    }[prop], subset_size)
    if work > cap and not args.sampled:
        raise UsageError(
            f"exhaustive audit would enumerate {work} realizations, over the cap "
            f"of {cap}; rerun with --sampled (or raise --cap) to proceed"
        )
    kwargs = {"cap": cap, "samples": samples, "seed": cfg.seed}
    if args.sampled:
        kwargs["cap"] = 0  # force the sampled path
    if prop == "security":
        report = audit_mod.audit_security(inst, subset_size, **kwargs)
    elif prop == "privacy":
        report = audit_mod.audit_privacy(inst, subset_size, **kwargs)
    elif prop == "sym-security":
        report = audit_mod.audit_sym_security(inst, **kwargs)
    else:
        report = audit_mod.audit_correctness(inst, **kwargs)
    out = args.out if args.out is not None else "audit_report.txt"
    Path(out).write_text(report.render())
    sys.stdout.write(report.render())
    print(f"report written to {out}")
    return 0 if report.passed else 1


def cmd_rate(args: argparse.Namespace) -> int:
    cfg = _experiment_from_args(args)
    params = cfg.build_params()
    theta = args.theta if args.theta is not None else 1
    exhaustive = bool(args.exhaustive)
    trials = args.trials if args.trials is not None else 1000
    measured = sim.empirical_rate(
        params, exhaustive=exhaustive, trials=trials, seed=cfg.seed, theta=theta
    )
    closed = _closed_form_rate(cfg)
    mode = "exhaustive" if exhaustive else f"sampled over {trials} trials"
    print(f"scheme {cfg.scheme} N={cfg.N} K={cfg.K} X={cfg.X} T={cfg.T}")
    print(f"empirical rate ({mode}): {_fmt(measured)}")
    print(f"closed form: {_fmt(closed)}")
    print(f"match {'true' if measured == closed else 'false'}")
    return 0


def _closed_form_rate(cfg: ExperimentConfig) -> Fraction:
    if cfg.scheme == "csa":
        length = cfg.N - cfg.X - cfg.T
        q = cfg.prime if cfg.prime else smallest_valid_prime(cfg.N, length)
        return capacity.finite_k_rate(cfg.N, cfg.X, cfg.T, cfg.K, q, length)
    if cfg.scheme == "binary_n3":
        return capacity.finite_k_rate(3, 1, 1, cfg.K, 2, 1)
    if cfg.scheme == "download_all":
        return Fraction(cfg.N - cfg.X, cfg.N * cfg.K)
    return Fraction(1, cfg.K * cfg.N)


def cmd_capacity(args: argparse.Namespace) -> int:
    n, x, t = args.N, args.X, args.T
    if n is None or x is None or t is None:
        raise UsageError("capacity needs -N, -X and -T (and optionally -K)")
    if not 0 <= x < n or t < 1:
        raise UsageError("need 0 <= X < N and T >= 1")
    k = args.K
    print(f"N={n} X={x} T={t}" + (f" K={k}" if k is not None else " K=inf"))
    asym = capacity.xstpir_asymptotic(n, x, t)
    if k is None:
        print(f"asymptotic capacity {_fmt(asym)}")
        return 0
    if k < 1:
        raise UsageError("K must be >= 1")
    bound = capacity.xstpir_upper_bound(n, k, x, t)
    print(f"upper bound {_fmt(bound)}")
    print(f"asymptotic capacity {_fmt(asym)}")
    achieved, scheme, tight = _best_achieved(n, k, x, t, bound)
    if achieved is not None:
        tag = " TIGHT" if tight else ""
        print(f"achieved {_fmt(achieved)} scheme={scheme}{tag}")
    return 0


def _best_achieved(n, k, x, t, bound):
    """Best rate this package actually achieves at finite K, if any."""
    if x >= 1 and n <= x + t:
        rate = Fraction(n - x, n * k)
        return rate, "download_all", rate == bound
    if (n, x, t) == (3, 1, 1) and k >= 2:
        rate = capacity.c_n3(k)
        return rate, "binary_n3", rate == bound
    if x >= 1 and n > x + t:
        length = n - x - t
        q = smallest_valid_prime(n, length)
        rate = capacity.finite_k_rate(n, x, t, k, q, length)
        return rate, "csa", rate == bound
    return None, "", False


def cmd_bench(args: argparse.Namespace) -> int:
    n_min = args.n_min if args.n_min is not None else 3
    n_max = args.n_max if args.n_max is not None else 100
    if n_min < 3 or n_max < n_min:
        raise UsageError("need 3 <= n-min <= n-max")
    lines = ["N,mds_best_M,mds_best_num,mds_best_den,mds_best,sqrt_bound,"
             "xstpir_num,xstpir_den,xstpir"]
    for n in range(n_min, n_max + 1):
        best_m, mds = capacity.best_mds_pir_asym(n)
        ours = capacity.xstpir_asymptotic(n, 1, 1)
        # Exact ordering checks: MDS best <= (1-1/sqrt(N))^2 < 1 - 2/N.
        assert capacity.rate_le_sqrt_bound(mds, n)
        assert capacity.sqrt_bound_lt_asymptotic(n)
        lines.append(
            f"{n},{best_m},{mds.numerator},{mds.denominator},{float(mds):.6f},"
            f"{capacity.sqrt_bound_float(n):.6f},"
            f"{ours.numerator},{ours.denominator},{float(ours):.6f}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {n_max - n_min + 1} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _add_scheme_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=SCHEMES, default=None)
    p.add_argument("-N", type=int, default=None, help="number of servers")
    p.add_argument("-K", type=int, default=None, help="number of messages")
    p.add_argument("-X", type=int, default=None, help="storage security threshold")
    p.add_argument("-T", type=int, default=None, help="query privacy threshold")
    p.add_argument("--prime", type=int, default=None, help="field modulus override")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $XSTPIR_SEED or 0)")
    p.add_argument("--config", default=None, help="key=value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xstpir",
        description="X-secure T-private information retrieval: schemes, audits, rates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("retrieve", help="run one retrieval and write its transcript")
    _add_scheme_options(p)
    p.add_argument("--theta", type=int, default=None, help="message index, 1-based")
    p.add_argument("--out", default=None, help="transcript path (default transcript.txt)")
    p.set_defaults(fn=cmd_retrieve)

    p = sub.add_parser("audit", help="run a distribution audit and write its report")
    _add_scheme_options(p)
    p.add_argument("--property", choices=PROPERTIES, default=None)
    p.add_argument("--subset-size", dest="subset_size", type=int, default=None,
                   help="override the audited collusion size")
    p.add_argument("--sampled", action="store_true",
                   help="allow the randomized fallback beyond the cap")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--cap", type=int, default=None,
                   help="max exhaustive enumeration size")
    p.add_argument("--out", default=None, help="report path (default audit_report.txt)")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("rate", help="measure the download rate")
    _add_scheme_options(p)
    p.add_argument("--theta", type=int, default=None)
    p.add_argument("--exhaustive", action="store_true",
                   help="enumerate the query randomness exactly")
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(fn=cmd_rate)

    p = sub.add_parser("capacity", help="print exact bounds and achieved rates")
    p.add_argument("-N", type=int, default=None)
    p.add_argument("-K", type=int, default=None, help="omit for the asymptotic row only")
    p.add_argument("-X", type=int, default=None)
    p.add_argument("-T", type=int, default=None)
    p.set_defaults(fn=cmd_capacity)

    p = sub.add_parser("bench", help="CSV rate curves over a range of N (X=T=1)")
    p.add_argument("--n-min", dest="n_min", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "config"):
            args = _merge_config(args)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
