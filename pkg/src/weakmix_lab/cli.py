"""Command-line runner: ``weakmix-lab <subcommand> [flags]``.

Each subcommand writes a CSV table (header row first) to stdout, or to
``<out>.csv`` together with a JSON report ``<out>.json`` when ``--out`` is
given.  Exit status is 0 on success, 1 when a computation fails and 2 for an
invalid configuration.  ``--config file.json`` supplies defaults for any
flag (keys use underscores, e.g. ``"N_list"``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigInvalid, WeakmixError
from .report import ExperimentReport, config_hash, rows_to_csv


def _int_list(text: str) -> list[int]:
    return [int(eval_int(t)) for t in text.split(",") if t.strip()]


def eval_int(text: str) -> int:
    """Integers written plainly or as powers ``a^b`` / ``a**b``."""
    t = text.strip().replace("**", "^")
    if "^" in t:
        a, b = t.split("^", 1)
        return int(a) ** int(b)
    return int(t)


def _float_list(text: str) -> list[float]:
    return [float(Fraction(t.strip())) for t in text.split(",") if t.strip()]


def _omegas(args) -> list[float]:
    if args.omega_grid is not None:
        g = args.omega_grid
        if "," in g or "/" in g or "." in g:
            return _float_list(g)
        M = eval_int(g)
        if M < 1:
            raise ConfigInvalid("--omega-grid needs M >= 1")
        return [i / M for i in range(M)]
    if args.omega is not None:
        return [float(Fraction(args.omega))]
    raise ConfigInvalid("give --omega or --omega-grid")


class Output:
    """Collects the table and report of one run and writes them once."""

    def __init__(self, args, config: dict):
        self.args = args
        self.config = config
        self.header: Sequence[str] = ()
        self.rows: list = []
        self.report: ExperimentReport | None = None
        self.text: str | None = None
        self.exit_code = 0

    def table(self, header, rows) -> None:
        self.header, self.rows = list(header), [list(r) for r in rows]

    def emit(self) -> None:
        csv_text = rows_to_csv(self.header, self.rows) if self.header else None
        rep = self.report or ExperimentReport(self.args.command, self.config)
        if self.header and not self.report:
            rep.columns, rep.series = tuple(self.header), [tuple(r) for r in self.rows]
        rep.config = self.config
        if self.args.out:
            with open(self.args.out + ".json", "w", encoding="utf-8") as fh:
                fh.write(rep.to_json())
            if csv_text is not None:
                with open(self.args.out + ".csv", "w", encoding="utf-8") as fh:
                    fh.write(csv_text)
        if self.text is not None:
            sys.stdout.write(self.text + "\n")
        elif csv_text is not None and not self.args.out:
            sys.stdout.write(csv_text)


def _subst(args):
    from .substitution import resolve_substitution

    try:
        return resolve_substitution(args.subst)
    except FileNotFoundError:
        raise ConfigInvalid(f"unknown substitution {args.subst!r}") from None
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"bad substitution file: {e}") from None


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigInvalid(msg)


def _observable(subst, n: int, word: str | None):
    """Centered indicator ``1_[w] - μ([w])`` of a rank-n cylinder."""
    from .substitution import enumerate_factors
    from .twisted import CylFunction

    table = enumerate_factors(subst, n)
    w = word or table.factors[0]
    _require(w in table, f"{w!r} is not a factor of rank {n}")
    f = CylFunction.indicator(subst, w)
    return CylFunction(subst, n, f.coeffs - f.mean), w


def cmd_fixed_point(args, out: Output) -> None:
    from .substitution import fixed_point_prefix

    subst = _subst(args)
    _require(args.len is not None and args.len >= 0, "--len must be >= 0")
    letter = args.letter or subst.alphabet[0]
    out.text = fixed_point_prefix(subst, letter, args.len)
    out.table(["length", "word"], [[args.len, out.text]])


def cmd_factors(args, out: Output) -> None:
    from .substitution import enumerate_factors, frequency_table

    subst = _subst(args)
    n = args.rank or 1
    _require(n >= 1, "--rank must be >= 1")
    table = enumerate_factors(subst, n)
    mu = frequency_table(subst, n)
    out.table(["index", "word", "frequency"], [[k, w, float(m)] for k, (w, m) in enumerate(zip(table.factors, mu))])


def cmd_code_orbit(args, out: Output) -> None:
    from .chacon import code_orbit

    _require(args.len is not None and args.len >= 0, "--len must be >= 0")
    x = Fraction(args.x)
    _require(0 <= x < 1, "--x must lie in [0, 1)")
    out.text = code_orbit(x, args.len, args.max_stage)
    out.table(["x", "length", "code"], [[str(x), args.len, out.text]])


def cmd_twisted_sum(args, out: Output) -> None:
    from .spectral import fixed_point
    from .twisted import phi_f

    subst = _subst(args)
    n = args.rank or 1
    L = args.len or 3**6
    f, w = _observable(subst, n, args.word)
    v = fixed_point(subst, L)
    rows = []
    for om in _omegas(args):
        val = phi_f(v, om, f)
        rows.append([om, val.real, val.imag, abs(val)])
    out.table(["omega", "re", "im", "abs"], rows)
    out.config["word"] = w


def cmd_pi_check(args, out: Output) -> None:
    from .twisted import pi_direct, pi_recursive

    subst = _subst(args)
    _require(args.m is not None and args.n is not None, "--m and --n are required")
    rows = []
    worst = 0.0
    for om in _omegas(args):
        err = float(np.max(np.abs(pi_recursive(subst, args.m, args.n, om).columns
                                  - pi_direct(subst, args.m, args.n, om).columns)))
        worst = max(worst, err)
        rows.append([om, args.m, args.n, err])
    out.table(["omega", "m", "n", "max_err"], rows)
    out.report = ExperimentReport("pi-check", out.config, [tuple(r) for r in rows],
                                  columns=("omega", "m", "n", "max_err"),
                                  flags={"within_1e-9": worst <= 1e-9})
    if worst > 1e-9:
        out.exit_code = 1


def _veech_rows(payload):
    from .twisted import veech_sweep_rows

    subst, om, n, m = payload
    return veech_sweep_rows(subst, [om], n, m)


def cmd_veech_sweep(args, out: Output) -> None:
    subst = _subst(args)
    n = args.n if args.n is not None else 2
    m = args.m if args.m is not None else 12
    _require(m > n >= 0, "need --m > --n >= 0")
    oms = _omegas(args) if (args.omega or args.omega_grid) else [i / 10 for i in range(1, 10)]
    payloads = [(subst, om, n, m) for om in oms]
    if args.workers and args.workers > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            chunks = list(ex.map(_veech_rows, payloads))
    else:
        chunks = [_veech_rows(p) for p in payloads]
    rows = [r for ch in chunks for r in ch]
    cols = ["omega", "m", "n", "max_abs_entry", "bound_value", "c_fit"]
    out.table(cols, [[r[c] for c in cols] for r in rows])
    rep = ExperimentReport("veech-sweep", out.config, [tuple(r[c] for c in cols) for r in rows],
                           columns=tuple(cols))
    rep.fit("c_prime", min(r["c_fit"] for r in rows), oms[0], oms[-1])
    out.report = rep


def cmd_discrepancy(args, out: Output) -> None:
    from .spectral import discrepancy

    subst = _subst(args)
    N_list = args.N_list or [3**k for k in range(5, 11)]
    rep = discrepancy(subst, N_list, args.rank or 5, seed=args.seed)
    out.report = rep
    out.table(rep.columns, rep.series)


def cmd_spectral_density(args, out: Output) -> None:
    from .spectral import spectral_density

    subst = _subst(args)
    n = args.rank or 2
    N = args.N or 64
    M = eval_int(args.omega_grid) if args.omega_grid else 2 * N
    _require(M >= 2 * N, "--omega-grid must be at least 2N")
    f, w = _observable(subst, n, args.word)
    g = spectral_density(f, N, M, form=args.form, seed=args.seed)
    out.table(["omega", "G_N"], [[float(o), float(v)] for o, v in zip(g.omegas, g.values)])
    rep = ExperimentReport("spectral-density", out.config, [(float(o), float(v)) for o, v in zip(g.omegas, g.values)],
                           columns=("omega", "G_N"))
    rep.extra.update({"grid_mean": g.mean, "l2_sq": float(f.coeffs ** 2 @ f.measures), "word": w})
    out.report = rep


def _cos_pair():
    from .observables import cosine

    f = cosine(1)
    return f, f


def cmd_weakmix_upper(args, out: Output) -> None:
    from .mixing import weakmix_average

    N_list = args.N_list or [3**k for k in range(4, 11)]
    _require(all(N >= 1 for N in N_list), "N must be >= 1")
    f, g = _cos_pair()
    rep = weakmix_average(f, g, N_list, args.q)
    rep.extra.pop("_series", None)
    out.report = rep
    out.table(rep.columns, rep.series)


def cmd_weakmix_lower(args, out: Output) -> None:
    from .mixing import lower_bound_experiment

    N = args.N or 10**4
    _require(N >= 2, "--N must be >= 2")
    rep = lower_bound_experiment(N, args.k)
    out.report = rep
    out.table(rep.columns, rep.series)


def cmd_exceptional_set(args, out: Output) -> None:
    from .mixing import correlation_series, exceptional_set

    N_list = sorted(args.N_list or [3**k for k in range(4, 11)])
    f, g = _cos_pair()
    c = correlation_series(f, g, N_list[-1], args.q)
    ex = exceptional_set(c ** 2, N_list=N_list)
    rows = [[N, ex.density[N], math.sqrt(ex.b[N - 1]), math.log(N, 3) ** (-1 / 6), ex.guarantee[N]]
            for N in N_list]
    cols = ["N", "density", "markov_bound", "claimed_rate", "guarantee"]
    out.table(cols, rows)
    out.report = ExperimentReport("exceptional-set", out.config, [tuple(r) for r in rows],
                                  columns=tuple(cols), flags={"markov": all(ex.guarantee.values())})


def cmd_empty_times(args, out: Output) -> None:
    from .chacon import empty_intersection_times

    _require(args.k is not None and args.k >= 0, "--k must be >= 0")
    _require(args.N is not None and args.N >= 1, "--N must be >= 1")
    E = empty_intersection_times(args.k, args.N, max_stage=args.max_stage)
    out.table(["k", "n"], [[args.k, n] for n in E])


COMMANDS: dict[str, Callable] = {
    "fixed-point": cmd_fixed_point,
    "factors": cmd_factors,
    "code-orbit": cmd_code_orbit,
    "twisted-sum": cmd_twisted_sum,
    "pi-check": cmd_pi_check,
    "veech-sweep": cmd_veech_sweep,
    "discrepancy": cmd_discrepancy,
    "spectral-density": cmd_spectral_density,
    "weakmix-upper": cmd_weakmix_upper,
    "weakmix-lower": cmd_weakmix_lower,
    "exceptional-set": cmd_exceptional_set,
    "empty-times": cmd_empty_times,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--subst", default="beta", help="alpha, beta, fibonacci or a JSON file")
    common.add_argument("--k", type=int)
    common.add_argument("--N", type=eval_int)
    common.add_argument("--N-list", dest="N_list", type=_int_list)
    common.add_argument("--omega")
    common.add_argument("--omega-grid", dest="omega_grid")
    common.add_argument("--rank", type=int)
    common.add_argument("--len", type=eval_int)
    common.add_argument("--m", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--x", default="0")
    common.add_argument("--word")
    common.add_argument("--letter")
    common.add_argument("--form", default="autocorrelation", choices=["autocorrelation", "orbit"])
    common.add_argument("--q", type=int, default=9, help="quadrature grid has 3^q points")
    common.add_argument("--workers", type=int, default=0)
    common.add_argument("--out")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-stage", dest="max_stage", type=int, default=20)
    common.add_argument("--config")
    p = argparse.ArgumentParser(prog="weakmix-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def _apply_config(args, parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    if not args.config:
        return
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"cannot read config: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, val in cfg.items():
        key = key.replace("-", "_")
        if key == "command":
            continue
        if not hasattr(args, key):
            raise ConfigInvalid(f"unknown config key {key!r}")
        if key not in given:
            setattr(args, key, val)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and 2
    try:
        _apply_config(args, parser, argv)
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config", "workers")}
        out = Output(args, config)
        COMMANDS[args.command](args, out)
        out.emit()
        return out.exit_code
    except ConfigInvalid as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (WeakmixError, ArithmeticError, MemoryError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


__all__ = ["build_parser", "config_hash", "main"]


if __name__ == "__main__":
    sys.exit(main())
