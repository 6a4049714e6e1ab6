"""Command-line surface for pair values, Gram sweeps, fits, and probes.

Run as ``grhcot <command>`` or ``python3 -m grhcot.cli <command>``.

Commands
  cmn     one pair value c(m, n), optionally as an exact cotangent sum
  matrix  the N x N pair matrix, CSV rows or JSON
  sweep   growing Cholesky sweep: CSV rows ``N,R,dist2,logdetC`` + fit block
  fit     log-linear fit of R over a window, from a sweep CSV or recomputed
  eval    point values of H, C, Hs, Cs, T
  probe   structured JSON reports: continuity, cocycle, asymp, maass
  cache   pair-cache maintenance: stats, warm

Shared flags: ``-D/--discriminant`` (default -4), ``--rel-tol`` (default
1e-12), ``--threads`` (default: machine), ``--cache PATH`` (default from
``GRHCOT_CACHE``), ``--format {csv,json}`` (default csv; probe always
emits JSON), ``--out PATH``, ``--config PATH``, ``--stats``.

Config files are INI-style ``key = value`` lines (keys: discriminant,
rel_tol, threads, cache, format, out; ``#`` or ``;`` comments).  Flags
override config values.  The raw config text is echoed verbatim in the
metadata for reproducibility.

Output protocol: one JSON metadata line (sorted keys) goes to stdout
first, carrying the command name, the resolved run configuration, the
verbatim config text, any command extras (the sweep fit block), and,
under ``--stats``, cache hit/miss counters.  The payload follows on
stdout, or goes alone to ``--out`` so payload files stay pure CSV/JSON.
Nothing in the metadata or payload depends on time, thread count, or
cache state, so reruns are byte-identical.

Payload schemas
  cmn     csv: optional exact-expression line, then the value; json:
          {"m","n","value"} plus {"exact"} with --exact
  matrix  csv: N rows of N comma-separated floats (no header); json:
          {"N","entries"}
  sweep   csv: header ``N,R,dist2,logdetC`` then one row per N; json:
          {"records":[{"N","R","dist2","logdetC"}...]}; the fit block
          rides in the metadata line under "fit"
  fit     csv: header ``slope,intercept,rms`` then one row; json:
          {"slope","intercept","rms","window"}
  eval    csv: the value; json: {"function","x","value"} plus s/eps
  probe   json report per kind (continuity/cocycle wrap the probe dict,
          asymp the fit dict, maass a residual table)
  cache   json: {"path","entries"} plus {"added"} after warm

Exit codes: 0 success; 2 domain error (bad arguments, values, or
malformed config); 3 precision or term-budget failure; 4 I/O failure
(unreadable/unwritable files, corrupt cache).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from .cotsum import (
    CotangentExpression,
    CValueCache,
    c_selection_rule,
    c_value,
    eval_cot,
    h_exact,
)
from .errors import BudgetExceededError
from .gram import GramSweepState, SweepRecord, assemble_pair_matrix, fit_log, render_csv, sweep_extend
from .lfun import L_chi
from .maass import eval_u, psi_from_C_check, psi_mellin, psi_series
from .numkernel import Discriminant, PrecisionContext, reduce
from .qmf import (
    asymp_fit,
    cocycle_C_gamma,
    continuity_probe,
    eval_C,
    eval_Cs,
    eval_H_rational,
    eval_Hs,
    eval_T_reg,
    group_element_from_residue,
    group_element_from_word,
)

__all__ = ["RunConfig", "main"]

_CONFIG_KEYS = ("discriminant", "rel_tol", "threads", "cache", "format", "out")
_DEFAULT_BUDGET = 10_000_000


class CacheFormatError(OSError):
    """Corrupt cache file content; maps to the I/O exit code."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved per-run settings, validated at parse time."""

    D: Discriminant
    rel_tol: float
    threads: int
    cache_path: str | None
    fmt: str
    out: str | None
    stats: bool
    config_file: str | None
    config_text: str | None

    def __post_init__(self) -> None:
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.fmt!r}")

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(rel_tol=self.rel_tol, term_budget=_DEFAULT_BUDGET)

    def meta(self, command: str) -> dict:
        return {
            "command": command,
            "discriminant": self.D.D,
            "rel_tol": self.rel_tol,
            "threads": self.threads,
            "cache": self.cache_path,
            "format": self.fmt,
            "config_file": self.config_file,
            "config_text": self.config_text,
        }


def _read_config(path: str) -> tuple[str, dict[str, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if "=" not in line:
            raise ValueError(f"config parse error at line {lineno}: {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r} at line {lineno}")
        entries[key] = val.strip()
    return text, entries


def _resolve(args: argparse.Namespace) -> RunConfig:
    text: str | None = None
    entries: dict[str, str] = {}
    if args.config is not None:
        text, entries = _read_config(args.config)

    def pick(flag, key: str, conv):
        if flag is not None:
            return flag
        if key in entries:
            return conv(entries[key])
        return None

    disc = pick(args.discriminant, "discriminant", int)
    rel_tol = pick(args.rel_tol, "rel_tol", float)
    threads = pick(args.threads, "threads", int)
    cache = pick(args.cache, "cache", str)
    fmt = pick(args.format, "format", str)
    out = pick(args.out, "out", str)
    if cache is None:
        cache = os.environ.get("GRHCOT_CACHE") or None
    return RunConfig(
        D=Discriminant(disc if disc is not None else -4),
        rel_tol=rel_tol if rel_tol is not None else 1e-12,
        threads=threads if threads is not None else (os.cpu_count() or 1),
        cache_path=cache,
        fmt=fmt if fmt is not None else "csv",
        out=out,
        stats=bool(args.stats),
        config_file=args.config,
        config_text=text,
    )


def _open_cache(cfg: RunConfig) -> CValueCache | None:
    if cfg.cache_path is None:
        return None
    try:
        return CValueCache(cfg.cache_path)
    except ValueError as exc:
        raise CacheFormatError(str(exc)) from exc


def _render_expr(expr: CotangentExpression) -> str:
    parts = []
    for coeff, angle in expr.terms:
        frac = angle.as_fraction()
        core = f"cot({frac.numerator}*pi/{frac.denominator})"
        mag = abs(coeff)
        parts.append(("-" if coeff < 0 else "+", core if mag == 1 else f"{mag}*{core}"))
    if not parts:
        return "0"
    head = parts[0][1] if parts[0][0] == "+" else "-" + parts[0][1]
    return head + "".join(f" {sign} {body}" for sign, body in parts[1:])


def _parse_x(text: str):
    """Exact Fraction for 'p/q' or integer literals, float otherwise."""
    if "/" in text:
        return Fraction(text)
    try:
        return int(text)
    except ValueError:
        return float(text)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _cmd_cmn(args, cfg: RunConfig, cache) -> tuple[str, dict]:
    if args.exact:
        if cfg.D.D == -4:
            expr = c_selection_rule(args.m, args.n)
        else:
            expr = CotangentExpression.from_terms(
                h_exact(cfg.D, args.m, args.n).terms + h_exact(cfg.D, args.n, args.m).terms
            )
        value = eval_cot(expr, cfg.ctx)
        rendered = _render_expr(expr)
        if cfg.fmt == "json":
            return _dump_json({"m": args.m, "n": args.n, "value": value, "exact": rendered}), {}
        return f"{rendered}\n{value!r}\n", {}
    value = c_value(cfg.D, args.m, args.n, cfg.ctx, cache)
    if cfg.fmt == "json":
        return _dump_json({"m": args.m, "n": args.n, "value": value}), {}
    return f"{value!r}\n", {}


def _cmd_matrix(args, cfg: RunConfig, cache) -> tuple[str, dict]:
    M = assemble_pair_matrix(cfg.D, args.N, cfg.ctx, threads=cfg.threads, cache=cache)
    rows = [[float(v) for v in row] for row in M]
    if cfg.fmt == "json":
        return _dump_json({"N": args.N, "entries": rows}), {}
    body = "".join(",".join(repr(v) for v in row) + "\n" for row in rows)
    return body, {}


def _sweep_records(cfg: RunConfig, upto: int, cache) -> list[SweepRecord]:
    state = GramSweepState(cfg.D)
    sweep_extend(state, upto, cfg.ctx, threads=cfg.threads, cache=cache)
    return state.records


def _fit_block(records, n_from: int, n_to: int) -> dict:
    slope, intercept, rms = fit_log(records, n_from, n_to)
    return {"slope": slope, "intercept": intercept, "rms": rms, "window": [n_from, n_to]}


def _cmd_sweep(args, cfg: RunConfig, cache) -> tuple[str, dict]:
    if args.max_N < 1:
        raise ValueError(f"--max-N must be >= 1, got {args.max_N}")
    records = _sweep_records(cfg, args.max_N, cache)
    explicit = args.fit_from is not None or args.fit_to is not None
    n_from = args.fit_from if args.fit_from is not None else max(2, args.max_N // 8)
    n_to = args.fit_to if args.fit_to is not None else args.max_N
    fit: dict | None
    if explicit:
        fit = _fit_block(records, n_from, n_to)
    else:
        try:
            fit = _fit_block(records, n_from, n_to)
        except ValueError:
            fit = None
    if cfg.fmt == "json":
        payload = _dump_json(
            {
                "records": [
                    {"N": r.N, "R": r.R, "dist2": r.dist2, "logdetC": r.logdetC}
                    for r in records
                ]
            }
        )
    else:
        payload = render_csv(records)
    return payload, {"fit": fit}


def _parse_sweep_csv(path: str) -> list[SweepRecord]:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "N,R,dist2,logdetC":
        raise ValueError(f"{path} is not a sweep CSV (bad header)")
    records = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        try:
            n_s, r_s, d_s, l_s = line.split(",")
            records.append(SweepRecord(int(n_s), float(r_s), float(d_s), float(l_s)))
        except ValueError as exc:
            raise ValueError(f"sweep CSV parse error at line {lineno}: {line!r}") from exc
    return records


def _cmd_fit(args, cfg: RunConfig, cache) -> tuple[str, dict]:
    if args.input is not None:
        records = _parse_sweep_csv(args.input)
    else:
        records = _sweep_records(cfg, args.to, cache)
    block = _fit_block(records, getattr(args, "from"), args.to)
    if cfg.fmt == "json":
        return _dump_json(block), {}
    return f"slope,intercept,rms\n{block['slope']!r},{block['intercept']!r},{block['rms']!r}\n", {}


def _cmd_eval(args, cfg: RunConfig, cache) -> tuple[str, dict]:
    fn = args.function
    x = _parse_x(args.x)
    if fn == "H":
        if isinstance(x, float):
            raise ValueError("H takes an exact rational x (use p/q or an integer)")
        value = eval_H_rational(cfg.D, x, cfg.ctx)
    elif fn == "C":
        value = eval_C(cfg.D, x, cfg.ctx)
    elif fn == "Hs":
        if args.s is None:
            raise ValueError("Hs needs --s")
        value = eval_Hs(cfg.D, x, args.s, cfg.ctx)
    elif fn == "Cs":
        if args.s is None:
            raise ValueError("Cs needs --s")
        value = eval_Cs(cfg.D, float(x), args.s, cfg.ctx)
    else:
        if args.eps is None:
            raise ValueError("T needs --eps")
        value = eval_T_reg(cfg.D, float(x), args.eps, cfg.ctx)
    if cfg.fmt == "json":
        doc = {"function": fn, "x": args.x, "value": value}
        if args.s is not None:
            doc["s"] = args.s
        if args.eps is not None:
            doc["eps"] = args.eps
        return _dump_json(doc), {}
    return f"{value!r}\n", {}


def _parse_radii(text: str | None) -> list[Fraction]:
    if text is None:
        return [Fraction(1, 2**k) for k in range(3, 13)]
    return [Fraction(part.strip()) for part in text.split(",")]


def _parse_gamma(args, cfg: RunConfig):
    if args.word is not None:
        return group_element_from_word(cfg.D, args.word)
    if args.gamma is None:
        raise ValueError("cocycle probe needs --gamma a,b,c,d or --word")
    parts = [int(p) for p in args.gamma.split(",")]
    if len(parts) != 4:
        raise ValueError(f"--gamma needs four integers, got {args.gamma!r}")
    return group_element_from_residue(cfg.D, *parts)


def _maass_invariance(cfg: RunConfig) -> dict:
    shift = 2.0 if cfg.D.D == -4 else float(cfg.D.modulus)
    rows = []
    worst_shift = 0.0
    worst_flip = 0.0
    sign = -1.0 if cfg.D.D == -4 else 1.0
    for i in range(5):
        x = -1.0 + 0.5 * i
        for j in range(5):
            y = 0.4 + 0.4 * j
            z = complex(x, y)
            u = eval_u(cfg.D, z, cfg.ctx)
            scale = max(1.0, abs(u))
            r_shift = abs(eval_u(cfg.D, z + shift, cfg.ctx) - sign * u) / scale
            r_flip = abs(eval_u(cfg.D, -1.0 / z, cfg.ctx) + u) / scale
            worst_shift = max(worst_shift, r_shift)
            worst_flip = max(worst_flip, r_flip)
            rows.append(
                {"x": x, "y": y, "u": u, "shift_residual": r_shift, "flip_residual": r_flip}
            )
    return {
        "check": "invariance",
        "shift": shift,
        "shift_sign": sign,
        "points": rows,
        "max_shift_residual": worst_shift,
        "max_flip_residual": worst_flip,
    }


def _maass_dual_route(cfg: RunConfig) -> dict:
    rows = []
    worst = 0.0
    for y in (0.5, 1.0, 2.0):
        for s in (1.0, -1.0):
            z = complex(0.0, s * y)
            a = psi_series(cfg.D, z, cfg.ctx)
            b = psi_mellin(cfg.D, z, 0.5, cfg.ctx)
            diff = abs(a - b)
            worst = max(worst, diff)
            rows.append({"z": z, "series": a, "mellin": b, "diff": diff})
    return {"check": "dual_route", "points": rows, "max_diff": worst}


def _maass_psi_ratio(cfg: RunConfig) -> dict:
    rows = []
    ratios = []
    for z in (1j, 1.0 + 1j, 2j):
        lhs, rhs, ratio = psi_from_C_check(cfg.D, z, cfg.ctx)
        ratios.append(ratio)
        rows.append({"z": z, "lhs": lhs, "rhs": rhs, "ratio": ratio})
    spread = max(abs(r - ratios[0]) for r in ratios)
    return {"check": "psi_ratio", "points": rows, "ratio_spread": spread}


def _cmd_probe(args, cfg: RunConfig, cache) -> tuple[str, dict]:
    kind = args.kind
    if kind == "continuity":
        x0 = Fraction(args.x if args.x is not None else "1/2")
        radii = _parse_radii(args.radii)
        fn = args.function or "H"
        if fn == "H":
            f = lambda t: eval_H_rational(cfg.D, t, cfg.ctx)
        elif fn == "C":
            f = lambda t: eval_C(cfg.D, t, cfg.ctx)
        else:
            raise ValueError(f"continuity probe supports H or C, got {fn!r}")
        report = continuity_probe(f, x0, radii, cfg.ctx)
        report["kind"] = "continuity"
        report["function"] = fn
    elif kind == "cocycle":
        gamma = _parse_gamma(args, cfg)
        x0 = Fraction(args.x if args.x is not None else "1/5")
        radii = _parse_radii(args.radii)
        report = continuity_probe(
            lambda t: cocycle_C_gamma(gamma, t, cfg.ctx), x0, radii, cfg.ctx
        )
        report["kind"] = "cocycle"
        report["gamma"] = {
            "matrix": [gamma.a, gamma.b, gamma.c, gamma.d],
            "epsilon": gamma.epsilon,
            "provenance": gamma.provenance,
        }
    elif kind == "asymp":
        if args.target is None:
            raise ValueError("asymp probe needs --target")
        windows = {
            "H_at_1": (10, 200, 1),
            "C_at_1": (10, 200, 1),
            "C_at_inverse_integers": (81, 2481, 4),
            "H_at_alpha": (10, 2400, 12),
        }
        lo = args.n_from if args.n_from is not None else windows.get(args.target, (10, 200, 1))[0]
        hi = args.n_to if args.n_to is not None else windows.get(args.target, (10, 200, 1))[1]
        step = args.n_step if args.n_step is not None else windows.get(args.target, (10, 200, 1))[2]
        n_range = range(lo, hi, step) if step != 1 else (lo, hi)
        alpha = Fraction(args.alpha) if args.alpha is not None else None
        fit = asymp_fit(
            args.target, n_range, side=args.side, ctx=cfg.ctx, D=cfg.D, alpha=alpha
        )
        report = fit.to_json_dict()
        report["kind"] = "asymp"
        report["window"] = [lo, hi, step]
    elif kind == "maass":
        check = args.check or "invariance"
        if check == "invariance":
            report = _maass_invariance(cfg)
        elif check == "dual_route":
            report = _maass_dual_route(cfg)
        elif check == "psi_ratio":
            report = _maass_psi_ratio(cfg)
        else:
            raise ValueError(f"unknown maass check {check!r}")
        report["kind"] = "maass"
    else:
        raise ValueError(f"unknown probe kind {kind!r}")
    return _dump_json(report), {}


def _cmd_cache(args, cfg: RunConfig, cache) -> tuple[str, dict]:
    if cache is None:
        raise ValueError("cache command needs --cache or GRHCOT_CACHE")
    if args.action == "stats":
        return _dump_json({"path": cfg.cache_path, "entries": len(cache)}), {}
    if args.upto is None:
        raise ValueError("cache warm needs --upto")
    pairs = set()
    for n in range(1, args.upto + 1):
        for m in range(1, n + 1):
            fr, _ = reduce(m, n)
            pairs.add((fr.num, fr.den))
    cache.ensure(cfg.D, sorted(pairs), threads=cfg.threads)
    cache.save()
    return (
        _dump_json(
            {"path": cfg.cache_path, "entries": len(cache), "added": cache.misses}
        ),
        {},
    )


_DISPATCH = {
    "cmn": _cmd_cmn,
    "matrix": _cmd_matrix,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "probe": _cmd_probe,
    "cache": _cmd_cache,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-D", "--discriminant", type=int, default=None)
    common.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--cache", default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--config", default=None)
    common.add_argument("--stats", action="store_true")

    top = argparse.ArgumentParser(
        prog="grhcot", description="Cotangent-sum Gram machinery command line."
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cmn", parents=[common], help="one pair value c(m, n)")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--exact", action="store_true")

    p = sub.add_parser("matrix", parents=[common], help="N x N pair matrix")
    p.add_argument("--N", type=int, required=True)

    p = sub.add_parser("sweep", parents=[common], help="growing Cholesky sweep")
    p.add_argument("--max-N", dest="max_N", type=int, required=True)
    p.add_argument("--fit-from", dest="fit_from", type=int, default=None)
    p.add_argument("--fit-to", dest="fit_to", type=int, default=None)

    p = sub.add_parser("fit", parents=[common], help="log-linear fit of R")
    p.add_argument("--from", dest="from", type=int, required=True)
    p.add_argument("--to", type=int, required=True)
    p.add_argument("--in", dest="input", default=None, help="existing sweep CSV")

    p = sub.add_parser("eval", parents=[common], help="point values")
    p.add_argument("--function", choices=("H", "C", "Hs", "Cs", "T"), required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("probe", parents=[common], help="structured JSON reports")
    p.add_argument("--kind", choices=("continuity", "cocycle", "asymp", "maass"), required=True)
    p.add_argument("--x", default=None)
    p.add_argument("--radii", default=None, help="comma-separated rationals")
    p.add_argument("--function", choices=("H", "C"), default=None)
    p.add_argument("--gamma", default=None, help="a,b,c,d integers")
    p.add_argument("--word", default=None, help="letters S and T^k")
    p.add_argument("--target", default=None)
    p.add_argument("--side", choices=("+", "-"), default="+")
    p.add_argument("--n-from", dest="n_from", type=int, default=None)
    p.add_argument("--n-to", dest="n_to", type=int, default=None)
    p.add_argument("--n-step", dest="n_step", type=int, default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--check", choices=("invariance", "dual_route", "psi_ratio"), default=None)

    p = sub.add_parser("cache", parents=[common], help="pair-cache maintenance")
    p.add_argument("action", choices=("stats", "warm"))
    p.add_argument("--upto", type=int, default=None)

    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        cache = _open_cache(cfg)
        payload, extra = _DISPATCH[args.command](args, cfg, cache)
        if cache is not None and cache._dirty and cfg.cache_path is not None:
            cache.save()
        meta = cfg.meta(args.command)
        meta.update(extra)
        if cfg.stats:
            meta["cache_stats"] = (
                None
                if cache is None
                else {"hits": cache.hits, "misses": cache.misses, "entries": len(cache)}
            )
        sys.stdout.write(json.dumps(_jsonable(meta), sort_keys=True) + "\n")
        if cfg.out is not None:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
