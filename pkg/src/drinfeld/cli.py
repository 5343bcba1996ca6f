"""Command-line front end: ``eval``, ``verify`` and ``pi``.

Exit status: 0 when every check passes, 1 on a check failure, 2 on a
configuration or parse error, 3 when precision runs out.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .localfield import FieldDesc, FieldError, LFElem, PrecisionError, lf_carlitz_period, to_str
from .verify import (
    SUITES, PointSpec, Session, VerifyConfig, required_residue_degree, run_suites, summarize,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PRECISION = 0, 1, 2, 3

DEFAULT_POINTS = {2: "z1=rootT(1,2)", 3: "z1=rootT(2,3), z2=rootT(1,3)"}


class ConfigError(ValueError):
    pass


def split_prime_power(q: int) -> tuple[int, int]:
    if q < 2:
        raise ConfigError(f"q must be a prime power >= 2, got {q}")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    s, n = 0, q
    while n % p == 0:
        n //= p
        s += 1
    if n != 1:
        raise ConfigError(f"q must be a prime power, got {q}")
    return p, s


def _positive(name: str):
    def conv(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=_positive("q"), default=3, help="size of the constant field")
    common.add_argument("--m", type=_positive("m"), default=2, help="residue degree over F_q")
    common.add_argument("--e", type=_positive("e"), default=None,
                        help="ramification index (default 2 for r=2, 6 for r=3)")
    common.add_argument("--N", type=_positive("N"), default=120, help="target digits")
    common.add_argument("--D", type=_positive("D"), default=8, help="lattice shell bound")
    common.add_argument("--T", type=_positive("T"), default=6, help="t-order for Tate series")
    common.add_argument("--G", type=_positive("G"), default=None, help="denominator guard")
    common.add_argument("--r", type=_positive("r"), default=None, help="rank (checked against the point)")
    common.add_argument("--point", default=None, help='e.g. "z1=rootT(1,2)"')
    common.add_argument("--seed", type=int, default=0, help="seed for the gamma sample")
    common.add_argument("--out", default=None, help="write the JSON report here ('-' for stdout)")

    ap = argparse.ArgumentParser(prog="drinfeld", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    ev = sub.add_parser("eval", parents=[common], help="values of the forms at a point")
    ev.add_argument("--k", type=int, action="append", default=None, help="extra Eisenstein weight")
    vf = sub.add_parser("verify", parents=[common], help="run identity suites")
    vf.add_argument("--suite", action="append", default=None,
                    help=f"one of {', '.join(list(SUITES) + ['all'])}; repeatable or comma-separated")
    sub.add_parser("pi", parents=[common], help="the Carlitz period")
    return ap


def config_from_args(args: argparse.Namespace) -> tuple[VerifyConfig, PointSpec]:
    p, s = split_prime_power(args.q)
    r = args.r
    text = args.point or DEFAULT_POINTS.get(r or 2)
    if text is None:
        raise ConfigError(f"no default point for rank {r}; pass --point")
    try:
        spec = PointSpec.parse(text, r)
    except SyntaxError as exc:
        raise ConfigError(f"point: {exc}") from None
    if r is not None and spec.r != r:
        raise ConfigError(f"--r {r} does not match the rank-{spec.r} point")
    e = args.e if args.e is not None else (2 if spec.r == 2 else 6)
    cfg = VerifyConfig(p=p, s=s, m=args.m, e=e, N=args.N, D=args.D, T=args.T, G=args.G, seed=args.seed)
    return cfg, spec


def _value(x: LFElem) -> dict:
    return {"value": to_str(x), "relative_precision": _relprec(x)}


def _relprec(x: LFElem):
    if x.prec == float("inf"):
        return "exact"
    return int(x.prec - x.n0) if not x.is_zero else 0


def cmd_eval(S: Session, ks: Sequence[int] | None) -> dict:
    d, fm = S.d, S.forms
    q, r = S.cfg.q, S.r
    out: dict[str, dict] = {"pi": _value(fm.pi)}
    weights = [q**i - 1 for i in range(1, r + 1)] + list(ks or [])
    for k in dict.fromkeys(weights):
        v = d.eis(k)
        rec = _value(v)
        if k % (q - 1):
            rec["note"] = f"zero: {k} is not a multiple of q-1"
        out[f"Eis_{k}"] = rec
    for i in range(1, r + 1):
        out[f"g_{i}"] = _value(d.g_i(i))
    for i in range(1, r):
        out[f"g_new_{i}"] = _value(fm.g_new(i))
    out[f"h_{r}"] = _value(fm.h)
    for j in range(1, r):
        out[f"E[{j}]"] = _value(fm.e_bracket(j))
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            out[f"L_{i}{j}"] = _value(d.L(i, j))
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            out[f"bold_E_{i}{j}"] = _value(fm.bold_E(i, j))
    for i in range(1, r):
        out[f"J_{i}"] = _value(fm.j_invariant(i))
    return out


def cmd_pi(cfg: VerifyConfig) -> tuple[dict, dict]:
    m = required_residue_degree(cfg.p, cfg.s, cfg.m, cfg.e)
    F = FieldDesc(cfg.p, cfg.s, m, cfg.e, prec=cfg.N, need_root=True)
    x = lf_carlitz_period(F)
    field = {"q": F.q, "m": F.m, "e": F.e, "precision": F.prec,
             "residue_modulus": F.gf.describe_modulus()}
    return field, {"pi": _value(x), f"pi^{F.q - 1}": _value(x ** (F.q - 1))}


def _suites(raw: Sequence[str] | None) -> list[str]:
    names: list[str] = []
    for item in raw or ["all"]:
        names += [n.strip() for n in item.split(",") if n.strip()]
    unknown = [n for n in names if n != "all" and n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s): {', '.join(unknown)}; choose from "
                          f"{', '.join(list(SUITES) + ['all'])}")
    return names


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, ensure_ascii=False)
    if out == "-":
        sys.stdout.write(text + "\n")
    elif out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _print_values(values: dict) -> None:
    width = max(len(k) for k in values)
    for name, rec in values.items():
        extra = f"  ({rec['note']})" if "note" in rec else ""
        print(f"{name:<{width}}  [{rec['relative_precision']}]  {rec['value']}{extra}")


def _point_block(S: Session) -> dict:
    return {"text": S.spec.text(), "rank": S.r}


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    quiet = args.out == "-"
    try:
        cfg, spec = config_from_args(args)
        if args.cmd == "pi":
            field, values = cmd_pi(cfg)
            report = {"config": field, "point": None, "values": values}
            if not quiet:
                _print_values(values)
            _emit(report, args.out)
            return EXIT_OK
        suites = _suites(args.suite) if args.cmd == "verify" else []
        S = Session(cfg, spec)
        if args.cmd == "eval":
            values = cmd_eval(S, args.k)
            report = {"config": S.describe(), "point": _point_block(S), "values": values}
            if not quiet:
                _print_values(values)
            _emit(report, args.out)
            return EXIT_OK
        reports = run_suites(S, suites)
        summary = summarize(reports)
        checks = []
        for rep in reports:
            dct = rep.as_dict()
            dct.pop("seconds")
            checks.append(dct)
            if not quiet:
                mark = "PASS" if rep.passed else "FAIL"
                print(f"{mark}  {rep.identity}  matched={dct['matched']} target={rep.target}")
        if not quiet:
            print(f"{summary['passed']}/{summary['total']} checks passed")
        _emit({"config": S.describe(), "point": _point_block(S), "checks": checks, "summary": summary},
              args.out)
        return EXIT_OK if not summary["failed"] else EXIT_FAIL
    except (ConfigError, FieldError, SyntaxError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PrecisionError as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
