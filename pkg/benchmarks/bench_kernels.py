"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--json PATH]

Each case runs under both backends, checks that the results agree
exactly and reports the best wall time of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import json
import time
from typing import Callable

import numpy as np

from drinfeld import kernels
from drinfeld.drinfeld import DrinfeldData
from drinfeld.lattice import SumParams, brute_sums
from drinfeld.localfield import FieldDesc
from drinfeld.verify import PointSpec


def _series_case(m: int, L: int) -> Callable[[], object]:
    F = FieldDesc(3, 1, m, 2, prec=L)
    rng = np.random.default_rng(0)
    a = rng.integers(0, F.gf.Q, L).astype(np.int32)
    b = rng.integers(0, F.gf.Q, L).astype(np.int32)
    a[0] = 1

    def run():
        return [kernels.ser_mul(F.gf, a, b, L).tolist(), kernels.ser_inv(F.gf, a, L).tolist()]
    return run


def _brute_case(D: int) -> Callable[[], object]:
    F = FieldDesc(3, 1, 2, 2, prec=144, need_root=True)
    pt = PointSpec.parse("z1=rootT(1,2)+g*T^-1+g^3").build(F)
    channels = [(2, None), (8, None), (1, ("coef", 1, 0))]

    def run():
        return [(x.n0, x.prec, x.c.tolist()) for x in brute_sums(pt, D, channels)]
    return run


def _engine_case(W: int) -> Callable[[], object]:
    F = FieldDesc(3, 1, 2, 2, prec=W, need_root=True)
    pt = PointSpec.parse("z1=rootT(1,2)").build(F)

    def run():
        d = DrinfeldData(pt, SumParams(D=8))
        g = d.g_i(2)
        return g.n0, g.prec, g.c.tolist()
    return run


CASES = {
    "ser_mul+ser_inv F_9 L=400": _series_case(2, 400),
    "ser_mul+ser_inv F_3 L=2000": _series_case(1, 2000),
    "brute lattice sums D=3": _brute_case(3),
    "coefficient forms W=144": _engine_case(144),
}


def bench(repeat: int) -> list[dict]:
    rows = []
    backends = kernels.available()
    for name, fn in CASES.items():
        row: dict = {"case": name}
        ref = None
        for be in backends:
            kernels.use(be)
            best = float("inf")
            for _ in range(repeat):
                t = time.perf_counter()
                out = fn()
                best = min(best, time.perf_counter() - t)
            row[be] = round(best, 5)
            if ref is None:
                ref = out
            elif out != ref:
                raise AssertionError(f"backends disagree on {name}")
        if "compiled" in row and row["compiled"] > 0:
            row["speedup"] = round(row["python"] / row["compiled"], 2)
        rows.append(row)
    kernels.use(backends[0])
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    rows = bench(args.repeat)
    for row in rows:
        cols = "  ".join(f"{k}={v}" for k, v in row.items() if k != "case")
        print(f"{row['case']:<30} {cols}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
