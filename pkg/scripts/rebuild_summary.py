#!/usr/bin/env python3
"""Recompute a summary table from its raw table, independently.

Usage: rebuild_summary.py RAW_TSV [EXPECTED_SUMMARY_TSV]

Reads a *_raw.tsv written by the experiment runners, regroups the rows by
(coordinates, name) in first-seen order, recomputes mean, disorder sigma
(ddof=1) and stderr = sigma/sqrt(n), and writes the resulting summary table
to stdout.  With a second argument the output is instead compared line by
line against an existing summary file and the script exits nonzero on the
first mismatch.  Deliberately self-contained: no package imports, so it
cross-checks the library's statistics rather than restating them.
"""

import math
import sys


def fmt(x: float) -> str:
    return "%.17g" % x


def main(argv) -> int:
    if len(argv) not in (2, 3):
        print(__doc__.strip().splitlines()[2], file=sys.stderr)
        return 2
    with open(argv[1]) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        rows = [line.rstrip("\n").split("\t") for line in fh]
    fixed = ("seed", "name", "value", "config", "version")
    coord_cols = [c for c in header if c not in fixed]
    idx = {c: header.index(c) for c in header}

    groups = {}
    order = []
    seeds = set()
    config = version = None
    for row in rows:
        seeds.add(int(row[idx["seed"]]))
        config = row[idx["config"]]
        version = row[idx["version"]]
        key = tuple(row[idx[c]] for c in coord_cols) + (row[idx["name"]],)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(float(row[idx["value"]]))

    base, count = min(seeds), len(seeds)
    if sorted(seeds) != list(range(base, base + count)):
        print("seed ledger is not contiguous", file=sys.stderr)
        return 1
    out = ["\t".join([*coord_cols, "name", "mean", "sigma_dis", "stderr",
                      "n_avg", "seeds", "config", "version"])]
    for key in order:
        vals = groups[key]
        n = len(vals)
        mean = math.fsum(vals) / n
        if n > 1:
            var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
            sigma = math.sqrt(var)
            stderr = sigma / math.sqrt(n)
        else:
            sigma = stderr = 0.0
        out.append("\t".join([*key, fmt(mean), fmt(sigma), fmt(stderr),
                              str(n), f"{base}:{count}", config, version]))

    if len(argv) == 2:
        print("\n".join(out))
        return 0
    with open(argv[2]) as fh:
        expected = fh.read().rstrip("\n").split("\n")
    if len(out) != len(expected):
        print(f"row count differs: {len(out)} vs {len(expected)}",
              file=sys.stderr)
        return 1
    for k, (got, want) in enumerate(zip(out, expected)):
        if not _rows_match(got, want):
            print(f"line {k + 1} differs:\n  rebuilt: {got}\n  "
                  f"stored:  {want}", file=sys.stderr)
            return 1
    print(f"{argv[2]}: {len(out) - 1} rows match the raw table")
    return 0


def _rows_match(a: str, b: str, rtol: float = 1e-12) -> bool:
    """Cell-wise comparison; floats compared to relative tolerance.

    The library reduces with numpy (pairwise summation), this script with
    math.fsum, so the last couple of bits may legitimately differ.
    """
    ca, cb = a.split("\t"), b.split("\t")
    if len(ca) != len(cb):
        return False
    for x, y in zip(ca, cb):
        if x == y:
            continue
        try:
            fx, fy = float(x), float(y)
        except ValueError:
            return False
        if math.isnan(fx) and math.isnan(fy):
            continue
        if abs(fx - fy) > rtol * max(1.0, abs(fx), abs(fy)):
            return False
    return True


if __name__ == "__main__":
    sys.exit(main(sys.argv))
