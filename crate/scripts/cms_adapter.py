#!/usr/bin/env python3
"""Run CryptoMiniSat through pycryptosat with a cryptominisat5-like command line.

    cms_adapter.py [--name=value ...] INSTANCE

Prints competition output (s/v lines) and a "c Total time" line, exits 10
(SAT), 20 (UNSAT) or 0. Options pycryptosat does not know are reported and
skipped; --threads sets the thread count, --random is ignored.
"""

import sys
import time

import pycryptosat


def parse_args(argv):
    opts, instance = {}, None
    i = 0
    while i < len(argv):
        a = argv[i]
        if a.startswith("--"):
            if "=" in a:
                k, v = a[2:].split("=", 1)
            elif i + 1 < len(argv) and not argv[i + 1].startswith("--") and i + 1 < len(argv) - 1:
                k, v = a[2:], argv[i + 1]
                i += 1
            else:
                k, v = a[2:], "1"
            opts[k] = v
        else:
            instance = a
        i += 1
    return opts, instance


def read_dimacs(path):
    clauses, cur = [], []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line[0] in "cp":
                continue
            if line.startswith("%"):
                break
            for tok in line.split():
                x = int(tok)
                if x == 0:
                    clauses.append(cur)
                    cur = []
                else:
                    cur.append(x)
    return clauses


def main():
    opts, instance = parse_args(sys.argv[1:])
    if instance is None:
        print("usage: cms_adapter.py [--name=value ...] INSTANCE", file=sys.stderr)
        return 2
    threads = int(opts.pop("threads", "1"))
    opts.pop("random", None)
    accepted = {}
    for k, v in opts.items():
        try:
            pycryptosat.Solver(options={k: v})
            accepted[k] = v
        except Exception:
            print(f"c ignored option --{k}={v}")
    s = pycryptosat.Solver(threads=threads, options=accepted)
    for c in read_dimacs(instance):
        s.add_clause(c)
    start = time.process_time()
    sat, solution = s.solve()
    print(f"c Total time (this thread) : {time.process_time() - start:.2f}")
    if sat is None:
        print("s UNKNOWN")
        return 0
    if not sat:
        print("s UNSATISFIABLE")
        return 20
    print("s SATISFIABLE")
    lits = [v if solution[v] else -v for v in range(1, len(solution))]
    for i in range(0, len(lits), 20):
        print("v " + " ".join(map(str, lits[i:i + 20])))
    print("v 0")
    return 10


if __name__ == "__main__":
    sys.exit(main())
