"""Writes a nested sequence of topologies of increasing density.

Starts from the ten-retailer graph and repeatedly adds the edges that most
reduce the spectral radius of the optimally accelerated Metropolis matrix
minus the averaging matrix.
"""

import argparse
import itertools
import json
import pathlib

import numpy as np

RETAILERS = [(0, 2), (0, 3), (0, 4), (0, 5), (0, 7), (1, 4), (1, 6),
             (1, 9), (2, 8), (3, 6), (3, 8), (5, 9), (7, 9), (8, 9)]


def radius_gap(m, edges):
    deg = np.zeros(m)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    w = np.zeros((m, m))
    for a, b in edges:
        w[a, b] = w[b, a] = 1.0 / (1.0 + max(deg[a], deg[b]))
    w += np.diag(1.0 - w.sum(axis=1))
    lam = np.sort(np.linalg.eigvalsh(w))[::-1]
    l2, lm = lam[1], lam[-1]
    alpha = (lm + l2) / (2.0 - lm - l2)
    return max(abs((1 + alpha) * l2 - alpha), abs((1 + alpha) * lm - alpha))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("out", type=pathlib.Path)
    p.add_argument("--count", type=int, default=9)
    p.add_argument("--step", type=int, default=2, help="edges added per topology")
    args = p.parse_args()

    m = 10
    edges = list(RETAILERS)
    args.out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        if i > 0:
            for _ in range(args.step):
                free = [e for e in itertools.combinations(range(m), 2) if e not in edges]
                edges.append(min(free, key=lambda e: radius_gap(m, edges + [e])))
        path = args.out / f"nested_{i + 1}.json"
        path.write_text(json.dumps({"agents": m, "edges": [list(e) for e in edges]}) + "\n")
        print(path, len(edges), round(radius_gap(m, edges), 4))


if __name__ == "__main__":
    main()
