"""Regenerate the density fixture and its brute-force oracle value.

Run from the repository root: python3 tests/fixtures/make_fixtures.py
"""
import itertools
import json
from fractions import Fraction
from pathlib import Path

from fpremoval.fileio import generate_colouring, write_colouring

HERE = Path(__file__).parent
P, N, R, SEED = 3, 4, 2, 2024
FORMS = [[1, 0], [0, 1], [1, 1]]
COLOURINGS = [[1, 1, 1], [2, 2, 2], [1, 2, 2]]


def digits(k):
    out = []
    for _ in range(N):
        out.append(k % P)
        k //= P
    return out


def index(v):
    return sum(c * P**i for i, c in enumerate(v))


def brute_force(table):
    hits = 0
    for x, y in itertools.product(range(P**N), repeat=2):
        dx, dy = digits(x), digits(y)
        z = index([(dx[i] + dy[i]) % P for i in range(N)])
        if [table[x], table[y], table[z]] in COLOURINGS:
            hits += 1
    return Fraction(hits, P ** (2 * N))


if __name__ == "__main__":
    phi = generate_colouring(P, N, R, SEED)
    write_colouring(HERE / "uniform_f3_4.fpnc", phi)
    pattern = {"p": P, "r": R, "forms": FORMS, "colourings": COLOURINGS}
    (HERE / "schur_mixed_f3.json").write_text(json.dumps(pattern))
    value = brute_force([int(c) for c in phi.table])
    (HERE / "density_oracle.json").write_text(json.dumps({"density": f"{value.numerator}/{value.denominator}"}) + "\n")
    print(value)
