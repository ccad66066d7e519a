"""Exact pattern counting over kernels, coset consistency and main-term comparison on cosets."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Callable, Sequence

import numpy as np

from .fourier import BoundedFunction, coset_table, uniformity
from .gf import (
    Coset,
    Subspace,
    check_cap,
    iter_span_tuples,
    kernel_basis,
    matmul,
    solve,
    space,
)
from .patterns import LinearSystem, Pattern


class InconsistentCosets(ValueError):
    """The cosets admit no value tuple of the system."""


@dataclass(frozen=True, eq=False)
class Colouring:
    """A total map F_p^n -> {1..r}, stored by point index."""

    p: int
    n: int
    r: int
    table: np.ndarray

    def __post_init__(self):
        if self.table.shape != (self.p**self.n,):
            raise ValueError(f"colouring table has shape {self.table.shape}, expected ({self.p ** self.n},)")
        if self.table.size and (self.table.min() < 1 or self.table.max() > self.r):
            raise ValueError(f"colours must lie in 1..{self.r}")

    @classmethod
    def of(cls, table, p: int, n: int, r: int) -> "Colouring":
        t = np.array(table, dtype=np.uint8)
        t.setflags(write=False)
        return cls(p, n, r, t)

    @classmethod
    def constant(cls, colour: int, p: int, n: int, r: int) -> "Colouring":
        return cls.of(np.full(p**n, colour), p, n, r)

    def indicator(self, i: int) -> BoundedFunction:
        return BoundedFunction.indicator(self.table == i, self.p, self.n)

    def indicators(self) -> list[BoundedFunction]:
        return [self.indicator(i) for i in range(1, self.r + 1)]

    def density_on(self, coset: Coset, i: int) -> Fraction:
        idx = coset.element_indices()
        return Fraction(int((self.table[idx] == i).sum()), idx.size)

    def distance(self, other: "Colouring") -> int:
        return int((self.table != other.table).sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Colouring)
            and (self.p, self.n, self.r) == (other.p, other.n, other.r)
            and np.array_equal(self.table, other.table)
        )

    __hash__ = None


# -- Lambda operators --------------------------------------------------------------


def _weighted_sum(tables: Sequence[np.ndarray], blocks, den_product: int) -> int:
    """sum over tuples of prod_i tables[i][z_i], exact."""
    exact_int64 = den_product < (1 << 40)
    total = 0
    for block in blocks:
        if exact_int64:
            acc = np.ones(block.shape[0], dtype=np.int64)
            for i, t in enumerate(tables):
                acc = acc * t[block[:, i]]
            total += int(acc.sum())
        else:
            acc = np.ones(block.shape[0], dtype=object)
            for i, t in enumerate(tables):
                acc = acc * t[block[:, i]].astype(object)
            total += int(acc.sum())
    return total


def _lambda(tables, dens, s: LinearSystem, n: int) -> Fraction:
    g = s.value_generators
    den = prod(dens)
    size = s.p**n
    count = size ** g.shape[0]
    total = _weighted_sum(tables, iter_span_tuples(g, s.p, n), den)
    return Fraction(total, den * count)


def _check_functions(fs: Sequence[BoundedFunction], s: LinearSystem) -> int:
    if len(fs) != s.m:
        raise ValueError(f"need {s.m} functions, got {len(fs)}")
    ns = {(f.p, f.n) for f in fs}
    if len(ns) != 1 or next(iter(ns))[0] != s.p:
        raise ValueError("functions must share the system's field and dimension")
    return fs[0].n


def lambda_forms(fs: Sequence[BoundedFunction], s: LinearSystem) -> Fraction:
    """E_{z in ker K} prod_i f_i(z_i), enumerated through a basis of Im(M)."""
    n = _check_functions(fs, s)
    return _lambda([f.num for f in fs], [f.den for f in fs], s, n)


def lambda_definitional(fs: Sequence[BoundedFunction], s: LinearSystem) -> Fraction:
    """E_{x in (F_p^n)^l} prod_i f_i(L_i(x)); the slow reference order."""
    n = _check_functions(fs, s)
    den = prod(f.den for f in fs)
    total = _weighted_sum([f.num for f in fs], iter_span_tuples(s.M.T, s.p, n), den)
    return Fraction(total, den * (s.p**n) ** s.l)


def _kernel_codes(s: LinearSystem, table: np.ndarray, base: int, n: int):
    """Yield (codes, block) with codes = sum_i table[z_i] * base^i over ker K."""
    w = base ** np.arange(s.m, dtype=np.int64)
    for block in iter_span_tuples(s.value_generators, s.p, n):
        yield table[block].astype(np.int64) @ w, block


def pattern_density(phi: Colouring, pat: Pattern) -> Fraction:
    """Lambda_H(phi): the fraction of value tuples whose colours lie in X.

    Equal to the sum over chi in X of Lambda_L of the colour indicators,
    since exactly one chi matches each tuple; counted in one pass.
    """
    s = pat.system
    if phi.p != s.p or phi.r != pat.r:
        raise ValueError("colouring and pattern disagree on p or r")
    codes_x = pat.colour_codes()
    total = (phi.p**phi.n) ** s.value_generators.shape[0]
    if codes_x.size == 0:
        return Fraction(0)
    lookup = None
    if pat.r**s.m <= 1 << 22:
        lookup = np.zeros(pat.r**s.m, dtype=bool)
        lookup[codes_x] = True
    table = phi.table.astype(np.int64) - 1
    hits = 0
    for codes, _ in _kernel_codes(s, table, pat.r, phi.n):
        hits += int(lookup[codes].sum() if lookup is not None else np.isin(codes, codes_x).sum())
    return Fraction(hits, total)


def pattern_density_by_sum(phi: Colouring, pat: Pattern) -> Fraction:
    """The same density as a sum of Lambda_L over every chi in X."""
    ind = {i: phi.indicator(i) for i in range(1, pat.r + 1)}
    return sum((lambda_forms([ind[c] for c in chi], pat.system) for chi in pat.colourings), Fraction(0))


def pattern_free_check(phi: Colouring, pat: Pattern) -> np.ndarray | None:
    """First instance found by exhaustive search over ker K, as an (m, n) array."""
    s = pat.system
    codes_x = pat.colour_codes()
    if codes_x.size == 0:
        return None
    table = phi.table.astype(np.int64) - 1
    sp = space(phi.p, phi.n)
    for codes, block in _kernel_codes(s, table, pat.r, phi.n):
        hit = np.flatnonzero(np.isin(codes, codes_x))
        if hit.size:
            return sp.coords(block[hit[0]])
    return None


def count_instances(phi: Colouring, pat: Pattern) -> int:
    s = pat.system
    return int(pattern_density(phi, pat) * (phi.p**phi.n) ** s.value_generators.shape[0])


def telescoping_residual(fs: Sequence[BoundedFunction], gs: Sequence[BoundedFunction], s: LinearSystem) -> Fraction:
    """|Lambda(f) - Lambda(g) - sum_i Lambda(h^(i))| with the hybrid sequences h^(i)."""
    n = _check_functions(fs, s)
    _check_functions(gs, s)
    m = s.m
    # put everything over one denominator so differences stay integral
    den = 1
    for h in list(fs) + list(gs):
        den = den * h.den // np.gcd(den, h.den)
    fn = [f.num * (den // f.den) for f in fs]
    gn = [g.num * (den // g.den) for g in gs]
    dens = [den] * m
    total = _lambda(fn, dens, s, n) - _lambda(gn, dens, s, n)
    for i in range(m):
        hybrid = fn[:i] + [fn[i] - gn[i]] + gn[i + 1 :]
        total -= _lambda(hybrid, dens, s, n)
    return abs(total)


# -- cosets --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConsistencyWitness:
    x: np.ndarray

    def validate(self, s: LinearSystem, cosets: Sequence[Coset]) -> bool:
        values = s.evaluate(self.x)
        return all(bool(c.contains(v)) for c, v in zip(cosets, values))


def _common_subspace(cosets: Sequence[Coset]) -> Subspace:
    hs = {c.subspace for c in cosets}
    if len(hs) != 1:
        raise ValueError("cosets must share one subspace")
    return next(iter(hs))


def coset_consistency(s: LinearSystem, cosets: Sequence[Coset]) -> ConsistencyWitness | None:
    """Decide whether some x has L_i(x) in H + c_i for all i, working mod H.

    With P a basis of H^perp, x -> P x identifies F_p^n / H with F_p^d.  The
    cosets are consistent iff the quotient images q_i = P c_i satisfy
    K q = 0; a witness comes from solving M y = q and lifting each y_j.
    """
    if len(cosets) != s.m:
        raise ValueError(f"need {s.m} cosets, got {len(cosets)}")
    h = _common_subspace(cosets)
    p, n = h.p, h.n
    P = h.perp_basis
    if P.shape[0] == 0:
        return ConsistencyWitness(np.zeros((s.l, n), dtype=np.int64))
    Q = matmul(np.array([c.rep for c in cosets]), P.T, p)  # m x d
    if s.K.shape[0] and matmul(s.K, Q, p).any():
        return None
    Y = solve(s.M, Q, p)  # l x d
    if Y is None:
        return None
    X = solve(P, Y.T, p)  # n x l
    witness = ConsistencyWitness(X.T.copy())
    assert witness.validate(s, cosets)
    return witness


def counting_prediction(s: LinearSystem, d: int, means: Sequence) -> Fraction:
    """p^{-d (m - rank_L)} prod_i alpha_i."""
    out = Fraction(1, s.p ** (d * (s.m - s.rank_L)))
    for a in means:
        out *= Fraction(a)
    return out


def indicator_coset_count(s: LinearSystem, cosets: Sequence[Coset]) -> Fraction:
    """Lambda_L of the coset indicators, by full enumeration of ker K."""
    h = _common_subspace(cosets)
    fs = []
    for c in cosets:
        mask = np.zeros(h.p**h.n, dtype=bool)
        mask[c.element_indices()] = True
        fs.append(BoundedFunction.indicator(mask, h.p, h.n))
    return lambda_forms(fs, s)


@dataclass(frozen=True, eq=False)
class CosetCountTable:
    """Counts of kernel tuples per coset tuple: Lambda = counts[code] / total."""

    subspace: Subspace
    counts: np.ndarray
    total: int

    def code(self, positions: Sequence[int]) -> int:
        q = self.subspace.p**self.subspace.codim
        return int(sum(int(t) * q**i for i, t in enumerate(positions)))

    def density(self, positions: Sequence[int]) -> Fraction:
        return Fraction(int(self.counts[self.code(positions)]), self.total)


def indicator_coset_table(s: LinearSystem, h: Subspace) -> CosetCountTable:
    """indicator_coset_count for every tuple of cosets of H in one kernel pass."""
    q = h.p**h.codim
    check_cap(q**s.m, "coset tuple table")
    labels = coset_table(h).label
    counts = np.zeros(q**s.m, dtype=np.int64)
    for codes, _ in _kernel_codes(s, labels, q, h.n):
        counts += np.bincount(codes, minlength=q**s.m)
    total = (h.p**h.n) ** s.value_generators.shape[0]
    return CosetCountTable(h, counts, total)


def lambda_on_cosets(fs: Sequence[BoundedFunction], cosets: Sequence[Coset], s: LinearSystem) -> Fraction:
    """Lambda_L(f_1 1_{C_1}, ..., f_m 1_{C_m}), enumerating only ker K inside the cosets.

    Those tuples are z0 + sum_j g_j (x) t_j with t_j in H, where z0 is one
    consistent value tuple and g_j are the rows of a basis of Im(M).
    """
    n = _check_functions(fs, s)
    h = _common_subspace(cosets)
    witness = coset_consistency(s, cosets)
    if witness is None:
        return Fraction(0)
    p = s.p
    sp = space(p, n)
    z0 = sp.index(s.evaluate(witness.x))
    inner = space(p, h.dim)
    embed = sp.index(matmul(inner.coords(np.arange(inner.size)), h.basis, p)) if h.dim else np.zeros(1, np.int64)
    g = s.value_generators
    den = prod(f.den for f in fs)

    def blocks():
        for block in iter_span_tuples(g, p, h.dim):
            yield sp.add(embed[block], z0[None, :])

    total = _weighted_sum([f.num for f in fs], blocks(), den)
    return Fraction(total, den * (p**n) ** g.shape[0])


@dataclass(frozen=True)
class CountReport:
    lhs: Fraction
    main_term: Fraction
    bound: float
    discrepancy: float
    means: tuple
    uniformity: tuple

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.bound + 1e-9


def counting_check(fs: Sequence[BoundedFunction], cosets: Sequence[Coset], s: LinearSystem, delta) -> CountReport:
    """Compare Lambda over consistent cosets with the predicted main term."""
    if coset_consistency(s, cosets) is None:
        raise InconsistentCosets("cosets are not consistent with the system")
    h = _common_subspace(cosets)
    means = tuple(f.mean_on(c) for f, c in zip(fs, cosets))
    lhs = lambda_on_cosets(fs, cosets, s)
    main = counting_prediction(s, h.codim, means)
    scale = Fraction(1, s.p ** (h.codim * (s.m - s.rank_L)))
    bound = float(scale) * s.m * float(delta)
    unif = tuple(uniformity(f, c).max_modulus for f, c in zip(fs, cosets))
    return CountReport(lhs, main, bound, float(abs(lhs - main)), means, unif)


# -- monochromatic solutions ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class MonochromaticSolutions:
    """Solutions of a z = 0 over F_p^k as point-index tuples, sorted lexicographically."""

    tuples: np.ndarray
    count: int

    def first(self) -> np.ndarray | None:
        return self.tuples[0] if self.count else None


def monochromatic_solutions(
    labels: np.ndarray,
    a,
    p: int,
    k: int,
    accept: Callable[[np.ndarray], np.ndarray] | None = None,
    nonzero: bool = False,
) -> MonochromaticSolutions:
    """All z in ker(a) over (F_p^k)^m with labels constant along z.

    ``labels`` assigns a colour (or any integer class) to each point of
    F_p^k; ``accept`` is a vectorized filter on (b, m) index blocks and
    ``nonzero`` drops tuples with a zero entry.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.int64)) % p
    m = a.shape[1]
    kb = kernel_basis(a, p, m)
    found = []
    for block in iter_span_tuples(kb, p, k):
        lab = labels[block]
        keep = (lab == lab[:, :1]).all(axis=1)
        if nonzero:
            keep &= (block != 0).all(axis=1)
        if accept is not None and keep.any():
            keep[keep] = accept(block[keep])
        if keep.any():
            found.append(block[keep])
    tuples = np.vstack(found) if found else np.zeros((0, m), dtype=np.int64)
    if tuples.shape[0] > 1:
        tuples = tuples[np.lexsort(tuples.T[::-1])]
    return MonochromaticSolutions(tuples, tuples.shape[0])


__all__ = [
    "Colouring",
    "ConsistencyWitness",
    "CosetCountTable",
    "CountReport",
    "InconsistentCosets",
    "MonochromaticSolutions",
    "coset_consistency",
    "count_instances",
    "counting_check",
    "counting_prediction",
    "indicator_coset_count",
    "indicator_coset_table",
    "lambda_definitional",
    "lambda_forms",
    "lambda_on_cosets",
    "monochromatic_solutions",
    "pattern_density",
    "pattern_density_by_sum",
    "pattern_free_check",
    "telescoping_residual",
]
