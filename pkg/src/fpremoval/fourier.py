"""Fourier analysis of bounded functions restricted to cosets.

A coset H + c of dimension k is identified with F_p^k through the RREF
basis of H, and the restricted function is transformed there.  Characters
r of F_p^n only matter through their class modulo H^perp, and the classes
correspond one-to-one with s = (r . b_1, ..., r . b_k) in F_p^k, so each
coset spectrum has exactly p^k entries.

For p = 2 every character is +-1 and all coefficients are kept exact
(integer Walsh-Hadamard sums over a common denominator).  For odd p the
coefficients are complex doubles and comparisons use ``TOL``.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .gf import (
    CapExceeded,
    Coset,
    Subspace,
    as_fraction,
    canonical_rep,
    check_cap,
    coefficient_vectors,
    matmul,
    perp,
    space,
)

TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BoundedFunction:
    """f : F_p^n -> [-1, 1] with exact rational values ``num / den``."""

    p: int
    n: int
    num: np.ndarray
    den: int = 1

    def __post_init__(self):
        if self.num.shape != (self.p**self.n,):
            raise ValueError(f"table has shape {self.num.shape}, expected ({self.p ** self.n},)")
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        if self.num.size and int(np.abs(self.num).max()) > self.den:
            raise ValueError("function values must lie in [-1, 1]")

    @classmethod
    def from_values(cls, values: Iterable, p: int, n: int) -> "BoundedFunction":
        vals = [Fraction(v) for v in values]
        den = 1
        for v in vals:
            den = den * v.denominator // np.gcd(den, v.denominator)
        num = np.array([int(v * den) for v in vals], dtype=np.int64)
        return cls(p, n, num, int(den))

    @classmethod
    def indicator(cls, mask, p: int, n: int) -> "BoundedFunction":
        return cls(p, n, np.asarray(mask, dtype=bool).astype(np.int64), 1)

    @classmethod
    def constant(cls, value, p: int, n: int) -> "BoundedFunction":
        v = Fraction(value)
        return cls(p, n, np.full(p**n, v.numerator, dtype=np.int64), v.denominator)

    @property
    def size(self) -> int:
        return self.p**self.n

    def value(self, idx: int) -> Fraction:
        return Fraction(int(self.num[idx]), self.den)

    def values(self) -> list[Fraction]:
        return [Fraction(int(v), self.den) for v in self.num]

    def floats(self) -> np.ndarray:
        return self.num / self.den

    def restrict(self, coset: Coset) -> "BoundedFunction":
        """f * 1_coset."""
        mask = np.zeros(self.size, dtype=np.int64)
        mask[coset.element_indices()] = 1
        return BoundedFunction(self.p, self.n, self.num * mask, self.den)

    def shift(self, h) -> "BoundedFunction":
        """x -> f(x + h)."""
        sp = space(self.p, self.n)
        idx = sp.add(np.arange(self.size), sp.index(h))
        return BoundedFunction(self.p, self.n, self.num[idx], self.den)

    def mean_on(self, coset: Coset) -> Fraction:
        idx = coset.element_indices()
        return Fraction(int(self.num[idx].sum()), self.den * idx.size)


def char_value(r, x, p: int) -> complex:
    """e_p(r . x); exactly +-1 when p = 2."""
    t = int(np.dot(np.asarray(r, dtype=np.int64), np.asarray(x, dtype=np.int64)) % p)
    if p == 2:
        return complex(1 - 2 * t)
    return cmath.exp(2j * cmath.pi * t / p)


# -- coset bookkeeping -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CosetTable:
    """All cosets of a subspace H, in lexicographic order of canonical reps.

    ``order[t, a]`` is the point index of rep_t + sum_j a_j b_j where a runs
    over F_p^k lexicographically; ``label[x]`` is the coset number of x.
    """

    subspace: Subspace
    reps: np.ndarray
    rep_index: np.ndarray
    order: np.ndarray
    label: np.ndarray

    @property
    def count(self) -> int:
        return self.reps.shape[0]

    def position(self, x) -> int:
        return int(self.label[space(self.subspace.p, self.subspace.n).index(x)])


@lru_cache(maxsize=64)
def coset_table(h: Subspace) -> CosetTable:
    p, n = h.p, h.n
    sp = space(p, n)
    check_cap(sp.size, "coset table")
    free = [i for i in range(n) if i not in h.pivots]
    reps = np.zeros((p ** len(free), n), dtype=np.int64)
    reps[:, free] = coefficient_vectors(p, len(free))
    rep_index = sp.index(reps)
    elem_index = h.element_indices()
    order = sp.add(rep_index[:, None], elem_index[None, :])
    label = np.empty(sp.size, dtype=np.int64)
    label[order] = np.arange(reps.shape[0])[:, None]
    for a in (reps, rep_index, order, label):
        a.setflags(write=False)
    return CosetTable(h, reps, rep_index, order, label)


def class_reps(h: Subspace, s_vectors) -> np.ndarray:
    """Canonical representatives (mod H^perp) of the characters with given s-coordinates."""
    s_vectors = np.atleast_2d(np.asarray(s_vectors, dtype=np.int64))
    r = np.zeros((s_vectors.shape[0], h.n), dtype=np.int64)
    if h.dim:
        r[:, list(h.pivots)] = s_vectors
    return canonical_rep(perp(h), r)


def _transform(values: np.ndarray, p: int, k: int) -> np.ndarray:
    """Transform along the last axis (length p^k, lexicographic layout).

    p = 2: integer sums sum_a g(a) (-1)^{s.a}.  Odd p: complex means
    E_a g(a) e_p(s.a).
    """
    rows = values.shape[0]
    if p == 2:
        out = values.astype(np.int64).reshape((rows,) + (2,) * k)
        for axis in range(1, k + 1):
            a0 = np.take(out, 0, axis=axis)
            a1 = np.take(out, 1, axis=axis)
            out = np.stack([a0 + a1, a0 - a1], axis=axis)
        return out.reshape(rows, -1)
    shaped = values.astype(np.float64).reshape((rows,) + (p,) * k)
    return np.fft.ifftn(shaped, axes=tuple(range(1, k + 1))).reshape(rows, -1)


@dataclass(frozen=True, eq=False)
class CosetScan:
    """Spectra of f on every coset of H, computed in one batch.

    ``sums[t]`` is the exact sum of numerators on coset t; ``raw[t, s]`` the
    transform at class s (integer sums for p = 2, complex means otherwise)
    with the trivial class zeroed, i.e. already centred.
    """

    f: BoundedFunction
    table: CosetTable
    sums: np.ndarray
    raw: np.ndarray

    @property
    def scale(self) -> int:
        return self.f.den * self.table.subspace.size

    def mean(self, t: int) -> Fraction:
        return Fraction(int(self.sums[t]), self.scale)

    def means(self) -> list[Fraction]:
        return [Fraction(int(v), self.scale) for v in self.sums]

    def moduli(self) -> np.ndarray:
        if self.f.p == 2:
            return np.abs(self.raw) / self.scale
        return np.abs(self.raw) / self.f.den

    def max_moduli(self) -> np.ndarray:
        if self.raw.shape[1] == 0:
            return np.zeros(self.raw.shape[0])
        return self.moduli().max(axis=1)

    def exact_max(self, t: int) -> Fraction | float:
        if self.f.p == 2:
            return Fraction(int(np.abs(self.raw[t]).max()), self.scale)
        return float(self.moduli()[t].max())

    def irregular(self, eps) -> np.ndarray:
        """Cosets where f is not eps-uniform (exact for p = 2)."""
        if self.f.p == 2:
            e = as_fraction(eps)
            peak = np.abs(self.raw).max(axis=1).astype(object)
            return np.array([v * e.denominator > e.numerator * self.scale for v in peak], dtype=bool)
        return self.max_moduli() > float(eps) + TOL


def scan_cosets(f: BoundedFunction, h: Subspace) -> CosetScan:
    if (f.p, f.n) != (h.p, h.n):
        raise ValueError("function and subspace live in different spaces")
    table = coset_table(h)
    vals = f.num[table.order]
    sums = vals.sum(axis=1)
    raw = _transform(vals, f.p, h.dim)
    raw[:, 0] = 0
    return CosetScan(f, table, sums, raw)


# -- single-coset spectra ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CosetSpectrum:
    """Fourier coefficients of F = f - mean on one coset.

    ``reps[s]`` is the canonical character for class s and
    ``coefficients[s]`` the value of the transform there.  For p = 2
    ``exact[s]`` holds the same numbers as Fractions.
    """

    coset: Coset
    mean: Fraction
    reps: np.ndarray
    coefficients: np.ndarray
    exact: tuple[Fraction, ...] | None = None

    def moduli(self) -> np.ndarray:
        return np.abs(self.coefficients)


def coset_spectrum(f: BoundedFunction, c: Coset) -> CosetSpectrum:
    h = c.subspace
    p, k = h.p, h.dim
    check_cap(h.size, "coset spectrum")
    sp = space(p, h.n)
    idx = sp.index(c.elements())
    vals = f.num[idx][None, :]
    raw = _transform(vals, p, k)[0]
    raw[0] = 0
    s_vecs = coefficient_vectors(p, k)
    reps = class_reps(h, s_vecs)
    # transform is taken relative to c; restore the phase e_p(r . c)
    phase_t = matmul(reps, c.rep, p)
    mean = Fraction(int(vals.sum()), f.den * h.size)
    if p == 2:
        signed = raw * (1 - 2 * phase_t)
        exact = tuple(Fraction(int(v), f.den * h.size) for v in signed)
        coeffs = signed / (f.den * h.size) + 0j
        return CosetSpectrum(c, mean, reps, coeffs, exact)
    coeffs = raw / f.den * np.exp(2j * np.pi * phase_t / p)
    return CosetSpectrum(c, mean, reps, coeffs)


@dataclass(frozen=True)
class UniformityReport:
    max_modulus: Fraction | float
    witness_r: tuple[int, ...]

    def is_epsilon_uniform(self, eps) -> bool:
        if isinstance(self.max_modulus, Fraction):
            return self.max_modulus <= as_fraction(eps)
        return self.max_modulus <= float(eps) + TOL


def _lex_least_witness(h: Subspace, moduli: np.ndarray, exact_peak=None) -> tuple[int, ...]:
    if exact_peak is not None:
        cand = np.flatnonzero(exact_peak)
    else:
        cand = np.flatnonzero(moduli >= moduli.max() - 1e-12)
    reps = class_reps(h, coefficient_vectors(h.p, h.dim)[cand])
    best = min(tuple(int(v) for v in row) for row in reps)
    return best


def uniformity(f: BoundedFunction, c: Coset) -> UniformityReport:
    h = c.subspace
    if h.dim == 0:
        return UniformityReport(Fraction(0) if h.p == 2 else 0.0, (0,) * h.n)
    spec = coset_spectrum(f, c)
    if h.p == 2:
        mags = [abs(v) for v in spec.exact]
        peak = max(mags)
        witness = _lex_least_witness(h, None, np.array([m == peak for m in mags]))
        return UniformityReport(peak, witness)
    mods = spec.moduli()
    return UniformityReport(float(mods.max()), _lex_least_witness(h, mods))


@dataclass
class PartitionReport:
    subspace: Subspace
    epsilon: object
    irregular_fraction: Fraction
    reps: np.ndarray
    flags: np.ndarray
    max_moduli: np.ndarray = field(repr=False)

    @property
    def is_regular(self) -> bool:
        return self.irregular_fraction <= Fraction(self.epsilon)


def partition_report(fs: Sequence[BoundedFunction], h: Subspace, eps) -> PartitionReport:
    """Flag every coset of H on which some f_i fails eps-uniformity."""
    table = coset_table(h)
    flags = np.zeros(table.count, dtype=bool)
    peak = np.zeros(table.count)
    for f in fs:
        scan = scan_cosets(f, h)
        flags |= scan.irregular(eps)
        peak = np.maximum(peak, scan.max_moduli())
    frac = Fraction(int(flags.sum()), table.count)
    return PartitionReport(h, eps, frac, table.reps, flags, peak)


@dataclass(frozen=True)
class InheritanceReport:
    d: int
    eps1: Fraction | float
    eps2: Fraction | float
    mean_gap: Fraction
    bound: float

    @property
    def uniformity_holds(self) -> bool:
        return float(self.eps2) <= self.bound + TOL

    @property
    def mean_holds(self) -> bool:
        return float(abs(self.mean_gap)) <= self.bound + TOL

    @property
    def holds(self) -> bool:
        return self.uniformity_holds and self.mean_holds


def inheritance_check(f: BoundedFunction, c1: Coset, c2: Coset) -> InheritanceReport:
    """Measure how uniformity and the mean pass from C1 to a subcoset C2."""
    if not c2.issubset(c1):
        raise ValueError("C2 is not contained in C1")
    d = c1.subspace.dim - c2.subspace.dim
    e1 = uniformity(f, c1).max_modulus
    e2 = uniformity(f, c2).max_modulus
    gap = f.mean_on(c2) - f.mean_on(c1)
    return InheritanceReport(d, e1, e2, gap, float(f.p**d * float(e1)))


__all__ = [
    "TOL",
    "BoundedFunction",
    "CapExceeded",
    "CosetScan",
    "CosetSpectrum",
    "CosetTable",
    "InheritanceReport",
    "PartitionReport",
    "UniformityReport",
    "char_value",
    "class_reps",
    "coset_spectrum",
    "coset_table",
    "inheritance_check",
    "partition_report",
    "scan_cosets",
    "uniformity",
]
