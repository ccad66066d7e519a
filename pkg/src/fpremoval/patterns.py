"""Linear systems, arithmetic patterns and partition-regularity certificates."""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .gf import (
    CapExceeded,
    as_matrix,
    check_cap,
    check_prime,
    image_basis,
    iter_span_tuples,
    kernel_basis,
    matmul,
    rank,
    space,
)

MAX_RADO_COLUMNS = 14
MAX_JOINT_COLOURINGS = 10**6


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """m linear forms in l variables over F_p.

    ``M`` is the m x l coefficient matrix, ``K`` a canonical basis (as rows)
    of ker(M^T).  A tuple z in (F_p^n)^m is a value tuple of the system iff
    K z = 0.
    """

    p: int
    M: np.ndarray
    K: np.ndarray

    @property
    def m(self) -> int:
        return self.M.shape[0]

    @property
    def l(self) -> int:
        return self.M.shape[1]

    @property
    def rank_L(self) -> int:
        """Number of independent dependencies among the forms, m - rank(M)."""
        return self.K.shape[0]

    @cached_property
    def rank_M(self) -> int:
        return rank(self.M, self.p)

    @cached_property
    def value_generators(self) -> np.ndarray:
        """RREF basis of Im(M) = ker(K), as rows of length m."""
        return image_basis(self.M, self.p)

    def evaluate(self, x) -> np.ndarray:
        """(L_1(x), ..., L_m(x)) for x given as an (l, n) coordinate array."""
        return matmul(self.M, np.asarray(x, dtype=np.int64).reshape(self.l, -1), self.p)


def build_system(p: int, forms: Sequence[Sequence[int]]) -> LinearSystem:
    check_prime(p)
    rows = [list(r) for r in forms]
    if not rows:
        raise ValueError("a linear system needs at least one form")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"inconsistent form lengths {sorted(widths)}")
    M = as_matrix(rows, p)
    K = kernel_basis(M.T, p, M.shape[0])
    M.setflags(write=False)
    K.setflags(write=False)
    return LinearSystem(p, M, K)


def values_kernel_duality_check(s: LinearSystem, n: int) -> bool:
    """Enumerate both the value set of s and ker(K) in (F_p^n)^m and compare.

    A tuple (z_1, ..., z_m) is encoded as the index of the concatenated
    vector in F_p^{nm}, i.e. ``sum_i idx(z_i) * p^(n i)``.
    """
    p, m, l = s.p, s.m, s.l
    size = p**n
    total = size**m
    check_cap(total, "value-set enumeration")
    check_cap(size**l, "variable enumeration")
    weights = size ** np.arange(m, dtype=np.int64)
    values = np.zeros(total, dtype=bool)
    for block in iter_span_tuples(s.M.T, p, n):
        values[block @ weights] = True
    z = space(p, n * m).coords(np.arange(total)).reshape(total, m, n)
    in_ker = np.ones(total, dtype=bool)
    for row in s.K:
        in_ker &= ~(np.einsum("i,tic->tc", row, z) % p).any(axis=1)
    return bool(np.array_equal(values, in_ker))


# -- patterns ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Pattern:
    """A linear system together with a family X of colourings of its forms.

    Colourings are tuples of colours in 1..r.  A combined pattern also
    keeps its per-block families so membership in X* stays cheap.
    """

    system: LinearSystem
    r: int
    colourings: frozenset
    blocks: tuple = field(default=())

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("need at least one colour")
        for chi in self.colourings:
            if len(chi) != self.system.m:
                raise ValueError(f"colouring {chi} has length {len(chi)}, expected {self.system.m}")
            if any(not 1 <= c <= self.r for c in chi):
                raise ValueError(f"colouring {chi} uses a colour outside 1..{self.r}")

    @classmethod
    def of(cls, p: int, forms, r: int, colourings: Iterable[Sequence[int]]) -> "Pattern":
        return cls(build_system(p, forms), r, frozenset(tuple(int(c) for c in chi) for chi in colourings))

    @property
    def p(self) -> int:
        return self.system.p

    @property
    def m(self) -> int:
        return self.system.m

    def accepts(self, colours: Sequence[int]) -> bool:
        colours = tuple(int(c) for c in colours)
        if self.blocks:
            return any(colours[o : o + w] in fam for o, w, fam in self.blocks)
        return colours in self.colourings

    def colour_codes(self) -> np.ndarray:
        """Sorted codes ``sum_i (chi_i - 1) r^i`` of every colouring in X."""
        w = self.r ** np.arange(self.m, dtype=np.int64)
        codes = [int(np.dot(np.array(chi) - 1, w)) for chi in self.colourings]
        return np.array(sorted(codes), dtype=np.int64)


def monochromatic_pattern(p: int, forms, r: int, colour: int | None = None) -> Pattern:
    """Pattern whose instances are monochromatic (in ``colour`` if given)."""
    m = len(forms)
    colours = [colour] if colour is not None else range(1, r + 1)
    return Pattern.of(p, forms, r, [(c,) * m for c in colours])


def is_instance(pat: Pattern, colouring, tup) -> bool:
    """tup is an (m, n) coordinate array; ``colouring`` maps point index -> colour."""
    z = np.asarray(tup, dtype=np.int64)
    if z.shape[0] != pat.m:
        raise ValueError("tuple length differs from the number of forms")
    if matmul(pat.system.K, z, pat.p).any():
        return False
    sp = space(pat.p, z.shape[1])
    table = getattr(colouring, "table", colouring)
    return pat.accepts([int(table[sp.index(v)]) for v in z])


# -- Rado column conditions ----------------------------------------------------


@dataclass(frozen=True)
class RadoCertificate:
    ordering: tuple[int, ...]
    breakpoints: tuple[int, ...]

    def blocks(self) -> list[tuple[int, ...]]:
        out, start = [], 0
        for k in self.breakpoints:
            out.append(self.ordering[start:k])
            start = k
        return out

    def validate(self, a, p: int) -> bool:
        a = as_matrix(a, p)
        m = a.shape[1]
        if sorted(self.ordering) != list(range(m)):
            return False
        bp = self.breakpoints
        if not bp or bp[-1] != m or any(x >= y for x, y in zip((0,) + bp, bp)):
            return False
        used: list[int] = []
        for i, block in enumerate(self.blocks()):
            total = a[:, list(block)].sum(axis=1) % p
            if i == 0:
                if total.any():
                    return False
            elif not _in_span(a[:, used], total, p):
                return False
            used.extend(block)
        return True

    def to_json(self) -> dict:
        return {"ordering": list(self.ordering), "breakpoints": list(self.breakpoints)}


def _in_span(cols: np.ndarray, v: np.ndarray, p: int) -> bool:
    if not v.any():
        return True
    if cols.shape[1] == 0:
        return False
    return rank(np.column_stack([cols, v]), p) == rank(cols, p)


def _subsets_lex(items: Sequence[int]):
    """Nonempty subsets of ``items`` as sorted tuples, in lexicographic order."""
    subsets = [c for k in range(1, len(items) + 1) for c in itertools.combinations(items, k)]
    return sorted(subsets)


def check_column_conditions(a, p: int) -> RadoCertificate | None:
    """Lexicographically least Rado certificate for the columns of ``a``.

    The first block is the least zero-sum subset; each later block is the
    least subset of the unused columns whose sum lies in the span of the
    used ones.  Greedy extension cannot get stuck when any certificate
    exists: the first certificate block not yet used has a residual sum in
    the current span.  So a failure after the first block proves there is
    no certificate at all.
    """
    a = as_matrix(a, p)
    m = a.shape[1]
    if m > MAX_RADO_COLUMNS:
        raise CapExceeded(f"certificate search limited to {MAX_RADO_COLUMNS} columns, got {m}")
    first = next((s for s in _subsets_lex(range(m)) if not (a[:, list(s)].sum(axis=1) % p).any()), None)
    if first is None:
        return None
    ordering = list(first)
    breakpoints = [len(ordering)]
    while len(ordering) < m:
        rest = [i for i in range(m) if i not in ordering]
        used = a[:, ordering]
        block = next(
            (s for s in _subsets_lex(rest) if _in_span(used, a[:, list(s)].sum(axis=1) % p, p)),
            None,
        )
        if block is None:
            return None
        ordering.extend(block)
        breakpoints.append(len(ordering))
    return RadoCertificate(tuple(ordering), tuple(breakpoints))


def is_partition_regular(pat: Pattern | LinearSystem) -> RadoCertificate | None:
    s = pat.system if isinstance(pat, Pattern) else pat
    return check_column_conditions(s.K if s.K.shape[0] else np.zeros((0, s.m), dtype=np.int64), s.p)


def brute_force_certificate_exists(a, p: int) -> bool:
    """Exhaustive search over ordered set partitions of the columns (small m only)."""
    a = as_matrix(a, p)
    m = a.shape[1]

    def extend(used: list[int], rest: frozenset) -> bool:
        if not rest:
            return True
        for k in range(1, len(rest) + 1):
            for block in itertools.combinations(sorted(rest), k):
                if _in_span(a[:, used], a[:, list(block)].sum(axis=1) % p, p):
                    if extend(used + list(block), rest - set(block)):
                        return True
        return False

    cols = frozenset(range(m))
    for k in range(1, m + 1):
        for first in itertools.combinations(range(m), k):
            if not (a[:, list(first)].sum(axis=1) % p).any() and extend(list(first), cols - set(first)):
                return True
    return False


# -- true complexity -----------------------------------------------------------


class Complexity(enum.Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


def squared_form(coeffs: Sequence[int], p: int) -> np.ndarray:
    """Coefficients of (sum c_i x_i)^2 over the monomials x_i x_j, i <= j."""
    c = [int(v) % p for v in coeffs]
    out = []
    for i in range(len(c)):
        for j in range(i, len(c)):
            out.append(c[i] * c[i] if i == j else 2 * c[i] * c[j])
    return np.array(out, dtype=np.int64) % p


def complexity_is_one(s: LinearSystem) -> Complexity:
    """Squares criterion: complexity <= 1 iff the squared forms are independent.

    The criterion needs p large enough for degree-2 polynomials to behave;
    below p = 5 the answer is inconclusive.
    """
    if s.p < 5:
        return Complexity.INCONCLUSIVE
    squares = np.array([squared_form(row, s.p) for row in s.M])
    return Complexity.YES if rank(squares, s.p) == s.m else Complexity.NO


# -- combination ---------------------------------------------------------------


def _pad_forms(M: np.ndarray, m: int) -> np.ndarray:
    """Append forms that are fresh free variables until there are m forms."""
    extra = m - M.shape[0]
    if extra == 0:
        return M
    top = np.hstack([M, np.zeros((M.shape[0], extra), dtype=np.int64)])
    bottom = np.hstack([np.zeros((extra, M.shape[1]), dtype=np.int64), np.eye(extra, dtype=np.int64)])
    return np.vstack([top, bottom])


def combine_patterns(pats: Sequence[Pattern]) -> Pattern:
    """Block-diagonal combination; the joint family accepts a tuple if any block does.

    Shorter systems are padded with free-variable forms, which adds zero
    columns to their dependency matrices and any colour at the new positions.
    """
    if not pats:
        raise ValueError("nothing to combine")
    p, r = pats[0].p, pats[0].r
    if any(q.p != p or q.r != r for q in pats):
        raise ValueError("patterns must share the field and the number of colours")
    if len(pats) == 1:
        return pats[0]
    m = max(q.m for q in pats)
    families = []
    blocks_M = []
    for q in pats:
        blocks_M.append(_pad_forms(q.system.M, m))
        pad = m - q.m
        fam = frozenset(chi + tail for chi in q.colourings for tail in itertools.product(range(1, r + 1), repeat=pad))
        families.append(fam)
    t = len(pats)
    total = r ** (m * t)
    rejected = 1
    for fam in families:
        rejected *= r**m - len(fam)
    size = total - rejected
    if size > MAX_JOINT_COLOURINGS:
        raise CapExceeded(f"joint colouring family has {size} members, cap is {MAX_JOINT_COLOURINGS}")
    rows = sum(b.shape[0] for b in blocks_M)
    cols = sum(b.shape[1] for b in blocks_M)
    M = np.zeros((rows, cols), dtype=np.int64)
    i = j = 0
    for b in blocks_M:
        M[i : i + b.shape[0], j : j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    system = build_system(p, M.tolist())
    block_spec = tuple((k * m, m, fam) for k, fam in enumerate(families))
    joint = set()
    for k, fam in enumerate(families):
        for chi in fam:
            for before in itertools.product(range(1, r + 1), repeat=k * m):
                for after in itertools.product(range(1, r + 1), repeat=(t - 1 - k) * m):
                    joint.add(before + chi + after)
    return Pattern(system, r, frozenset(joint), block_spec)


# -- JSON ----------------------------------------------------------------------


def pattern_to_json(pat: Pattern) -> str:
    doc = {
        "p": pat.p,
        "r": pat.r,
        "forms": pat.system.M.tolist(),
        "colourings": [list(chi) for chi in sorted(pat.colourings)],
    }
    return json.dumps(doc)


def pattern_from_json(text: str) -> Pattern:
    """Parse a pattern document; raises ValueError on any malformed input."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed pattern JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("pattern document must be a JSON object")
    missing = [k for k in ("p", "r", "forms", "colourings") if k not in doc]
    if missing:
        raise ValueError(f"pattern document lacks {', '.join(missing)}")
    p, r, forms, cols = doc["p"], doc["r"], doc["forms"], doc["colourings"]
    if not all(isinstance(v, int) for v in (p, r)):
        raise ValueError("p and r must be integers")
    if not isinstance(forms, list) or not all(isinstance(f, list) and all(isinstance(c, int) for c in f) for f in forms):
        raise ValueError("forms must be an array of integer arrays")
    if not isinstance(cols, list) or not all(isinstance(c, list) and all(isinstance(v, int) for v in c) for c in cols):
        raise ValueError("colourings must be an array of integer arrays")
    return Pattern.of(p, forms, r, cols)


__all__ = [
    "Complexity",
    "LinearSystem",
    "Pattern",
    "RadoCertificate",
    "brute_force_certificate_exists",
    "build_system",
    "check_column_conditions",
    "combine_patterns",
    "complexity_is_one",
    "is_instance",
    "is_partition_regular",
    "monochromatic_pattern",
    "pattern_from_json",
    "pattern_to_json",
    "squared_form",
    "values_kernel_duality_check",
]
