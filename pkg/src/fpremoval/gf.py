"""Exact linear algebra over GF(p) for small primes.

Points of F_p^n appear in two interchangeable forms: coordinate vectors
(int64 arrays of length n) and integer indices ``sum(x[i] * p**i)`` with
the least-significant coordinate first.  For p = 2 the index is the
bit-packed vector itself, so vector addition is XOR.

Matrices are plain 2-D int64 numpy arrays with canonical entries in
``{0, ..., p-1}``; the prime is passed alongside.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

SUPPORTED_PRIMES = (2, 3, 5, 7)
DEFAULT_MAX_POINTS = 1 << 24


class CapExceeded(RuntimeError):
    """An enumeration would exceed the configured point cap."""


def max_points() -> int:
    """Global enumeration cap; ``FPN_MAX_POINTS`` overrides the default 2^24."""
    value = os.environ.get("FPN_MAX_POINTS")
    return int(value) if value else DEFAULT_MAX_POINTS


def check_cap(count: int, what: str = "enumeration", cap: int | None = None) -> None:
    cap = max_points() if cap is None else cap
    if count > cap:
        raise CapExceeded(f"{what} needs {count} points but the cap is {cap}")


def as_fraction(x) -> Fraction:
    """Exact value of x; floats are read through their shortest decimal form, so 0.3 -> 3/10."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def check_prime(p: int) -> int:
    if p not in SUPPORTED_PRIMES:
        raise ValueError(f"unsupported field size {p}; expected one of {SUPPORTED_PRIMES}")
    return p


def as_matrix(m, p: int, cols: int | None = None) -> np.ndarray:
    """Copy ``m`` into a canonical int64 matrix mod p.

    Negative literals are reduced here, so ``[[1, -2, 1]]`` over F_5 becomes
    ``[[1, 3, 1]]``.  An empty input needs ``cols`` to know its width.
    """
    a = np.array(m, dtype=np.int64)
    if a.size == 0:
        width = cols if cols is not None else (a.shape[1] if a.ndim == 2 else 0)
        return np.zeros((0, width), dtype=np.int64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return a % p


@dataclass(frozen=True, eq=False)
class RowReduction:
    matrix: np.ndarray
    rank: int
    pivots: tuple[int, ...]


def rref(m, p: int) -> RowReduction:
    """Reduced row-echelon form; zero rows are kept at the bottom."""
    a = as_matrix(m, p).copy()
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            a[[r, k]] = a[[k, r]]
        a[r] = a[r] * pow(int(a[r, c]), -1, p) % p
        factors = a[:, c].copy()
        factors[r] = 0
        if factors.any():
            a = (a - np.outer(factors, a[r])) % p
        pivots.append(c)
        r += 1
    return RowReduction(a, r, tuple(pivots))


def rank(m, p: int) -> int:
    return rref(m, p).rank


def row_basis(m, p: int, cols: int | None = None) -> np.ndarray:
    """Canonical (RREF, zero rows dropped) basis of the row space."""
    a = as_matrix(m, p, cols)
    red = rref(a, p)
    return red.matrix[: red.rank].copy()


def kernel_basis(m, p: int, cols: int | None = None) -> np.ndarray:
    """RREF basis of ``{x : m @ x = 0}``."""
    a = as_matrix(m, p, cols)
    n = a.shape[1]
    red = rref(a, p)
    free = [c for c in range(n) if c not in red.pivots]
    vecs = np.zeros((len(free), n), dtype=np.int64)
    for k, f in enumerate(free):
        vecs[k, f] = 1
        for i, pc in enumerate(red.pivots):
            vecs[k, pc] = -red.matrix[i, f] % p
    return row_basis(vecs, p, n)


def image_basis(m, p: int, cols: int | None = None) -> np.ndarray:
    """RREF basis of the column space of ``m``."""
    a = as_matrix(m, p, cols)
    return row_basis(a.T, p, a.shape[0])


def matmul(a, b, p: int) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % p


def inverse(m, p: int) -> np.ndarray:
    a = as_matrix(m, p)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse of a non-square matrix")
    red = rref(np.hstack([a, np.eye(n, dtype=np.int64)]), p)
    if red.pivots[:n] != tuple(range(n)) or red.rank < n:
        raise ValueError("matrix is singular")
    return red.matrix[:, n:].copy()


def solve(a, b, p: int) -> np.ndarray | None:
    """One solution X of ``a @ X = b`` (free variables set to 0), or None.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    a = as_matrix(a, p)
    b = np.asarray(b, dtype=np.int64) % p
    vector = b.ndim == 1
    if vector:
        b = b.reshape(-1, 1)
    rows, cols = a.shape
    if b.shape[0] != rows:
        raise ValueError("right-hand side has the wrong number of rows")
    red = rref(np.hstack([a, b]), p)
    lhs, rhs = red.matrix[:, :cols], red.matrix[:, cols:]
    for i in range(rows):
        if not lhs[i].any() and rhs[i].any():
            return None
    x = np.zeros((cols, b.shape[1]), dtype=np.int64)
    for i, pc in enumerate(red.pivots):
        if pc >= cols:
            break
        x[pc] = rhs[i]
    return x[:, 0] if vector else x


def coefficient_vectors(p: int, k: int) -> np.ndarray:
    """All of F_p^k in lexicographic order (first coordinate most significant)."""
    idx = np.arange(p**k, dtype=np.int64)
    out = np.empty((p**k, k), dtype=np.int64)
    for j in range(k):
        out[:, j] = (idx // p ** (k - 1 - j)) % p
    return out


class Space:
    """Index arithmetic for F_p^n (least-significant coordinate first)."""

    def __init__(self, p: int, n: int):
        self.p = check_prime(p)
        self.n = n
        self.size = p**n
        self.powers = p ** np.arange(n, dtype=np.int64)

    def __repr__(self) -> str:
        return f"Space(p={self.p}, n={self.n})"

    @cached_property
    def digits(self) -> np.ndarray:
        check_cap(self.size, "point table")
        idx = np.arange(self.size, dtype=np.int64)
        return ((idx[:, None] // self.powers[None, :]) % self.p).astype(np.int8)

    def index(self, coords) -> np.ndarray | int:
        c = np.asarray(coords, dtype=np.int64) % self.p
        out = c @ self.powers
        return int(out) if np.ndim(out) == 0 else out

    def coords(self, idx) -> np.ndarray:
        i = np.asarray(idx, dtype=np.int64)
        return (i[..., None] // self.powers) % self.p

    @cached_property
    def _mul(self) -> np.ndarray:
        return np.stack([self.index((c * self.digits.astype(np.int64)) % self.p) for c in range(self.p)])

    @cached_property
    def _add(self) -> np.ndarray | None:
        if self.size > 4096:
            return None
        d = self.digits.astype(np.int64)
        out = np.empty((self.size, self.size), dtype=np.int32)
        for i in range(self.size):
            out[i] = ((d[i] + d) % self.p) @ self.powers
        return out

    def scale(self, idx, c: int):
        c %= self.p
        if self.p == 2:
            return idx if c else np.zeros_like(idx)
        return self._mul[c][idx]

    def add(self, a, b):
        if self.p == 2:
            return np.bitwise_xor(a, b)
        if self._add is not None:
            return self._add[a, b].astype(np.int64)
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        s = (self.digits[a].astype(np.int64) + self.digits[b]) % self.p
        return s @ self.powers

    def neg(self, idx):
        return self.scale(idx, -1)


@lru_cache(maxsize=None)
def space(p: int, n: int) -> Space:
    return Space(p, n)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of F_p^n, stored by its canonical RREF basis.

    Build with :meth:`span`, :meth:`full` or :meth:`zero`; two values are
    equal iff their basis tables are identical.
    """

    p: int
    n: int
    basis: np.ndarray

    @classmethod
    def span(cls, vectors, p: int, n: int) -> "Subspace":
        b = row_basis(vectors, p, n)
        if b.shape[1] != n:
            raise ValueError(f"vectors have length {b.shape[1]}, expected {n}")
        b.setflags(write=False)
        return cls(p, n, b)

    @classmethod
    def full(cls, p: int, n: int) -> "Subspace":
        return cls.span(np.eye(n, dtype=np.int64), p, n)

    @classmethod
    def zero(cls, p: int, n: int) -> "Subspace":
        return cls.span(np.zeros((0, n), dtype=np.int64), p, n)

    @classmethod
    def annihilator(cls, vectors, p: int, n: int) -> "Subspace":
        """``{x : v . x = 0 for every given v}``."""
        return cls.span(kernel_basis(vectors, p, n), p, n)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subspace)
            and (self.p, self.n) == (other.p, other.n)
            and self.basis.shape == other.basis.shape
            and np.array_equal(self.basis, other.basis)
        )

    def __hash__(self) -> int:
        return hash((self.p, self.n, self.basis.shape, self.basis.tobytes()))

    def __repr__(self) -> str:
        return f"Subspace(p={self.p}, n={self.n}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def codim(self) -> int:
        return self.n - self.dim

    @property
    def size(self) -> int:
        return self.p**self.dim

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return tuple(int(np.flatnonzero(row)[0]) for row in self.basis)

    @cached_property
    def perp_basis(self) -> np.ndarray:
        b = kernel_basis(self.basis, self.p, self.n)
        b.setflags(write=False)
        return b

    def contains(self, x) -> bool | np.ndarray:
        """Membership test; ``x`` may be one vector or a stack of row vectors."""
        hits = matmul(np.atleast_2d(x), self.perp_basis.T, self.p)
        out = ~hits.any(axis=1)
        return bool(out[0]) if np.ndim(x) == 1 else out

    def __le__(self, other: "Subspace") -> bool:
        if (self.p, self.n) != (other.p, other.n):
            return False
        return self.dim == 0 or bool(np.all(other.contains(self.basis)))

    def elements(self) -> np.ndarray:
        """All members as a (p^dim, n) array, lexicographic in basis coefficients."""
        check_cap(self.size, "subspace enumeration")
        return matmul(coefficient_vectors(self.p, self.dim), self.basis, self.p)

    def element_indices(self) -> np.ndarray:
        return space(self.p, self.n).index(self.elements())


def perp(s: Subspace) -> Subspace:
    return Subspace.span(s.perp_basis, s.p, s.n)


def intersect(a: Subspace, b: Subspace) -> Subspace:
    if (a.p, a.n) != (b.p, b.n):
        raise ValueError("subspaces live in different ambient spaces")
    return Subspace.annihilator(np.vstack([a.perp_basis, b.perp_basis]), a.p, a.n)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    if (a.p, a.n) != (b.p, b.n):
        raise ValueError("subspaces live in different ambient spaces")
    return Subspace.span(np.vstack([a.basis, b.basis]), a.p, a.n)


def canonical_rep(s: Subspace, x) -> np.ndarray:
    """Canonical coset representative: x with the pivot coordinates of s cleared.

    Works row-wise on a stack of vectors as well.
    """
    x = np.asarray(x, dtype=np.int64) % s.p
    if s.dim == 0:
        return x.copy()
    piv = list(s.pivots)
    return (x - x[..., piv] @ s.basis) % s.p


def enumerate_subspace(s: Subspace) -> Iterator[np.ndarray]:
    yield from s.elements()


@dataclass(frozen=True, eq=False)
class Coset:
    subspace: Subspace
    rep: np.ndarray

    @classmethod
    def of(cls, subspace: Subspace, x) -> "Coset":
        rep = canonical_rep(subspace, x)
        rep.setflags(write=False)
        return cls(subspace, rep)

    def __eq__(self, other) -> bool:
        return isinstance(other, Coset) and self.subspace == other.subspace and np.array_equal(self.rep, other.rep)

    def __hash__(self) -> int:
        return hash((self.subspace, self.rep.tobytes()))

    def __repr__(self) -> str:
        return f"Coset({self.subspace!r}, rep={self.rep.tolist()})"

    @property
    def p(self) -> int:
        return self.subspace.p

    @property
    def n(self) -> int:
        return self.subspace.n

    def contains(self, x):
        return self.subspace.contains((np.asarray(x) - self.rep) % self.p)

    def issubset(self, other: "Coset") -> bool:
        return self.subspace <= other.subspace and bool(other.contains(self.rep))

    def elements(self) -> np.ndarray:
        return (self.subspace.elements() + self.rep) % self.p

    def element_indices(self) -> np.ndarray:
        return space(self.p, self.n).index(self.elements())


@dataclass(frozen=True, eq=False)
class Complement:
    """A subspace U with U + of = F_p^n and U & of = {0}."""

    of: Subspace
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def span(self) -> Subspace:
        return Subspace.span(self.basis, self.of.p, self.of.n)

    @cached_property
    def _change_of_basis(self) -> np.ndarray:
        return inverse(np.vstack([self.basis, self.of.basis]), self.of.p)

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Decompose x = u + h with u in U and h in the complemented subspace."""
        p = self.of.p
        coeffs = matmul(np.asarray(x, dtype=np.int64), self._change_of_basis, p)
        k = self.dim
        u = matmul(coeffs[..., :k], self.basis, p)
        return u, (np.asarray(x) - u) % p

    def elements(self) -> np.ndarray:
        return matmul(coefficient_vectors(self.of.p, self.dim), self.basis, self.of.p)


def complement(s: Subspace, seed: int | None = 0) -> Complement:
    """Random complement of s, deterministic given ``seed``."""
    rng = np.random.default_rng(seed)
    p, n = s.p, s.n
    current = s.basis.copy()
    chosen: list[np.ndarray] = []
    r = s.dim
    while r < n:
        v = rng.integers(0, p, size=n, dtype=np.int64)
        trial = np.vstack([current, v])
        if rank(trial, p) > r:
            current = trial
            chosen.append(v)
            r += 1
    basis = row_basis(np.array(chosen, dtype=np.int64).reshape(-1, n), p, n)
    basis.setflags(write=False)
    return Complement(s, basis)


def iter_span_tuples(gen, p: int, n: int, max_rows: int = 1 << 18) -> Iterator[np.ndarray]:
    """Enumerate ``{sum_j t_j (x) gen[j] : t in (F_p^n)^k}`` as point-index tuples.

    ``gen`` is a k x m matrix over F_p.  Each yielded block has shape
    (b, m); component i of a tuple is ``sum_j gen[j, i] * t_j``.  Blocks come
    in lexicographic order of (t_0, ..., t_{k-1}) with t_{k-1} fastest.  The
    map is a bijection onto its image when the rows of ``gen`` are
    independent.
    """
    g = as_matrix(gen, p)
    k, m = g.shape
    sp = space(p, n)
    size = sp.size
    check_cap(size**k, "tuple enumeration")
    if k == 0:
        yield np.zeros((1, m), dtype=np.int64)
        return
    points = np.arange(size, dtype=np.int64)
    last = [sp.scale(points, int(g[-1, i])) for i in range(m)]
    n_prefix = size ** (k - 1)
    batch = max(1, max_rows // size)
    for start in range(0, n_prefix, batch):
        q = np.arange(start, min(start + batch, n_prefix), dtype=np.int64)
        prefix = np.zeros((q.size, m), dtype=np.int64)
        for j in range(k - 1):
            t_j = (q // size ** (k - 2 - j)) % size
            for i in range(m):
                if g[j, i]:
                    prefix[:, i] = sp.add(prefix[:, i], sp.scale(t_j, int(g[j, i])))
        block = np.empty((q.size, size, m), dtype=np.int64)
        for i in range(m):
            block[:, :, i] = sp.add(prefix[:, i][:, None], last[i][None, :])
        yield block.reshape(-1, m)


def apply_to_tuples(a, z_coords: np.ndarray, p: int) -> np.ndarray:
    """``a @ z`` for a tuple of points given as an (m, n) coordinate array."""
    return matmul(a, z_coords, p)


def orthogonality_duality_check(a, n: int, p: int) -> bool:
    """Brute-force check that Im(a)^perp = ker(a^T) inside (F_p^n)^rows.

    Both sides are enumerated over every tuple in (F_p^n)^rows; the image
    side is tested against the images of all standard basis tuples, which
    generate Im(a).
    """
    a = as_matrix(a, p)
    rows, cols = a.shape
    total = p ** (n * rows)
    check_cap(total, "duality check")
    v = space(p, n * rows).coords(np.arange(total)) if total else np.zeros((0, n * rows))
    v = v.reshape(total, rows, n)
    # images A e_{j,c}: column j of a in coordinate c
    orth = np.ones(total, dtype=bool)
    for j in range(cols):
        for c in range(n):
            dots = (v[:, :, c] @ a[:, j]) % p
            orth &= dots == 0
    # ker(a^T): sum_i a[i, j] v_i = 0 for every column j
    ker = np.ones(total, dtype=bool)
    for j in range(cols):
        comb = np.einsum("i,tic->tc", a[:, j], v) % p
        ker &= ~comb.any(axis=1)
    return bool(np.array_equal(orth, ker))


def format_vector(x: Sequence[int]) -> list[int]:
    return [int(v) for v in x]
