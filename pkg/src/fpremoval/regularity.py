"""Energy-increment regularity partitions and the subcoset selections built on them."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .counting import monochromatic_solutions
from .fourier import BoundedFunction, class_reps, coset_table, partition_report, scan_cosets, uniformity
from .gf import (
    Complement,
    Coset,
    Subspace,
    as_fraction,
    coefficient_vectors,
    complement,
    intersect,
    matmul,
    rank,
    space,
)

TIE_TOL = 1e-12


class RegularityError(RuntimeError):
    """Refinement hit its codimension budget before becoming regular."""

    def __init__(self, message: str, partition: "RegularPartition"):
        super().__init__(message)
        self.partition = partition


class SelectionError(RuntimeError):
    """No selection with the required properties was found."""


def frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _num_str(x) -> str:
    return frac_str(x) if isinstance(x, Fraction) else repr(float(x))


def energy(fs: Sequence[BoundedFunction], h: Subspace) -> Fraction:
    """sum_f mean over cosets of H of (coset mean of f)^2."""
    out = Fraction(0)
    for f in fs:
        scan = scan_cosets(f, h)
        sq = sum(int(v) * int(v) for v in scan.sums)
        out += Fraction(sq, scan.scale**2 * scan.table.count)
    return out


@dataclass(frozen=True)
class RefinementStep:
    coset_rep: tuple[int, ...]
    witness: tuple[int, ...]
    function: int
    modulus: float
    energy_before: Fraction
    energy_after: Fraction
    cosets_before: int

    @property
    def increment(self) -> Fraction:
        """Energy gain scaled by the number of cosets before the step.

        Splitting one coset C by the witness hyperplane raises the energy by
        at least |F^(r)|^2 / #cosets, so this quantity is at least the squared
        modulus of the refining coefficient.
        """
        return (self.energy_after - self.energy_before) * self.cosets_before

    def to_json(self) -> dict:
        return {
            "coset_rep": list(self.coset_rep),
            "witness": list(self.witness),
            "function": self.function,
            "modulus": repr(self.modulus),
            "energy_before": frac_str(self.energy_before),
            "energy_after": frac_str(self.energy_after),
            "increment": frac_str(self.increment),
        }


@dataclass
class RegularPartition:
    H: Subspace
    H0: Subspace
    epsilon: object
    irregular_fraction: Fraction
    trace: list[RefinementStep] = field(default_factory=list)

    @property
    def codim(self) -> int:
        return self.H.codim

    @property
    def is_regular(self) -> bool:
        return self.irregular_fraction <= Fraction(self.epsilon)

    def to_json(self) -> dict:
        return {
            "epsilon": frac_str(self.epsilon),
            "codim": self.H.codim,
            "codim_in_H0": self.H.codim - self.H0.codim,
            "basis": self.H.basis.tolist(),
            "irregular_fraction": frac_str(self.irregular_fraction),
            "trace": [s.to_json() for s in self.trace],
        }

    def trace_json(self) -> str:
        return json.dumps([s.to_json() for s in self.trace], indent=2)


def _pick_refinement(scans, flags: np.ndarray):
    """Globally largest coefficient over irregular cosets, ties broken lexicographically."""
    best = -1.0
    per_f = []
    for scan in scans:
        mods = scan.moduli()
        mods = np.where(flags[:, None], mods, -1.0)
        per_f.append(mods)
        if mods.size:
            best = max(best, float(mods.max()))
    cands = []
    for fi, mods in enumerate(per_f):
        ts, ss = np.nonzero(mods >= best - TIE_TOL)
        for t, s in zip(ts, ss):
            cands.append((int(t), fi, int(s)))
    t_min = min(c[0] for c in cands)
    cands = [c for c in cands if c[0] == t_min]
    table = scans[0].table
    h = table.subspace
    s_vecs = coefficient_vectors(h.p, h.dim)
    options = []
    for t, fi, s in cands:
        r = tuple(int(v) for v in class_reps(h, s_vecs[s])[0])
        options.append((r, fi))
    r, fi = min(options)
    return t_min, r, fi, best


def arl(
    fs: Sequence[BoundedFunction],
    eps,
    H0: Subspace | None = None,
    max_codim: int | None = None,
) -> RegularPartition:
    """Refine H0 until at most an eps-fraction of cosets is irregular for some f.

    Each step intersects H with the annihilator of the largest Fourier
    witness found on an irregular coset.  ``max_codim`` bounds the
    codimension gained relative to H0.
    """
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if not fs:
        raise ValueError("need at least one function")
    p, n = fs[0].p, fs[0].n
    h = H0 if H0 is not None else Subspace.full(p, n)
    H0 = h
    budget = h.dim if max_codim is None else min(max_codim, h.dim)
    trace: list[RefinementStep] = []
    e_now = energy(fs, h)
    while True:
        scans = [scan_cosets(f, h) for f in fs]
        flags = np.zeros(scans[0].table.count, dtype=bool)
        for scan in scans:
            flags |= scan.irregular(eps)
        frac = Fraction(int(flags.sum()), flags.size)
        if frac <= eps:
            return RegularPartition(h, H0, eps, frac, trace)
        if h.codim - H0.codim >= budget:
            part = RegularPartition(h, H0, eps, frac, trace)
            raise RegularityError(
                f"irregular fraction {frac} > {eps} at codimension {h.codim} (budget {budget} over H0)", part
            )
        t, r, fi, modulus = _pick_refinement(scans, flags)
        new_h = intersect(h, Subspace.annihilator([r], p, n))
        e_new = energy(fs, new_h)
        rep = tuple(int(v) for v in scans[0].table.reps[t])
        trace.append(RefinementStep(rep, r, fi, modulus, e_now, e_new, scans[0].table.count))
        h, e_now = new_h, e_new


# -- two-level selection -------------------------------------------------------


@dataclass
class TwoLevelSelection:
    H1: Subspace
    H2: Subspace
    U: Complement
    epsilon: Fraction
    zeta: Fraction
    density_bad_fraction: Fraction
    attempts: int = 1
    partitions: tuple = ()

    @property
    def D1(self) -> int:
        return self.H1.codim

    @property
    def D2(self) -> int:
        return self.H2.codim

    def to_json(self) -> dict:
        return {
            "D1": self.D1,
            "D2": self.D2,
            "epsilon": frac_str(self.epsilon),
            "zeta": frac_str(self.zeta),
            "density_bad_fraction": frac_str(self.density_bad_fraction),
            "attempts": self.attempts,
            "U": self.U.basis.tolist(),
        }


def _complement_cosets(U: Complement, h: Subspace) -> np.ndarray:
    """Coset number (in coset_table(h)) of u, for every u in span(U) in U-coefficient order."""
    sp = space(h.p, h.n)
    return coset_table(h).label[sp.index(U.elements())]


def measure_two_level(fs, H1: Subspace, H2: Subspace, U: Complement, eps, zeta):
    """Re-measure properties (ii) and (iii): returns (all_regular, bad_fraction)."""
    eps, zeta = as_fraction(eps), as_fraction(zeta)
    pos2 = _complement_cosets(U, H2)
    pos1 = _complement_cosets(U, H1)
    regular = True
    bad = np.zeros(pos2.size, dtype=bool)
    for f in fs:
        s2 = scan_cosets(f, H2)
        s1 = scan_cosets(f, H1)
        irr = s2.irregular(eps)[pos2]
        if irr[1:].any():
            regular = False
        for j in range(pos2.size):
            gap = s2.mean(int(pos2[j])) - s1.mean(int(pos1[j]))
            if abs(gap) >= zeta:
                bad[j] = True
    return regular, Fraction(int(bad.sum()), bad.size)


def two_level_select(
    fs: Sequence[BoundedFunction],
    eps,
    zeta,
    H0: Subspace | None = None,
    seed: int = 0,
    retries: int = 32,
    max_codim: int | None = None,
    halvings: int = 4,
    coarse_eps=None,
) -> TwoLevelSelection:
    """Find H2 <= H1 <= H0 and a complement U of H1 with:

    (ii) H2 + u eps-regular for every u in U \\ {0};
    (iii) at most a zeta-fraction of u with some |E_{H2+u} f - E_{H1+u} f| >= zeta.

    H1 comes from a regularity partition at eps' = eps/2 and H2 from one
    inside H1 at eps'/2^k, k = 1, 2, ...  For each H2 up to ``retries``
    seeded complements are tried.
    """
    eps, zeta = as_fraction(eps), as_fraction(zeta)
    if eps <= 0 or zeta <= 0:
        raise ValueError("epsilon and zeta must be positive")
    p, n = fs[0].p, fs[0].n
    H0 = H0 if H0 is not None else Subspace.full(p, n)
    coarse = Fraction(coarse_eps) if coarse_eps is not None else eps / 2
    try:
        part1 = arl(fs, coarse, H0, max_codim)
    except RegularityError as exc:
        raise SelectionError(f"coarse partition failed: {exc}") from exc
    H1 = part1.H
    attempts = 0
    failures = []
    for k in range(1, halvings + 1):
        fine = coarse / 2**k
        try:
            part2 = arl(fs, fine, H1, max_codim)
        except RegularityError as exc:
            failures.append(f"fine partition at {fine}: {exc}")
            break
        H2 = part2.H
        trivial = H2 == H1 or H1.codim == 0
        for attempt in range(1 if trivial else retries):
            attempts += 1
            sub_seed = int(np.random.SeedSequence([seed, k, attempt]).generate_state(1)[0])
            U = complement(H1, sub_seed)
            regular, bad = measure_two_level(fs, H1, H2, U, eps, zeta)
            if regular and bad <= zeta:
                return TwoLevelSelection(H1, H2, U, eps, zeta, bad, attempts, (part1, part2))
            failures.append(f"k={k} attempt={attempt}: regular={regular} bad={bad}")
    raise SelectionError("two-level selection exhausted: " + "; ".join(failures[-3:]))


# -- multi-subcoset selection --------------------------------------------------


@dataclass
class MultiSubcosetSelection:
    H: Subspace
    H2: Subspace
    z: np.ndarray
    W: np.ndarray
    psi: dict
    delta: Fraction
    solutions_found: int

    @property
    def D3(self) -> int:
        return self.H.codim

    def to_json(self) -> dict:
        return {
            "D3": self.D3,
            "z": self.z.tolist(),
            "delta": frac_str(self.delta),
            "psi": sorted(self.psi.items()),
            "solutions_found": self.solutions_found,
        }


def _inner_complement(h: Subspace, h2: Subspace) -> np.ndarray:
    """Rows of H2's basis that extend a basis of H to one of H2."""
    rows = []
    current = h.basis
    r = h.dim
    for v in h2.basis:
        trial = np.vstack([current, v])
        if rank(trial, h.p) > r:
            rows.append(v)
            current = trial
            r += 1
    return np.array(rows, dtype=np.int64).reshape(-1, h.n)


def _colour_set(means: Sequence[Fraction], delta: Fraction) -> int:
    return sum(1 << i for i, m in enumerate(means) if m >= delta)


def multi_subcoset_select(
    fs: Sequence[BoundedFunction],
    eps,
    delta,
    A,
    H2: Subspace,
    max_codim: int | None = None,
    min_codim: int = 0,
) -> MultiSubcosetSelection:
    """Pick H <= H2 and z_1..z_m in H2 with A z = 0, every H + z_j eps-regular
    and the same set of colours of density >= delta on each H + z_j.

    Solutions are searched in the coordinates of a complement W of H in H2;
    the lexicographically least one wins, so z = 0 is preferred whenever
    H itself is regular.
    """
    eps, delta = as_fraction(eps), as_fraction(delta)
    p, n = H2.p, H2.n
    try:
        h = arl(fs, eps, H2, max_codim).H
    except RegularityError as exc:
        h = exc.partition.H
    for i in range(n):
        if h.codim - H2.codim >= min_codim:
            break
        e = np.zeros(n, dtype=np.int64)
        e[i] = 1
        h = intersect(h, Subspace.annihilator([e], p, n))
    W = _inner_complement(h, H2)
    k = W.shape[0]
    inner = space(p, k)
    u_vecs = matmul(inner.coords(np.arange(inner.size)), W, p) if k else np.zeros((1, n), np.int64)
    table = coset_table(h)
    pos = table.label[space(p, n).index(u_vecs)]
    regular = np.ones(inner.size, dtype=bool)
    masks = np.zeros(inner.size, dtype=np.int64)
    scans = [scan_cosets(f, h) for f in fs]
    for scan in scans:
        regular &= ~scan.irregular(eps)[pos]
    for a in range(inner.size):
        masks[a] = _colour_set([s.mean(int(pos[a])) for s in scans], delta)
    A = np.atleast_2d(np.asarray(A, dtype=np.int64)) % p
    sols = monochromatic_solutions(masks, A, p, k, accept=lambda b: regular[b].all(axis=1))
    if sols.count == 0:
        raise SelectionError(
            f"no regular monochromatic solution among {inner.size} cosets of H (codim {h.codim}) inside H2"
        )
    best = sols.first()
    z = u_vecs[best]
    psi = {int(a): int(masks[a]) for a in sorted(set(int(v) for v in best))}
    return MultiSubcosetSelection(h, H2, z, W, psi, delta, sols.count)


@dataclass(frozen=True)
class SelectionValidation:
    solves: bool
    in_H2: bool
    regular: bool
    same_colours: bool

    @property
    def passed(self) -> bool:
        return self.solves and self.in_H2 and self.regular and self.same_colours

    def to_json(self) -> dict:
        return {
            "solves": self.solves,
            "in_H2": self.in_H2,
            "regular": self.regular,
            "same_colours": self.same_colours,
        }


def validate_selection(sel: MultiSubcosetSelection, fs, eps, delta, A) -> SelectionValidation:
    """Re-measure every claimed property of a multi-subcoset selection from scratch."""
    eps, delta = as_fraction(eps), as_fraction(delta)
    p = sel.H.p
    z = np.asarray(sel.z, dtype=np.int64)
    solves = not matmul(np.atleast_2d(A), z, p).any()
    in_h2 = bool(np.all(sel.H2.contains(z))) and sel.H <= sel.H2
    cosets = [Coset.of(sel.H, zj) for zj in z]
    regular = all(uniformity(f, c).is_epsilon_uniform(eps) for f in fs for c in cosets)
    same = all(len({f.mean_on(c) >= delta for c in cosets}) == 1 for f in fs)
    return SelectionValidation(solves, in_h2, regular, same)


__all__ = [
    "MultiSubcosetSelection",
    "RefinementStep",
    "RegularPartition",
    "RegularityError",
    "SelectionError",
    "SelectionValidation",
    "TwoLevelSelection",
    "arl",
    "energy",
    "frac_str",
    "measure_two_level",
    "multi_subcoset_select",
    "partition_report",
    "two_level_select",
    "validate_selection",
]
