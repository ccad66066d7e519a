"""Recolouring, the induced removal pipeline and the non-induced removal demo."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .counting import (
    Colouring,
    coset_consistency,
    lambda_forms,
    pattern_density,
    pattern_free_check,
)
from .fourier import BoundedFunction, coset_table, scan_cosets
from .gf import Coset, Subspace, as_fraction, matmul, space
from .patterns import LinearSystem, Pattern, is_partition_regular
from .regularity import (
    MultiSubcosetSelection,
    RegularityError,
    SelectionError,
    TwoLevelSelection,
    arl,
    frac_str,
    multi_subcoset_select,
    two_level_select,
    validate_selection,
)


class PipelineError(RuntimeError):
    """The recolouring violated one of its own guarantees."""


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters of the recolouring.  ``None`` fields take their derived defaults."""

    epsilon: Fraction
    r: int
    m: int
    seed: int = 0
    retries: int = 32
    zeta: Fraction | None = None
    delta: Fraction | None = None
    eps_intermediate: Fraction | None = None
    eps_count: Fraction | None = None
    max_codim: int | None = None
    min_rado_codim: int = 0

    @classmethod
    def for_pattern(cls, epsilon, pat: Pattern, **kw) -> "PipelineConfig":
        return cls(as_fraction(epsilon), pat.r, pat.m, **kw)

    @property
    def zeta_(self) -> Fraction:
        return self.zeta if self.zeta is not None else self.epsilon / (4 * self.r)

    @property
    def delta_(self) -> Fraction:
        return self.delta if self.delta is not None else self.epsilon / (8 * self.r)

    @property
    def delta_prime(self) -> Fraction:
        return (self.epsilon / (8 * self.r)) ** self.m / (2 * self.m)

    @property
    def eps_mid(self) -> Fraction:
        return self.eps_intermediate if self.eps_intermediate is not None else self.epsilon

    @property
    def eps_count_(self) -> Fraction:
        return self.eps_count if self.eps_count is not None else self.epsilon

    def base_codim(self, p: int) -> int:
        """Least D with p^D >= 4r / epsilon."""
        d = 0
        while p**d * self.epsilon < 4 * self.r:
            d += 1
        return d

    def to_json(self, p: int) -> dict:
        return {
            "epsilon": frac_str(self.epsilon),
            "r": self.r,
            "m": self.m,
            "seed": self.seed,
            "retries": self.retries,
            "zeta": frac_str(self.zeta_),
            "delta": frac_str(self.delta_),
            "delta_prime": frac_str(self.delta_prime),
            "eps_intermediate": frac_str(self.eps_mid),
            "eps_count": frac_str(self.eps_count_),
            "D0": self.base_codim(p),
        }


def coordinate_subspace(p: int, n: int, codim: int) -> Subspace:
    """{x : x_0 = ... = x_{codim-1} = 0}."""
    return Subspace.span(np.eye(n, dtype=np.int64)[codim:], p, n)


@dataclass(frozen=True)
class CosetAction:
    u: tuple[int, ...]
    kind: str  # unchanged | full_recolour | low_density_merge | zero_coset
    colour: int = 0
    merged: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {"u": list(self.u), "action": self.kind, "colour": self.colour, "merged": list(self.merged)}


def apply_actions(original: Colouring, H1: Subspace, actions: Sequence[CosetAction]) -> Colouring:
    """Replay per-coset actions on the cosets H1 + u."""
    table = original.table.copy()
    sp = space(original.p, original.n)
    ct = coset_table(H1)
    for act in actions:
        if act.kind == "unchanged":
            continue
        idx = ct.order[ct.label[sp.index(np.array(act.u))]]
        if act.kind in ("full_recolour", "zero_coset"):
            table[idx] = act.colour
        elif act.kind == "low_density_merge":
            sel = idx[np.isin(original.table[idx], act.merged)]
            table[sel] = act.colour
        else:
            raise ValueError(f"unknown action {act.kind}")
    return Colouring.of(table, original.p, original.n, original.r)


@dataclass
class RecolouringPlan:
    original: Colouring
    result: Colouring
    changed_count: int
    actions: list[CosetAction]
    two_level: TwoLevelSelection
    multi: MultiSubcosetSelection
    config: PipelineConfig
    H0: Subspace

    @property
    def H1(self) -> Subspace:
        return self.two_level.H1

    @property
    def H2(self) -> Subspace:
        return self.two_level.H2

    @property
    def H3(self) -> Subspace:
        return self.multi.H

    def replay(self) -> Colouring:
        return apply_actions(self.original, self.H1, self.actions)

    def to_json(self) -> dict:
        return {
            "changed_count": self.changed_count,
            "D0": self.H0.codim,
            "D1": self.H1.codim,
            "D2": self.H2.codim,
            "D3": self.H3.codim,
            "two_level": self.two_level.to_json(),
            "multi": self.multi.to_json(),
            "actions": [a.to_json() for a in self.actions if a.kind != "unchanged"],
        }


def _densities(phi: Colouring, idx: np.ndarray) -> list[Fraction]:
    counts = np.bincount(phi.table[idx], minlength=phi.r + 1)
    return [Fraction(int(counts[i]), idx.size) for i in range(1, phi.r + 1)]


def _top_colour(dens: Sequence[Fraction]) -> int:
    best = max(dens)
    return dens.index(best) + 1


def recolour(phi: Colouring, pat: Pattern, cfg: PipelineConfig) -> RecolouringPlan:
    """Build phi' following the three recolouring rules, then check the guarantees."""
    if is_partition_regular(pat) is None:
        raise SelectionError("pattern is not partition-regular")
    p, n, r = phi.p, phi.n, phi.r
    eps = cfg.epsilon
    d0 = cfg.base_codim(p)
    if d0 > n:
        raise SelectionError(f"need codimension {d0} for the base subspace but n = {n}")
    H0 = coordinate_subspace(p, n, d0)
    fs = phi.indicators()
    two = two_level_select(
        fs, cfg.eps_mid, cfg.zeta_, H0, seed=cfg.seed, retries=cfg.retries, max_codim=cfg.max_codim
    )
    H1, H2, U = two.H1, two.H2, two.U
    multi = multi_subcoset_select(
        fs, eps, cfg.delta_, pat.system.K, H2, max_codim=cfg.max_codim, min_codim=cfg.min_rado_codim
    )
    H3 = multi.H
    sp = space(p, n)
    ct1, ct2, ct3 = coset_table(H1), coset_table(H2), coset_table(H3)
    low = eps / (4 * r)
    actions: list[CosetAction] = []
    for u in U.elements():
        ut = tuple(int(v) for v in u)
        ui = sp.index(u)
        if not any(ut):
            z1 = sp.index(multi.z[0])
            dens3 = _densities(phi, ct3.order[ct3.label[z1]])
            actions.append(CosetAction(ut, "zero_coset", _top_colour(dens3)))
            continue
        d2 = _densities(phi, ct2.order[ct2.label[ui]])
        d1 = _densities(phi, ct1.order[ct1.label[ui]])
        c = _top_colour(d2)
        if any(abs(a - b) > cfg.zeta_ for a, b in zip(d2, d1)):
            actions.append(CosetAction(ut, "full_recolour", c))
            continue
        merged = tuple(i + 1 for i, d in enumerate(d2) if d < low and i + 1 != c)
        idx1 = ct1.order[ct1.label[ui]]
        if merged and np.isin(phi.table[idx1], merged).any():
            actions.append(CosetAction(ut, "low_density_merge", c, merged))
        else:
            actions.append(CosetAction(ut, "unchanged"))
    result = apply_actions(phi, H1, actions)
    plan = RecolouringPlan(phi, result, phi.distance(result), actions, two, multi, cfg, H0)
    _check_plan(plan, pat)
    return plan


def _check_plan(plan: RecolouringPlan, pat: Pattern) -> None:
    cfg, phi = plan.config, plan.original
    N = phi.p**phi.n
    limit = (Fraction(3, 4) * cfg.epsilon + Fraction(1, phi.p**plan.H1.codim)) * N
    if plan.changed_count > limit or plan.changed_count > cfg.epsilon * N:
        raise PipelineError(f"changed {plan.changed_count} points, allowed {min(limit, cfg.epsilon * N)}")
    if plan.replay() != plan.result:
        raise PipelineError("actions do not reproduce the recoloured table")
    val = validate_selection(plan.multi, phi.indicators(), cfg.epsilon, cfg.delta_, pat.system.K)
    if not val.passed:
        raise PipelineError(f"subcoset selection failed validation: {val.to_json()}")
    prop = recolouring_properties(plan)
    if not (prop.regular and prop.dense):
        raise PipelineError(f"recolouring properties violated: {prop.to_json()}")


@dataclass(frozen=True)
class RecolouringProperties:
    """Direct measurement over all u in U and all j.

    ``regular``: every H3 + u + z_j is eps-regular for all colour indicators.
    ``dense``: any colour used by phi' on H1 + u has phi-density >= eps/8r on
    every H3 + u + z_j.
    """

    regular: bool
    dense: bool
    checked_cosets: int
    min_density_margin: Fraction | None

    def to_json(self) -> dict:
        return {
            "regular": self.regular,
            "dense": self.dense,
            "checked_cosets": self.checked_cosets,
            "min_density_margin": None if self.min_density_margin is None else frac_str(self.min_density_margin),
        }


def recolouring_properties(plan: RecolouringPlan) -> RecolouringProperties:
    phi, new = plan.original, plan.result
    p, n, r = phi.p, phi.n, phi.r
    eps = plan.config.epsilon
    thresh = eps / (8 * r)
    sp = space(p, n)
    ct1, ct3 = coset_table(plan.H1), coset_table(plan.H3)
    scans = [scan_cosets(f, plan.H3) for f in phi.indicators()]
    irregular = np.zeros(ct3.count, dtype=bool)
    for s in scans:
        irregular |= s.irregular(eps)
    z = sp.index(plan.multi.z)
    regular = dense = True
    margin = None
    checked = 0
    for u in plan.two_level.U.elements():
        ui = sp.index(u)
        used = np.unique(new.table[ct1.order[ct1.label[ui]]])
        for zj in np.atleast_1d(z):
            t = int(ct3.label[sp.add(ui, zj)])
            checked += 1
            if irregular[t]:
                regular = False
            for colour in used:
                d = scans[int(colour) - 1].mean(t)
                gap = d - thresh
                margin = gap if margin is None else min(margin, gap)
                if d < thresh:
                    dense = False
    return RecolouringProperties(regular, dense, checked, margin)


# -- verification --------------------------------------------------------------


@dataclass
class PipelineReport:
    input_density: Fraction
    output_density: Fraction
    changed_count: int
    total: int
    epsilon: Fraction
    witness: np.ndarray | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def changed_fraction(self) -> Fraction:
        return Fraction(self.changed_count, self.total)

    @property
    def change_ok(self) -> bool:
        return self.changed_fraction <= self.epsilon

    @property
    def success(self) -> bool:
        return self.output_density == 0 and self.change_ok

    def to_json(self) -> dict:
        return {
            "input_density": frac_str(self.input_density),
            "output_density": frac_str(self.output_density),
            "changed_count": self.changed_count,
            "changed_fraction": frac_str(self.changed_fraction),
            "epsilon": frac_str(self.epsilon),
            "change_within_epsilon": self.change_ok,
            "pattern_free": self.output_density == 0,
            "witness": None if self.witness is None else self.witness.tolist(),
            "success": self.success,
            **self.diagnostics,
        }


def compare_colourings(original: Colouring, new: Colouring, pat: Pattern, eps, diagnostics=None) -> PipelineReport:
    """Independent check of a recolouring: exact densities, change count, witness."""
    if (original.p, original.n, original.r) != (new.p, new.n, new.r):
        raise ValueError("colourings live on different spaces")
    out = pattern_density(new, pat)
    witness = pattern_free_check(new, pat) if out else None
    return PipelineReport(
        pattern_density(original, pat),
        out,
        original.distance(new),
        original.p**original.n,
        as_fraction(eps),
        witness,
        diagnostics or {},
    )


def verify_removal(plan: RecolouringPlan, pat: Pattern, eps=None) -> PipelineReport:
    eps = plan.config.epsilon if eps is None else eps
    val = validate_selection(plan.multi, plan.original.indicators(), plan.config.epsilon, plan.config.delta_, pat.system.K)
    diag = {
        "plan": plan.to_json(),
        "selection_validation": val.to_json(),
        "recolouring_properties": recolouring_properties(plan).to_json(),
    }
    return compare_colourings(plan.original, plan.result, pat, eps, diag)


def identity_report(phi: Colouring, pat: Pattern, eps) -> PipelineReport:
    """Report for leaving phi untouched; lists a witness when instances exist."""
    return compare_colourings(phi, phi, pat, eps)


# -- consistency claim ---------------------------------------------------------


def consistency_claim_check(u, z, A, H1: Subspace, H3: Subspace, system: LinearSystem | None = None) -> bool:
    """Check A u = 0 and that the cosets H3 + u_j + z_j are consistent.

    u_j lie in a complement of H1, so A u lies in that complement; for u
    coming from an instance it also lies in H1 and must vanish.  With A z = 0
    the tuple u + z then solves A, which witnesses consistency.
    """
    p = H1.p
    u = np.asarray(u, dtype=np.int64) % p
    z = np.asarray(z, dtype=np.int64) % p
    A = np.atleast_2d(np.asarray(A, dtype=np.int64))
    if matmul(A, z, p).any() or matmul(A, u, p).any():
        return False
    w = (u + z) % p
    if matmul(A, w, p).any():
        return False
    if system is not None:
        cosets = [Coset.of(H3, wj) for wj in w]
        return coset_consistency(system, cosets) is not None
    return True


# -- non-induced removal -------------------------------------------------------


@dataclass
class NonInducedReport:
    original_size: int
    removed: int
    codim: int
    irregular_fraction: Fraction
    density_before: Fraction
    density_after: Fraction

    def to_json(self) -> dict:
        return {
            "original_size": self.original_size,
            "removed": self.removed,
            "codim": self.codim,
            "irregular_fraction": frac_str(self.irregular_fraction),
            "density_before": frac_str(self.density_before),
            "density_after": frac_str(self.density_after),
        }


def noninduced_removal(a_set: BoundedFunction, s: LinearSystem, eps, max_codim: int | None = None):
    """Drop the points of A in irregular cosets or in cosets where A has density < eps/2.

    Returns (A', report).  The count of patterns in A' is computed exactly,
    never assumed.
    """
    eps = as_fraction(eps)
    p, n = a_set.p, a_set.n
    if a_set.den != 1 or not np.isin(a_set.num, (0, 1)).all():
        raise ValueError("expected a 0/1 indicator")
    try:
        part = arl([a_set], eps, None, max_codim)
    except RegularityError as exc:
        part = exc.partition
    scan = scan_cosets(a_set, part.H)
    drop = scan.irregular(eps)
    for t in range(scan.table.count):
        if scan.mean(t) < eps / 2:
            drop[t] = True
    keep = a_set.num.copy()
    keep[scan.table.order[drop].ravel()] = 0
    out = BoundedFunction(p, n, keep, 1)
    report = NonInducedReport(
        int(a_set.num.sum()),
        int(a_set.num.sum() - keep.sum()),
        part.H.codim,
        part.irregular_fraction,
        lambda_forms([a_set] * s.m, s),
        lambda_forms([out] * s.m, s),
    )
    return out, report


__all__ = [
    "CosetAction",
    "NonInducedReport",
    "PipelineConfig",
    "PipelineError",
    "PipelineReport",
    "RecolouringPlan",
    "RecolouringProperties",
    "apply_actions",
    "compare_colourings",
    "consistency_claim_check",
    "coordinate_subspace",
    "identity_report",
    "noninduced_removal",
    "pattern_free_check",
    "recolour",
    "recolouring_properties",
    "verify_removal",
]
