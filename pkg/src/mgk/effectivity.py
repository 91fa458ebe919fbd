"""Stochastic effectivity functions with decidable portfolios.

Portfolios are intensional: generated by one measure (a kernel row) or
by finitely many (successor simplices of a transition system).  Every
downstream question reduces to evaluating rational linear predicates at
the generators, which keeps membership decidable with exact arithmetic.
Characteristic relations are stored as closed per-event thresholds; the
descending-chain rule is vacuous on finite sigma-algebras.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .coalgebra import Coalgebra
from .intervals import QInterval
from .prob import (FinMeasure, LinPred, MarkovKernel, beta, dirac)
from .space import (FinMeasurableSpace, InputError, Label, PreconditionError)

MeasurePredicate = LinPred  # portfolio membership questions are linear inequalities


@dataclass(frozen=True)
class Portfolio:
    """An upper-closed family of measure sets, stored by its generators.

    kind "kernel": {H : mu in H} for a single measure.
    kind "generators": {H : every generator lies in H}.
    """

    kind: str
    measures: tuple[FinMeasure, ...]

    def __post_init__(self):
        if self.kind not in ("kernel", "generators"):
            raise InputError(f"unknown portfolio kind {self.kind!r}")
        if self.kind == "kernel" and len(self.measures) != 1:
            raise InputError("a kernel portfolio holds exactly one measure")
        if not self.measures:
            raise InputError("a portfolio needs at least one measure")
        spaces = {m.space for m in self.measures}
        if len(spaces) > 1:
            raise InputError("portfolio measures live on different spaces")

    @classmethod
    def from_measure(cls, mu: FinMeasure) -> "Portfolio":
        return cls("kernel", (mu,))

    @classmethod
    def from_generators(cls, measures: Iterable[FinMeasure]) -> "Portfolio":
        return cls("generators", tuple(measures))

    @property
    def space(self) -> FinMeasurableSpace:
        return self.measures[0].space

    def membership(self, h: LinPred) -> bool:
        return all(h.holds(m) for m in self.measures)

    def value_floor(self, coeffs: tuple[Fraction, ...]) -> Fraction:
        """min over generators of sum_i c_i * mu(atom_i); the exact point at
        which membership of the (non-strict) predicate flips."""
        return min(sum((c * w for c, w in zip(coeffs, m.weights)), Fraction(0))
                   for m in self.measures)


@dataclass(frozen=True)
class EffectivityFunction:
    """One portfolio per state, constant on atoms (the finite surrogate of
    joint (state, threshold) measurability)."""

    space: FinMeasurableSpace
    portfolios: Mapping[Label, Portfolio]

    def __post_init__(self):
        missing = set(self.space.carrier) - set(self.portfolios)
        if missing:
            raise InputError(f"portfolios missing for {sorted(missing, key=repr)}")
        for p in self.portfolios.values():
            if p.space != self.space:
                raise InputError("portfolio measures must live on the function's space")
        for a in self.space.atoms:
            rep, *rest = sorted(a, key=repr)
            for x in rest:
                if self.portfolios[x] != self.portfolios[rep]:
                    raise InputError(f"portfolios of {rep!r} and {x!r} differ inside one atom")

    def __call__(self, s: Label) -> Portfolio:
        return self.portfolios[s]


def eff_from_kernel(k: MarkovKernel) -> EffectivityFunction:
    """P(s) = everything the row K(s) belongs to."""
    if k.dom != k.cod:
        raise InputError("effectivity functions arise from endo-kernels")
    return EffectivityFunction(k.dom, {x: Portfolio.from_measure(k(x)) for x in k.dom.carrier})


def eff_from_transition(ts: Coalgebra) -> EffectivityFunction:
    """Successor simplices of a finite transition system, by their vertex
    generators {dirac(s') : s -> s'}.

    For convex closed non-strict predicates this membership test agrees
    with containment of the full rational successor hull; for other
    predicates the vertex test is the documented approximation.
    """
    if ts.functor != "powerset":
        raise InputError("transition effectivity needs a powerset coalgebra")
    space = FinMeasurableSpace.discrete(ts.carrier)
    portfolios = {}
    for s in ts.carrier:
        succ = sorted(ts.structure[s], key=repr)
        if not succ:
            raise InputError(f"state {s!r} has no successors")
        portfolios[s] = Portfolio.from_generators(dirac(space, t) for t in succ)
    return EffectivityFunction(space, portfolios)


@dataclass(frozen=True)
class QLinFamily:
    """A threshold-parameterized predicate family H_q = {mu : sum c*mu ~ q}."""

    space: FinMeasurableSpace
    coeffs: tuple[Fraction, ...]
    strict: bool = False


def t_measurability_report(eff: EffectivityFunction, family: QLinFamily) -> list[tuple[frozenset, QInterval]]:
    """{(s, q) : H_q in P(s)} as finitely many atom x interval rectangles,
    the finite-space witness of joint measurability."""
    if family.space != eff.space:
        raise InputError("family lives on the wrong space")
    cells = []
    for atom in eff.space.atoms:
        rep = sorted(atom, key=repr)[0]
        v = eff(rep).value_floor(family.coeffs)
        cells.append((atom, QInterval.down(v, closed=not family.strict)))
    return cells


@dataclass(frozen=True)
class CharacteristicRelation:
    """Per-event lower-bound thresholds: (r, A) related iff r <= t_A."""

    space: FinMeasurableSpace
    thresholds: Mapping[frozenset, Fraction]

    def __post_init__(self):
        events = set(self.space.measurable_sets())
        if set(self.thresholds) != events:
            raise InputError("thresholds must cover exactly the measurable sets")
        for a, t in self.thresholds.items():
            if not 0 <= t <= 1:
                raise InputError(f"threshold of {sorted(a, key=repr)} outside [0, 1]")

    def contains(self, r, a: Iterable[Label]) -> bool:
        a = self.space.require_measurable(a)
        return Fraction(r) <= self.thresholds[a]

    def t(self, a: Iterable[Label]) -> Fraction:
        return self.thresholds[self.space.require_measurable(a)]


def char_rel_of(eff: EffectivityFunction, s: Label) -> CharacteristicRelation:
    """t_A = the largest r with beta(A, r) in P(s); attained for both
    portfolio kinds, so it equals the portfolio's value floor at A."""
    space = eff.space
    thresholds = {}
    for a in space.measurable_sets():
        coeffs = tuple(Fraction(1) if atom <= a else Fraction(0) for atom in space.atoms)
        thresholds[a] = eff(s).value_floor(coeffs)
    return CharacteristicRelation(space, thresholds)


_RULES = {
    "1": "monotone in the event",
    "2": "monotone in the bound (holds by the threshold representation)",
    "3": "subadditive on unions",
    "4": "superadditive across a splitting event",
    "5": "complement bound",
    "6": "empty event bounded only by zero",
    "7": "stable under descending chains (finite chains stabilize)",
    "8": "full event reaches one",
}


@dataclass
class RuleReport:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        if self.ok:
            return ["all characteristic-relation rules hold"]
        return [f"rule {rid} ({_RULES[rid]}) violated: {detail}" for rid, detail in self.violations]


def validate_char_rel(rel: CharacteristicRelation) -> RuleReport:
    """Check the characteristic-relation rules as threshold inequalities.

    Rules 2 and 7 are realized by the representation itself (thresholds
    are down-closed in the bound, and finite descending chains stabilize),
    so they cannot fail here.
    """
    report = RuleReport()
    space = rel.space
    sets = list(space.measurable_sets())
    t = rel.thresholds
    full = space.full
    name = lambda s: "{" + ",".join(map(str, sorted(s, key=repr))) + "}"
    if t[frozenset()] != 0:
        report.violations.append(("6", f"t(empty) = {t[frozenset()]}"))
    if t[full] != 1:
        report.violations.append(("8", f"t(S) = {t[full]}"))
    for a in sets:
        for b in sets:
            if a <= b and t[a] > t[b]:
                report.violations.append(("1", f"t{name(a)} = {t[a]} > t{name(b)} = {t[b]}"))
    for a in sets:
        for b in sets:
            if t[a] + t[b] < 1 and t[a | b] > t[a] + t[b]:
                report.violations.append(
                    ("3", f"t{name(a | b)} = {t[a | b]} > {t[a]} + {t[b]}"))
    for a in sets:
        for b in sets:
            lower = min(Fraction(1), t[a & b] + t[a & (full - b)])
            if t[a] < lower:
                report.violations.append(
                    ("4", f"t{name(a)} = {t[a]} < t{name(a & b)} + t{name(a & (full - b))} = {lower}"))
    for a in sets:
        if t[full - a] > 1 - t[a]:
            report.violations.append(
                ("5", f"t{name(full - a)} = {t[full - a]} > 1 - t{name(a)} = {1 - t[a]}"))
    # deterministic order, first failing rule first, one entry per witness
    report.violations = sorted(set(report.violations), key=lambda v: (v[0], v[1]))
    return report


def measure_from_char(rel: CharacteristicRelation) -> FinMeasure:
    """mu(A) = t_A; the rules force additivity and normalization."""
    report = validate_char_rel(rel)
    if not report.ok:
        raise PreconditionError("characteristic relation invalid:\n" + "\n".join(report.lines()))
    space = rel.space
    mu = FinMeasure(space, tuple(rel.thresholds[a] for a in space.atoms))
    for a in space.measurable_sets():
        if mu(a) != rel.thresholds[a]:
            raise AssertionError("validated relation failed to be additive")
    return mu


def _critical_bounds(values: Iterable[Fraction]) -> list[Fraction]:
    points = sorted(set(values) | {Fraction(0), Fraction(1)})
    out = list(points)
    for lo, hi in zip(points, points[1:]):
        out.append((lo + hi) / 2)
    return sorted(out)


def check_satisfy_implement(q: Portfolio, rel: CharacteristicRelation, mu: FinMeasure) -> tuple[bool, bool]:
    """satisfies: (r, A) in R iff beta(A, r) in Q, for all events and bounds;
    implements: mu(A) >= r iff beta(A, r) in Q.  Bounds are quantified over
    the finitely many values where any side can flip, plus midpoints."""
    space = rel.space
    if q.space != space or mu.space != space:
        raise InputError("space mismatch")
    satisfies = implements = True
    for a in space.measurable_sets():
        coeffs = tuple(Fraction(1) if atom <= a else Fraction(0) for atom in space.atoms)
        flips = [rel.thresholds[a], mu(a), q.value_floor(coeffs)]
        for r in _critical_bounds(flips):
            in_q = q.membership(beta(space, a, r))
            satisfies = satisfies and (rel.contains(r, a) == in_q)
            implements = implements and ((mu(a) >= r) == in_q)
    return satisfies, implements


@dataclass
class KernelRecovery:
    kernel: MarkovKernel | None
    diagnostics: dict[Label, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.kernel is not None


def kernel_from_eff(eff: EffectivityFunction, seed: int = 0, samples: int = 25) -> KernelRecovery:
    """Rebuild the kernel generating an effectivity function, when one exists.

    Per state: build the characteristic relation, validate it, take its
    measure.  The reassembled kernel must then reproduce the original
    membership behavior on every beta predicate at the flip bounds and on
    a seeded sample of linear predicates; otherwise the recovery is
    rejected with per-state diagnostics.
    """
    space = eff.space
    rows: dict[Label, FinMeasure] = {}
    diagnostics: dict[Label, str] = {}
    for s in space.carrier:
        rel = char_rel_of(eff, s)
        report = validate_char_rel(rel)
        if not report.ok:
            diagnostics[s] = "; ".join(report.lines())
            continue
        rows[s] = measure_from_char(rel)
    if diagnostics:
        return KernelRecovery(None, diagnostics)
    kernel = MarkovKernel(space, space, rows)
    rebuilt = eff_from_kernel(kernel)
    rng = random.Random(seed)
    for s in space.carrier:
        mismatch = _membership_mismatch(eff(s), rebuilt(s), space, rng, samples)
        if mismatch is not None:
            diagnostics[s] = mismatch
    if diagnostics:
        return KernelRecovery(None, diagnostics)
    return KernelRecovery(kernel)


def _membership_mismatch(original: Portfolio, candidate: Portfolio,
                         space: FinMeasurableSpace, rng: random.Random,
                         samples: int) -> str | None:
    for a in space.measurable_sets():
        coeffs = tuple(Fraction(1) if atom <= a else Fraction(0) for atom in space.atoms)
        flips = [original.value_floor(coeffs), candidate.value_floor(coeffs)]
        for r in _critical_bounds(flips):
            for strict in (False, True):
                pred = beta(space, a, r, strict)
                if original.membership(pred) != candidate.membership(pred):
                    side = ">" if strict else ">="
                    return (f"beta({sorted(a, key=repr)}, {side} {r}) separates the original "
                            f"portfolio from the rebuilt kernel")
    for _ in range(samples):
        coeffs = tuple(Fraction(rng.randint(-4, 4), rng.choice([1, 2, 3, 4])) for _ in space.atoms)
        bound = Fraction(rng.randint(-8, 8), 8)
        strict = rng.random() < 0.5
        pred = LinPred(space, coeffs, bound, strict)
        if original.membership(pred) != candidate.membership(pred):
            return f"random linear predicate (coeffs={coeffs}, bound={bound}, strict={strict}) separates"
    return None
