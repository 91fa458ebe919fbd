"""Coalgebras for the powerset, upper-closed, and probability functors.

Covers morphism checking, relational bisimulations with their mediating
structures, congruences and subsystems for stochastic coalgebras, and
span verification for stochastic bisimilarity (verification, not
mediator search: span existence proofs are nonconstructive and out of
scope).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Hashable, Iterable, Mapping, Sequence

from .monad import UpperClosedFamily, _subsets
from .prob import FinMeasure, MarkovKernel, dirac
from .space import (EquivRelation, FinMeasurableSpace, InputError, Label,
                    MeasurableMap, PreconditionError, check_measurable, factor)

FUNCTORS = ("powerset", "upper_closed", "giry")

MEDIATOR_CAP = 12  # the upper-closed mediating structure enumerates 2^|B| sets


@dataclass(frozen=True)
class Coalgebra:
    """carrier + one T-value per state.

    powerset: structure[x] is a frozenset of successors.
    upper_closed: structure[x] is an UpperClosedFamily over the carrier.
    giry: structure[x] is a FinMeasure row; the carrier is a measurable
    space and the rows must form a Markov kernel on it.
    """

    functor: str
    carrier: tuple[Label, ...]
    structure: Mapping[Label, object]
    space: FinMeasurableSpace | None = None

    def __post_init__(self):
        if self.functor not in FUNCTORS:
            raise InputError(f"unknown functor {self.functor!r}")
        missing = set(self.carrier) - set(self.structure)
        if missing:
            raise InputError(f"structure missing for {sorted(missing, key=repr)}")
        if self.functor == "giry":
            if self.space is None:
                object.__setattr__(self, "space", FinMeasurableSpace.discrete(self.carrier))
            MarkovKernel(self.space, self.space, dict(self.structure))  # validates

    @classmethod
    def transition_system(cls, succ: Mapping, carrier: Sequence[Label] | None = None) -> "Coalgebra":
        carrier = tuple(carrier) if carrier is not None else tuple(sorted(succ, key=repr))
        return cls("powerset", carrier, {x: frozenset(succ[x]) for x in carrier})

    @classmethod
    def upper(cls, fam: Mapping[Label, UpperClosedFamily], carrier: Sequence[Label] | None = None) -> "Coalgebra":
        carrier = tuple(carrier) if carrier is not None else tuple(sorted(fam, key=repr))
        return cls("upper_closed", carrier, dict(fam))

    @classmethod
    def stochastic(cls, kernel: MarkovKernel) -> "Coalgebra":
        if kernel.dom != kernel.cod:
            raise InputError("a stochastic coalgebra needs an endo-kernel")
        return cls("giry", kernel.dom.carrier, dict(kernel.rows), kernel.dom)

    @property
    def kernel(self) -> MarkovKernel:
        if self.functor != "giry":
            raise InputError("only giry coalgebras carry a kernel")
        return MarkovKernel(self.space, self.space, dict(self.structure))


@dataclass
class MorphismCheck:
    ok: bool
    witness: tuple | None = None  # (state, detail)

    def __bool__(self) -> bool:
        return self.ok


def check_morphism(phi: Mapping[Label, Label], c1: Coalgebra, c2: Coalgebra) -> MorphismCheck:
    """Does the functor square commute pointwise for phi: c1 -> c2?"""
    if c1.functor != c2.functor:
        raise InputError("functor mismatch")
    missing = set(c1.carrier) - set(phi)
    if missing:
        raise InputError(f"map not total, missing {sorted(missing, key=repr)}")
    if c1.functor == "powerset":
        for a in c1.carrier:
            image = frozenset(phi[x] for x in c1.structure[a])
            target = c2.structure[phi[a]]
            if image != target:
                return MorphismCheck(False, (a, f"direct image {sorted(image, key=repr)} != {sorted(target, key=repr)}"))
        return MorphismCheck(True)
    if c1.functor == "upper_closed":
        cod_base = frozenset(c2.carrier)
        for a in c1.carrier:
            fam1: UpperClosedFamily = c1.structure[a]
            fam2: UpperClosedFamily = c2.structure[phi[a]]
            for h in _subsets(cod_base):
                pre = frozenset(x for x in c1.carrier if phi[x] in h)
                if fam1.contains(pre) != fam2.contains(h):
                    return MorphismCheck(False, (a, f"set {sorted(h, key=repr)} separates the two families"))
        return MorphismCheck(True)
    # giry
    f = MeasurableMap(c1.space, c2.space, dict(phi))
    if not check_measurable(f):
        return MorphismCheck(False, (None, "map is not measurable"))
    for x in c1.carrier:
        for b in c2.space.measurable_sets():
            lhs = c2.structure[phi[x]](b)
            rhs = c1.structure[x](f.preimage(b))
            if lhs != rhs:
                return MorphismCheck(False, (x, f"event {sorted(b, key=repr)}: {lhs} != {rhs}"))
    return MorphismCheck(True)


def check_bisimulation(b: Iterable[tuple], c1: Coalgebra, c2: Coalgebra) -> bool:
    """Relational bisimulation test (powerset zig-zag, upper-closed clauses)."""
    if c1.functor != c2.functor:
        raise InputError("functor mismatch")
    pairs = frozenset(b)
    for s, t in pairs:
        if s not in set(c1.carrier) or t not in set(c2.carrier):
            raise InputError(f"pair {(s, t)!r} outside the carriers")
    if c1.functor == "powerset":
        for s, t in pairs:
            for s2 in c1.structure[s]:
                if not any((s2, t2) in pairs for t2 in c2.structure[t]):
                    return False
            for t2 in c2.structure[t]:
                if not any((s2, t2) in pairs for s2 in c1.structure[s]):
                    return False
        return True
    if c1.functor == "upper_closed":
        for s, t in pairs:
            f_s: UpperClosedFamily = c1.structure[s]
            g_t: UpperClosedFamily = c2.structure[t]
            # generators suffice: both clauses are monotone in the chosen sets
            for x in f_s.sorted_generators():
                if not any(all(any((s2, t2) in pairs for s2 in x) for t2 in y)
                           for y in g_t.sorted_generators()):
                    return False
            for y in g_t.sorted_generators():
                if not any(all(any((s2, t2) in pairs for t2 in y) for s2 in x)
                           for x in f_s.sorted_generators()):
                    return False
        return True
    raise InputError("relational bisimulations are not defined for the giry functor; "
                     "use check_stochastic_span")


def _build_powerset_mediator(pairs: tuple, c1: Coalgebra, c2: Coalgebra) -> Coalgebra:
    h = {(s, t): frozenset((s2, t2) for (s2, t2) in pairs
                           if s2 in c1.structure[s] and t2 in c2.structure[t])
         for (s, t) in pairs}
    return Coalgebra("powerset", pairs, h)


def _build_upper_mediator(pairs: tuple, c1: Coalgebra, c2: Coalgebra) -> Coalgebra:
    if len(pairs) > MEDIATOR_CAP:
        raise InputError(f"relation size {len(pairs)} exceeds the mediator cap {MEDIATOR_CAP}")
    h = {}
    for s, t in pairs:
        f_s: UpperClosedFamily = c1.structure[s]
        g_t: UpperClosedFamily = c2.structure[t]
        good = [d for d in _subsets(pairs)
                if f_s.contains(frozenset(x for x, _ in d))
                and g_t.contains(frozenset(y for _, y in d))]
        h[(s, t)] = UpperClosedFamily.from_sets(pairs, good)
    return Coalgebra("upper_closed", pairs, h)


def mediator_structure(b: Iterable[tuple], c1: Coalgebra, c2: Coalgebra) -> Coalgebra:
    """A coalgebra on the relation whose projections are morphisms."""
    pairs = tuple(sorted(frozenset(b), key=repr))
    if not check_bisimulation(pairs, c1, c2):
        raise PreconditionError("relation is not a bisimulation")
    if c1.functor == "powerset":
        return _build_powerset_mediator(pairs, c1, c2)
    if c1.functor == "upper_closed":
        proj_s = frozenset(s for s, _ in pairs)
        proj_t = frozenset(t for _, t in pairs)
        if proj_s != frozenset(c1.carrier) or proj_t != frozenset(c2.carrier):
            raise PreconditionError("mediating structure needs full projections")
        return _build_upper_mediator(pairs, c1, c2)
    raise InputError("no relational mediating structure for the giry functor")


@dataclass
class CongruenceResult:
    ok: bool
    witness: tuple | None = None            # (x, x', event) on failure
    factor_coalgebra: Coalgebra | None = None
    rho: MeasurableMap | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_congruence(tau: EquivRelation, c: Coalgebra) -> CongruenceResult:
    """tau is a congruence iff related states agree on every invariant
    measurable event; then the kernel factors and the factor map is a
    strong morphism."""
    if c.functor != "giry":
        raise InputError("congruences are defined for giry coalgebras")
    fspace, rho, invariants = factor(c.space, tau)
    for cls_ in tau.classes:
        xs = sorted(cls_, key=repr)
        for x, y in zip(xs, xs[1:]):
            for a in invariants:
                if c.structure[x](a) != c.structure[y](a):
                    return CongruenceResult(False, (x, y, tuple(sorted(a, key=repr))))
    rows = {}
    for cls_ in tau.classes:
        x = min(cls_, key=repr)
        rows[rho(x)] = FinMeasure(fspace, tuple(c.structure[x](rho.preimage(b)) for b in fspace.atoms))
    factor_c = Coalgebra("giry", fspace.carrier, rows, fspace)
    assert check_morphism(dict(rho.table), c, factor_c).ok
    return CongruenceResult(True, None, factor_c, rho)


def check_subsystem(sub_atoms: Iterable[Iterable[Label]], c: Coalgebra) -> bool:
    """Is the coarser sigma-algebra a subsystem, i.e. is the identity a
    morphism onto the restricted kernel?"""
    if c.functor != "giry":
        raise InputError("subsystems are defined for giry coalgebras")
    sub = FinMeasurableSpace.make(c.space.carrier, sub_atoms)
    for b in sub.atoms:
        if not c.space.is_measurable(b):
            raise InputError(f"sub-atom {sorted(b, key=repr)} is not measurable in the finer space")
    for b in sub.measurable_sets():
        values = {}
        for x in c.carrier:
            values[x] = c.structure[x](b)
        for a in sub.atoms:
            vals = {values[x] for x in a}
            if len(vals) > 1:
                return False
    return True


@dataclass(frozen=True)
class SpanLeg:
    """One leg m = (f, g) from the mediator to a target kernel."""

    f: Mapping[Label, Label]  # mediator dom -> target dom
    g: Mapping[Label, Label]  # mediator cod -> target cod


@dataclass(frozen=True)
class StochRelationPair:
    """A candidate span: mediator kernel plus a leg to each target."""

    mediator: MarkovKernel
    left: SpanLeg
    right: SpanLeg
    target_left: MarkovKernel
    target_right: MarkovKernel


@dataclass
class SpanVerdict:
    kind: str  # not_span | trivial_common_events | bisimilar
    detail: str
    common_atoms: tuple[frozenset, ...] | None = None


def _sigma_intersection(space: FinMeasurableSpace, families: Sequence[set]) -> tuple[frozenset, ...]:
    common = set.intersection(*[set(f) for f in families])
    pattern: dict[tuple, set] = {}
    ordered = sorted(common, key=lambda s: sorted(map(repr, s)))
    for x in space.carrier:
        pat = tuple(x in b for b in ordered)
        pattern.setdefault(pat, set()).add(x)
    return FinMeasurableSpace.make(space.carrier, pattern.values()).atoms


def check_stochastic_span(span: StochRelationPair) -> SpanVerdict:
    """Verify a span of surjective kernel morphisms and decide whether the
    common-event sigma-algebra is nontrivial."""
    m = span.mediator
    for side, leg, target in (("left", span.left, span.target_left),
                              ("right", span.right, span.target_right)):
        f = MeasurableMap(m.dom, target.dom, dict(leg.f))
        g = MeasurableMap(m.cod, target.cod, dict(leg.g))
        if not check_measurable(f) or not check_measurable(g):
            return SpanVerdict("not_span", f"{side} leg is not measurable")
        if not f.is_surjective() or not g.is_surjective():
            return SpanVerdict("not_span", f"{side} leg is not surjective")
        for a in m.dom.carrier:
            for d in target.cod.measurable_sets():
                lhs = target(f(a))(d)
                rhs = m(a)(g.preimage(d))
                if lhs != rhs:
                    return SpanVerdict(
                        "not_span",
                        f"{side} leg fails at state {a!r}, event {sorted(d, key=repr)}: {lhs} != {rhs}")
    pulled = []
    for leg, target in ((span.left, span.target_left), (span.right, span.target_right)):
        g = MeasurableMap(m.cod, target.cod, dict(leg.g))
        pulled.append({g.preimage(d) for d in target.cod.measurable_sets()})
    atoms = _sigma_intersection(m.cod, pulled)
    if len(atoms) <= 1:
        return SpanVerdict("trivial_common_events",
                           "the common-event sigma-algebra is {empty set, whole space}", atoms)
    return SpanVerdict("bisimilar", f"{len(atoms)} common-event atoms", atoms)


def product_mediator(k1: MarkovKernel, k2: MarkovKernel) -> StochRelationPair:
    """The pointwise product-measure mediator with the projections.

    This span always satisfies the morphism equations; it is the
    deliberately-too-weak construction whose common events are usually
    trivial, exposed as a negative example.
    """
    dom = _product_space(k1.dom, k2.dom)
    cod = _product_space(k1.cod, k2.cod)
    rows = {}
    for x1 in k1.dom.carrier:
        for x2 in k2.dom.carrier:
            weights = {}
            for a1, w1 in zip(k1.cod.atoms, k1(x1).weights):
                for a2, w2 in zip(k2.cod.atoms, k2(x2).weights):
                    weights[frozenset(product(a1, a2))] = w1 * w2
            rows[(x1, x2)] = FinMeasure.from_atom_weights(cod, weights)
    mediator = MarkovKernel(dom, cod, rows)
    left = SpanLeg(f={p: p[0] for p in dom.carrier}, g={p: p[0] for p in cod.carrier})
    right = SpanLeg(f={p: p[1] for p in dom.carrier}, g={p: p[1] for p in cod.carrier})
    return StochRelationPair(mediator, left, right, k1, k2)


def _product_space(s1: FinMeasurableSpace, s2: FinMeasurableSpace) -> FinMeasurableSpace:
    carrier = tuple((x1, x2) for x1 in s1.carrier for x2 in s2.carrier)
    atoms = [frozenset(product(a1, a2)) for a1 in s1.atoms for a2 in s2.atoms]
    return FinMeasurableSpace.make(carrier, atoms)
