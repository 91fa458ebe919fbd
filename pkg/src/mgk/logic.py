"""Negation-free probabilistic modal logic over finite Kripke models.

Formulas: T | p | phi & phi | <a>_q phi, with q a rational in [0, 1].
Validity sets are computed exactly; logical equivalence is decided by
partition refinement, with a formula-enumeration oracle available for
cross-checking.  Theories are infinite, but on a finite model the
family of distinct validity sets is a finite fixpoint, which makes the
smallness check and the behavioral-equivalence witness effective.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .coalgebra import Coalgebra, check_morphism
from .prob import FinMeasure, MarkovKernel, as_fraction, format_fraction
from .space import (EquivRelation, FinMeasurableSpace, InputError, Label,
                    MeasurableMap, PreconditionError, check_measurable, factor,
                    sigma_close)


# --- formulas -----------------------------------------------------------------


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Prim:
    name: str


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Diamond:
    action: str
    q: Fraction
    sub: "Formula"


Formula = Top | Prim | And | Diamond

_TOKEN = re.compile(r"\s*(?:(?P<rat>\d+/\d+|\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<sym>[&<>_()]))")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.items: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                if text[pos:].strip():
                    raise InputError(f"syntax error at position {pos}: unexpected {text[pos]!r}")
                break
            for kind in ("rat", "ident", "sym"):
                if m.group(kind) is not None:
                    self.items.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.items[self.i] if self.i < len(self.items) else (None, None, len(self.text))

    def next(self, expect_sym: str | None = None):
        kind, value, pos = self.peek()
        if kind is None:
            raise InputError(f"syntax error at position {pos}: unexpected end of input")
        if expect_sym is not None and (kind != "sym" or value != expect_sym):
            raise InputError(f"syntax error at position {pos}: expected {expect_sym!r}, got {value!r}")
        self.i += 1
        return kind, value, pos

    def done(self) -> bool:
        return self.i >= len(self.items)


def parse_formula(text: str) -> Formula:
    toks = _Tokens(text)
    phi = _parse_conj(toks)
    if not toks.done():
        kind, value, pos = toks.peek()
        raise InputError(f"syntax error at position {pos}: trailing {value!r}")
    return phi


def _parse_conj(toks: _Tokens) -> Formula:
    phi = _parse_unary(toks)
    while True:
        kind, value, _ = toks.peek()
        if kind == "sym" and value == "&":
            toks.next()
            phi = And(phi, _parse_unary(toks))
        else:
            return phi


def _parse_unary(toks: _Tokens) -> Formula:
    kind, value, pos = toks.peek()
    if kind == "sym" and value == "<":
        toks.next()
        k2, action, p2 = toks.next()
        if k2 != "ident":
            raise InputError(f"syntax error at position {p2}: expected an action name")
        toks.next(">")
        toks.next("_")
        k3, rat, p3 = toks.next()
        if k3 != "rat":
            raise InputError(f"syntax error at position {p3}: expected a rational")
        q = as_fraction(rat)
        if not 0 <= q <= 1:
            raise InputError(f"syntax error at position {p3}: threshold {rat} outside [0, 1]")
        return Diamond(action, q, _parse_unary(toks))
    return _parse_atom(toks)


def _parse_atom(toks: _Tokens) -> Formula:
    kind, value, pos = toks.next()
    if kind == "sym" and value == "(":
        phi = _parse_conj(toks)
        toks.next(")")
        return phi
    if kind == "ident":
        return Top() if value == "T" else Prim(value)
    raise InputError(f"syntax error at position {pos}: unexpected {value!r}")


def format_formula(phi: Formula) -> str:
    if isinstance(phi, Top):
        return "T"
    if isinstance(phi, Prim):
        return phi.name
    if isinstance(phi, And):
        left = format_formula(phi.left)
        right = format_formula(phi.right)
        if isinstance(phi.right, And):
            right = f"({right})"
        return f"{left} & {right}"
    if isinstance(phi, Diamond):
        sub = format_formula(phi.sub)
        if isinstance(phi.sub, And):
            sub = f"({sub})"
        return f"<{phi.action}>_{format_fraction(phi.q)} {sub}"
    raise InputError(f"not a formula: {phi!r}")


def modal_depth(phi: Formula) -> int:
    if isinstance(phi, (Top, Prim)):
        return 0
    if isinstance(phi, And):
        return max(modal_depth(phi.left), modal_depth(phi.right))
    return 1 + modal_depth(phi.sub)


# --- models -------------------------------------------------------------------


@dataclass(frozen=True)
class KripkeModel:
    space: FinMeasurableSpace
    kernels: Mapping[str, MarkovKernel]
    valuations: Mapping[str, frozenset]

    def __post_init__(self):
        for a, k in self.kernels.items():
            if k.dom != self.space or k.cod != self.space:
                raise InputError(f"kernel {a!r} must be an endo-kernel on the model's space")
        for p, v in self.valuations.items():
            if not self.space.is_measurable(v):
                raise InputError(f"valuation of {p!r} is not measurable")

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(sorted(self.kernels))

    @property
    def primitives(self) -> tuple[str, ...]:
        return tuple(sorted(self.valuations))

    def coalgebra(self, action: str) -> Coalgebra:
        k = self.kernels[action]
        return Coalgebra("giry", self.space.carrier, dict(k.rows), self.space)


def validity_set(m: KripkeModel, phi: Formula) -> frozenset:
    if isinstance(phi, Top):
        return m.space.full
    if isinstance(phi, Prim):
        if phi.name not in m.valuations:
            raise InputError(f"unknown primitive {phi.name!r}")
        return frozenset(m.valuations[phi.name])
    if isinstance(phi, And):
        return validity_set(m, phi.left) & validity_set(m, phi.right)
    if isinstance(phi, Diamond):
        if phi.action not in m.kernels:
            raise InputError(f"unknown action {phi.action!r}")
        return _diamond(m, phi.action, phi.q, validity_set(m, phi.sub))
    raise InputError(f"not a formula: {phi!r}")


def _diamond(m: KripkeModel, action: str, q: Fraction, s: frozenset) -> frozenset:
    k = m.kernels[action]
    return frozenset(x for x in m.space.carrier if k(x)(s) >= q)


def achievable_thresholds(m: KripkeModel) -> list[Fraction]:
    """All values K_a(x)(U); validity of <a>_q phi changes only at these."""
    values = {Fraction(0), Fraction(1)}
    for a in m.actions:
        k = m.kernels[a]
        for x in m.space.carrier:
            for u in m.space.measurable_sets():
                values.add(k(x)(u))
    return sorted(values)


def validity_closure(m: KripkeModel) -> list[frozenset]:
    """The finitely many distinct validity sets, as a fixpoint.

    Seed with T and the primitives, close under intersection and under
    every diamond at every achievable threshold; deeper formulas cannot
    produce new sets once a round adds nothing.
    """
    thresholds = achievable_thresholds(m)
    sets: set[frozenset] = {m.space.full}
    for p in m.primitives:
        sets.add(frozenset(m.valuations[p]))
    while True:
        new = set(sets)
        for s in sets:
            for t in sets:
                new.add(s & t)
            for a in m.actions:
                for q in thresholds:
                    new.add(_diamond(m, a, q, s))
        if new == sets:
            ordered = sorted(sets, key=lambda s: (len(s), sorted(map(repr, s))))
            return ordered
        sets = new


def equivalence_partition(m: KripkeModel) -> EquivRelation:
    """States with equal theories, by partition refinement.

    Blocks stay measurable throughout (valuations are measurable and the
    kernels are atom-constant), so by additivity refining on per-block
    transition mass equals refining on every measurable block-union.
    """
    carrier = m.space.carrier
    blocks: list[frozenset] = []
    pattern: dict[tuple, set] = {}
    for x in carrier:
        pat = tuple(x in m.valuations[p] for p in m.primitives)
        pattern.setdefault(pat, set()).add(x)
    blocks = [frozenset(b) for b in pattern.values()]
    while True:
        signature = {}
        for x in carrier:
            sig = []
            for a in m.actions:
                for b in blocks:
                    sig.append(m.kernels[a](x)(b))
            old = next(i for i, b in enumerate(blocks) if x in b)
            signature[x] = (old, tuple(sig))
        groups: dict[tuple, set] = {}
        for x in carrier:
            groups.setdefault(signature[x], set()).add(x)
        new_blocks = [frozenset(g) for g in groups.values()]
        if len(new_blocks) == len(blocks):
            return EquivRelation.make(carrier, new_blocks)
        blocks = new_blocks


def oracle_partition(m: KripkeModel, depth: int) -> EquivRelation:
    """Partition by formula enumeration up to the given modal depth, an
    independent oracle for equivalence_partition."""
    thresholds = achievable_thresholds(m)
    level: set[frozenset] = {m.space.full} | {frozenset(m.valuations[p]) for p in m.primitives}
    level = _intersection_closure(level)
    for _ in range(depth):
        grown = set(level)
        for s in level:
            for a in m.actions:
                for q in thresholds:
                    grown.add(_diamond(m, a, q, s))
        level = _intersection_closure(grown)
    return EquivRelation.from_pairs(
        m.space.carrier, lambda x, y: all((x in s) == (y in s) for s in level))


def _intersection_closure(sets: set[frozenset]) -> set[frozenset]:
    out = set(sets)
    while True:
        extra = {s & t for s in out for t in out} - out
        if not extra:
            return out
        out |= extra


@dataclass
class SmallnessReport:
    small: bool
    sigma_alpha: list[frozenset]
    theta: list[frozenset]
    alpha: EquivRelation


def check_smallness(m: KripkeModel) -> SmallnessReport:
    """Compare the invariant measurable sets of the logical equivalence with
    the sigma-algebra generated by all validity sets (the latter is always
    contained in the former)."""
    alpha = equivalence_partition(m)
    sigma_alpha = [s for s in m.space.measurable_sets() if alpha.is_invariant(s)]
    theta_space = sigma_close(m.space.carrier, validity_closure(m))
    theta = list(theta_space.measurable_sets())
    key = lambda s: (len(s), sorted(map(repr, s)))
    sigma_alpha = sorted(sigma_alpha, key=key)
    theta = sorted(theta, key=key)
    if not set(theta) <= set(sigma_alpha):
        raise AssertionError("validity sigma-algebra escaped the invariant sets")
    return SmallnessReport(set(theta) == set(sigma_alpha), sigma_alpha, theta, alpha)


def factor_model(m: KripkeModel) -> tuple[KripkeModel, MeasurableMap]:
    """Collapse logically indistinguishable states; the factor map is a
    morphism and preserves every validity set."""
    alpha = equivalence_partition(m)
    fspace, rho, _ = factor(m.space, alpha)
    kernels = {}
    for a in m.actions:
        rows = {}
        for cls_ in alpha.classes:
            xs = sorted(cls_, key=repr)
            per_atom = [tuple(m.kernels[a](x)(rho.preimage(b)) for b in fspace.atoms) for x in xs]
            if len(set(per_atom)) != 1:
                raise AssertionError("logical equivalence failed to be a congruence")
            rows[rho(xs[0])] = FinMeasure(fspace, per_atom[0])
        kernels[a] = MarkovKernel(fspace, fspace, rows)
    valuations = {p: rho.image(m.valuations[p]) for p in m.primitives}
    fm = KripkeModel(fspace, kernels, valuations)
    if not kripke_morphism_ok(dict(rho.table), m, fm):
        raise AssertionError("factor map failed the morphism check")
    return fm, rho


def kripke_morphism_ok(f: Mapping[Label, Label], m1: KripkeModel, m2: KripkeModel) -> bool:
    """Coalgebra morphism for every action plus exact valuation preimages."""
    if m1.actions != m2.actions or m1.primitives != m2.primitives:
        return False
    for a in m1.actions:
        if not check_morphism(f, m1.coalgebra(a), m2.coalgebra(a)).ok:
            return False
    fmap = MeasurableMap(m1.space, m2.space, dict(f))
    for p in m1.primitives:
        if fmap.preimage(m2.valuations[p]) != frozenset(m1.valuations[p]):
            return False
    return True


def disjoint_union(m1: KripkeModel, m2: KripkeModel) -> KripkeModel:
    if m1.actions != m2.actions or m1.primitives != m2.primitives:
        raise InputError("models must share actions and primitives")
    carrier = tuple((0, x) for x in m1.space.carrier) + tuple((1, y) for y in m2.space.carrier)
    atoms = [frozenset((0, x) for x in a) for a in m1.space.atoms]
    atoms += [frozenset((1, y) for y in a) for a in m2.space.atoms]
    space = FinMeasurableSpace.make(carrier, atoms)
    kernels = {}
    for a in m1.actions:
        rows = {}
        for tag, m in ((0, m1), (1, m2)):
            for x in m.space.carrier:
                row = m.kernels[a](x)
                weights = {frozenset((tag, y) for y in atom): w
                           for atom, w in zip(m.space.atoms, row.weights)}
                rows[(tag, x)] = FinMeasure.from_atom_weights(space, weights)
        kernels[a] = MarkovKernel(space, space, rows)
    valuations = {p: frozenset((0, x) for x in m1.valuations[p]) | frozenset((1, y) for y in m2.valuations[p])
                  for p in m1.primitives}
    return KripkeModel(space, kernels, valuations)


def logically_equivalent(m1: KripkeModel, m2: KripkeModel) -> bool:
    """Joint refinement on the disjoint union: every theory must occur on
    both sides."""
    if m1.actions != m2.actions or m1.primitives != m2.primitives:
        return False
    joint = disjoint_union(m1, m2)
    alpha = equivalence_partition(joint)
    for cls_ in alpha.classes:
        tags = {tag for tag, _ in cls_}
        if tags != {0, 1}:
            return False
    return True


@dataclass
class Cospan:
    mediator: KripkeModel
    left: dict   # m1 state -> mediator state
    right: dict  # m2 state -> mediator state
    iso: dict    # factor(m1) state -> factor(m2) state


def behavioral_witness(m1: KripkeModel, m2: KripkeModel) -> Cospan | None:
    """For small logically equivalent models, a verified mediating cospan;
    None when the models are not logically equivalent."""
    for name, m in (("first", m1), ("second", m2)):
        if not check_smallness(m).small:
            raise PreconditionError(f"the {name} model is not small")
    if not logically_equivalent(m1, m2):
        return None
    joint = disjoint_union(m1, m2)
    alpha = equivalence_partition(joint)
    f1, rho1 = factor_model(m1)
    f2, rho2 = factor_model(m2)
    iso = {}
    for cls_ in alpha.classes:
        xs = sorted((x for tag, x in cls_ if tag == 0), key=repr)
        ys = sorted((y for tag, y in cls_ if tag == 1), key=repr)
        for x in xs:
            iso[rho1(x)] = rho2(ys[0])
    if len(set(iso.values())) != len(f2.space.carrier) or set(iso) != set(f1.space.carrier):
        return None
    iso_map = MeasurableMap(f1.space, f2.space, iso)
    inverse = {v: k for k, v in iso.items()}
    inv_map = MeasurableMap(f2.space, f1.space, inverse)
    if not (check_measurable(iso_map) and check_measurable(inv_map)):
        raise AssertionError("theory bijection failed to be bi-measurable")
    if not kripke_morphism_ok(iso, f1, f2):
        raise AssertionError("theory bijection failed to be a morphism")
    left = {x: iso[rho1(x)] for x in m1.space.carrier}
    right = dict(rho2.table)
    if not (kripke_morphism_ok(left, m1, f2) and kripke_morphism_ok(right, m2, f2)):
        raise AssertionError("cospan legs failed the morphism check")
    return Cospan(f2, left, right, iso)
