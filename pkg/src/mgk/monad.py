"""One Kleisli-triple abstraction, three instances, and a law checker.

Instances: powerset (values are frozensets), upper_closed (values are
upper-closed set families stored by their minimal generators), and
discrete_prob (values are rational distributions as dicts).  Law checks
draw seed-deterministic random objects and morphisms and compare values
with exact equality.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import chain, combinations
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .space import InputError, Label

Dist = dict  # label -> Fraction, zero entries dropped


def _subsets(base: Iterable) -> Iterator[frozenset]:
    items = sorted(base, key=repr)
    return (frozenset(c) for r in range(len(items) + 1) for c in combinations(items, r))


@dataclass(frozen=True)
class UpperClosedFamily:
    """An upper-closed family of subsets of `base`, stored by the antichain
    of its minimal members; membership(H) iff some generator is inside H."""

    base: frozenset
    generators: frozenset  # of frozensets, pairwise incomparable

    def __post_init__(self):
        for g in self.generators:
            if not g <= self.base:
                raise InputError("generator outside the base set")
        for g in self.generators:
            for h in self.generators:
                if g < h:
                    raise InputError("generators must form an antichain")

    @classmethod
    def from_sets(cls, base: Iterable, sets: Iterable[Iterable]) -> "UpperClosedFamily":
        """Normalize an arbitrary family of generators to its antichain."""
        base = frozenset(base)
        cand = {frozenset(s) for s in sets}
        minimal = {s for s in cand if not any(t < s for t in cand)}
        return cls(base, frozenset(minimal))

    @classmethod
    def principal(cls, base: Iterable, s: Iterable) -> "UpperClosedFamily":
        return cls.from_sets(base, [s])

    @classmethod
    def point(cls, base: Iterable, x) -> "UpperClosedFamily":
        """All sets containing x: the unit of the monad."""
        return cls.from_sets(base, [[x]])

    @classmethod
    def empty(cls, base: Iterable) -> "UpperClosedFamily":
        return cls(frozenset(base), frozenset())

    @classmethod
    def full(cls, base: Iterable) -> "UpperClosedFamily":
        return cls.from_sets(base, [[]])

    def contains(self, h: Iterable) -> bool:
        h = frozenset(h)
        return any(g <= h for g in self.generators)

    def members(self) -> Iterator[frozenset]:
        """Extensional expansion; only sensible for small bases."""
        if len(self.base) > 12:
            raise InputError("extensional expansion capped at 12 base elements")
        return (h for h in _subsets(self.base) if self.contains(h))

    def sorted_generators(self) -> list[frozenset]:
        return sorted(self.generators, key=lambda g: (len(g), sorted(map(repr, g))))


def lift_powerset(f: Mapping[Label, frozenset]) -> Callable[[frozenset], frozenset]:
    """f*(A) = union of f(x) over x in A."""

    def star(a: frozenset) -> frozenset:
        out: frozenset = frozenset()
        for x in a:
            out |= f[x]
        return out

    return star


def lift_upper(f: Mapping[Label, UpperClosedFamily], cod_base: Iterable) -> Callable[[UpperClosedFamily], UpperClosedFamily]:
    """f*(C) = {B : {x : B in f(x)} in C}, re-normalized to generators."""
    cod_base = frozenset(cod_base)

    def star(c: UpperClosedFamily) -> UpperClosedFamily:
        hits = []
        for b in _subsets(cod_base):
            pre = frozenset(x for x in c.base if f[x].contains(b))
            if c.contains(pre):
                hits.append(b)
        return UpperClosedFamily.from_sets(cod_base, hits)

    return star


def lift_discrete_prob(f: Mapping[Label, Dist]) -> Callable[[Dist], Dist]:
    """f*(p)(y) = sum over x of p(x) * f(x)(y)."""

    def star(p: Dist) -> Dist:
        out: dict = {}
        for x, w in p.items():
            for y, v in f[x].items():
                out[y] = out.get(y, Fraction(0)) + w * v
        return {y: v for y, v in out.items() if v}

    return star


@dataclass(frozen=True)
class KleisliInstance:
    """A monad presented as (object map, embedding eta, lifting -*)."""

    name: str

    def eta(self, base: Sequence[Label], x: Label):
        if self.name == "powerset":
            return frozenset([x])
        if self.name == "upper_closed":
            return UpperClosedFamily.point(base, x)
        if self.name == "discrete_prob":
            return {x: Fraction(1)}
        raise InputError(f"unknown instance {self.name!r}")

    def lift(self, f: Mapping, dom: Sequence[Label], cod: Sequence[Label]) -> Callable:
        if self.name == "powerset":
            return lift_powerset(f)
        if self.name == "upper_closed":
            return lift_upper(f, cod)
        if self.name == "discrete_prob":
            return lift_discrete_prob(f)
        raise InputError(f"unknown instance {self.name!r}")

    def equal(self, a, b) -> bool:
        return a == b

    # seed-deterministic sampling -------------------------------------------------

    def rand_object(self, rng: random.Random, max_size: int = 5) -> tuple[str, ...]:
        n = rng.randint(1, max_size)
        offset = rng.randint(0, 3)
        return tuple(f"s{offset + i}" for i in range(n))

    def rand_value(self, rng: random.Random, base: Sequence[Label]):
        if self.name == "powerset":
            return frozenset(x for x in base if rng.random() < 0.5)
        if self.name == "upper_closed":
            gens = [frozenset(x for x in base if rng.random() < 0.5)
                    for _ in range(rng.randint(0, 3))]
            return UpperClosedFamily.from_sets(base, gens)
        if self.name == "discrete_prob":
            return _rand_dist(rng, base)
        raise InputError(f"unknown instance {self.name!r}")

    def rand_morphism(self, rng: random.Random, dom: Sequence[Label], cod: Sequence[Label]) -> dict:
        return {x: self.rand_value(rng, cod) for x in dom}


def _rand_dist(rng: random.Random, base: Sequence[Label]) -> Dist:
    denom = rng.choice([2, 3, 4, 6, 8])
    cuts = sorted(rng.randint(0, denom) for _ in range(len(base) - 1))
    parts = []
    prev = 0
    for c in chain(cuts, [denom]):
        parts.append(Fraction(c - prev, denom))
        prev = c
    return {x: w for x, w in zip(base, parts) if w}


POWERSET = KleisliInstance("powerset")
UPPER_CLOSED = KleisliInstance("upper_closed")
DISCRETE_PROB = KleisliInstance("discrete_prob")

INSTANCES = {i.name: i for i in (POWERSET, UPPER_CLOSED, DISCRETE_PROB)}


@dataclass
class LawFailure:
    law: str
    detail: str


@dataclass
class LawReport:
    instance: str
    trials: int
    seed: int
    failures: list[LawFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [f"monad-law report: instance={self.instance} trials={self.trials} seed={self.seed}"]
        if self.passed:
            out.append("all three laws hold on every sampled instance")
        else:
            out.extend(f"FAIL {f.law}: {f.detail}" for f in self.failures)
        return out


def check_monad_laws(instance: KleisliInstance, trials: int = 100, seed: int = 0,
                     max_size: int = 5) -> LawReport:
    """Sample objects/morphisms and assert the three unit/lifting laws."""
    rng = random.Random(seed)
    report = LawReport(instance.name, trials, seed)
    for _ in range(trials):
        xs = instance.rand_object(rng, max_size)
        ys = instance.rand_object(rng, max_size)
        zs = instance.rand_object(rng, max_size)
        f = instance.rand_morphism(rng, xs, ys)
        g = instance.rand_morphism(rng, ys, zs)
        tx = instance.rand_value(rng, xs)

        eta_x = {x: instance.eta(xs, x) for x in xs}
        lifted_eta = instance.lift(eta_x, xs, xs)
        if not instance.equal(lifted_eta(tx), tx):
            report.failures.append(LawFailure(
                "eta* = id", f"object={xs} value={tx!r} got={lifted_eta(tx)!r}"))

        f_star = instance.lift(f, xs, ys)
        for x in xs:
            if not instance.equal(f_star(instance.eta(xs, x)), f[x]):
                report.failures.append(LawFailure(
                    "f* . eta = f", f"object={xs} x={x!r} f(x)={f[x]!r} got={f_star(instance.eta(xs, x))!r}"))

        g_star = instance.lift(g, ys, zs)
        composed = {x: g_star(f[x]) for x in xs}
        lhs = g_star(f_star(tx))
        rhs = instance.lift(composed, xs, zs)(tx)
        if not instance.equal(lhs, rhs):
            report.failures.append(LawFailure(
                "g* . f* = (g* . f)*", f"object={xs} value={tx!r} lhs={lhs!r} rhs={rhs!r}"))
    return report


def functor_action(instance: KleisliInstance, f: Mapping[Label, Label],
                   dom: Sequence[Label], cod: Sequence[Label]) -> Callable:
    """T f := (eta . f)*, the endofunctor derived from the triple."""
    eta_f = {x: instance.eta(cod, f[x]) for x in dom}
    return instance.lift(eta_f, dom, cod)


def direct_functor_action(instance: KleisliInstance, f: Mapping[Label, Label],
                          dom: Sequence[Label], cod: Sequence[Label]) -> Callable:
    """The hand-rolled functor action each instance is known to have:
    direct image, preimage-membership family, and pushforward."""
    if instance.name == "powerset":
        return lambda a: frozenset(f[x] for x in a)
    if instance.name == "upper_closed":
        cod_base = frozenset(cod)

        def act(fam: UpperClosedFamily) -> UpperClosedFamily:
            hits = [h for h in _subsets(cod_base)
                    if fam.contains(frozenset(x for x in fam.base if f[x] in h))]
            return UpperClosedFamily.from_sets(cod_base, hits)

        return act
    if instance.name == "discrete_prob":
        def push(p: Dist) -> Dist:
            out: dict = {}
            for x, w in p.items():
                out[f[x]] = out.get(f[x], Fraction(0)) + w
            return {y: v for y, v in out.items() if v}

        return push
    raise InputError(f"unknown instance {instance.name!r}")


def kleisli_compose_generic(instance: KleisliInstance, g: Mapping, f: Mapping,
                            dom: Sequence[Label], mid: Sequence[Label], cod: Sequence[Label]) -> dict:
    """g after f in the Kleisli category: (g * f)(x) = g*(f(x))."""
    g_star = instance.lift(g, mid, cod)
    return {x: g_star(f[x]) for x in dom}
