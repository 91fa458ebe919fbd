"""Exact-rational probability measures, kernels, and the integral.

Everything is a finite sum over atoms in `fractions.Fraction`; there are
no tolerances anywhere, every identity is checked with `==`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .space import (FinMeasurableSpace, InputError, Label, MeasurableMap,
                    check_measurable)

Rat = Fraction


def as_fraction(v) -> Fraction:
    """Parse exact rationals; "p/q" and integer strings are the wire format."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"bad rational literal {v!r}: {e}") from None
    raise InputError(f"bad rational {v!r} (floats are not accepted)")


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class FinMeasure:
    """A probability measure as exact per-atom weights."""

    space: FinMeasurableSpace
    weights: tuple[Fraction, ...]  # aligned with space.atoms

    def __post_init__(self):
        if len(self.weights) != len(self.space.atoms):
            raise InputError("one weight per atom required")
        if any(w < 0 for w in self.weights):
            raise InputError("weights must be nonnegative")
        if sum(self.weights) != 1:
            raise InputError(f"weights sum to {sum(self.weights)}, not 1")

    @classmethod
    def from_atom_weights(cls, space: FinMeasurableSpace, atom_weights: Mapping[frozenset, object]) -> "FinMeasure":
        return cls(space, tuple(as_fraction(atom_weights.get(a, 0)) for a in space.atoms))

    @classmethod
    def from_state_weights(cls, space: FinMeasurableSpace, state_weights: Mapping[Label, object]) -> "FinMeasure":
        """Per-state weights; within one atom only the total matters."""
        unknown = set(state_weights) - set(space.carrier)
        if unknown:
            raise InputError(f"weights mention unknown states {sorted(unknown, key=repr)}")
        totals = []
        for a in space.atoms:
            totals.append(sum((as_fraction(state_weights.get(x, 0)) for x in a), Fraction(0)))
        return cls(space, tuple(totals))

    def __call__(self, s: Iterable[Label]) -> Fraction:
        s = self.space.require_measurable(s)
        return sum((w for a, w in zip(self.space.atoms, self.weights) if a <= s), Fraction(0))

    def weight_of_atom(self, atom: frozenset) -> Fraction:
        return self.weights[self.space.atoms.index(atom)]

    def support(self) -> frozenset:
        out: frozenset = frozenset()
        for a, w in zip(self.space.atoms, self.weights):
            if w:
                out |= a
        return out


@dataclass(frozen=True)
class BoundedFunction:
    """A measurable function: constant on atoms, arbitrary rational values."""

    space: FinMeasurableSpace
    values: tuple[Fraction, ...]  # aligned with space.atoms

    def __post_init__(self):
        if len(self.values) != len(self.space.atoms):
            raise InputError("one value per atom required")

    @classmethod
    def indicator(cls, space: FinMeasurableSpace, s: Iterable[Label]) -> "BoundedFunction":
        s = space.require_measurable(s)
        return cls(space, tuple(Fraction(1) if a <= s else Fraction(0) for a in space.atoms))

    @classmethod
    def constant(cls, space: FinMeasurableSpace, c) -> "BoundedFunction":
        c = as_fraction(c)
        return cls(space, tuple(c for _ in space.atoms))

    def __call__(self, x: Label) -> Fraction:
        return self.values[self.space.atoms.index(self.space.atom_of(x))]

    def scale(self, c) -> "BoundedFunction":
        c = as_fraction(c)
        return BoundedFunction(self.space, tuple(c * v for v in self.values))

    def plus(self, other: "BoundedFunction") -> "BoundedFunction":
        if other.space != self.space:
            raise InputError("space mismatch")
        return BoundedFunction(self.space, tuple(a + b for a, b in zip(self.values, other.values)))


@dataclass(frozen=True)
class LinPred:
    """The measure set {mu : sum_i c_i * mu(atom_i)  >=|>  bound}.

    beta(A, q) is the instance whose coefficients are the indicator of A.
    """

    space: FinMeasurableSpace
    coeffs: tuple[Fraction, ...]  # aligned with space.atoms
    bound: Fraction
    strict: bool = False

    def value(self, mu: FinMeasure) -> Fraction:
        if mu.space != self.space:
            raise InputError("space mismatch")
        return sum((c * w for c, w in zip(self.coeffs, mu.weights)), Fraction(0))

    def holds(self, mu: FinMeasure) -> bool:
        v = self.value(mu)
        return v > self.bound if self.strict else v >= self.bound


def beta(space: FinMeasurableSpace, a: Iterable[Label], q, strict: bool = False) -> LinPred:
    """The set of measures giving event `a` probability at least (or above) q."""
    a = space.require_measurable(a)
    q = as_fraction(q)
    return LinPred(space, tuple(Fraction(1) if atom <= a else Fraction(0) for atom in space.atoms), q, strict)


def dirac(space: FinMeasurableSpace, x: Label) -> FinMeasure:
    atom = space.atom_of(x)
    return FinMeasure(space, tuple(Fraction(1) if a == atom else Fraction(0) for a in space.atoms))


@dataclass(frozen=True)
class MarkovKernel:
    """A stochastic relation dom ~> cod: one measure per state, constant on
    dom atoms so that x |-> K(x)(B) is measurable for every measurable B."""

    dom: FinMeasurableSpace
    cod: FinMeasurableSpace
    rows: Mapping[Label, FinMeasure]

    def __post_init__(self):
        missing = set(self.dom.carrier) - set(self.rows)
        if missing:
            raise InputError(f"kernel rows missing for {sorted(missing, key=repr)}")
        for x, row in self.rows.items():
            if row.space != self.cod:
                raise InputError(f"row of {x!r} lives on the wrong space")
        for a in self.dom.atoms:
            rep, *rest = sorted(a, key=repr)
            for x in rest:
                if self.rows[x] != self.rows[rep]:
                    raise InputError(
                        f"rows of {rep!r} and {x!r} differ inside one dom atom (kernel not measurable)")

    def __call__(self, x: Label) -> FinMeasure:
        return self.rows[x]

    @classmethod
    def from_state_rows(cls, dom: FinMeasurableSpace, cod: FinMeasurableSpace,
                        rows: Mapping[Label, Mapping[Label, object]]) -> "MarkovKernel":
        return cls(dom, cod, {x: FinMeasure.from_state_weights(cod, rows[x]) for x in dom.carrier})

    @classmethod
    def deterministic(cls, f: MeasurableMap) -> "MarkovKernel":
        if not check_measurable(f):
            raise InputError("deterministic kernel needs a measurable map")
        return cls(f.dom, f.cod, {x: dirac(f.cod, f.table[x]) for x in f.dom.carrier})

    @classmethod
    def identity(cls, space: FinMeasurableSpace) -> "MarkovKernel":
        return cls(space, space, {x: dirac(space, x) for x in space.carrier})


def image_measure(f: MeasurableMap, mu: FinMeasure) -> FinMeasure:
    """Pushforward: result(B) = mu(f^-1 B)."""
    if mu.space != f.dom:
        raise InputError("measure must live on the map's dom")
    if not check_measurable(f):
        raise InputError("map is not measurable")
    return FinMeasure(f.cod, tuple(mu(f.preimage(b)) for b in f.cod.atoms))


def integrate(f: BoundedFunction, mu: FinMeasure) -> Fraction:
    """The unique linear positive extension of A |-> mu(A): a finite sum."""
    if f.space != mu.space:
        raise InputError("space mismatch")
    return sum((v * w for v, w in zip(f.values, mu.weights)), Fraction(0))


def lift_kernel(k: MarkovKernel) -> Callable[[FinMeasure], FinMeasure]:
    """The measure transformer K*(mu)(B) = integral of x |-> K(x)(B) d mu."""

    def transform(mu: FinMeasure) -> FinMeasure:
        if mu.space != k.dom:
            raise InputError("measure must live on the kernel's dom")
        weights = []
        for b in k.cod.atoms:
            fb = BoundedFunction(k.dom, tuple(
                k(min(a, key=repr)).weight_of_atom(b) for a in k.dom.atoms))
            weights.append(integrate(fb, mu))
        return FinMeasure(k.cod, tuple(weights))

    return transform


def integral_transport(f: BoundedFunction, k: MarkovKernel, mu: FinMeasure) -> tuple[Fraction, Fraction]:
    """Both routes of the interchange identity, computed independently.

    lhs integrates f against K*(mu); rhs integrates the inner-integral
    function x |-> int f dK(x) against mu.  They are equal (tested), and
    the inner integral really is a bounded measurable function.
    """
    if f.space != k.cod or mu.space != k.dom:
        raise InputError("space mismatch")
    lhs = integrate(f, lift_kernel(k)(mu))
    inner = BoundedFunction(k.dom, tuple(integrate(f, k(min(a, key=repr))) for a in k.dom.atoms))
    rhs = integrate(inner, mu)
    return lhs, rhs


def kleisli_compose(l: MarkovKernel, k: MarkovKernel) -> MarkovKernel:
    """(L * K)(x)(C) = integral of y |-> L(y)(C) against K(x)."""
    if k.cod != l.dom:
        raise InputError("cod of the first kernel must equal dom of the second")
    star = lift_kernel(l)
    return MarkovKernel(k.dom, l.cod, {x: star(k(x)) for x in k.dom.carrier})
