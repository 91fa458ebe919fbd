"""Finite measurable spaces stored as atom partitions.

Every finite sigma-algebra is atomic, so a space is a carrier plus the
partition whose unions are exactly the measurable sets.  All operations
are pure; all set-valued outputs are sorted by the carrier's declared
order so snapshots are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

Label = Hashable


class InputError(ValueError):
    """Malformed input: unknown labels, broken invariants, bad schemas."""


class PreconditionError(ValueError):
    """A documented operation precondition does not hold."""


def _key(space: "FinMeasurableSpace"):
    index = {x: i for i, x in enumerate(space.carrier)}
    return lambda s: sorted(index[x] for x in s)


@dataclass(frozen=True)
class FinMeasurableSpace:
    """A finite carrier with a sigma-algebra given by its atom partition."""

    carrier: tuple[Label, ...]
    atoms: tuple[frozenset, ...]

    def __post_init__(self):
        if len(set(self.carrier)) != len(self.carrier):
            raise InputError("carrier labels must be distinct")
        seen: set = set()
        for a in self.atoms:
            if not a:
                raise InputError("atoms must be nonempty")
            if a & seen:
                raise InputError(f"atoms overlap on {sorted(a & seen, key=repr)}")
            seen |= a
        if seen != set(self.carrier):
            raise InputError("atoms must cover the carrier exactly")

    @classmethod
    def make(cls, carrier: Sequence[Label], atoms: Iterable[Iterable[Label]]) -> "FinMeasurableSpace":
        carrier = tuple(carrier)
        index = {x: i for i, x in enumerate(carrier)}
        for a in atoms:
            for x in a:
                if x not in index:
                    raise InputError(f"unknown label {x!r} in atom")
        norm = sorted((frozenset(a) for a in atoms), key=lambda a: min(index[x] for x in a))
        return cls(carrier, tuple(norm))

    @classmethod
    def discrete(cls, carrier: Sequence[Label]) -> "FinMeasurableSpace":
        return cls.make(carrier, [[x] for x in carrier])

    @classmethod
    def trivial(cls, carrier: Sequence[Label]) -> "FinMeasurableSpace":
        return cls.make(carrier, [list(carrier)])

    def atom_of(self, x: Label) -> frozenset:
        for a in self.atoms:
            if x in a:
                return a
        raise InputError(f"unknown state {x!r}")

    def is_measurable(self, s: Iterable[Label]) -> bool:
        s = frozenset(s)
        if not s <= set(self.carrier):
            raise InputError(f"set mentions labels outside the carrier: {s - set(self.carrier)}")
        return all(a <= s or not (a & s) for a in self.atoms)

    def require_measurable(self, s: Iterable[Label]) -> frozenset:
        s = frozenset(s)
        if not self.is_measurable(s):
            raise InputError(f"set {sorted(s, key=repr)} is not measurable")
        return s

    def measurable_sets(self) -> Iterator[frozenset]:
        """All members of the sigma-algebra, smallest index pattern first."""
        n = len(self.atoms)
        for mask in range(1 << n):
            out: frozenset = frozenset()
            for i in range(n):
                if mask >> i & 1:
                    out |= self.atoms[i]
            yield out

    def complement(self, s: Iterable[Label]) -> frozenset:
        return frozenset(self.carrier) - frozenset(s)

    @property
    def full(self) -> frozenset:
        return frozenset(self.carrier)

    def sorted(self, s: Iterable[Label]) -> list:
        index = {x: i for i, x in enumerate(self.carrier)}
        return sorted(s, key=lambda x: index[x])


@dataclass(frozen=True)
class MeasurableMap:
    """A total map between spaces; measurability is checked, not assumed."""

    dom: FinMeasurableSpace
    cod: FinMeasurableSpace
    table: Mapping[Label, Label]

    def __post_init__(self):
        missing = set(self.dom.carrier) - set(self.table)
        if missing:
            raise InputError(f"table not total, missing {sorted(missing, key=repr)}")
        bad = {v for v in self.table.values() if v not in set(self.cod.carrier)}
        if bad:
            raise InputError(f"table maps into unknown labels {sorted(bad, key=repr)}")

    def __call__(self, x: Label) -> Label:
        return self.table[x]

    def preimage(self, s: Iterable[Label]) -> frozenset:
        s = frozenset(s)
        return frozenset(x for x in self.dom.carrier if self.table[x] in s)

    def image(self, s: Iterable[Label]) -> frozenset:
        return frozenset(self.table[x] for x in s)

    def compose(self, other: "MeasurableMap") -> "MeasurableMap":
        """self after other (other first)."""
        if other.cod.carrier != self.dom.carrier:
            raise InputError("composition carrier mismatch")
        return MeasurableMap(other.dom, self.cod, {x: self.table[other.table[x]] for x in other.dom.carrier})

    def is_surjective(self) -> bool:
        return set(self.table.values()) == set(self.cod.carrier)


@dataclass(frozen=True)
class EquivRelation:
    """A partition of a carrier; blocks need not be measurable."""

    base: tuple[Label, ...]
    classes: tuple[frozenset, ...]

    def __post_init__(self):
        seen: set = set()
        for c in self.classes:
            if not c:
                raise InputError("classes must be nonempty")
            if c & seen:
                raise InputError("classes overlap")
            seen |= c
        if seen != set(self.base):
            raise InputError("classes must cover the base")

    @classmethod
    def make(cls, base: Sequence[Label], classes: Iterable[Iterable[Label]]) -> "EquivRelation":
        base = tuple(base)
        index = {x: i for i, x in enumerate(base)}
        norm = sorted((frozenset(c) for c in classes), key=lambda c: min(index[x] for x in c))
        return cls(base, tuple(norm))

    @classmethod
    def identity(cls, base: Sequence[Label]) -> "EquivRelation":
        return cls.make(base, [[x] for x in base])

    @classmethod
    def from_pairs(cls, base: Sequence[Label], related) -> "EquivRelation":
        """Partition induced by a binary predicate that is an equivalence."""
        blocks: list[set] = []
        for x in base:
            for b in blocks:
                if related(next(iter(b)), x):
                    b.add(x)
                    break
            else:
                blocks.append({x})
        return cls.make(base, blocks)

    def class_of(self, x: Label) -> frozenset:
        for c in self.classes:
            if x in c:
                return c
        raise InputError(f"unknown element {x!r}")

    def same(self, x: Label, y: Label) -> bool:
        return self.class_of(x) is self.class_of(y)

    def is_invariant(self, s: Iterable[Label]) -> bool:
        s = frozenset(s)
        return all(c <= s or not (c & s) for c in self.classes)


def sigma_close(carrier: Sequence[Label], generators: Iterable[Iterable[Label]]) -> FinMeasurableSpace:
    """Smallest sigma-algebra containing the generators, as its atom partition.

    Atoms are the classes of "same membership pattern across all generators".
    """
    carrier = tuple(carrier)
    gens = [frozenset(g) for g in generators]
    known = set(carrier)
    for g in gens:
        if not g <= known:
            raise InputError(f"generator mentions unknown labels {sorted(g - known, key=repr)}")
    pattern: dict[tuple, set] = {}
    for x in carrier:
        pat = tuple(x in g for g in gens)
        pattern.setdefault(pat, set()).add(x)
    return FinMeasurableSpace.make(carrier, pattern.values())


def check_measurable(f: MeasurableMap, cod_generators: Iterable[Iterable[Label]] | None = None) -> bool:
    """True iff every cod atom (or generator, when given) pulls back measurably."""
    if cod_generators is None:
        targets = f.cod.atoms
    else:
        targets = [f.cod.full & frozenset(g) for g in cod_generators]
    return all(f.dom.is_measurable(f.preimage(t)) for t in targets)


def derive_sigma(mode: str, maps: Sequence[MeasurableMap], carrier: Sequence[Label] | None = None) -> FinMeasurableSpace:
    """Initial or final sigma-algebra for a family of maps.

    initial: maps f_i share their dom carrier Z, each cod sigma-algebra is
    given; result is the smallest sigma-algebra on Z making all f_i
    measurable.  final: maps g_i share the cod carrier Y, each dom
    sigma-algebra is given; result is the largest sigma-algebra on Y making
    all g_i measurable.  The shared carrier's declared order comes from the
    first map unless `carrier` is passed.
    """
    if not maps:
        raise InputError("derive_sigma needs at least one map")
    if mode == "initial":
        base = tuple(carrier) if carrier is not None else maps[0].dom.carrier
        for f in maps:
            if set(f.dom.carrier) != set(base):
                raise InputError("initial-mode maps must share their dom carrier")
        gens = [f.preimage(a) for f in maps for a in f.cod.atoms]
        return sigma_close(base, gens)
    if mode == "final":
        base = tuple(carrier) if carrier is not None else maps[0].cod.carrier
        for g in maps:
            if set(g.cod.carrier) != set(base):
                raise InputError("final-mode maps must share their cod carrier")
        if len(base) > 16:
            raise InputError("final sigma-algebra enumeration capped at 16 carrier points")
        good: list[frozenset] = []
        elems = list(base)
        for mask in range(1 << len(elems)):
            b = frozenset(elems[i] for i in range(len(elems)) if mask >> i & 1)
            if all(g.dom.is_measurable(g.preimage(b)) for g in maps):
                good.append(b)
        # atoms of the family of good sets: same-membership patterns
        pattern: dict[tuple, set] = {}
        for x in base:
            pat = tuple(x in b for b in good)
            pattern.setdefault(pat, set()).add(x)
        return FinMeasurableSpace.make(base, pattern.values())
    raise InputError(f"unknown mode {mode!r}")


def factor(space: FinMeasurableSpace, tau: EquivRelation) -> tuple[FinMeasurableSpace, MeasurableMap, list[frozenset]]:
    """Factor space with the final sigma-algebra, the factor map, and the
    invariant measurable sets."""
    if set(tau.base) != set(space.carrier):
        raise InputError("relation base must equal the space carrier")
    index = {x: i for i, x in enumerate(space.carrier)}
    reps = {c: min(c, key=lambda x: index[x]) for c in tau.classes}
    classes = sorted(tau.classes, key=lambda c: index[reps[c]])
    labels = tuple(reps[c] for c in classes)
    table = {x: reps[tau.class_of(x)] for x in space.carrier}
    invariants = [s for s in space.measurable_sets() if tau.is_invariant(s)]
    # final sigma-algebra on the classes: images of invariant measurables
    atoms_family = sorted({frozenset(table[x] for x in s) for s in invariants} - {frozenset()},
                          key=lambda s: sorted(index[x] for x in s))
    pattern: dict[tuple, set] = {}
    for y in labels:
        pat = tuple(y in b for b in atoms_family)
        pattern.setdefault(pat, set()).add(y)
    fspace = FinMeasurableSpace.make(labels, pattern.values())
    rho = MeasurableMap(space, fspace, table)
    key = _key(space)
    return fspace, rho, sorted(invariants, key=key)


def kernel_of(f: MeasurableMap) -> EquivRelation:
    """The fibre partition of a map."""
    fibres: dict[Label, set] = {}
    for x in f.dom.carrier:
        fibres.setdefault(f.table[x], set()).add(x)
    return EquivRelation.make(f.dom.carrier, fibres.values())


def pi_lambda_closure(carrier: Sequence[Label], pi_system: Iterable[Iterable[Label]]) -> list[frozenset]:
    """Smallest family containing an intersection-stable system that is
    closed under complements and disjoint unions.

    Equals the generated sigma-algebra (checked by tests); the finite
    carrier makes "countable" mean "finite".
    """
    carrier = tuple(carrier)
    full = frozenset(carrier)
    sets = [frozenset(p) for p in pi_system]
    for p in sets:
        if not p <= full:
            raise InputError(f"pi-system member {sorted(p, key=repr)} not inside the carrier")
    for p, q in combinations(sets, 2):
        if p & q not in sets:
            raise PreconditionError(
                f"pi-system not intersection-stable: {sorted(p, key=repr)} and {sorted(q, key=repr)}")
    family: set[frozenset] = set(sets) | {full, frozenset()}
    changed = True
    while changed:
        changed = False
        for s in list(family):
            c = full - s
            if c not in family:
                family.add(c)
                changed = True
        for s, t in combinations(list(family), 2):
            if not (s & t):
                u = s | t
                if u not in family:
                    family.add(u)
                    changed = True
    key = _key(FinMeasurableSpace.trivial(carrier))
    return sorted(family, key=key)
