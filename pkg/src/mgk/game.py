"""Game syntax and the quantitative/qualitative game semantics.

The quantitative semantics of a game at an event is represented per
state as the interval of thresholds the state satisfies; angelic choice
and iteration reduce to failure analysis on complements (see
`intervals`), composition with an effectivity head is an expected
interval length.  These reductions are derived, not given, so
`oracle_eval` evaluates the defining set recursions literally over a
rational grid and the acceptance gate accepts the algebra only through
agreement with it.

Strictness is carried faithfully: plain event bounds are non-strict,
expected-value bounds of composition are strict, so `g` and `g;eps`
genuinely differ at boundary thresholds and no epsilon-elision happens
anywhere.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .effectivity import EffectivityFunction, Portfolio, eff_from_kernel
from .intervals import QInterval, choice_combine, series_combine
from .monad import UpperClosedFamily
from .prob import FinMeasure, LinPred, MarkovKernel, as_fraction, dirac, format_fraction
from .space import (FinMeasurableSpace, InputError, Label, PreconditionError)

DEFAULT_STAR_DEPTH = 32


def default_star_depth() -> int:
    value = os.environ.get("MGK_STAR_DEPTH")
    if value is None:
        return DEFAULT_STAR_DEPTH
    try:
        depth = int(value)
    except ValueError:
        raise InputError(f"MGK_STAR_DEPTH must be an integer, got {value!r}") from None
    if depth < 1:
        raise InputError("MGK_STAR_DEPTH must be positive")
    return depth


# --- syntax -------------------------------------------------------------------


@dataclass(frozen=True)
class Atomic:
    name: str


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Dual:
    sub: "Game"


@dataclass(frozen=True)
class Cup:
    left: "Game"
    right: "Game"


@dataclass(frozen=True)
class Cap:
    left: "Game"
    right: "Game"


@dataclass(frozen=True)
class Seq:
    left: "Game"
    right: "Game"


@dataclass(frozen=True)
class Star:
    sub: "Game"


@dataclass(frozen=True)
class Cross:
    sub: "Game"


Game = Atomic | Epsilon | Dual | Cup | Cap | Seq | Star | Cross

_GAME_TOKEN = re.compile(
    r"\s*(?:(?P<rat>\d+/\d+|\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|"
    r"(?P<sym>\^d|\^x|×|ε|∪|∩|[|&;()*<>_]))")


class _GameTokens:
    def __init__(self, text: str):
        self.text = text
        self.items: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _GAME_TOKEN.match(text, pos)
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


def parse_game(text: str) -> Game:
    toks = _GameTokens(text)
    g = _parse_choice(toks)
    if not toks.done():
        _, value, pos = toks.peek()
        raise InputError(f"syntax error at position {pos}: trailing {value!r}")
    return g


def _parse_choice(toks: _GameTokens) -> Game:
    g = _parse_seq(toks)
    while True:
        kind, value, _ = toks.peek()
        if kind == "sym" and value in ("∪", "|"):
            toks.next()
            g = Cup(g, _parse_seq(toks))
        elif kind == "sym" and value in ("∩", "&"):
            toks.next()
            g = Cap(g, _parse_seq(toks))
        else:
            return g


def _parse_seq(toks: _GameTokens) -> Game:
    g = _parse_postfix(toks)
    while True:
        kind, value, _ = toks.peek()
        if kind == "sym" and value == ";":
            toks.next()
            g = Seq(g, _parse_postfix(toks))
        else:
            return g


def _parse_postfix(toks: _GameTokens) -> Game:
    g = _parse_game_atom(toks)
    while True:
        kind, value, _ = toks.peek()
        if kind == "sym" and value == "^d":
            toks.next()
            g = Dual(g)
        elif kind == "sym" and value == "*":
            toks.next()
            g = Star(g)
        elif kind == "sym" and value in ("^x", "×"):
            toks.next()
            g = Cross(g)
        else:
            return g


def _parse_game_atom(toks: _GameTokens) -> Game:
    kind, value, pos = toks.next()
    if kind == "sym" and value == "(":
        g = _parse_choice(toks)
        toks.next(")")
        return g
    if kind == "sym" and value == "ε":
        return Epsilon()
    if kind == "ident":
        return Epsilon() if value == "eps" else Atomic(value)
    raise InputError(f"syntax error at position {pos}: unexpected {value!r}")


def format_game(g: Game) -> str:
    if isinstance(g, Atomic):
        return g.name
    if isinstance(g, Epsilon):
        return "eps"
    if isinstance(g, Dual):
        return f"{_fmt_tight(g.sub)}^d"
    if isinstance(g, Star):
        return f"{_fmt_tight(g.sub)}*"
    if isinstance(g, Cross):
        return f"{_fmt_tight(g.sub)}^x"
    if isinstance(g, Seq):
        left = format_game(g.left) if isinstance(g.left, Seq) else _fmt_seq_arg(g.left)
        return f"{left};{_fmt_seq_arg(g.right)}"
    if isinstance(g, (Cup, Cap)):
        op = "∪" if isinstance(g, Cup) else "∩"
        left = format_game(g.left) if isinstance(g.left, (Cup, Cap)) else format_game(g.left)
        right = g.right
        rtxt = format_game(right)
        if isinstance(right, (Cup, Cap)):
            rtxt = f"({rtxt})"
        return f"{left} {op} {rtxt}"
    raise InputError(f"not a game: {g!r}")


def _fmt_tight(g: Game) -> str:
    txt = format_game(g)
    if isinstance(g, (Cup, Cap, Seq)):
        return f"({txt})"
    return txt


def _fmt_seq_arg(g: Game) -> str:
    txt = format_game(g)
    if isinstance(g, (Cup, Cap, Seq)):
        return f"({txt})"
    return txt


def game_size(g: Game) -> int:
    if isinstance(g, (Atomic, Epsilon)):
        return 1
    if isinstance(g, (Dual, Star, Cross)):
        return 1 + game_size(g.sub)
    return 1 + game_size(g.left) + game_size(g.right)


# --- normalization ------------------------------------------------------------


def normalize(g: Game) -> Game:
    """Eliminate demonic forms and push duals down.

    After normalization: no cap, no cross, no dual over dual or seq;
    choice is flattened into a canonical order, composition associates to
    the right with choice distributed out of its head.  Demonic choice
    and iteration survive only as a dual over a cup or a star; they are
    evaluated through the determinacy rule.
    """
    if isinstance(g, (Atomic, Epsilon)):
        return g
    if isinstance(g, Cap):
        return normalize(Dual(Cup(Dual(g.left), Dual(g.right))))
    if isinstance(g, Cross):
        return normalize(Dual(Star(Dual(g.sub))))
    if isinstance(g, Cup):
        return _norm_cup(normalize(g.left), normalize(g.right))
    if isinstance(g, Seq):
        return _norm_seq(normalize(g.left), normalize(g.right))
    if isinstance(g, Star):
        return Star(normalize(g.sub))
    if isinstance(g, Dual):
        return _norm_dual(normalize(g.sub))
    raise InputError(f"not a game: {g!r}")


def _norm_dual(h: Game) -> Game:
    if isinstance(h, Dual):
        return h.sub
    if isinstance(h, Seq):
        return _norm_seq(_norm_dual(h.left), _norm_dual(h.right))
    return Dual(h)


def _norm_seq(left: Game, right: Game) -> Game:
    if isinstance(left, Seq):
        return _norm_seq(left.left, _norm_seq(left.right, right))
    if isinstance(left, Cup):
        return _norm_cup(_norm_seq(left.left, right), _norm_seq(left.right, right))
    return Seq(left, right)


def _norm_cup(left: Game, right: Game) -> Game:
    parts: list[Game] = []

    def collect(g: Game):
        if isinstance(g, Cup):
            collect(g.left)
            collect(g.right)
        else:
            parts.append(g)

    collect(left)
    collect(right)
    parts.sort(key=format_game)
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Cup(p, out)
    return out


def is_normalized(g: Game) -> bool:
    return normalize(g) == g


# --- models and the quantitative semantics --------------------------------------


@dataclass(frozen=True)
class GameModel:
    """A state space, one effectivity function per atomic game, and
    measurable valuations for the primitive formulas."""

    space: FinMeasurableSpace
    effectivity: Mapping[str, EffectivityFunction]
    valuations: Mapping[str, frozenset]

    def __post_init__(self):
        for name, eff in self.effectivity.items():
            if eff.space != self.space:
                raise InputError(f"effectivity of {name!r} lives on the wrong space")
        for p, v in self.valuations.items():
            if not self.space.is_measurable(v):
                raise InputError(f"valuation of {p!r} is not measurable")

    def portfolio(self, game: Atomic | Epsilon, state: Label) -> Portfolio:
        if isinstance(game, Epsilon):
            return Portfolio.from_measure(dirac(self.space, state))
        if game.name not in self.effectivity:
            raise InputError(f"unknown atomic game {game.name!r}")
        return self.effectivity[game.name](state)


@dataclass(frozen=True)
class ThresholdFunction:
    """Per-atom threshold intervals: evaluating at q yields the validity set."""

    space: FinMeasurableSpace
    intervals: tuple[QInterval, ...]  # aligned with space.atoms
    approx: frozenset = frozenset()   # atom indices carrying lower-bound markers

    def at(self, q) -> frozenset:
        q = as_fraction(q)
        out: frozenset = frozenset()
        for atom, iv in zip(self.space.atoms, self.intervals):
            if iv.contains(q):
                out |= atom
        return out

    def interval_at(self, state: Label) -> QInterval:
        return self.intervals[self.space.atoms.index(self.space.atom_of(state))]

    def lengths(self) -> tuple[Fraction, ...]:
        return tuple(iv.length() for iv in self.intervals)

    def complemented(self) -> "ThresholdFunction":
        return ThresholdFunction(self.space, tuple(iv.complement() for iv in self.intervals), self.approx)

    @property
    def exact(self) -> bool:
        return not self.approx


def threshold_eval(m: GameModel, tau: Game, a: Iterable[Label],
                   star_depth: int | None = None) -> ThresholdFunction:
    """The quantitative semantics of a normalized game at a measurable event,
    as a function of the threshold."""
    if not is_normalized(tau):
        raise PreconditionError(f"game {format_game(tau)} is not normalized")
    a = m.space.require_measurable(a)
    depth = default_star_depth() if star_depth is None else star_depth
    return _eval(m, tau, a, depth)


def _head_floor(m: GameModel, head: Atomic | Epsilon, coeffs: tuple[Fraction, ...]) -> list[Fraction]:
    """Per-atom floor of the head's portfolios at a linear functional."""
    out = []
    for atom in m.space.atoms:
        rep = sorted(atom, key=repr)[0]
        out.append(m.portfolio(head, rep).value_floor(coeffs))
    return out


def _eval(m: GameModel, tau: Game, a: frozenset, depth: int) -> ThresholdFunction:
    space = m.space
    if isinstance(tau, Epsilon):
        # the idle game is the event at every threshold, including zero; the
        # beta formula would add all states at zero, but that unattained
        # boundary poisons every iterated-choice quantifier over it
        return ThresholdFunction(space, tuple(
            QInterval.full() if atom <= a else QInterval.empty() for atom in space.atoms))
    if isinstance(tau, Atomic):
        coeffs = tuple(Fraction(1) if atom <= a else Fraction(0) for atom in space.atoms)
        floors = _head_floor(m, tau, coeffs)
        return ThresholdFunction(space, tuple(QInterval.down(t, closed=True) for t in floors))
    if isinstance(tau, Dual):
        inner = _eval(m, tau.sub, space.complement(a), depth)
        return inner.complemented()
    if isinstance(tau, Cup):
        lhs = _eval(m, tau.left, a, depth)
        rhs = _eval(m, tau.right, a, depth)
        return ThresholdFunction(
            space, tuple(choice_combine(i, j) for i, j in zip(lhs.intervals, rhs.intervals)),
            lhs.approx | rhs.approx)
    if isinstance(tau, Seq):
        return _seq_apply(m, tau.left, _eval(m, tau.right, a, depth), depth)
    if isinstance(tau, Star):
        return _seq_apply(m, tau, _eval(m, Epsilon(), a, depth), depth)
    raise PreconditionError(f"game {format_game(tau)} is not normalized")


def _seq_apply(m: GameModel, head: Game, tail: ThresholdFunction, depth: int) -> ThresholdFunction:
    """Threshold function of head;tail' given the threshold function of the
    continuation.  The continuation enters only through its interval
    lengths (its expected value under a next-step distribution), so the
    event itself is not needed here.
    """
    space = m.space
    if isinstance(head, (Atomic, Epsilon)):
        floors = _head_floor(m, head, tail.lengths())
        return ThresholdFunction(
            space, tuple(QInterval.down(e, closed=False) for e in floors), tail.approx)
    if isinstance(head, Dual):
        return _seq_apply(m, head.sub, tail.complemented(), depth).complemented()
    if isinstance(head, Cup):
        lhs = _seq_apply(m, head.left, tail, depth)
        rhs = _seq_apply(m, head.right, tail, depth)
        return ThresholdFunction(
            space, tuple(choice_combine(i, j) for i, j in zip(lhs.intervals, rhs.intervals)),
            lhs.approx | rhs.approx)
    if isinstance(head, Seq):
        return _seq_apply(m, head.left, _seq_apply(m, head.right, tail, depth), depth)
    if isinstance(head, Star):
        return _star_apply(m, head.sub, tail, depth)
    raise PreconditionError(f"game {format_game(head)} is not normalized")


def _star_apply(m: GameModel, body: Game, tail: ThresholdFunction, depth: int) -> ThresholdFunction:
    """Iterated choice over body^n;tail for n >= 0.

    A threshold fails iff some rational sequence with a small enough sum
    fails every round; the least failing sum is the series of per-round
    complement infima.  Rounds are generated until every atom is decided
    (immune round, or partial sum above one, or a zero-contribution
    fixpoint); atoms still undecided at the depth cap are reported as
    lower bounds.
    """
    space = m.space
    n_atoms = len(space.atoms)
    terms: list[list[tuple[Fraction, bool]]] = [[] for _ in range(n_atoms)]
    done = [False] * n_atoms
    result: list[QInterval | None] = [None] * n_atoms
    totals = [Fraction(0)] * n_atoms
    approx: set[int] = set()
    current = tail
    previous = None
    for _ in range(depth):
        if all(done):
            break
        contributions = [iv.complement_min() for iv in current.intervals]
        for i in range(n_atoms):
            if done[i]:
                continue
            c, att = contributions[i]
            if c is None:
                result[i] = QInterval.full()
                done[i] = True
                continue
            terms[i].append((c, att))
            totals[i] += c
            if totals[i] > 1:
                result[i] = QInterval.full()
                done[i] = True
        if previous is not None and current == previous and all(
                c == 0 for i, (c, _) in enumerate(contributions) if not done[i] and c is not None):
            for i in range(n_atoms):
                if not done[i]:
                    result[i] = series_combine(terms[i])
                    done[i] = True
            break
        previous = current
        current = _seq_apply(m, body, current, depth)
    for i in range(n_atoms):
        if not done[i]:
            result[i] = series_combine(terms[i])
            approx.add(i)
    return ThresholdFunction(space, tuple(result), frozenset(approx) | tail.approx)


# --- game formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class GTop:
    pass


@dataclass(frozen=True)
class GPrim:
    name: str


@dataclass(frozen=True)
class GAnd:
    left: "GameFormula"
    right: "GameFormula"


@dataclass(frozen=True)
class GDiamond:
    game: Game
    q: Fraction
    sub: "GameFormula"


GameFormula = GTop | GPrim | GAnd | GDiamond


def parse_game_formula(text: str) -> GameFormula:
    toks = _GameTokens(text)
    phi = _parse_gconj(toks)
    if not toks.done():
        _, value, pos = toks.peek()
        raise InputError(f"syntax error at position {pos}: trailing {value!r}")
    return phi


def _parse_gconj(toks: _GameTokens) -> GameFormula:
    phi = _parse_gunary(toks)
    while True:
        kind, value, _ = toks.peek()
        if kind == "sym" and value in ("&", "∩"):
            toks.next()
            phi = GAnd(phi, _parse_gunary(toks))
        else:
            return phi


def _parse_gunary(toks: _GameTokens) -> GameFormula:
    kind, value, pos = toks.peek()
    if kind == "sym" and value == "<":
        toks.next()
        game = _parse_choice(toks)
        toks.next(">")
        toks.next("_")
        k, rat, p = toks.next()
        if k != "rat":
            raise InputError(f"syntax error at position {p}: expected a rational")
        q = as_fraction(rat)
        if not 0 <= q <= 1:
            raise InputError(f"syntax error at position {p}: threshold {rat} outside [0, 1]")
        return GDiamond(game, q, _parse_gunary(toks))
    kind, value, pos = toks.next()
    if kind == "sym" and value == "(":
        phi = _parse_gconj(toks)
        toks.next(")")
        return phi
    if kind == "ident":
        return GTop() if value == "T" else GPrim(value)
    raise InputError(f"syntax error at position {pos}: unexpected {value!r}")


def format_game_formula(phi: GameFormula) -> str:
    if isinstance(phi, GTop):
        return "T"
    if isinstance(phi, GPrim):
        return phi.name
    if isinstance(phi, GAnd):
        right = format_game_formula(phi.right)
        if isinstance(phi.right, GAnd):
            right = f"({right})"
        return f"{format_game_formula(phi.left)} & {right}"
    if isinstance(phi, GDiamond):
        sub = format_game_formula(phi.sub)
        if isinstance(phi.sub, GAnd):
            sub = f"({sub})"
        return f"<{format_game(phi.game)}>_{format_fraction(phi.q)} {sub}"
    raise InputError(f"not a formula: {phi!r}")


def eval_game_formula(m: GameModel, phi: GameFormula, star_depth: int | None = None) -> frozenset:
    if isinstance(phi, GTop):
        return m.space.full
    if isinstance(phi, GPrim):
        if phi.name not in m.valuations:
            raise InputError(f"unknown primitive {phi.name!r}")
        return frozenset(m.valuations[phi.name])
    if isinstance(phi, GAnd):
        return eval_game_formula(m, phi.left, star_depth) & eval_game_formula(m, phi.right, star_depth)
    if isinstance(phi, GDiamond):
        sub = eval_game_formula(m, phi.sub, star_depth)
        tf = threshold_eval(m, normalize(phi.game), sub, star_depth)
        return tf.at(phi.q)
    raise InputError(f"not a formula: {phi!r}")


# --- qualitative semantics -------------------------------------------------------


def qualitative_effect(frame: Mapping[str, Mapping[Label, UpperClosedFamily]],
                       states: Iterable[Label], tau: Game, a: Iterable[Label]) -> frozenset:
    """The classical set semantics over upper-closed neighborhood frames."""
    states = tuple(states)
    a = frozenset(a)
    if not a <= set(states):
        raise InputError("event outside the state set")

    def effect(g: Game, target: frozenset) -> frozenset:
        if isinstance(g, Epsilon):
            return target
        if isinstance(g, Atomic):
            if g.name not in frame:
                raise InputError(f"unknown atomic game {g.name!r}")
            fam = frame[g.name]
            return frozenset(x for x in states if fam[x].contains(target))
        if isinstance(g, Dual):
            return frozenset(states) - effect(g.sub, frozenset(states) - target)
        if isinstance(g, Cup):
            return effect(g.left, target) | effect(g.right, target)
        if isinstance(g, Seq):
            return effect(g.left, effect(g.right, target))
        if isinstance(g, Star):
            # union of all iterates; iterate values cycle in a finite lattice
            union = frozenset(target)
            value = frozenset(target)
            seen = {value}
            while True:
                value = effect(g.sub, value)
                if value in seen:
                    return union
                seen.add(value)
                union |= value
        raise PreconditionError(f"game {format_game(g)} is not normalized")

    return effect(normalize(tau) if not is_normalized(tau) else tau, a)


# --- the literal-set oracle ------------------------------------------------------


def _grid(denominator: int) -> list[Fraction]:
    points = {Fraction(k, d) for d in range(1, denominator + 1) for k in range(d + 1)}
    return sorted(points)


class OracleCache:
    """Shared memo tables so sweeps over many thresholds stay affordable."""

    def __init__(self):
        self.sets: dict = {}
        self.min_fail: dict = {}


def oracle_eval(m: GameModel, tau: Game, a: Iterable[Label], q,
                grid_denominator: int = 16, depth: int = 8,
                cache: OracleCache | None = None) -> frozenset:
    """Evaluate the defining set recursions of the game semantics directly.

    Choice intersects over concrete rational splits with bounded
    denominators, iteration over concrete sequences truncated to `depth`
    rounds, and composition integrates the continuation's step function
    over the grid's cell midpoints.  Split coordinates range over
    independent sets, so the intersections are evaluated through each
    state's least failing grid threshold per operand; this is the same
    quantifier, not an interval-algebra shortcut, and the literal pair
    loop is replayed against it in the test suite.  No part of
    `threshold_eval`'s algebra is used anywhere.
    """
    space = m.space
    a = space.require_measurable(a)
    q = as_fraction(q)
    grid = _grid(grid_denominator)
    cache = cache if cache is not None else OracleCache()
    memo = cache.sets

    def beta_set(head: Atomic | Epsilon, event: frozenset, bound: Fraction) -> frozenset:
        if isinstance(head, Epsilon):
            return event  # the idle game is the event at every threshold
        coeffs = tuple(Fraction(1) if atom <= event else Fraction(0) for atom in space.atoms)
        out: frozenset = frozenset()
        for atom in space.atoms:
            rep = sorted(atom, key=repr)[0]
            pred = LinPred(space, coeffs, bound, strict=False)
            if m.portfolio(head, rep).membership(pred):
                out |= atom
        return out

    def expected_set(head: Atomic | Epsilon, tail: Game, event: frozenset, bound: Fraction) -> frozenset:
        cells = grid_denominator
        coeffs = [Fraction(0)] * len(space.atoms)
        for k in range(cells):
            midpoint = Fraction(2 * k + 1, 2 * cells)
            sk = rec(tail, event, midpoint)
            for i, atom in enumerate(space.atoms):
                if atom <= sk:
                    coeffs[i] += Fraction(1, cells)
        pred = LinPred(space, tuple(coeffs), bound, strict=True)
        out: frozenset = frozenset()
        for atom in space.atoms:
            rep = sorted(atom, key=repr)[0]
            if m.portfolio(head, rep).membership(pred):
                out |= atom
        return out

    def min_fail(g: Game, event: frozenset) -> dict:
        """Per state, the least grid threshold the state fails, if any."""
        key = (g, event, grid_denominator, depth)
        if key not in cache.min_fail:
            table = {}
            for s in space.carrier:
                table[s] = None
                for v in grid:
                    if s not in rec(g, event, v):
                        table[s] = v
                        break
            cache.min_fail[key] = table
        return cache.min_fail[key]

    def choice_set(left: Game, right: Game, event: frozenset, bound: Fraction) -> frozenset:
        t1, t2 = min_fail(left, event), min_fail(right, event)
        excluded = {s for s in space.carrier
                    if t1[s] is not None and t2[s] is not None and t1[s] + t2[s] <= bound}
        return space.full - frozenset(excluded)

    def star_set(body: Game, tail: Game, event: frozenset, bound: Fraction) -> frozenset:
        games = [tail]
        for _ in range(depth - 1):
            games.append(Seq(body, games[-1]))
        excluded = set()
        for s in space.carrier:
            total = Fraction(0)
            feasible = True
            for g in games:
                c = min_fail(g, event)[s]
                if c is None:
                    feasible = False
                    break
                total += c
                if total > bound:
                    feasible = False
                    break
            if feasible and total <= bound:
                excluded.add(s)
        return space.full - frozenset(excluded)

    def rec(g: Game, event: frozenset, bound: Fraction) -> frozenset:
        key = (g, event, bound, grid_denominator, depth)
        if key in memo:
            return memo[key]
        if isinstance(g, (Atomic, Epsilon)):
            out = beta_set(g, event, bound)
        elif isinstance(g, Cap):
            # demonic choice by its defining identity, not by normalize
            out = rec(Dual(Cup(Dual(g.left), Dual(g.right))), event, bound)
        elif isinstance(g, Cross):
            out = rec(Dual(Star(Dual(g.sub))), event, bound)
        elif isinstance(g, Dual):
            out = space.full - rec(g.sub, space.full - event, bound)
        elif isinstance(g, Cup):
            out = choice_set(g.left, g.right, event, bound)
        elif isinstance(g, Star):
            out = star_set(g.sub, Epsilon(), event, bound)
        elif isinstance(g, Seq):
            head, tail = g.left, g.right
            if isinstance(head, (Atomic, Epsilon)):
                out = expected_set(head, tail, event, bound)
            elif isinstance(head, Dual):
                out = space.full - rec(Seq(head.sub, Dual(tail)), space.full - event, bound)
            elif isinstance(head, Cup):
                out = rec(Cup(Seq(head.left, tail), Seq(head.right, tail)), event, bound)
            elif isinstance(head, Seq):
                out = rec(Seq(head.left, Seq(head.right, tail)), event, bound)
            elif isinstance(head, Star):
                out = star_set(head.sub, tail, event, bound)
            elif isinstance(head, Cap):
                out = rec(Seq(Dual(Cup(Dual(head.left), Dual(head.right))), tail), event, bound)
            elif isinstance(head, Cross):
                out = rec(Seq(Dual(Star(Dual(head.sub))), tail), event, bound)
            else:
                raise PreconditionError(f"game {format_game(g)} is not normalized")
        else:
            raise PreconditionError(f"game {format_game(g)} is not normalized")
        memo[key] = out
        return out

    return rec(tau, a, q)


def kripke_game_model(kernels: Mapping[str, "MarkovKernel"], space: FinMeasurableSpace,
                      valuations: Mapping[str, frozenset]) -> GameModel:
    """A game model whose atomic games are generated by Markov kernels."""
    return GameModel(space, {name: eff_from_kernel(k) for name, k in kernels.items()},
                     dict(valuations))
