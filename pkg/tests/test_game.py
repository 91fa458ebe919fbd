import itertools
import random
from fractions import Fraction as F

import pytest

from mgk import (Coalgebra, FinMeasurableSpace, FinMeasure, InputError,
                 MarkovKernel, PreconditionError, UpperClosedFamily, dirac,
                 kleisli_compose)
from mgk.game import (Atomic, Cap, Cross, Cup, Dual, Epsilon, GDiamond, GPrim,
                      GTop, Seq, Star, eval_game_formula, format_game,
                      format_game_formula, game_size, is_normalized,
                      kripke_game_model, normalize, oracle_eval, parse_game,
                      parse_game_formula, qualitative_effect, threshold_eval)
from mgk.intervals import QInterval
from mgk.logic import KripkeModel, parse_formula, validity_set
from conftest import rand_kernel, rand_space


def model_3():
    space = FinMeasurableSpace.discrete(["x", "y", "z"])
    g = MarkovKernel.from_state_rows(space, space, {
        "x": {"x": "1/2", "y": "1/4", "z": "1/4"},
        "y": {"y": "3/4", "z": "1/4"},
        "z": {"z": 1}})
    h = MarkovKernel.from_state_rows(space, space, {
        "x": {"y": 1},
        "y": {"x": "1/2", "z": "1/2"},
        "z": {"x": "1/4", "z": "3/4"}})
    return kripke_game_model({"g": g, "h": h}, space, {"p": frozenset({"z"})}), g, h


def random_game(rng, depth, atoms=("g", "h"), with_demonic=True):
    roll = rng.random()
    if depth == 0 or roll < 0.3:
        return rng.choice([Atomic(atoms[0]), Atomic(atoms[-1]), Epsilon()])
    if roll < 0.45:
        return Cup(random_game(rng, depth - 1, atoms), random_game(rng, depth - 1, atoms))
    if roll < 0.55 and with_demonic:
        return Cap(random_game(rng, depth - 1, atoms), random_game(rng, depth - 1, atoms))
    if roll < 0.7:
        return Seq(random_game(rng, depth - 1, atoms), random_game(rng, depth - 1, atoms))
    if roll < 0.8:
        return Dual(random_game(rng, depth - 1, atoms))
    if roll < 0.92 or not with_demonic:
        return Star(random_game(rng, depth - 1, atoms))
    return Cross(random_game(rng, depth - 1, atoms))


class TestParser:
    def test_composition_binds_tighter_than_choice(self):
        assert parse_game("g;h ∪ k") == Cup(Seq(Atomic("g"), Atomic("h")), Atomic("k"))
        assert parse_game("g;h | k") == Cup(Seq(Atomic("g"), Atomic("h")), Atomic("k"))

    def test_double_dual_parses(self):
        assert parse_game("((g^d)^d)") == Dual(Dual(Atomic("g")))

    def test_postfix_chain(self):
        assert parse_game("g*^d") == Dual(Star(Atomic("g")))
        assert parse_game("g^x") == Cross(Atomic("g"))
        assert parse_game("g×") == Cross(Atomic("g"))

    def test_epsilon_spellings(self):
        assert parse_game("eps") == Epsilon()
        assert parse_game("ε") == Epsilon()

    def test_demonic_choice(self):
        assert parse_game("g ∩ h") == Cap(Atomic("g"), Atomic("h"))
        assert parse_game("g & h") == Cap(Atomic("g"), Atomic("h"))

    def test_game_formula(self):
        phi = parse_game_formula("<g*;h>_1/2 p")
        assert phi == GDiamond(Seq(Star(Atomic("g")), Atomic("h")), F(1, 2), GPrim("p"))
        assert parse_game_formula(format_game_formula(phi)) == phi

    def test_round_trip_on_random_games(self):
        rng = random.Random(0)
        for _ in range(300):
            g = random_game(rng, 3)
            assert parse_game(format_game(g)) == g

    def test_error_positions(self):
        with pytest.raises(InputError) as err:
            parse_game("g ;; h")
        assert "position" in str(err.value)


class TestNormalize:
    def test_double_dual_vanishes(self):
        assert normalize(parse_game("(g^d)^d")) == Atomic("g")

    def test_cap_becomes_dual_over_cup_of_duals(self):
        assert normalize(parse_game("g ∩ h")) == \
            Dual(Cup(Dual(Atomic("g")), Dual(Atomic("h"))))

    def test_right_distribution(self):
        assert normalize(parse_game("(g ∪ h);k")) == \
            Cup(Seq(Atomic("g"), Atomic("k")), Seq(Atomic("h"), Atomic("k")))

    def test_cross_unfolds_through_star(self):
        assert normalize(parse_game("g^x")) == Dual(Star(Dual(Atomic("g"))))

    def test_dual_distributes_over_composition(self):
        assert normalize(parse_game("(g;h)^d")) == Seq(Dual(Atomic("g")), Dual(Atomic("h")))

    def test_choice_is_flattened_and_ordered(self):
        assert normalize(parse_game("h ∪ g")) == normalize(parse_game("g ∪ h"))
        assert normalize(parse_game("(g ∪ h) ∪ k")) == normalize(parse_game("g ∪ (h ∪ k)"))

    def test_no_cap_or_cross_survives(self):
        def clean(t):
            if isinstance(t, (Cap, Cross)):
                return False
            if isinstance(t, Dual):
                return not isinstance(t.sub, (Dual, Seq, Cap, Cross)) and clean(t.sub)
            if isinstance(t, (Cup, Seq)):
                return clean(t.left) and clean(t.right)
            if isinstance(t, Star):
                return clean(t.sub)
            return True

        rng = random.Random(1)
        for _ in range(300):
            assert clean(normalize(random_game(rng, 4)))

    def test_idempotent(self):
        rng = random.Random(2)
        for _ in range(300):
            g = normalize(random_game(rng, 4))
            assert normalize(g) == g
            assert is_normalized(g)

    def test_rewrite_steps_preserve_the_oracle_semantics(self):
        m, _, _ = model_3()
        space = m.space
        g, h, e = Atomic("g"), Atomic("h"), Epsilon()
        instances = [
            Dual(Dual(g)),
            Cap(g, h),
            Cross(g),
            Seq(Cup(g, h), g),
            Dual(Seq(g, h)),
            Dual(Cup(g, Dual(h))),
            Cap(Seq(g, e), h),
        ]
        qs = [F(k, 4) for k in range(5)]
        for raw in instances:
            normal = normalize(raw)
            for a in (frozenset({"z"}), frozenset({"x", "y"})):
                for q in qs:
                    assert oracle_eval(m, raw, a, q, 8, 5) == oracle_eval(m, normal, a, q, 8, 5), \
                        (format_game(raw), format_game(normal), a, q)


class TestThresholdEval:
    def test_epsilon_is_the_event_at_every_threshold(self):
        # the displayed equality for the idle game, adopted at q = 0 as well:
        # atomic games keep the beta formula (everything at zero), epsilon
        # does not, or iterated choice over it degenerates off the grid
        m, _, _ = model_3()
        a = frozenset({"z"})
        tf = threshold_eval(m, Epsilon(), a)
        for q in (F(0), F(1, 8), F(1, 2), F(1)):
            assert tf.at(q) == a

    def test_atomic_games_keep_the_beta_formula_at_zero(self):
        m, _, _ = model_3()
        tf = threshold_eval(m, Atomic("g"), frozenset({"z"}))
        assert tf.at(0) == m.space.full

    def test_atomic_unfolds_the_kernel_mass(self):
        m, g, _ = model_3()
        a = frozenset({"z"})
        tf = threshold_eval(m, Atomic("g"), a)
        for q in (F(0), F(1, 4), F(1, 2), F(3, 4), F(1)):
            assert tf.at(q) == frozenset(s for s in m.space.carrier if g(s)(a) >= q)

    def test_choice_caps_the_sum(self):
        m, g, h = model_3()
        a = frozenset({"z"})
        tf = threshold_eval(m, normalize(Cup(Atomic("g"), Atomic("h"))), a)
        # per state the reachable mass adds: x: 1/4 + 0, y: 1/4 + 1/2, z: 1 + 3/4
        assert tf.interval_at("x") == QInterval.down(F(1, 4), True)
        assert tf.interval_at("y") == QInterval.down(F(3, 4), True)
        assert tf.interval_at("z") == QInterval.full()

    def test_choice_against_a_brute_pair_enumeration(self):
        m, g, h = model_3()
        a = frozenset({"y", "z"})
        tf = threshold_eval(m, normalize(Cup(Atomic("g"), Atomic("h"))), a)
        grid = sorted({F(k, d) for d in range(1, 17) for k in range(d + 1)})
        for q in [F(k, 8) for k in range(9)]:
            expected = set(m.space.carrier)
            for a1 in grid:
                for a2 in grid:
                    if a1 + a2 > q:
                        continue
                    hit = {s for s in m.space.carrier
                           if g(s)(a) >= a1 or h(s)(a) >= a2}
                    expected &= hit
            assert tf.at(q) == frozenset(expected)

    def test_composition_is_strict_kleisli_mass(self):
        m, g, h = model_3()
        a = frozenset({"z"})
        tf = threshold_eval(m, Seq(Atomic("g"), Atomic("h")), a)
        composed = kleisli_compose(h, g)
        for q in [F(k, 16) for k in range(17)]:
            assert tf.at(q) == frozenset(s for s in m.space.carrier if composed(s)(a) > q)

    def test_sequencing_with_epsilon_is_strict(self):
        m, g, _ = model_3()
        a = frozenset({"z"})
        closed = threshold_eval(m, Atomic("g"), a)
        opened = threshold_eval(m, Seq(Atomic("g"), Epsilon()), a)
        assert closed.interval_at("x") == QInterval.down(F(1, 4), True)
        assert opened.interval_at("x") == QInterval.down(F(1, 4), False)

    def test_determinacy_for_atomic_duals(self):
        m, g, _ = model_3()
        for a in (frozenset({"z"}), frozenset({"x", "y"}), frozenset()):
            plain = threshold_eval(m, Atomic("g"), m.space.complement(a))
            dual = threshold_eval(m, Dual(Atomic("g")), a)
            for q in [F(k, 8) for k in range(9)]:
                assert dual.at(q) == m.space.full - plain.at(q)

    def test_monotone_in_the_threshold_for_dual_free_games(self):
        m, _, _ = model_3()
        rng = random.Random(3)
        for _ in range(60):
            tau = normalize(random_game(rng, 3, with_demonic=False))
            if any(isinstance(t, (Dual, Cap, Cross)) for t in _walk(tau)):
                continue
            a = frozenset({"z"}) if rng.random() < 0.5 else frozenset({"x", "z"})
            tf = threshold_eval(m, tau, a)
            qs = [F(k, 8) for k in range(9)]
            for q1, q2 in zip(qs, qs[1:]):
                assert tf.at(q2) <= tf.at(q1)

    def test_star_reaches_certainty_on_an_absorbing_target(self):
        m, g, _ = model_3()
        # g eventually drives everything into the absorbing state z
        tf = threshold_eval(m, Star(Atomic("g")), frozenset({"z"}))
        assert tf.exact
        for s in m.space.carrier:
            assert tf.interval_at(s) == QInterval.full()

    def test_star_on_an_unreachable_target_is_empty(self):
        space = FinMeasurableSpace.discrete(["x", "y"])
        k = MarkovKernel.identity(space)
        m = kripke_game_model({"g": k}, space, {})
        tf = threshold_eval(m, Star(Atomic("g")), frozenset({"y"}))
        assert tf.exact
        assert tf.interval_at("y") == QInterval.full()
        # from x the target is never hit at any threshold, zero included
        assert tf.interval_at("x") == QInterval.empty()

    def test_unnormalized_input_rejected(self):
        m, _, _ = model_3()
        with pytest.raises(PreconditionError):
            threshold_eval(m, Cap(Atomic("g"), Atomic("h")), frozenset({"z"}))

    def test_star_depth_cap_marks_lower_bounds(self):
        space = FinMeasurableSpace.discrete(["x", "y"])
        k = MarkovKernel.from_state_rows(space, space, {
            "x": {"x": "3/4", "y": "1/4"}, "y": {"x": "3/4", "y": "1/4"}})
        m = kripke_game_model({"g": k}, space, {})
        tf = threshold_eval(m, Star(Atomic("g")), frozenset({"y"}), star_depth=2)
        assert not tf.exact
        full = threshold_eval(m, Star(Atomic("g")), frozenset({"y"}), star_depth=64)
        for s in space.carrier:
            assert tf.interval_at(s).hi <= full.interval_at(s).hi


def _walk(g):
    yield g
    if isinstance(g, (Cup, Cap, Seq)):
        yield from _walk(g.left)
        yield from _walk(g.right)
    elif isinstance(g, (Dual, Star, Cross)):
        yield from _walk(g.sub)


class TestGameFormulas:
    def test_epsilon_diamond_is_the_valuation(self):
        m, _, _ = model_3()
        for q in ("1/8", "1/2", "1"):
            assert eval_game_formula(m, parse_game_formula(f"<eps>_{q} p")) == frozenset({"z"})

    def test_total_mass_makes_top_certain(self):
        m, _, _ = model_3()
        for q in ("0", "1/2", "1"):
            assert eval_game_formula(m, parse_game_formula(f"<g>_{q} T")) == m.space.full

    def test_kripke_reduction_matches_the_modal_logic(self):
        rng = random.Random(4)
        for _ in range(40):
            space = rand_space(rng, 4, allow_coarse=True)
            k = rand_kernel(rng, space)
            v = frozenset().union(*(a for a in space.atoms if rng.random() < 0.5)) \
                if len(space.atoms) > 1 else space.full
            gm = kripke_game_model({"g": k}, space, {"p": frozenset(v)})
            km = KripkeModel(space, {"g": k}, {"p": frozenset(v)})
            q = F(rng.randint(0, 8), 8)
            game_set = eval_game_formula(gm, GDiamond(Atomic("g"), q, GPrim("p")))
            modal_set = validity_set(km, parse_formula(f"<g>_{q.numerator}/{q.denominator} p")) \
                if q.denominator > 1 else validity_set(km, parse_formula(f"<g>_{q.numerator} p"))
            assert game_set == modal_set


class TestQualitative:
    def base_frame(self):
        states = ("a", "b")
        up = UpperClosedFamily.principal
        frame = {
            "g": {"a": up(states, ["b"]), "b": up(states, ["b"])},
            "h": {"a": up(states, ["a"]), "b": UpperClosedFamily.from_sets(states, [["a"], ["b"]])},
        }
        return frame, states

    def test_choice_is_union(self):
        frame, states = self.base_frame()
        for a in (frozenset(), frozenset({"a"}), frozenset({"b"}), frozenset(states)):
            lhs = qualitative_effect(frame, states, Cup(Atomic("g"), Atomic("h")), a)
            rhs = qualitative_effect(frame, states, Atomic("g"), a) | \
                qualitative_effect(frame, states, Atomic("h"), a)
            assert lhs == rhs

    def test_point_families_act_like_identity(self):
        states = ("a", "b")
        frame = {"i": {s: UpperClosedFamily.point(states, s) for s in states}}
        for a in (frozenset(), frozenset({"a"}), frozenset(states)):
            assert qualitative_effect(frame, states, Atomic("i"), a) == a

    def test_star_computes_reachability(self):
        states = ("a", "b", "c")
        # a -> b -> c -> c as principal upward families over the successor
        frame = {"t": {"a": UpperClosedFamily.principal(states, ["b"]),
                       "b": UpperClosedFamily.principal(states, ["c"]),
                       "c": UpperClosedFamily.principal(states, ["c"])}}
        got = qualitative_effect(frame, states, Star(Atomic("t")), frozenset({"c"}))
        # every state reaches c
        assert got == frozenset(states)
        got = qualitative_effect(frame, states, Star(Atomic("t")), frozenset({"a"}))
        assert got == frozenset({"a"})

    def test_dual_is_complement_through_the_complement_event(self):
        frame, states = self.base_frame()
        for a in (frozenset({"a"}), frozenset({"b"})):
            lhs = qualitative_effect(frame, states, Dual(Atomic("g")), a)
            rhs = frozenset(states) - qualitative_effect(frame, states, Atomic("g"),
                                                         frozenset(states) - a)
            assert lhs == rhs


class TestStarTailConventions:
    def test_free_and_zero_tail_truncations_compared(self, capsys):
        """The iteration quantifier's sequences could either leave entries
        beyond the truncation unconstrained (implemented) or pin them to
        zero.  On tiny instances, compute both and record where they differ;
        no intent is asserted, only the implemented convention's agreement
        with the exact algebra."""
        space = FinMeasurableSpace.discrete(["x", "y"])
        k = MarkovKernel.from_state_rows(space, space, {
            "x": {"x": "1/2", "y": "1/2"}, "y": {"y": 1}})
        m = kripke_game_model({"g": k}, space, {})
        tau = Star(Atomic("g"))
        grid = sorted({F(i, d) for d in range(1, 9) for i in range(d + 1)})
        depth = 4
        findings = []
        for a in (frozenset({"y"}), frozenset({"x"})):
            games = [Epsilon()]
            for _ in range(depth - 1):
                games.append(Seq(Atomic("g"), games[-1]))
            tf = threshold_eval(m, tau, a)
            for q in [F(i, 4) for i in range(5)]:
                free = oracle_eval(m, tau, a, q, 8, depth)
                zero_tail = set()
                for s in space.carrier:
                    total, feasible = F(0), True
                    for g in games:
                        c = next((v for v in grid if s not in oracle_eval(m, g, a, v, 8, depth)),
                                 None)
                        if c is None:
                            feasible = False
                            break
                        total += c
                    # a zero tail must also fail every later round at zero
                    tail_game = Seq(Atomic("g"), games[-1])
                    if feasible and total <= q and s not in oracle_eval(m, tail_game, a, F(0), 8, depth):
                        zero_tail.add(s)
                zero = space.full - frozenset(zero_tail)
                findings.append((sorted(a), str(q), sorted(free), sorted(zero),
                                 sorted(tf.at(q))))
        agree = [f for f in findings if f[2] == f[3]]
        print(f"star tail conventions: {len(agree)}/{len(findings)} coincide on this instance")
        for f in findings:
            if f[2] != f[3]:
                print("  differ:", f)
        # the implemented (free-tail) convention matches the exact algebra here
        for _, _, free, _, derived in findings:
            assert free == derived


class TestOracle:
    def test_atomic_games_agree_exactly(self):
        m, g, _ = model_3()
        for a in (frozenset({"z"}), frozenset({"x", "y"})):
            tf = threshold_eval(m, Atomic("g"), a)
            for q in [F(k, 8) for k in range(9)]:
                assert oracle_eval(m, Atomic("g"), a, q, 4, 3) == tf.at(q)

    def test_choice_oracle_contains_the_derived_set_at_coarse_grids(self):
        m, _, _ = model_3()
        tau = normalize(parse_game("g ∪ h"))
        a = frozenset({"y", "z"})
        tf = threshold_eval(m, tau, a)
        for q in [F(k, 4) for k in range(5)]:
            coarse = oracle_eval(m, tau, a, q, 4, 3)
            fine = oracle_eval(m, tau, a, q, 16, 3)
            assert coarse >= fine >= tf.at(q)

    def test_composition_grid_integral_is_exact_here(self):
        m, _, _ = model_3()
        tau = Seq(Atomic("g"), Atomic("h"))
        a = frozenset({"z"})
        tf = threshold_eval(m, tau, a)
        for q in [F(k, 8) for k in range(9)]:
            assert oracle_eval(m, tau, a, q, 16, 4) == tf.at(q)

    def test_choice_least_failing_split_equals_the_literal_pair_loop(self):
        # the oracle evaluates the split intersection through each state's
        # least failing grid threshold; replay the literal quantifier here
        from mgk.game import OracleCache
        m, _, _ = model_3()
        grid = sorted({F(k, d) for d in range(1, 9) for k in range(d + 1)})
        rng = random.Random(5)
        cache = OracleCache()
        for _ in range(20):
            left = random_game(rng, 1, with_demonic=False)
            right = random_game(rng, 1, with_demonic=False)
            tau = Cup(left, right)
            a = frozenset({"z"}) if rng.random() < 0.5 else frozenset({"x", "z"})
            for q in [F(k, 4) for k in range(5)]:
                literal = set(m.space.carrier)
                for a1 in grid:
                    if a1 > q:
                        continue
                    for a2 in grid:
                        if a1 + a2 > q:
                            continue
                        literal &= set(oracle_eval(m, left, a, a1, 8, 4, cache)) | \
                            set(oracle_eval(m, right, a, a2, 8, 4, cache))
                assert oracle_eval(m, tau, a, q, 8, 4, cache) == frozenset(literal)
