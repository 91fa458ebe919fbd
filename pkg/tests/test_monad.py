import random
from fractions import Fraction as F
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgk import (DISCRETE_PROB, INSTANCES, POWERSET, UPPER_CLOSED,
                 FinMeasurableSpace, FinMeasure, MarkovKernel, MeasurableMap,
                 UpperClosedFamily, check_monad_laws, functor_action,
                 image_measure, kleisli_compose_generic, lift_discrete_prob,
                 lift_kernel, lift_powerset, lift_upper)
from mgk.monad import direct_functor_action, _subsets


class TestUpperClosedFamily:
    @given(st.lists(st.sets(st.sampled_from("abcd")), max_size=5))
    @settings(max_examples=80)
    def test_normalization_is_idempotent_and_membership_preserving(self, gens):
        base = "abcd"
        fam = UpperClosedFamily.from_sets(base, gens)
        again = UpperClosedFamily.from_sets(base, fam.generators)
        assert fam == again
        for h in _subsets(base):
            assert fam.contains(h) == any(frozenset(g) <= h for g in gens)

    def test_upward_closure(self):
        fam = UpperClosedFamily.from_sets("abc", [{"a"}])
        assert fam.contains({"a"}) and fam.contains({"a", "b"}) and not fam.contains({"b"})

    def test_antichain_enforced(self):
        fam = UpperClosedFamily.from_sets("abc", [{"a"}, {"a", "b"}])
        assert fam.generators == frozenset({frozenset("a")})


class TestLiftPowerset:
    def test_empty_set_maps_to_empty(self):
        f = {"a": frozenset("b"), "b": frozenset("ab")}
        assert lift_powerset(f)(frozenset()) == frozenset()

    def test_unit_lifts_to_identity(self):
        base = ("a", "b", "c")
        eta = {x: frozenset([x]) for x in base}
        star = lift_powerset(eta)
        for s in _subsets(base):
            assert star(s) == s

    def test_union_by_hand(self):
        f = {"a": frozenset("b"), "b": frozenset("ab")}
        assert lift_powerset(f)(frozenset("ab")) == frozenset("ab")


class TestLiftUpper:
    def test_unit_lifts_to_identity(self):
        base = ("a", "b")
        eta = {x: UpperClosedFamily.point(base, x) for x in base}
        star = lift_upper(eta, base)
        for gens in ([], [[]], [["a"]], [["a"], ["b"]], [["a", "b"]]):
            fam = UpperClosedFamily.from_sets(base, gens)
            assert star(fam) == fam

    def test_full_family_is_preserved(self):
        base = ("a", "b")
        f = {x: UpperClosedFamily.principal(base, [x]) for x in base}
        star = lift_upper(f, base)
        assert star(UpperClosedFamily.full(base)) == UpperClosedFamily.full(base)

    def test_two_element_enumeration(self):
        base = ("a", "b")
        f = {"a": UpperClosedFamily.principal(base, ["a"]),
             "b": UpperClosedFamily.principal(base, ["b"])}
        c = UpperClosedFamily.principal(base, ["a", "b"])
        # enumerate all four subsets B: {x : B in f(x)} must itself contain {a, b}
        assert lift_upper(f, base)(c) == UpperClosedFamily.principal(base, ["a", "b"])


class TestLiftDiscreteProb:
    def test_lift_of_point_masses_acts_like_the_map(self):
        f = {"a": {"x": F(1)}, "b": {"y": F(1)}}
        star = lift_discrete_prob(f)
        assert star({"a": F(1)}) == {"x": F(1)}

    def test_pushforward_formula(self):
        f = {"a": {"x": F(1, 2), "y": F(1, 2)}, "b": {"y": F(1)}}
        star = lift_discrete_prob(f)
        out = star({"a": F(1, 3), "b": F(2, 3)})
        assert out == {"x": F(1, 6), "y": F(5, 6)}

    def test_total_mass_preserved(self):
        rng = random.Random(0)
        for _ in range(100):
            xs = tuple(f"x{i}" for i in range(rng.randint(1, 4)))
            ys = tuple(f"y{i}" for i in range(rng.randint(1, 4)))
            f = {x: DISCRETE_PROB.rand_value(rng, ys) for x in xs}
            p = DISCRETE_PROB.rand_value(rng, xs)
            assert sum(lift_discrete_prob(f)(p).values()) == 1

    def test_agrees_with_kernel_lifting_on_discrete_spaces(self):
        rng = random.Random(1)
        for _ in range(50):
            labels = tuple(f"s{i}" for i in range(rng.randint(1, 4)))
            space = FinMeasurableSpace.discrete(labels)
            f = {x: DISCRETE_PROB.rand_value(rng, labels) for x in labels}
            kernel = MarkovKernel(space, space, {
                x: FinMeasure.from_state_weights(space, f[x]) for x in labels})
            p = DISCRETE_PROB.rand_value(rng, labels)
            mu = FinMeasure.from_state_weights(space, p)
            lifted = lift_discrete_prob(f)(p)
            assert lift_kernel(kernel)(mu) == FinMeasure.from_state_weights(space, lifted)


class TestMonadLaws:
    @pytest.mark.parametrize("name", sorted(INSTANCES))
    def test_laws_hold_on_seeded_samples(self, name):
        report = check_monad_laws(INSTANCES[name], trials=60, seed=42)
        assert report.passed, "\n".join(report.lines())

    def test_reports_are_seed_deterministic(self):
        a = check_monad_laws(POWERSET, trials=20, seed=7)
        b = check_monad_laws(POWERSET, trials=20, seed=7)
        assert a.lines() == b.lines()

    def test_broken_instance_is_reported_verbatim(self):
        # an eta that is not a unit must produce named counterexamples
        class Broken(type(POWERSET)):
            def eta(self, base, x):
                return frozenset(base)

        report = check_monad_laws(Broken("powerset"), trials=10, seed=0)
        assert not report.passed
        assert any("eta" in f.law for f in report.failures)


class TestFunctorAction:
    @pytest.mark.parametrize("name", sorted(INSTANCES))
    def test_identity_maps_to_identity(self, name):
        inst = INSTANCES[name]
        rng = random.Random(3)
        for _ in range(20):
            base = inst.rand_object(rng, 4)
            act = functor_action(inst, {x: x for x in base}, base, base)
            value = inst.rand_value(rng, base)
            assert inst.equal(act(value), value)

    @pytest.mark.parametrize("name", sorted(INSTANCES))
    def test_matches_the_direct_definition(self, name):
        inst = INSTANCES[name]
        rng = random.Random(4)
        for _ in range(25):
            dom = inst.rand_object(rng, 4)
            cod = inst.rand_object(rng, 4)
            f = {x: rng.choice(cod) for x in dom}
            derived = functor_action(inst, f, dom, cod)
            direct = direct_functor_action(inst, f, dom, cod)
            value = inst.rand_value(rng, dom)
            assert inst.equal(derived(value), direct(value))

    def test_powerset_action_is_direct_image_on_all_subsets(self):
        dom, cod = ("a", "b", "c"), ("x", "y")
        f = {"a": "x", "b": "x", "c": "y"}
        act = functor_action(POWERSET, f, dom, cod)
        for s in _subsets(dom):
            assert act(s) == frozenset(f[x] for x in s)

    def test_discrete_prob_action_is_the_pushforward(self):
        rng = random.Random(5)
        dom = ("a", "b", "c")
        cod = ("x", "y")
        space_d, space_c = FinMeasurableSpace.discrete(dom), FinMeasurableSpace.discrete(cod)
        f = {"a": "x", "b": "y", "c": "y"}
        act = functor_action(DISCRETE_PROB, f, dom, cod)
        for _ in range(20):
            p = DISCRETE_PROB.rand_value(rng, dom)
            mu = FinMeasure.from_state_weights(space_d, p)
            pushed = image_measure(MeasurableMap(space_d, space_c, f), mu)
            assert FinMeasure.from_state_weights(space_c, act(p)) == pushed

    @pytest.mark.parametrize("name", sorted(INSTANCES))
    def test_composition_law(self, name):
        inst = INSTANCES[name]
        rng = random.Random(6)
        for _ in range(25):
            xs, ys, zs = (inst.rand_object(rng, 4) for _ in range(3))
            f = {x: rng.choice(ys) for x in xs}
            g = {y: rng.choice(zs) for y in ys}
            tf = functor_action(inst, f, xs, ys)
            tg = functor_action(inst, g, ys, zs)
            tgf = functor_action(inst, {x: g[f[x]] for x in xs}, xs, zs)
            value = inst.rand_value(rng, xs)
            assert inst.equal(tg(tf(value)), tgf(value))


class TestKleisliGeneric:
    def test_powerset_composition_is_relational(self):
        rng = random.Random(7)
        for _ in range(30):
            xs, ys, zs = (POWERSET.rand_object(rng, 4) for _ in range(3))
            r = POWERSET.rand_morphism(rng, xs, ys)
            s = POWERSET.rand_morphism(rng, ys, zs)
            comp = kleisli_compose_generic(POWERSET, s, r, xs, ys, zs)
            for x in xs:
                expected = frozenset(z for y in r[x] for z in s[y])
                assert comp[x] == expected

    @pytest.mark.parametrize("name", sorted(INSTANCES))
    def test_unit_is_a_right_identity(self, name):
        inst = INSTANCES[name]
        rng = random.Random(8)
        for _ in range(20):
            xs, ys = inst.rand_object(rng, 4), inst.rand_object(rng, 4)
            g = inst.rand_morphism(rng, xs, ys)
            eta = {x: inst.eta(xs, x) for x in xs}
            comp = kleisli_compose_generic(inst, g, eta, xs, xs, ys)
            for x in xs:
                assert inst.equal(comp[x], g[x])

    @pytest.mark.parametrize("name", sorted(INSTANCES))
    def test_associativity(self, name):
        inst = INSTANCES[name]
        rng = random.Random(9)
        for _ in range(20):
            ws, xs, ys, zs = (inst.rand_object(rng, 3) for _ in range(4))
            f = inst.rand_morphism(rng, ws, xs)
            g = inst.rand_morphism(rng, xs, ys)
            h = inst.rand_morphism(rng, ys, zs)
            lhs = kleisli_compose_generic(inst, h, kleisli_compose_generic(inst, g, f, ws, xs, ys),
                                          ws, ys, zs)
            rhs = kleisli_compose_generic(inst, kleisli_compose_generic(inst, h, g, xs, ys, zs),
                                          f, ws, xs, zs)
            for w in ws:
                assert inst.equal(lhs[w], rhs[w])
