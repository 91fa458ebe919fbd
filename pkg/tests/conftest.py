"""Seed-deterministic random instance generators shared across the suite."""

from __future__ import annotations

import random
from fractions import Fraction

from mgk import FinMeasurableSpace, FinMeasure, KripkeModel, MarkovKernel


def rand_space(rng: random.Random, max_states: int = 5, allow_coarse: bool = True,
               prefix: str = "s") -> FinMeasurableSpace:
    n = rng.randint(1, max_states)
    labels = [f"{prefix}{i}" for i in range(n)]
    if allow_coarse and n > 1 and rng.random() < 0.4:
        k = rng.randint(1, n)
        assign = [rng.randrange(k) for _ in labels]
        blocks: dict[int, list] = {}
        for x, b in zip(labels, assign):
            blocks.setdefault(b, []).append(x)
        return FinMeasurableSpace.make(labels, blocks.values())
    return FinMeasurableSpace.discrete(labels)


def rand_measure(rng: random.Random, space: FinMeasurableSpace,
                 denominators=(2, 3, 4, 6, 8)) -> FinMeasure:
    denom = rng.choice(denominators)
    cuts = sorted(rng.randint(0, denom) for _ in range(len(space.atoms) - 1))
    parts, prev = [], 0
    for c in list(cuts) + [denom]:
        parts.append(Fraction(c - prev, denom))
        prev = c
    return FinMeasure(space, tuple(parts))


def rand_kernel(rng: random.Random, dom: FinMeasurableSpace,
                cod: FinMeasurableSpace | None = None, denominators=(2, 3, 4, 6, 8)) -> MarkovKernel:
    cod = cod if cod is not None else dom
    rows = {}
    for atom in dom.atoms:
        row = rand_measure(rng, cod, denominators)
        for x in atom:
            rows[x] = row
    return MarkovKernel(dom, cod, rows)


def rand_subset(rng: random.Random, labels) -> frozenset:
    return frozenset(x for x in labels if rng.random() < 0.5)


def rand_measurable(rng: random.Random, space: FinMeasurableSpace) -> frozenset:
    out: frozenset = frozenset()
    for a in space.atoms:
        if rng.random() < 0.5:
            out |= a
    return out


def rand_kripke(rng: random.Random, max_states: int = 4, max_actions: int = 2,
                max_prims: int = 2, allow_coarse: bool = True) -> KripkeModel:
    space = rand_space(rng, max_states, allow_coarse)
    actions = [f"a{i}" for i in range(rng.randint(1, max_actions))]
    kernels = {a: rand_kernel(rng, space) for a in actions}
    prims = [f"p{i}" for i in range(rng.randint(0, max_prims))]
    valuations = {p: rand_measurable(rng, space) for p in prims}
    return KripkeModel(space, kernels, valuations)
